#include "wm/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "wm/kernels.hpp"

namespace wm {

void AudioClip::validate() const {
  if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
  for (double s : samples) {
    if (!std::isfinite(s)) throw ConfigError("clip contains non-finite samples");
  }
}

void Band::validate(int block_len) const {
  if (k_lo < 0 || k_lo > k_hi || k_hi >= block_len) {
    throw ConfigError("band [" + std::to_string(k_lo) + "," + std::to_string(k_hi) +
                      "] invalid for block length " + std::to_string(block_len));
  }
  if (width() < 2) throw ConfigError("band width must be at least 2");
}

DctPlan::DctPlan(int block_len) : len_(block_len) {
  if (block_len < 2) throw ConfigError("block length must be at least 2");
  const std::size_t n = static_cast<std::size_t>(block_len);
  auto fwd = std::make_shared<std::vector<double>>(n * n);
  auto inv = std::make_shared<std::vector<double>>(n * n);
  const double s0 = std::sqrt(1.0 / block_len);
  const double sk = std::sqrt(2.0 / block_len);
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = (k == 0) ? s0 : sk;
    for (std::size_t t = 0; t < n; ++t) {
      const double v =
          scale * std::cos(std::numbers::pi * (t + 0.5) * k / block_len);
      (*fwd)[k * n + t] = v;
      (*inv)[t * n + k] = v;
    }
  }
  fwd_ = std::move(fwd);
  inv_ = std::move(inv);
}

void DctPlan::forward(std::span<const double> block, std::span<double> spec) const {
  if (static_cast<int>(block.size()) != len_ || static_cast<int>(spec.size()) != len_) {
    throw ConfigError("dct forward: block length mismatch");
  }
  kernels::matvec(fwd_->data(), block.data(), spec.data(), len_, len_);
}

void DctPlan::inverse(std::span<const double> spec, std::span<double> block) const {
  if (static_cast<int>(block.size()) != len_ || static_cast<int>(spec.size()) != len_) {
    throw ConfigError("dct inverse: spectrum length mismatch");
  }
  kernels::matvec(inv_->data(), spec.data(), block.data(), len_, len_);
}

std::vector<double> DctPlan::forward(std::span<const double> block) const {
  std::vector<double> spec(len_);
  forward(block, spec);
  return spec;
}

std::vector<double> DctPlan::inverse(std::span<const double> spec) const {
  std::vector<double> block(len_);
  inverse(spec, block);
  return block;
}

double band_inner(std::span<const double> a, std::span<const double> b,
                  const Band& band) {
  if (a.size() != b.size()) throw ConfigError("band_inner: length mismatch");
  band.validate(static_cast<int>(a.size()));
  return kernels::dot(a.data() + band.k_lo, b.data() + band.k_lo,
                      static_cast<std::size_t>(band.width()));
}

std::vector<std::vector<double>> frame_blocks(const AudioClip& clip,
                                              int64_t offset, int block_len,
                                              int count) {
  if (block_len <= 0 || count < 0) throw ConfigError("frame_blocks: bad block spec");
  if (offset < 0 ||
      offset + static_cast<int64_t>(block_len) * count > clip.length()) {
    throw RangeError("frame_blocks: request extends past clip end");
  }
  std::vector<std::vector<double>> blocks;
  blocks.reserve(count);
  for (int b = 0; b < count; ++b) {
    const double* p = clip.samples.data() + offset + static_cast<int64_t>(b) * block_len;
    blocks.emplace_back(p, p + block_len);
  }
  return blocks;
}

namespace {

// Iterative radix-2 complex FFT, in place. n must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (inverse ? 1 : -1);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    const double s = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= s;
  }
}

std::size_t next_pow2(std::size_t v) {
  std::size_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

// Overlap-add convolution for long impulse responses.
std::vector<double> convolve_fft(std::span<const double> x,
                                 std::span<const double> h, std::size_t out_len) {
  const std::size_t m = h.size();
  const std::size_t nfft = std::max<std::size_t>(next_pow2(2 * m), 4096);
  const std::size_t hop = nfft - m + 1;

  std::vector<std::complex<double>> hf(nfft);
  for (std::size_t i = 0; i < m; ++i) hf[i] = h[i];
  fft_radix2(hf, false);

  std::vector<double> out(out_len, 0.0);
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t start = 0; start < x.size(); start += hop) {
    const std::size_t chunk = std::min(hop, x.size() - start);
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < chunk; ++i) buf[i] = x[start + i];
    fft_radix2(buf, false);
    for (std::size_t i = 0; i < nfft; ++i) buf[i] *= hf[i];
    fft_radix2(buf, true);
    const std::size_t limit = std::min(out_len - std::min(out_len, start), nfft);
    for (std::size_t i = 0; i < limit && start + i < out_len; ++i) {
      out[start + i] += buf[i].real();
    }
  }
  return out;
}

std::vector<double> convolve_direct(std::span<const double> x,
                                    std::span<const double> h, std::size_t out_len) {
  std::vector<double> out(out_len, 0.0);
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (j >= out_len) break;
    const std::size_t n = std::min(x.size(), out_len - j);
    kernels::axpy(h[j], x.data(), out.data() + j, n);
  }
  return out;
}

}  // namespace

AudioClip convolve(const AudioClip& clip, std::span<const double> impulse_response) {
  if (impulse_response.empty()) throw ConfigError("convolve: empty impulse response");
  for (double v : impulse_response) {
    if (!std::isfinite(v)) throw ConfigError("convolve: non-finite impulse response");
  }
  const std::size_t out_len = clip.samples.size();
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  if (out_len == 0) return out;
  constexpr std::size_t kFftThreshold = 512;
  out.samples = (impulse_response.size() > kFftThreshold)
                    ? convolve_fft(clip.samples, impulse_response, out_len)
                    : convolve_direct(clip.samples, impulse_response, out_len);
  return out;
}

namespace {

// 32-tap windowed-sinc interpolation table. Rows are fractional phases; each
// row is normalized to unit sum so constant signals pass through exactly.
class SincTable {
 public:
  static constexpr int kTaps = 32;
  static constexpr int kHalf = kTaps / 2;  // taps cover offsets -15..16
  static constexpr int kPhases = 512;

  SincTable() : table_((kPhases + 1) * kTaps) {
    for (int p = 0; p <= kPhases; ++p) {
      const double frac = static_cast<double>(p) / kPhases;
      double sum = 0.0;
      for (int j = 0; j < kTaps; ++j) {
        const double t = (j - (kHalf - 1)) - frac;  // offsets -15..16
        table_[p * kTaps + j] = sinc(t) * window(t);
        sum += table_[p * kTaps + j];
      }
      for (int j = 0; j < kTaps; ++j) table_[p * kTaps + j] /= sum;
    }
  }

  const double* row(int phase) const { return table_.data() + phase * kTaps; }

 private:
  static double sinc(double t) {
    if (t == 0.0) return 1.0;
    const double a = std::numbers::pi * t;
    return std::sin(a) / a;
  }
  // 4-term Blackman-Harris over the +-kHalf span
  static double window(double t) {
    const double x = (t + kHalf) / kTaps;  // 0..1 across the kernel
    if (x < 0.0 || x > 1.0) return 0.0;
    const double c = 2.0 * std::numbers::pi * x;
    return 0.35875 - 0.48829 * std::cos(c) + 0.14128 * std::cos(2 * c) -
           0.01168 * std::cos(3 * c);
  }

  std::vector<double> table_;
};

const SincTable& sinc_table() {
  static const SincTable t;
  return t;
}

}  // namespace

AudioClip resample_drift(const AudioClip& clip, double ppm) {
  if (std::abs(ppm) >= 10000.0) throw ConfigError("resample_drift: |ppm| must be < 10000");
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  const int64_t n_in = clip.length();
  if (n_in == 0) return out;

  const double rate = 1.0 + ppm * 1e-6;
  const int64_t n_out = static_cast<int64_t>(std::floor((n_in - 1) * rate)) + 1;
  out.samples.resize(n_out);

  const SincTable& tbl = sinc_table();
  const double* x = clip.samples.data();
  for (int64_t n = 0; n < n_out; ++n) {
    const double pos = static_cast<double>(n) / rate;
    const int64_t i0 = static_cast<int64_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i0);
    const double u = frac * SincTable::kPhases;
    const int p0 = static_cast<int>(u);
    const double pw = u - p0;
    const double* r0 = tbl.row(p0);
    const double* r1 = tbl.row(p0 + 1);

    const int64_t first = i0 - (SincTable::kHalf - 1);
    double acc = 0.0;
    if (first >= 0 && first + SincTable::kTaps <= n_in) {
      // interior fast path: blend the two phase rows against the same span
      for (int j = 0; j < SincTable::kTaps; ++j) {
        acc += (r0[j] + (r1[j] - r0[j]) * pw) * x[first + j];
      }
    } else {
      for (int j = 0; j < SincTable::kTaps; ++j) {
        const int64_t idx = first + j;
        if (idx < 0 || idx >= n_in) continue;
        acc += (r0[j] + (r1[j] - r0[j]) * pw) * x[idx];
      }
    }
    out.samples[n] = acc;
  }
  return out;
}

}  // namespace wm
