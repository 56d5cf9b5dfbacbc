#include "wm/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wm/dsp.hpp"
#include "wm/kernels.hpp"
#include "wm/rng.hpp"

namespace wm {

void ChannelSpec::validate() const {
  if (impulse_response.empty()) throw ConfigError("impulse response is empty");
  for (double v : impulse_response) {
    if (!std::isfinite(v)) throw ConfigError("impulse response has non-finite taps");
  }
  if (!(std::abs(drift_ppm) < 10000.0)) {
    throw ConfigError("|drift_ppm| must be below 10000");
  }
  if (noise_snr_db && !std::isfinite(*noise_snr_db)) {
    throw ConfigError("noise_snr_db must be finite");
  }
  if (!std::isfinite(gain_db)) throw ConfigError("gain_db must be finite");
  const double nyq = kSampleRate / 2.0;
  if (lowpass_hz && !(*lowpass_hz > 0.0 && *lowpass_hz < nyq)) {
    throw ConfigError("lowpass_hz out of range");
  }
  if (highpass_hz && !(*highpass_hz > 0.0 && *highpass_hz < nyq)) {
    throw ConfigError("highpass_hz out of range");
  }
}

void SyntheticRoom::validate() const {
  if (!(rt60_s > 0.0)) throw ConfigError("rt60_s must be positive");
  const double len = length_s > 0.0 ? length_s : 1.5 * rt60_s;
  if (len < rt60_s / 2.0) throw ConfigError("IR length must be at least rt60/2");
}

std::vector<double> synth_rir(const SyntheticRoom& room, int sample_rate) {
  room.validate();
  if (std::isinf(room.direct_ratio_db)) return {1.0};  // identity channel

  const double len_s = room.length_s > 0.0 ? room.length_s : 1.5 * room.rt60_s;
  const int n = std::max(2, static_cast<int>(std::lround(len_s * sample_rate)));
  std::vector<double> ir(n, 0.0);

  // Amplitude envelope 10^(-3 t / rt60): energy down 60 dB at t = rt60.
  KeyedRng rng(room.seed ^ 0x5217ab6ff1d3c0e9ull);
  double tail_energy = 0.0;
  for (int t = 1; t < n; ++t) {
    const double env = std::pow(10.0, -3.0 * t / (room.rt60_s * sample_rate));
    ir[t] = env * rng.next_gaussian();
    tail_energy += ir[t] * ir[t];
  }
  // Direct path scaled so direct/reverberant energy hits the requested ratio.
  const double ratio = std::pow(10.0, room.direct_ratio_db / 10.0);
  ir[0] = std::sqrt(ratio * tail_energy);
  // Normalize total energy to 1 so the channel neither amplifies nor buries
  // the program level on average.
  const double total = ir[0] * ir[0] + tail_energy;
  const double scale = 1.0 / std::sqrt(total);
  for (double& v : ir) v *= scale;
  return ir;
}

std::vector<SyntheticRoom> room_grid() {
  std::vector<SyntheticRoom> rooms;
  uint64_t seed = 101;
  for (double rt60 : {0.15, 0.3, 0.5, 0.8}) {
    for (double direct : {0.0, 6.0, 12.0}) {
      SyntheticRoom r;
      r.rt60_s = rt60;
      r.direct_ratio_db = direct;
      r.seed = seed++;
      rooms.push_back(r);
    }
  }
  return rooms;
}

namespace {

// Odd-length windowed-sinc FIR; spectral inversion turns the lowpass into
// the matching highpass.
std::vector<double> sinc_fir(double cutoff_hz, int sample_rate, bool highpass) {
  constexpr int kHalf = 128;
  constexpr int kTaps = 2 * kHalf + 1;
  const double fc = cutoff_hz / sample_rate;
  std::vector<double> h(kTaps);
  double sum = 0.0;
  for (int i = 0; i < kTaps; ++i) {
    const int m = i - kHalf;
    const double x = 2.0 * M_PI * fc * m;
    double v = m == 0 ? 2.0 * fc : std::sin(x) / (M_PI * m);
    // Blackman window
    v *= 0.42 - 0.5 * std::cos(2.0 * M_PI * i / (kTaps - 1)) +
         0.08 * std::cos(4.0 * M_PI * i / (kTaps - 1));
    h[i] = v;
    sum += v;
  }
  for (double& v : h) v /= sum;  // unit DC gain
  if (highpass) {
    for (double& v : h) v = -v;
    h[kHalf] += 1.0;
  }
  return h;
}

// Convolve and drop the filter's group delay so the output stays aligned
// with the input.
AudioClip filter_aligned(const AudioClip& clip, const std::vector<double>& h) {
  const int half = static_cast<int>(h.size() / 2);
  AudioClip padded = clip;
  padded.samples.insert(padded.samples.end(), half, 0.0);
  AudioClip filtered = convolve(padded, h);
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(filtered.samples.begin() + half, filtered.samples.end());
  return out;
}

}  // namespace

AudioClip apply_channel(const AudioClip& clip, const ChannelSpec& spec) {
  spec.validate();
  clip.validate();
  const int64_t n_in = clip.length();

  AudioClip y = clip;
  if (spec.gain_db != 0.0) {
    const double g = std::pow(10.0, spec.gain_db / 20.0);
    kernels::scal(g, y.samples.data(), y.samples.size());
  }
  if (spec.impulse_response.size() != 1 || spec.impulse_response[0] != 1.0) {
    // Keep the reverb tail that falls past the input edge; trimming happens
    // only at the preserve_length stage, so a pure-delay IR shifts rather
    // than truncates content.
    AudioClip padded = y;
    padded.samples.insert(padded.samples.end(), spec.impulse_response.size() - 1,
                          0.0);
    y = convolve(padded, spec.impulse_response);
  }
  if (spec.lowpass_hz) {
    y = filter_aligned(y, sinc_fir(*spec.lowpass_hz, y.sample_rate, false));
  }
  if (spec.highpass_hz) {
    y = filter_aligned(y, sinc_fir(*spec.highpass_hz, y.sample_rate, true));
  }
  if (spec.drift_ppm != 0.0) {
    y = resample_drift(y, spec.drift_ppm);
  }
  if (spec.preserve_length) {
    y.samples.resize(static_cast<std::size_t>(n_in), 0.0);
  }
  if (spec.noise_snr_db) {
    double power = 0.0;
    for (double v : y.samples) power += v * v;
    power /= std::max<std::size_t>(1, y.samples.size());
    const double sigma =
        std::sqrt(power * std::pow(10.0, -*spec.noise_snr_db / 10.0));
    KeyedRng rng(spec.noise_seed ^ 0x9d2c5680aad1b8f5ull);
    for (double& v : y.samples) v += sigma * rng.next_gaussian();
  }
  return y;
}

std::vector<double> dct_channel_gain(const std::vector<double>& impulse_response,
                                     int block_len, const Band& band) {
  band.validate(block_len);
  if (impulse_response.empty()) throw ConfigError("impulse response is empty");
  DctPlan plan(block_len);
  std::vector<double> alpha(band.width());
  std::vector<double> basis(block_len), time(block_len), spec(block_len);
  AudioClip carrier;
  carrier.samples.resize(block_len);
  for (int k = band.k_lo; k <= band.k_hi; ++k) {
    std::fill(basis.begin(), basis.end(), 0.0);
    basis[k] = 1.0;
    plan.inverse(basis, time);
    carrier.samples.assign(time.begin(), time.end());
    AudioClip through = convolve(carrier, impulse_response);
    plan.forward(through.samples, spec);
    alpha[k - band.k_lo] = spec[k];
  }
  return alpha;
}

}  // namespace wm
