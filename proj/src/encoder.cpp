#include "wm/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "wm/dsp.hpp"
#include "wm/kernels.hpp"

namespace wm {

namespace {

constexpr double kSilentBlockGain = 1e-6;  // below this a block stays unmarked

void check_unit_norm(const std::vector<double>& w) {
  double e = kernels::dot(w.data(), w.data(), w.size());
  if (std::abs(std::sqrt(e) - 1.0) > 1e-6) {
    throw ConfigError("watermark vector is not unit norm over the band");
  }
}

// Raised-cosine blend of the re-synthesized span into the host across
// `fade` samples at each outer edge. Interior block seams need no treatment:
// blocks are exact partitions, so the only discontinuities are at the span
// boundary against unmarked audio.
void edge_crossfade(std::vector<double>& out, const std::vector<double>& host,
                    int64_t start, int64_t span, int fade) {
  if (fade <= 0) return;
  for (int j = 0; j < fade; ++j) {
    const double a = 0.5 - 0.5 * std::cos(M_PI * (j + 1) / (fade + 1));
    const int64_t lead = start + j;
    out[lead] = host[lead] + a * (out[lead] - host[lead]);
    const int64_t tail = start + span - 1 - j;
    out[tail] = host[tail] + a * (out[tail] - host[tail]);
  }
}

}  // namespace

void EmbedPlacement::validate(int64_t span) const {
  if (start_offset < 0) throw ConfigError("start_offset must be non-negative");
  if (repeat_period != 0 && repeat_period < span) {
    throw ConfigError("repeat_period shorter than the watermark itself");
  }
  if (crossfade_ms < 0 || crossfade_ms > 1.0) {
    throw ConfigError("crossfade must be in [0, 1] ms");
  }
}

void embed_eigen_block(std::vector<double>& spectrum,
                       const std::vector<double>& w, const Band& band,
                       double eta) {
  band.validate(static_cast<int>(spectrum.size()));
  const std::size_t d = static_cast<std::size_t>(band.width());
  if (w.size() != d) throw ConfigError("watermark vector width != band width");
  check_unit_norm(w);

  double* x = spectrum.data() + band.k_lo;
  const double proj = kernels::dot(x, w.data(), d);
  kernels::axpy(eta - proj, w.data(), x, d);
}

std::vector<int64_t> plan_insertions(int64_t host_len, int64_t span,
                                     const EmbedPlacement& placement) {
  placement.validate(span);
  std::vector<int64_t> starts;
  if (placement.repeat_period == 0) {
    if (placement.start_offset + span <= host_len)
      starts.push_back(placement.start_offset);
    return starts;
  }
  for (int64_t t = placement.start_offset; t + span <= host_len;
       t += placement.repeat_period) {
    starts.push_back(t);
  }
  return starts;
}

AudioClip embed_watermark(const AudioClip& host, const WatermarkConfig& config,
                          const WatermarkBank& bank,
                          const EmbedPlacement& placement,
                          EmbedReport* report) {
  config.validate();
  host.validate();
  if (host.sample_rate != kSampleRate) {
    throw ConfigError("embedding requires 48 kHz audio");
  }
  if (bank.config_hash != config.config_hash()) {
    throw ConfigError("bank was generated for a different config");
  }
  const int64_t span = config.span();
  const auto starts = plan_insertions(host.length(), span, placement);
  if (starts.empty()) {
    throw RangeError("host too short: need " + std::to_string(span) +
                     " samples past start_offset, have " +
                     std::to_string(host.length() - placement.start_offset));
  }

  AudioClip out = host;
  DctPlan plan(config.block_len);
  std::vector<double> spec(config.block_len);
  EmbedReport rep;
  const int fade =
      static_cast<int>(std::lround(placement.crossfade_ms * 1e-3 * kSampleRate));

  if (config.beta == 0.0) {
    // Null hypothesis by construction: the degenerate encode leaves the host
    // untouched (no projection removal either, so H0 is exact).
    rep.positions = starts;
    rep.blocks_skipped = static_cast<int>(starts.size()) * config.blocks();
    if (report) *report = std::move(rep);
    return out;
  }

  for (int64_t start : starts) {
    for (int n = 0; n < config.repeats; ++n) {
      for (int i = 0; i < config.segments; ++i) {
        const int64_t at =
            start + static_cast<int64_t>(n * config.segments + i) * config.block_len;
        std::span<double> block(out.samples.data() + at,
                                static_cast<std::size_t>(config.block_len));
        plan.forward(block, spec);
        const double g = std::sqrt(band_inner(spec, spec, config.band));
        if (g < kSilentBlockGain) {
          ++rep.blocks_skipped;
          continue;
        }
        const double eta = config.beta * bank.signs[n][i] * g;
        embed_eigen_block(spec, bank.vectors[i], config.band, eta);
        plan.inverse(spec, block);
        ++rep.blocks_marked;
      }
    }
    edge_crossfade(out.samples, host.samples, start, span, fade);
    rep.positions.push_back(start);
  }
  if (report) *report = std::move(rep);
  return out;
}

AudioClip embed_legacy_ss(const AudioClip& host, const std::vector<double>& w,
                          const Band& band, double eta, int block_len,
                          int64_t start_offset, int blocks) {
  host.validate();
  band.validate(block_len);
  if (w.size() != static_cast<std::size_t>(band.width())) {
    throw ConfigError("watermark vector width != band width");
  }
  check_unit_norm(w);
  const int64_t avail = host.length() - start_offset;
  const int max_blocks = static_cast<int>(avail / block_len);
  if (blocks == 0) blocks = max_blocks;
  if (start_offset < 0 || blocks < 1 || blocks > max_blocks) {
    throw RangeError("host too short for requested legacy embedding");
  }

  AudioClip out = host;
  DctPlan plan(block_len);
  std::vector<double> spec(block_len);
  for (int b = 0; b < blocks; ++b) {
    std::span<double> block(out.samples.data() + start_offset +
                                static_cast<int64_t>(b) * block_len,
                            static_cast<std::size_t>(block_len));
    plan.forward(block, spec);
    kernels::axpy(eta, w.data(), spec.data() + band.k_lo, w.size());
    plan.inverse(spec, block);
  }
  return out;
}

HeadroomReport perceptual_headroom(const AudioClip& host,
                                   const AudioClip& marked, int block_len,
                                   const Band& band) {
  if (host.length() != marked.length()) {
    throw RangeError("headroom: clips differ in length");
  }
  band.validate(block_len);
  HeadroomReport rep;
  DctPlan plan(block_len);
  std::vector<double> delta(block_len), spec_h(block_len), spec_d(block_len);

  const int64_t nblocks = host.length() / block_len;
  double ratio_sum = 0.0;
  int counted = 0;
  rep.max_ratio_db = -std::numeric_limits<double>::infinity();
  for (int64_t b = 0; b < nblocks; ++b) {
    const double* h = host.samples.data() + b * block_len;
    const double* m = marked.samples.data() + b * block_len;
    for (int j = 0; j < block_len; ++j) {
      delta[j] = m[j] - h[j];
      rep.peak_delta = std::max(rep.peak_delta, std::abs(delta[j]));
    }
    plan.forward(std::span<const double>(h, block_len), spec_h);
    plan.forward(delta, spec_d);
    const double eh = band_inner(spec_h, spec_h, band);
    const double ed = band_inner(spec_d, spec_d, band);
    if (eh <= 0.0) {
      ++rep.zero_energy_blocks;
      continue;
    }
    if (ed <= 0.0) continue;  // block carries no mark
    const double db = 10.0 * std::log10(ed / eh);
    ratio_sum += db;
    rep.max_ratio_db = std::max(rep.max_ratio_db, db);
    ++counted;
  }
  rep.blocks = static_cast<int>(nblocks);
  rep.mean_ratio_db = counted > 0
                          ? ratio_sum / counted
                          : -std::numeric_limits<double>::infinity();
  return rep;
}

}  // namespace wm
