#include "wm/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <iterator>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "wm/dsp.hpp"
#include "wm/kernels.hpp"

namespace wm {

namespace {

constexpr double kDeadBlockNorm = 1e-9;  // below this a block leaves the sum
constexpr double kSigmaFloor = 1e-12;    // keeps gamma > 0 on silent input

// Band slice of one received block, normalized to unit band energy. Dead
// blocks stay all-zero with live = false.
struct BlockVec {
  std::vector<double> u;
  bool live = false;
};

void make_block_vec(const DctPlan& plan, const Band& band, const double* x,
                    std::vector<double>& spec, BlockVec& out) {
  plan.forward(std::span<const double>(x, plan.block_len()), spec);
  const std::size_t d = static_cast<std::size_t>(band.width());
  out.u.assign(spec.begin() + band.k_lo, spec.begin() + band.k_lo + d);
  const double h =
      std::sqrt(kernels::dot(out.u.data(), out.u.data(), d));
  if (h < kDeadBlockNorm) {
    std::fill(out.u.begin(), out.u.end(), 0.0);
    out.live = false;
    return;
  }
  kernels::scal(1.0 / h, out.u.data(), d);
  out.live = true;
}

struct PairLimits {
  int repeats;
  int segments;
};

PairLimits effective_limits(const WatermarkConfig& config,
                            const DecoderParams& params,
                            const WatermarkBank& bank) {
  PairLimits lim{config.repeats, config.segments};
  if (params.max_repeats > 0) lim.repeats = std::min(lim.repeats, params.max_repeats);
  if (params.max_segments > 0) lim.segments = std::min(lim.segments, params.max_segments);
  if (lim.repeats < 2) throw ConfigError("pair subset needs at least 2 repeats");
  if (static_cast<int>(bank.signs.size()) < lim.repeats ||
      static_cast<int>(bank.vectors.size()) < lim.segments) {
    throw ConfigError("bank smaller than the requested pair set");
  }
  for (const auto& v : bank.vectors) {
    if (v.size() != static_cast<std::size_t>(config.band.width())) {
      throw ConfigError("bank vector width != band width");
    }
  }
  return lim;
}

// Sum over i, n<m of s_m s_n <u_m, u_n> via the expanded square: per segment,
// 0.5 * (||sum_n s_n u_n||^2 - live_count). Identical to the naive pair loop
// (unit u, dead blocks zeroed) but linear in N_r.
template <typename BlockProvider>
double score_blocks(const WatermarkConfig& config, const WatermarkBank& bank,
                    const PairLimits& lim, BlockProvider&& block_at,
                    std::vector<double>& acc) {
  const std::size_t d = static_cast<std::size_t>(config.band.width());
  double score = 0.0;
  for (int i = 0; i < lim.segments; ++i) {
    acc.assign(d, 0.0);
    int live = 0;
    for (int n = 0; n < lim.repeats; ++n) {
      const BlockVec& b = block_at(n, i);
      if (!b.live) continue;
      kernels::axpy(static_cast<double>(bank.signs[n][i]), b.u.data(),
                    acc.data(), d);
      ++live;
    }
    score += 0.5 * (kernels::dot(acc.data(), acc.data(), d) - live);
  }
  return score;
}

// Rolling trailing window of accepted (non-outlier) scores. Scores more than
// threshold_multiplier sigmas above the current mean are treated as watermark
// candidates and kept out, so the statistics track the noise floor through a
// watermarked region. Warm-up: the first 10 points are always accepted.
class NoiseWindow {
 public:
  NoiseWindow(int capacity, double multiplier)
      : capacity_(capacity), multiplier_(multiplier) {}

  void offer(double x) {
    if (win_.size() >= 10) {
      const double sd = this->sd();
      if (sd > 0.0 && x - mean() > multiplier_ * sd) return;  // outlier
    }
    win_.push_back(x);
    sum_ += x;
    sumsq_ += x * x;
    if (static_cast<int>(win_.size()) > capacity_) {
      const double old = win_.front();
      win_.pop_front();
      sum_ -= old;
      sumsq_ -= old * old;
    }
  }

  double mean() const { return win_.empty() ? 0.0 : sum_ / win_.size(); }
  double sd() const {
    if (win_.empty()) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, sumsq_ / win_.size() - m * m));
  }

  // Drift-free recomputation for the published trace statistics.
  void exact_stats(double* mean_out, double* sd_out) const {
    if (win_.empty()) {
      *mean_out = 0.0;
      *sd_out = 0.0;
      return;
    }
    double s = 0.0;
    for (double v : win_) s += v;
    const double m = s / win_.size();
    double q = 0.0;
    for (double v : win_) q += (v - m) * (v - m);
    *mean_out = m;
    *sd_out = std::sqrt(q / win_.size());
  }

 private:
  std::deque<double> win_;
  double sum_ = 0.0;
  double sumsq_ = 0.0;
  int capacity_;
  double multiplier_;
};

// Normalized block vectors keyed by absolute start sample. Scan offsets a
// stride apart reuse nearly every block, so this turns the scan into ~one
// fresh DCT per score point. Entries behind the scan cursor are pruned
// periodically; a hard size cap covers pathological stride/block ratios.
class BlockCache {
 public:
  BlockCache(const DctPlan& plan, const Band& band)
      : plan_(plan), band_(band), spec_(plan.block_len()) {}

  const BlockVec& get(const double* base, int64_t start) {
    auto it = map_.find(start);
    if (it != map_.end()) return it->second;
    if (map_.size() >= 16384) map_.clear();
    BlockVec& b = map_[start];
    make_block_vec(plan_, band_, base + start, spec_, b);
    return b;
  }

  void prune_before(int64_t t) {
    for (auto it = map_.begin(); it != map_.end();) {
      it = it->first < t ? map_.erase(it) : std::next(it);
    }
  }

 private:
  const DctPlan& plan_;
  const Band& band_;
  std::vector<double> spec_;
  std::unordered_map<int64_t, BlockVec> map_;
};

}  // namespace

void DecoderParams::validate() const {
  if (scan_stride < 1) throw ConfigError("scan_stride must be >= 1");
  if (noise_window < 10) throw ConfigError("noise_window must be >= 10 points");
  if (smooth_window < 1) throw ConfigError("smooth_window must be >= 1");
  if (!(threshold_multiplier > 0.0)) {
    throw ConfigError("threshold_multiplier must be positive");
  }
  if (max_repeats < 0 || max_segments < 0) {
    throw ConfigError("pair subset limits must be non-negative");
  }
}

double self_corr(const std::vector<double>& a, const std::vector<double>& b,
                 const Band& band) {
  if (a.size() != b.size()) throw RangeError("self_corr: length mismatch");
  return band_inner(a, b, band);
}

double score_at(const AudioClip& y, int64_t t, const WatermarkConfig& config,
                const WatermarkBank& bank, const DecoderParams& params) {
  config.validate();
  params.validate();
  const PairLimits lim = effective_limits(config, params, bank);
  if (t < 0 || t + config.span() > y.length()) {
    throw RangeError("score_at: offset " + std::to_string(t) +
                     " leaves fewer than span samples");
  }
  DctPlan plan(config.block_len);
  std::vector<double> spec(config.block_len);
  std::vector<BlockVec> blocks(
      static_cast<std::size_t>(lim.repeats) * config.segments);
  for (int n = 0; n < lim.repeats; ++n) {
    for (int i = 0; i < lim.segments; ++i) {
      const int64_t at =
          t + static_cast<int64_t>(n * config.segments + i) * config.block_len;
      make_block_vec(plan, config.band, y.samples.data() + at, spec,
                     blocks[n * config.segments + i]);
    }
  }
  std::vector<double> acc;
  return score_blocks(config, bank, lim,
                      [&](int n, int i) -> const BlockVec& {
                        return blocks[n * config.segments + i];
                      },
                      acc);
}

ScoreTrace scan(const AudioClip& y, const WatermarkConfig& config,
                const WatermarkBank& bank, const DecoderParams& params) {
  config.validate();
  params.validate();
  y.validate();
  const PairLimits lim = effective_limits(config, params, bank);
  const int64_t span = config.span();
  const int64_t len = y.length();
  const int64_t npoints =
      len < span ? 0 : (len - span) / params.scan_stride + 1;
  if (npoints < params.noise_window + 1) {
    throw RangeError("clip too short: " + std::to_string(npoints) +
                     " score points, need " +
                     std::to_string(params.noise_window + 1));
  }

  ScoreTrace trace;
  trace.times.resize(static_cast<std::size_t>(npoints));
  trace.rho.resize(static_cast<std::size_t>(npoints));

  DctPlan plan(config.block_len);
  BlockCache cache(plan, config.band);
  std::vector<double> acc;
  const double* base = y.samples.data();
  NoiseWindow noise(params.noise_window, params.threshold_multiplier);

  for (int64_t k = 0; k < npoints; ++k) {
    const int64_t t = k * params.scan_stride;
    trace.times[k] = t;
    trace.rho[k] = score_blocks(
        config, bank, lim,
        [&](int n, int i) -> const BlockVec& {
          return cache.get(
              base,
              t + static_cast<int64_t>(n * config.segments + i) * config.block_len);
        },
        acc);
    noise.offer(trace.rho[k]);
    if ((k & 0xff) == 0xff) cache.prune_before(t);
  }

  noise.exact_stats(&trace.rho0_mean, &trace.sigma0);
  trace.sigma0 = std::max(trace.sigma0, kSigmaFloor);
  trace.gamma = params.threshold_multiplier * trace.sigma0;

  // Forward smoothing (truncated at the tail) and the decision rule.
  trace.rho_bar.resize(static_cast<std::size_t>(npoints));
  trace.decisions.resize(static_cast<std::size_t>(npoints));
  std::vector<double> prefix(static_cast<std::size_t>(npoints) + 1, 0.0);
  for (int64_t k = 0; k < npoints; ++k) prefix[k + 1] = prefix[k] + trace.rho[k];
  for (int64_t k = 0; k < npoints; ++k) {
    const int64_t end = std::min<int64_t>(npoints, k + params.smooth_window);
    trace.rho_bar[k] =
        (prefix[end] - prefix[k]) / static_cast<double>(end - k) -
        trace.rho0_mean;
    trace.decisions[k] = trace.rho_bar[k] >= trace.gamma ? 1 : 0;
  }
  return trace;
}

std::vector<Detection> ScoreTrace::detections() const {
  std::vector<Detection> out;
  const std::size_t n = decisions.size();
  for (std::size_t k = 0; k < n;) {
    if (!decisions[k]) {
      ++k;
      continue;
    }
    Detection d;
    d.t = times[k];
    d.peak_rho_bar = rho_bar[k];
    std::size_t j = k;
    while (j + 1 < n && decisions[j + 1]) {
      ++j;
      d.peak_rho_bar = std::max(d.peak_rho_bar, rho_bar[j]);
    }
    const int64_t stride = n > 1 ? times[1] - times[0] : 1;
    d.t_end = times[j] + stride;
    out.push_back(d);
    k = j + 1;
  }
  return out;
}

std::string ScoreTrace::to_csv() const {
  std::string out = "t_samples,rho,rho_bar,gamma,decision\n";
  char line[160];
  for (std::size_t k = 0; k < rho.size(); ++k) {
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%d\n",
                  static_cast<long long>(times[k]), rho[k], rho_bar[k], gamma,
                  static_cast<int>(decisions[k]));
    out += line;
  }
  return out;
}

std::string ScoreTrace::summary_json() const {
  nlohmann::json j;
  j["points"] = rho.size();
  j["rho0_mean"] = rho0_mean;
  j["sigma0"] = sigma0;
  j["gamma"] = gamma;
  auto dets = detections();
  j["detections"] = nlohmann::json::array();
  for (const auto& d : dets) {
    j["detections"].push_back({{"t_samples", d.t},
                               {"t_end_samples", d.t_end},
                               {"peak_rho_bar", d.peak_rho_bar}});
  }
  return j.dump(2);
}

std::vector<double> detect_legacy(const AudioClip& y,
                                  const std::vector<double>& w, int block_len,
                                  const Band& band, int64_t start_offset,
                                  int blocks) {
  band.validate(block_len);
  if (w.size() != static_cast<std::size_t>(band.width())) {
    throw ConfigError("template width != band width");
  }
  const int64_t avail = y.length() - start_offset;
  const int max_blocks = static_cast<int>(avail / block_len);
  if (blocks == 0) blocks = max_blocks;
  if (start_offset < 0 || blocks < 1 || blocks > max_blocks) {
    throw RangeError("detect_legacy: not enough samples");
  }
  DctPlan plan(block_len);
  std::vector<double> spec(block_len);
  std::vector<double> out(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    plan.forward(std::span<const double>(
                     y.samples.data() + start_offset +
                         static_cast<int64_t>(b) * block_len,
                     static_cast<std::size_t>(block_len)),
                 spec);
    out[b] = kernels::dot(spec.data() + band.k_lo, w.data(), w.size());
  }
  return out;
}

SignaturePrediction analytic_signatures(const WatermarkConfig& config,
                                        const WatermarkBank& bank,
                                        const std::vector<double>& alpha,
                                        const GainStats& host_stats) {
  config.validate();
  const std::size_t d = static_cast<std::size_t>(config.band.width());
  if (alpha.size() != d) throw ConfigError("alpha width != band width");

  if (bank.vectors.size() < static_cast<std::size_t>(config.segments)) {
    throw ConfigError("bank has fewer vectors than config.segments");
  }
  for (int i = 0; i < config.segments; ++i) {
    if (bank.vectors[i].size() != d) {
      throw ConfigError("bank vector width != band width");
    }
  }

  SignaturePrediction p;
  const double pairs_per_seg = 0.5 * config.repeats * (config.repeats - 1);
  // Null: zero-mean; per-pair variance 1/D for isotropic unit block vectors,
  // pairs uncorrelated thanks to the sign layer.
  p.rho0_mean = 0.0;
  p.rho0_var = config.segments * pairs_per_seg / static_cast<double>(d);

  double e_sum = 0.0;  // sum_i <w_i . alpha, w_i . alpha>; alpha only squared
  for (int i = 0; i < config.segments; ++i) {
    double e = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      e += alpha[k] * alpha[k] * bank.vectors[i][k] * bank.vectors[i][k];
    }
    e_sum += e;
  }
  const double r = host_stats.g_over_h;
  p.rho1_shift = config.beta * config.beta * r * r * pairs_per_seg * e_sum;
  return p;
}

// ---------------------------------------------------------------------------
// StreamingDetector

struct StreamingDetector::Impl {
  WatermarkConfig config;
  WatermarkBank bank;
  DecoderParams params;
  PairLimits lim;
  DctPlan plan;
  Band band;

  std::deque<double> buffer;   // samples [buf_start, buf_start + size)
  int64_t buf_start = 0;
  int64_t received = 0;

  int64_t next_t = 0;          // next offset to score
  int64_t points = 0;
  std::deque<double> pending;  // scored, waiting for their smoothing window
  int64_t pending_t0 = 0;      // offset of pending.front()
  NoiseWindow noise;
  std::unordered_map<int64_t, BlockVec> cache;
  std::vector<double> spec, acc, window_buf;

  bool in_run = false;
  Detection run;
  std::vector<Detection> done;
  double gamma_now = 0.0;

  Impl(const WatermarkConfig& c, const WatermarkBank& b, const DecoderParams& p)
      : config(c),
        bank(b),
        params(p),
        lim(effective_limits(c, p, b)),
        plan(c.block_len),
        band(c.band),
        noise(p.noise_window, p.threshold_multiplier),
        spec(c.block_len) {}

  const BlockVec& block_at(int64_t start) {
    auto it = cache.find(start);
    if (it != cache.end()) return it->second;
    if (cache.size() >= 16384) cache.clear();
    BlockVec& b = cache[start];
    window_buf.resize(static_cast<std::size_t>(config.block_len));
    for (int j = 0; j < config.block_len; ++j) {
      window_buf[j] = buffer[static_cast<std::size_t>(start - buf_start + j)];
    }
    make_block_vec(plan, band, window_buf.data(), spec, b);
    return b;
  }

  void score_ready() {
    const int64_t span = config.span();
    while (next_t + span <= received) {
      const double rho = score_blocks(
          config, bank, lim,
          [&](int n, int i) -> const BlockVec& {
            return block_at(next_t + static_cast<int64_t>(n * config.segments + i) *
                                         config.block_len);
          },
          acc);
      if (pending.empty()) pending_t0 = next_t;
      pending.push_back(rho);
      noise.offer(rho);
      ++points;
      next_t += params.scan_stride;

      while (static_cast<int>(pending.size()) >= params.smooth_window) {
        emit(params.smooth_window);
      }
      trim();
    }
  }

  // Decide pending.front() from its forward window of `count` scores using
  // the statistics known right now, then drop it.
  void emit(int count) {
    double s = 0.0;
    for (int j = 0; j < count; ++j) s += pending[static_cast<std::size_t>(j)];
    const double sd = std::max(noise.sd(), kSigmaFloor);
    gamma_now = params.threshold_multiplier * sd;
    const double rho_bar = s / count - noise.mean();
    const bool hit = rho_bar >= gamma_now;
    if (hit) {
      if (!in_run) {
        in_run = true;
        run = Detection{pending_t0, pending_t0 + params.scan_stride, rho_bar};
      } else {
        run.t_end = pending_t0 + params.scan_stride;
        run.peak_rho_bar = std::max(run.peak_rho_bar, rho_bar);
      }
    } else if (in_run) {
      in_run = false;
      done.push_back(run);
    }
    pending.pop_front();
    pending_t0 += params.scan_stride;
  }

  void trim() {
    // Everything before the earliest offset any future score can touch is
    // dead weight. pending_t0 lags next_t, so it is the binding cursor.
    const int64_t keep_from = std::min(next_t, pending_t0);
    if (keep_from - buf_start > 4 * config.block_len) {
      const int64_t drop = keep_from - buf_start;
      buffer.erase(buffer.begin(), buffer.begin() + drop);
      buf_start += drop;
      for (auto it = cache.begin(); it != cache.end();) {
        it = it->first < keep_from ? cache.erase(it) : std::next(it);
      }
    }
  }
};

StreamingDetector::StreamingDetector(const WatermarkConfig& config,
                                     const WatermarkBank& bank,
                                     const DecoderParams& params) {
  config.validate();
  params.validate();
  impl_ = std::make_unique<Impl>(config, bank, params);
}

StreamingDetector::~StreamingDetector() = default;
StreamingDetector::StreamingDetector(StreamingDetector&&) noexcept = default;
StreamingDetector& StreamingDetector::operator=(StreamingDetector&&) noexcept =
    default;

void StreamingDetector::feed(const double* samples, std::size_t count) {
  impl_->buffer.insert(impl_->buffer.end(), samples, samples + count);
  impl_->received += static_cast<int64_t>(count);
  impl_->score_ready();
}

void StreamingDetector::finish() {
  while (!impl_->pending.empty()) {
    impl_->emit(static_cast<int>(impl_->pending.size() < static_cast<std::size_t>(
                                     impl_->params.smooth_window)
                                     ? impl_->pending.size()
                                     : impl_->params.smooth_window));
  }
  if (impl_->in_run) {
    impl_->in_run = false;
    impl_->done.push_back(impl_->run);
  }
}

std::vector<Detection> StreamingDetector::take_detections() {
  std::vector<Detection> out;
  out.swap(impl_->done);
  return out;
}

int64_t StreamingDetector::points_scored() const { return impl_->points; }
int64_t StreamingDetector::samples_consumed() const { return impl_->received; }
double StreamingDetector::current_gamma() const { return impl_->gamma_now; }

}  // namespace wm
