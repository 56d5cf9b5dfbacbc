#include "wm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

#include "wm/encoder.hpp"
#include "wm/rng.hpp"
#include "wm/wav.hpp"

namespace wm {

namespace {

constexpr double kHostRms = 0.2;
constexpr double kLeadS = 2.0;  // unmarked head/tail around the insertions
constexpr double kTailS = 2.0;

void normalize_rms(std::vector<double>& x, double target) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p = std::sqrt(p / std::max<std::size_t>(1, x.size()));
  if (p > 0.0) {
    const double s = target / p;
    for (double& v : x) v *= s;
  }
}

std::vector<double> white_host(int64_t n, KeyedRng& rng) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& v : x) v = rng.next_gaussian();
  return x;
}

// Paul Kellet's three-pole pink approximation over a gaussian drive; flat
// enough across the embedding band and cheap.
std::vector<double> pink_host(int64_t n, KeyedRng& rng) {
  std::vector<double> x(static_cast<std::size_t>(n));
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (double& v : x) {
    const double w = rng.next_gaussian();
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    v = b0 + b1 + b2 + w * 0.1848;
  }
  return x;
}

// Random chords: a handful of harmonics-bearing tones re-drawn every 3/4 s
// with short raised-cosine seams. Tonal hosts concentrate band energy in a
// few bins, the worst case for the score's noise floor.
std::vector<double> chord_host(int64_t n, KeyedRng& rng, int sample_rate) {
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  const int64_t seg = static_cast<int64_t>(0.75 * sample_rate);
  const int ramp = sample_rate / 100;  // 10 ms
  for (int64_t s0 = 0; s0 < n; s0 += seg) {
    const int64_t s1 = std::min(n, s0 + seg);
    const int tones = 3 + static_cast<int>(rng.next_u64() % 3);
    for (int tone = 0; tone < tones; ++tone) {
      const double f0 = 110.0 * std::pow(16.0, rng.next_unit());  // 110-1760 Hz
      for (int h = 1; h <= 3; ++h) {
        const double f = f0 * h;
        if (f >= sample_rate / 2.0) break;
        const double amp = 1.0 / (h * h);
        const double phase = 2.0 * M_PI * rng.next_unit();
        const double w = 2.0 * M_PI * f / sample_rate;
        for (int64_t t = s0; t < s1; ++t) {
          double env = 1.0;
          if (t - s0 < ramp) env = 0.5 - 0.5 * std::cos(M_PI * (t - s0 + 1) / ramp);
          if (s1 - t <= ramp) env = std::min(env, 0.5 - 0.5 * std::cos(M_PI * (s1 - t) / ramp));
          x[static_cast<std::size_t>(t)] +=
              env * amp * std::sin(w * static_cast<double>(t - s0) + phase);
        }
      }
    }
  }
  return x;
}

uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t s = a ^ (0x9e3779b97f4a7c15ull + b);
  return splitmix64(s);
}

}  // namespace

void HostSpec::validate() const {
  if (kind != "white" && kind != "pink" && kind != "chords" && kind != "file") {
    throw ConfigError("unknown host kind: " + kind);
  }
  if (kind == "file" && path.empty()) throw ConfigError("file host needs a path");
  if (duration_s < 0) throw ConfigError("host duration must be >= 0");
}

AudioClip synth_host(const HostSpec& spec, double duration_s, uint64_t seed_mix) {
  spec.validate();
  if (spec.kind == "file") {
    AudioClip clip = read_wav(spec.path);
    if (clip.sample_rate != kSampleRate) {
      throw ConfigError(spec.path + ": host files must be 48 kHz");
    }
    return clip;
  }
  const double dur = spec.duration_s > 0 ? spec.duration_s : duration_s;
  const auto n = static_cast<int64_t>(std::llround(dur * kSampleRate));
  if (n < 1) throw ConfigError("host duration too short");
  KeyedRng rng(mix_seed(spec.seed, seed_mix));
  AudioClip clip;
  if (spec.kind == "white") {
    clip.samples = white_host(n, rng);
  } else if (spec.kind == "pink") {
    clip.samples = pink_host(n, rng);
  } else {
    clip.samples = chord_host(n, rng, kSampleRate);
  }
  normalize_rms(clip.samples, kHostRms);
  return clip;
}

ChannelSpec ChannelSetting::realize() const {
  ChannelSpec out = spec;
  if (!ir_path.empty()) {
    AudioClip ir = read_wav(ir_path);
    out.impulse_response = ir.samples;
  } else if (room) {
    out.impulse_response = synth_rir(*room);
  }
  out.validate();
  return out;
}

void Experiment::validate() const {
  if (host_corpus.empty()) throw ConfigError("experiment: empty host corpus");
  if (config_grid.empty()) throw ConfigError("experiment: empty config grid");
  if (channel_grid.empty()) throw ConfigError("experiment: empty channel grid");
  if (trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
  if (!(insert_period_s > 0)) throw ConfigError("insert_period_s must be positive");
  if (!(fa_scan.duration_s > 0) || !(fa_scan.stride_ms > 0)) {
    throw ConfigError("fa_scan parameters must be positive");
  }
  for (const auto& h : host_corpus) h.validate();
  for (const auto& c : config_grid) c.validate();
  decoder.validate();
  for (const auto& ch : channel_grid) {
    if (ch.room) ch.room->validate();
  }
}

FarScan run_far_scan(const AudioClip& host, const WatermarkConfig& config,
                     const WatermarkBank& bank, const DecoderParams& params) {
  ScoreTrace trace = scan(host, config, bank, params);
  FarScan out;
  out.rho_bar = std::move(trace.rho_bar);
  out.rho0_mean = trace.rho0_mean;
  out.sigma0 = trace.sigma0;
  // Unwatermarked rho_bar rarely reaches 4 sigma of the raw score spread
  // (smoothing shrinks it further); a tail fraction beyond 1e-3 up there
  // means the input almost certainly carries a mark.
  int64_t high = 0;
  for (double v : out.rho_bar) {
    if (v >= 4.0 * out.sigma0) ++high;
  }
  out.heavy_right_tail =
      !out.rho_bar.empty() &&
      static_cast<double>(high) / static_cast<double>(out.rho_bar.size()) > 1e-3;
  return out;
}

CellResult run_cell(const Experiment& experiment, int config_index,
                    int channel_index) {
  experiment.validate();
  const WatermarkConfig& config = experiment.config_grid[config_index];
  const ChannelSetting& setting = experiment.channel_grid[channel_index];
  const int cell =
      config_index * static_cast<int>(experiment.channel_grid.size()) +
      channel_index;

  const int64_t span = config.span();
  const int64_t period =
      static_cast<int64_t>(std::llround(experiment.insert_period_s * kSampleRate));
  if (period < span) throw ConfigError("insert_period_s shorter than the watermark");
  const int64_t lead = static_cast<int64_t>(kLeadS * kSampleRate);
  const int64_t need =
      lead + static_cast<int64_t>(experiment.trials_per_cell) * period + span +
      static_cast<int64_t>(kTailS * kSampleRate);

  const HostSpec& host_spec =
      experiment.host_corpus[cell % experiment.host_corpus.size()];
  AudioClip host = synth_host(host_spec, static_cast<double>(need) / kSampleRate,
                              mix_seed(experiment.seed, 0x105700ull + cell));
  if (host.length() < need) {
    throw RangeError("host too short for " +
                     std::to_string(experiment.trials_per_cell) + " trials");
  }

  WatermarkBank bank = generate_bank(config);
  EmbedPlacement placement;
  placement.start_offset = lead;
  placement.repeat_period = period;
  EmbedReport ereport;
  AudioClip marked = embed_watermark(host, config, bank, placement, &ereport);
  // Cap at the requested trial count (plan_insertions fills the whole host).
  std::vector<int64_t> positions = ereport.positions;
  if (static_cast<int>(positions.size()) > experiment.trials_per_cell) {
    positions.resize(static_cast<std::size_t>(experiment.trials_per_cell));
  }

  ChannelSpec chan = setting.realize();
  chan.noise_seed = mix_seed(experiment.seed, 0xc0ffee00ull + cell);
  AudioClip received = apply_channel(marked, chan);
  AudioClip received_null = apply_channel(host, chan);

  ScoreTrace sig_trace = scan(received, config, bank, experiment.decoder);
  ScoreTrace null_trace = scan(received_null, config, bank, experiment.decoder);

  CellResult out;
  out.config_index = config_index;
  out.channel_index = channel_index;
  out.channel_label = setting.label;
  out.insertions = static_cast<int>(positions.size());
  out.gamma = sig_trace.gamma;
  out.sigma0 = sig_trace.sigma0;
  out.null_scores = null_trace.rho_bar;

  const double rate = 1.0 + chan.drift_ppm * 1e-6;
  const int64_t stride = experiment.decoder.scan_stride;
  for (int64_t pos : positions) {
    const auto center = static_cast<int64_t>(std::llround(pos * rate));
    const int64_t lo = std::max<int64_t>(0, center - span / 2);
    const int64_t hi = center + span / 2;
    const auto k0 = static_cast<std::size_t>((lo + stride - 1) / stride);
    double best = -std::numeric_limits<double>::infinity();
    bool hit = false;
    for (std::size_t k = k0;
         k < sig_trace.times.size() && sig_trace.times[k] <= hi; ++k) {
      best = std::max(best, sig_trace.rho_bar[k]);
      hit = hit || sig_trace.decisions[k] != 0;
    }
    out.signal_scores.push_back(best);
    if (hit) ++out.detected_at_gamma;
  }
  return out;
}

std::vector<CellResult> run_detection_trials(const Experiment& experiment) {
  experiment.validate();
  std::vector<CellResult> out;
  for (int c = 0; c < static_cast<int>(experiment.config_grid.size()); ++c) {
    for (int ch = 0; ch < static_cast<int>(experiment.channel_grid.size()); ++ch) {
      out.push_back(run_cell(experiment, c, ch));
    }
  }
  return out;
}

RocCurve build_roc(const std::vector<double>& signal_scores,
                   const std::vector<double>& null_scores) {
  if (signal_scores.empty() || null_scores.empty()) {
    throw RangeError("build_roc: empty score set");
  }
  std::vector<double> sig = signal_scores, nul = null_scores;
  std::sort(sig.begin(), sig.end());
  std::sort(nul.begin(), nul.end());

  // Exact rank AUC (ties at half credit): identical to trapezoid integration
  // of the empirical curve over every threshold.
  double wins = 0.0;
  {
    std::size_t j_less = 0, j_eq = 0;
    for (double s : sig) {
      while (j_less < nul.size() && nul[j_less] < s) ++j_less;
      if (j_eq < j_less) j_eq = j_less;
      while (j_eq < nul.size() && nul[j_eq] <= s) ++j_eq;
      wins += static_cast<double>(j_less) +
              0.5 * static_cast<double>(j_eq - j_less);
    }
  }
  RocCurve roc;
  roc.auc = wins / (static_cast<double>(sig.size()) * static_cast<double>(nul.size()));

  // Decimated plotting points: thresholds from pooled quantiles.
  std::vector<double> pool;
  pool.reserve(sig.size() + nul.size());
  pool.insert(pool.end(), sig.begin(), sig.end());
  pool.insert(pool.end(), nul.begin(), nul.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  const std::size_t max_pts = 512;
  const std::size_t step = std::max<std::size_t>(1, pool.size() / max_pts);

  auto frac_ge = [](const std::vector<double>& sorted, double thr) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), thr);
    return static_cast<double>(sorted.end() - it) /
           static_cast<double>(sorted.size());
  };
  for (std::size_t i = 0; i < pool.size(); i += step) {
    const double thr = pool[pool.size() - 1 - i];  // descending
    roc.points.push_back({thr, frac_ge(nul, thr), frac_ge(sig, thr)});
  }
  roc.points.push_back({pool.front(), 1.0, 1.0});
  return roc;
}

double tpr_at_far(const std::vector<double>& signal_scores,
                  const std::vector<double>& null_scores, double far) {
  if (signal_scores.empty() || null_scores.empty()) {
    throw RangeError("tpr_at_far: empty score set");
  }
  std::vector<double> nul = null_scores;
  std::sort(nul.begin(), nul.end(), std::greater<>());
  const auto k = static_cast<std::size_t>(far * static_cast<double>(nul.size()));
  // Threshold = k-th largest null; strictly above it at most k nulls fall,
  // so the measured FAR stays <= far.
  const double thr = k < nul.size() ? nul[k] : nul.back();
  int64_t hits = 0;
  for (double s : signal_scores) {
    if (s > thr) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(signal_scores.size());
}

// ---------------------------------------------------------------------------
// Experiment JSON + report

namespace {

nlohmann::json config_to_json(const WatermarkConfig& c) {
  return {{"key", c.key.key_bytes},
          {"sign_key", c.key.sign_key_bytes},
          {"block_len", c.block_len},
          {"band", {c.band.k_lo, c.band.k_hi}},
          {"segments", c.segments},
          {"repeats", c.repeats},
          {"beta", c.beta}};
}

WatermarkConfig config_from_json(const nlohmann::json& j) {
  WatermarkConfig c;
  c.key.key_bytes = j.at("key").get<std::string>();
  c.key.sign_key_bytes = j.value("sign_key", std::string());
  c.block_len = j.value("block_len", c.block_len);
  if (j.contains("band")) {
    c.band.k_lo = j.at("band").at(0).get<int>();
    c.band.k_hi = j.at("band").at(1).get<int>();
  }
  c.segments = j.value("segments", c.segments);
  c.repeats = j.value("repeats", c.repeats);
  c.beta = j.value("beta", c.beta);
  return c;
}

nlohmann::json channel_to_json(const ChannelSetting& ch) {
  nlohmann::json j;
  j["label"] = ch.label;
  if (ch.room) {
    j["room"] = {{"rt60_s", ch.room->rt60_s},
                 {"length_s", ch.room->length_s},
                 {"direct_ratio_db", ch.room->direct_ratio_db},
                 {"seed", ch.room->seed}};
  }
  if (!ch.ir_path.empty()) j["ir_path"] = ch.ir_path;
  j["drift_ppm"] = ch.spec.drift_ppm;
  if (ch.spec.noise_snr_db) j["noise_snr_db"] = *ch.spec.noise_snr_db;
  j["gain_db"] = ch.spec.gain_db;
  if (ch.spec.lowpass_hz) j["lowpass_hz"] = *ch.spec.lowpass_hz;
  if (ch.spec.highpass_hz) j["highpass_hz"] = *ch.spec.highpass_hz;
  return j;
}

ChannelSetting channel_from_json(const nlohmann::json& j) {
  ChannelSetting ch;
  ch.label = j.value("label", std::string("channel"));
  if (j.contains("room")) {
    SyntheticRoom r;
    const auto& jr = j.at("room");
    r.rt60_s = jr.value("rt60_s", r.rt60_s);
    r.length_s = jr.value("length_s", r.length_s);
    r.direct_ratio_db = jr.value("direct_ratio_db", r.direct_ratio_db);
    r.seed = jr.value("seed", r.seed);
    ch.room = r;
  }
  ch.ir_path = j.value("ir_path", std::string());
  ch.spec.drift_ppm = j.value("drift_ppm", 0.0);
  if (j.contains("noise_snr_db")) ch.spec.noise_snr_db = j.at("noise_snr_db").get<double>();
  ch.spec.gain_db = j.value("gain_db", 0.0);
  if (j.contains("lowpass_hz")) ch.spec.lowpass_hz = j.at("lowpass_hz").get<double>();
  if (j.contains("highpass_hz")) ch.spec.highpass_hz = j.at("highpass_hz").get<double>();
  return ch;
}

}  // namespace

std::string Experiment::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["seed"] = seed;
  j["trials_per_cell"] = trials_per_cell;
  j["insert_period_s"] = insert_period_s;
  j["fa_scan"] = {{"duration_s", fa_scan.duration_s}, {"stride_ms", fa_scan.stride_ms}};
  j["decoder"] = {{"scan_stride", decoder.scan_stride},
                  {"noise_window", decoder.noise_window},
                  {"smooth_window", decoder.smooth_window},
                  {"threshold_multiplier", decoder.threshold_multiplier}};
  j["hosts"] = nlohmann::json::array();
  for (const auto& h : host_corpus) {
    nlohmann::json jh = {{"kind", h.kind}, {"seed", h.seed}};
    if (h.duration_s > 0) jh["duration_s"] = h.duration_s;
    if (!h.path.empty()) jh["path"] = h.path;
    j["hosts"].push_back(jh);
  }
  j["configs"] = nlohmann::json::array();
  for (const auto& c : config_grid) j["configs"].push_back(config_to_json(c));
  j["channels"] = nlohmann::json::array();
  for (const auto& ch : channel_grid) j["channels"].push_back(channel_to_json(ch));
  return j.dump(2);
}

Experiment Experiment::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment json parse error: ") + e.what());
  }
  try {
    if (j.value("schema_version", 1) != 1) {
      throw ConfigError("experiment: unsupported schema_version");
    }
    Experiment ex;
    ex.seed = j.value("seed", 1ull);
    ex.trials_per_cell = j.value("trials_per_cell", 200);
    ex.insert_period_s = j.value("insert_period_s", 4.0);
    if (j.contains("fa_scan")) {
      ex.fa_scan.duration_s = j.at("fa_scan").value("duration_s", 60.0);
      ex.fa_scan.stride_ms = j.at("fa_scan").value("stride_ms", 5.0);
    }
    if (j.contains("decoder")) {
      const auto& jd = j.at("decoder");
      ex.decoder.scan_stride = jd.value("scan_stride", ex.decoder.scan_stride);
      ex.decoder.noise_window = jd.value("noise_window", ex.decoder.noise_window);
      ex.decoder.smooth_window = jd.value("smooth_window", ex.decoder.smooth_window);
      ex.decoder.threshold_multiplier =
          jd.value("threshold_multiplier", ex.decoder.threshold_multiplier);
    }
    if (j.contains("hosts")) {
      ex.host_corpus.clear();
      for (const auto& jh : j.at("hosts")) {
        HostSpec h;
        h.kind = jh.value("kind", std::string("pink"));
        h.seed = jh.value("seed", 1ull);
        h.duration_s = jh.value("duration_s", 0.0);
        h.path = jh.value("path", std::string());
        ex.host_corpus.push_back(h);
      }
    }
    for (const auto& jc : j.at("configs")) {
      ex.config_grid.push_back(config_from_json(jc));
    }
    for (const auto& jch : j.at("channels")) {
      ex.channel_grid.push_back(channel_from_json(jch));
    }
    ex.validate();
    return ex;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment json: bad field: ") + e.what());
  }
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void sweep_report(const Experiment& experiment, const std::string& out_dir) {
  experiment.validate();

  std::string cells_csv =
      "config_index,channel_index,channel_label,watermark_s,beta,insertions,"
      "detected_at_gamma,tpr_at_gamma,gamma,sigma0,auc,tpr_at_far_1e2,"
      "signal_mean,null_sd\n";
  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = experiment.seed;
  manifest["experiment"] = nlohmann::json::parse(experiment.to_json());
  manifest["config_hashes"] = nlohmann::json::array();
  for (const auto& c : experiment.config_grid) {
    manifest["config_hashes"].push_back(c.config_hash());
  }
  manifest["cells"] = nlohmann::json::array();

  for (int c = 0; c < static_cast<int>(experiment.config_grid.size()); ++c) {
    for (int ch = 0; ch < static_cast<int>(experiment.channel_grid.size()); ++ch) {
      CellResult cell = run_cell(experiment, c, ch);
      RocCurve roc = build_roc(cell.signal_scores, cell.null_scores);
      const double tpr_gamma =
          cell.insertions > 0
              ? static_cast<double>(cell.detected_at_gamma) / cell.insertions
              : 0.0;
      const double tpr_far = tpr_at_far(cell.signal_scores, cell.null_scores, 1e-2);

      double sig_mean = 0.0;
      for (double s : cell.signal_scores) sig_mean += s;
      sig_mean /= std::max<std::size_t>(1, cell.signal_scores.size());
      double null_mean = 0.0, null_sq = 0.0;
      for (double s : cell.null_scores) {
        null_mean += s;
        null_sq += s * s;
      }
      null_mean /= std::max<std::size_t>(1, cell.null_scores.size());
      const double null_sd = std::sqrt(std::max(
          0.0, null_sq / std::max<std::size_t>(1, cell.null_scores.size()) -
                   null_mean * null_mean));

      const WatermarkConfig& cfg = experiment.config_grid[c];
      const double wm_s = static_cast<double>(cfg.span()) / kSampleRate;
      cells_csv += std::to_string(c) + "," + std::to_string(ch) + "," +
                   cell.channel_label + "," + fmt(wm_s) + "," + fmt(cfg.beta) +
                   "," + std::to_string(cell.insertions) + "," +
                   std::to_string(cell.detected_at_gamma) + "," +
                   fmt(tpr_gamma) + "," + fmt(cell.gamma) + "," +
                   fmt(cell.sigma0) + "," + fmt(roc.auc) + "," + fmt(tpr_far) +
                   "," + fmt(sig_mean) + "," + fmt(null_sd) + "\n";

      std::string roc_csv = "threshold,far,tpr\n";
      for (const auto& p : roc.points) {
        roc_csv += fmt(p.threshold) + "," + fmt(p.far) + "," + fmt(p.tpr) + "\n";
      }
      const std::string cell_tag =
          "c" + std::to_string(c) + "_ch" + std::to_string(ch);
      write_file_atomic(out_dir + "/roc_" + cell_tag + ".csv", roc_csv);

      std::string scores_csv = "hypothesis,score\n";
      for (double s : cell.signal_scores) scores_csv += "signal," + fmt(s) + "\n";
      const std::size_t null_step =
          std::max<std::size_t>(1, cell.null_scores.size() / 20000);
      for (std::size_t i = 0; i < cell.null_scores.size(); i += null_step) {
        scores_csv += "null," + fmt(cell.null_scores[i]) + "\n";
      }
      write_file_atomic(out_dir + "/scores_" + cell_tag + ".csv", scores_csv);

      manifest["cells"].push_back({{"config_index", c},
                                   {"channel_index", ch},
                                   {"label", cell.channel_label},
                                   {"watermark_s", wm_s},
                                   {"auc", roc.auc},
                                   {"tpr_at_gamma", tpr_gamma},
                                   {"tpr_at_far_1e2", tpr_far},
                                   {"insertions", cell.insertions}});
    }
  }

  // FA scans: one per config on the first host spec, unwatermarked.
  manifest["fa_scans"] = nlohmann::json::array();
  DecoderParams fa_params = experiment.decoder;
  fa_params.scan_stride = static_cast<int>(
      std::lround(experiment.fa_scan.stride_ms * 1e-3 * kSampleRate));
  for (int c = 0; c < static_cast<int>(experiment.config_grid.size()); ++c) {
    const WatermarkConfig& cfg = experiment.config_grid[c];
    WatermarkBank bank = generate_bank(cfg);
    AudioClip host =
        synth_host(experiment.host_corpus.front(), experiment.fa_scan.duration_s,
                   mix_seed(experiment.seed, 0xfa5ca00ull + c));
    FarScan far = run_far_scan(host, cfg, bank, fa_params);
    int64_t above_gamma = 0;
    const double gamma = fa_params.threshold_multiplier * far.sigma0;
    for (double v : far.rho_bar) {
      if (v >= gamma) ++above_gamma;
    }
    manifest["fa_scans"].push_back(
        {{"config_index", c},
         {"points", far.rho_bar.size()},
         {"sigma0", far.sigma0},
         {"far_at_gamma",
          static_cast<double>(above_gamma) /
              std::max<std::size_t>(1, far.rho_bar.size())},
         {"heavy_right_tail", far.heavy_right_tail}});
  }

  write_file_atomic(out_dir + "/cells.csv", cells_csv);
  write_file_atomic(out_dir + "/manifest.json", manifest.dump(2));
}

}  // namespace wm
