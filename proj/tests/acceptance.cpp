// Acceptance gate: one check per shipped claim, each printing PASS or FAIL
// with the measured numbers. Exit 0 only if every criterion holds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "wm/bank.hpp"
#include "wm/channel.hpp"
#include "wm/common.hpp"
#include "wm/decoder.hpp"
#include "wm/dsp.hpp"
#include "wm/encoder.hpp"
#include "wm/eval.hpp"
#include "wm/kernels.hpp"
#include "wm/rng.hpp"

using namespace wm;

namespace {

// Operating points chosen at build time. The underlying algorithm leaves the
// embedding strength beta free; each experiment pins it where the claim under
// test is exercised meaningfully (strong enough to detect, weak enough that
// degradation is visible). The detector always runs at its defaults.
namespace cal {
constexpr double kBetaSeparation = 0.25;  // hypothesis separation (reverb grid)
constexpr double kBetaLength = 0.17;      // length trend ROC
// The all-pairs score loses ~25-30x under 300 ppm drift at 1 s (inter-repeat
// lag reaches ~14 samples across the span, decorrelating distant pairs), so
// demonstrating the robust regime needs an operating point whose undrifted
// score clears the threshold by that factor.
constexpr double kBetaDrift = 0.70;       // drift robustness
constexpr double kBetaMisalign = 0.50;    // half-block misalignment
constexpr int kTrialsSeparation = 17;     // x 12 rooms = 204 insertions
constexpr int kTrialsLength = 43;         // x 12 rooms = 516 per length
constexpr int kTrialsDrift = 150;         // per ppm arm
constexpr int kTrialsMisalign = 60;       // per alignment arm
}  // namespace cal

int g_pass = 0, g_fail = 0;

void report(int index, const char* name, bool pass, const std::string& detail,
            double seconds) {
  std::printf("C%-2d %s %-22s %s  [%.1fs]\n", index, pass ? "PASS" : "FAIL",
              name, detail.c_str(), seconds);
  std::fflush(stdout);
  (pass ? g_pass : g_fail)++;
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

WatermarkConfig base_config(double beta, double duration_s = 1.0) {
  WatermarkConfig cfg;
  cfg.key.key_bytes = "acceptance-key";
  cfg.beta = beta;
  cfg.repeats = repeats_for_duration(duration_s, cfg.block_len, cfg.segments);
  return cfg;
}

// Per-bin multiplicative channel applied blockwise in the DCT domain on the
// embedding band; stands in for an arbitrary LTI channel at block granularity.
AudioClip apply_bin_gains(const AudioClip& y, const std::vector<double>& alpha,
                          int block_len, const Band& band) {
  DctPlan plan(block_len);
  AudioClip out = y;
  const std::int64_t nblocks = y.length() / block_len;
  std::vector<double> spec(static_cast<std::size_t>(block_len));
  for (std::int64_t b = 0; b < nblocks; ++b) {
    std::span<double> block(out.samples.data() + b * block_len,
                            static_cast<std::size_t>(block_len));
    plan.forward(block, spec);
    for (int k = 0; k < band.width(); ++k) {
      spec[static_cast<std::size_t>(band.k_lo + k)] *=
          alpha[static_cast<std::size_t>(k)];
    }
    plan.inverse(spec, block);
  }
  return out;
}

AudioClip pink_host(double seconds, std::uint64_t seed) {
  HostSpec spec;
  spec.kind = "pink";
  spec.seed = seed;
  return synth_host(spec, seconds, 0);
}

// ---------------------------------------------------------------- criteria

void c1_embedding_exactness() {
  const double t0 = now_s();
  auto cfg = base_config(0.1);
  auto bank = generate_bank(cfg);
  KeyedRng rng(0xc1);
  double max_rel = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double scale = std::exp(rng.next_gaussian());  // exercise dynamics
    std::vector<double> spec(480);
    for (auto& v : spec) v = scale * rng.next_gaussian();
    const int i = t % cfg.segments;
    const int sgn = rng.next_sign();
    const double g = std::sqrt(band_inner(spec, spec, cfg.band));
    const double eta = cfg.beta * sgn * g;
    embed_eigen_block(spec, bank.vectors[static_cast<std::size_t>(i)], cfg.band,
                      eta);
    double got = 0.0;
    for (int k = 0; k < cfg.band.width(); ++k) {
      got += spec[static_cast<std::size_t>(cfg.band.k_lo + k)] *
             bank.vectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    max_rel = std::max(max_rel, std::abs(got - eta) / std::abs(eta));
  }
  report(1, "embed-exactness", max_rel < 1e-6,
         fmt("max relative error %.2e over 1000 blocks (tol 1e-6)", max_rel),
         now_s() - t0);
}

void c2_bank_orthonormality() {
  const double t0 = now_s();
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    auto cfg = base_config(0.1);
    cfg.key.key_bytes = "ortho-key-" + std::to_string(k);
    auto diag = verify_bank(generate_bank(cfg), cfg);
    worst = std::max({worst, diag.max_ortho_dev, diag.max_norm_dev});
  }
  report(2, "bank-orthonormality", worst < 1e-9,
         fmt("max |<wi,wj>-delta| %.2e over 100 keys (tol 1e-9)", worst),
         now_s() - t0);
}

void c3_decoder_oracle() {
  const double t0 = now_s();
  double max_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    WatermarkConfig cfg;
    cfg.key.key_bytes = "oracle-" + std::to_string(t % 5);
    cfg.segments = 1 + (t % 2);
    cfg.repeats = 8 + 4 * (t % 3);
    cfg.beta = 0.2;
    auto bank = generate_bank(cfg);
    AudioClip y = tu::white_clip(cfg.span() + 4000, 0xc3000 + t);
    if (t % 2 == 0) {
      EmbedPlacement pl;
      pl.start_offset = (t * 131) % 2000;
      y = embed_watermark(y, cfg, bank, pl);
    }
    const std::int64_t off = (t * 157) % 3800;
    const double fast = score_at(y, off, cfg, bank);
    const double slow = tu::naive_score(y, off, cfg, bank);
    max_rel = std::max(max_rel,
                       std::abs(fast - slow) / std::max(1.0, std::abs(slow)));
  }
  report(3, "decoder-oracle", max_rel < 1e-9,
         fmt("max relative gap %.2e over 100 clips/offsets (tol 1e-9)", max_rel),
         now_s() - t0);
}

void c4_channel_sign_invariance() {
  const double t0 = now_s();
  auto cfg = base_config(0.25);
  cfg.repeats = 20;
  auto bank = generate_bank(cfg);

  SyntheticRoom room;
  room.rt60_s = 0.3;
  room.seed = 5;
  auto alpha = dct_channel_gain(synth_rir(room), cfg.block_len, cfg.band);
  std::vector<double> alpha_abs(alpha.size()), alpha_flip(alpha.size());
  KeyedRng rng(0xc4);
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    alpha_abs[k] = std::abs(alpha[k]);
    alpha_flip[k] = alpha_abs[k] * (rng.next_sign() > 0 ? 1.0 : -1.0);
  }
  auto pa = analytic_signatures(cfg, bank, alpha_abs);
  auto pb = analytic_signatures(cfg, bank, alpha_flip);
  const bool exact = pa.rho1_shift == pb.rho1_shift;  // alpha enters squared

  double mean_abs = 0.0, mean_flip = 0.0;
  const int trials = 200;
  for (int i = 0; i < trials; ++i) {
    AudioClip host = tu::white_clip(cfg.span(), 0xc4000 + i);
    AudioClip marked = embed_watermark(host, cfg, bank, {});
    mean_abs +=
        score_at(apply_bin_gains(marked, alpha_abs, cfg.block_len, cfg.band), 0,
                 cfg, bank);
    mean_flip +=
        score_at(apply_bin_gains(marked, alpha_flip, cfg.block_len, cfg.band),
                 0, cfg, bank);
  }
  mean_abs /= trials;
  mean_flip /= trials;
  const double rel = std::abs(mean_flip - mean_abs) / std::abs(mean_abs);
  report(4, "channel-sign-invar", exact && rel < 0.10,
         fmt("analytic shift %s; measured means %.2f vs %.2f (gap %.1f%%, tol 10%%)",
             exact ? "bit-identical" : "DIFFERS", mean_abs, mean_flip,
             100.0 * rel),
         now_s() - t0);
}

void c5_cross_corr_failure() {
  const double t0 = now_s();
  const int trials = 100;
  auto cfg = base_config(0.25);
  cfg.repeats = 20;
  auto bank = generate_bank(cfg);
  KeyedRng rng(0xc5);

  double legacy_flat = 0.0, legacy_sign = 0.0;
  double self_flat = 0.0, self_sign = 0.0;
  const int legacy_blocks = 40;
  for (int i = 0; i < trials; ++i) {
    // Fresh random-sign channel per trial.
    std::vector<double> signs(static_cast<std::size_t>(cfg.band.width()));
    for (auto& s : signs) s = (rng.next_sign() > 0 ? 1.0 : -1.0);

    AudioClip lhost =
        tu::white_clip(static_cast<std::int64_t>(legacy_blocks) * cfg.block_len,
                       0xc5100 + i);
    AudioClip lmark = embed_legacy_ss(lhost, bank.vectors[0], cfg.band, 0.5,
                                      cfg.block_len);
    for (double s :
         detect_legacy(lmark, bank.vectors[0], cfg.block_len, cfg.band)) {
      legacy_flat += s / (trials * legacy_blocks);
    }
    AudioClip lsign = apply_bin_gains(lmark, signs, cfg.block_len, cfg.band);
    for (double s :
         detect_legacy(lsign, bank.vectors[0], cfg.block_len, cfg.band)) {
      legacy_sign += s / (trials * legacy_blocks);
    }

    AudioClip shost = tu::white_clip(cfg.span(), 0xc5200 + i);
    AudioClip smark = embed_watermark(shost, cfg, bank, {});
    self_flat += score_at(smark, 0, cfg, bank) / trials;
    self_sign += score_at(apply_bin_gains(smark, signs, cfg.block_len, cfg.band),
                          0, cfg, bank) /
                 trials;
  }
  const bool legacy_dies = std::abs(legacy_sign) < 0.10 * legacy_flat;
  const bool self_survives = self_sign > 0.80 * self_flat;
  report(5, "cross-corr-failure", legacy_dies && self_survives,
         fmt("legacy mean %.3f -> %.3f (|ratio| %.1f%%, need <10%%); "
             "self-corr %.1f -> %.1f (kept %.0f%%, need >80%%)",
             legacy_flat, legacy_sign, 100.0 * std::abs(legacy_sign) / legacy_flat,
             self_flat, self_sign, 100.0 * self_sign / self_flat),
         now_s() - t0);
}

void c6_hypothesis_separation() {
  const double t0 = now_s();
  auto cfg = base_config(cal::kBetaSeparation);
  auto bank = generate_bank(cfg);
  const std::int64_t lead = 2 * kSampleRate;
  const std::int64_t period = 4 * kSampleRate;
  const double host_s =
      2.0 + 4.0 * cal::kTrialsSeparation + 1.0 + 2.0;

  std::vector<double> shifts;
  double sigma_acc = 0.0;
  int rooms_done = 0;
  for (const auto& room : room_grid()) {
    ChannelSpec chan;
    chan.impulse_response = synth_rir(room);
    AudioClip host = pink_host(host_s, 0xc600 + room.seed);
    EmbedPlacement pl;
    pl.start_offset = lead;
    pl.repeat_period = period;
    AudioClip marked = embed_watermark(host, cfg, bank, pl);
    AudioClip y = apply_channel(marked, chan);
    ScoreTrace trace = scan(y, cfg, bank);
    DecoderParams defaults;
    for (int n = 0; n < cal::kTrialsSeparation; ++n) {
      const std::int64_t t = lead + n * period;
      const std::size_t k = static_cast<std::size_t>(t / defaults.scan_stride);
      if (k < trace.rho.size()) {
        shifts.push_back(trace.rho[k] - trace.rho0_mean);
      }
    }
    sigma_acc += trace.sigma0;
    ++rooms_done;
  }
  const double mean_shift = tu::mean(shifts);
  const double sigma0 = sigma_acc / rooms_done;
  const double ratio = mean_shift / sigma0;
  report(6, "hypothesis-separation", ratio >= 10.0,
         fmt("mean rho1 shift %.1f vs sigma0 %.2f: %.1fx (need >=10x, %zu "
             "insertions, beta %.2f)",
             mean_shift, sigma0, ratio, shifts.size(), cal::kBetaSeparation),
         now_s() - t0);
}

void c7_length_trend() {
  const double t0 = now_s();
  const std::vector<double> lengths{0.4, 0.8, 1.0, 2.0};
  std::vector<double> aucs;
  std::size_t min_sig = SIZE_MAX, min_nul = SIZE_MAX;
  std::string per_len;
  for (double len : lengths) {
    Experiment ex;
    ex.config_grid = {base_config(cal::kBetaLength, len)};
    for (const auto& room : room_grid()) {
      ChannelSetting ch;
      ch.label = "room";
      ch.room = room;
      ex.channel_grid.push_back(ch);
    }
    ex.trials_per_cell = cal::kTrialsLength;
    ex.insert_period_s = 4.0;
    ex.seed = 0xc7;
    std::vector<double> sig, nul;
    for (int c = 0; c < 12; ++c) {
      CellResult cell = run_cell(ex, 0, c);
      sig.insert(sig.end(), cell.signal_scores.begin(), cell.signal_scores.end());
      nul.insert(nul.end(), cell.null_scores.begin(), cell.null_scores.end());
    }
    min_sig = std::min(min_sig, sig.size());
    min_nul = std::min(min_nul, nul.size());
    const double auc = build_roc(sig, nul).auc;
    aucs.push_back(auc);
    per_len += fmt(" %.1fs=%.5f", len, auc);
  }
  const bool strict = aucs[0] < aucs[1] && aucs[1] < aucs[2] && aucs[2] < aucs[3];
  const bool bar = aucs[1] >= 0.99 && aucs[2] >= 0.99 && aucs[3] >= 0.99;
  report(7, "length-trend",
         strict && bar && min_sig >= 500 && min_nul >= 100000,
         fmt("AUC%s (strictly increasing: %s; >=0.99 from 0.8s: %s; "
             ">=%zu signal, >=%zu null per length, beta %.2f)",
             per_len.c_str(), strict ? "yes" : "NO", bar ? "yes" : "NO",
             min_sig, min_nul, cal::kBetaLength),
         now_s() - t0);
}

void c8_drift_robustness() {
  const double t0 = now_s();
  Experiment ex;
  ex.config_grid = {base_config(cal::kBetaDrift)};
  for (double ppm : {0.0, 300.0, 500.0}) {
    SyntheticRoom room;
    room.rt60_s = 0.3;
    room.seed = 207;
    ChannelSetting ch;
    ch.label = fmt("drift%.0f", ppm);
    ch.room = room;
    ch.spec.drift_ppm = ppm;
    ex.channel_grid.push_back(ch);
  }
  ex.trials_per_cell = cal::kTrialsDrift;
  ex.insert_period_s = 4.0;
  ex.seed = 0xc8;
  std::vector<double> tpr;
  for (int c = 0; c < 3; ++c) {
    CellResult cell = run_cell(ex, 0, c);
    tpr.push_back(tpr_at_far(cell.signal_scores, cell.null_scores, 1e-2));
  }
  const bool works = tpr[0] >= 0.90;
  const bool holds_300 = tpr[1] >= 0.95 * tpr[0];
  const bool drops_500 = tpr[2] <= tpr[1] - 0.02;
  report(8, "drift-robustness", works && holds_300 && drops_500,
         fmt("TPR@FAR1e-2: 0ppm %.3f, 300ppm %.3f (%.1f%% of 0ppm, need "
             ">=95%%), 500ppm %.3f (drop %.3f, need >=0.02; beta %.2f)",
             tpr[0], tpr[1], 100.0 * tpr[1] / std::max(tpr[0], 1e-12), tpr[2],
             tpr[1] - tpr[2], cal::kBetaDrift),
         now_s() - t0);
}

void c9_misalignment() {
  const double t0 = now_s();
  auto cfg = base_config(cal::kBetaMisalign);
  auto bank = generate_bank(cfg);
  DecoderParams params;
  params.scan_stride = cfg.block_len;  // offset arm stays half a block away
  const std::int64_t period = 4 * kSampleRate;
  const double host_s = 2.0 + 4.0 * cal::kTrialsMisalign + 1.0 + 2.0;
  SyntheticRoom room;
  room.rt60_s = 0.3;
  room.seed = 301;
  ChannelSpec chan;
  chan.impulse_response = synth_rir(room);

  double tpr[2] = {0.0, 0.0}, peak[2] = {0.0, 0.0};
  const std::int64_t leads[2] = {2 * kSampleRate,
                                 2 * kSampleRate + cfg.block_len / 2};
  for (int arm = 0; arm < 2; ++arm) {
    AudioClip host = pink_host(host_s, 0xc901);  // same host both arms
    EmbedPlacement pl;
    pl.start_offset = leads[arm];
    pl.repeat_period = period;
    AudioClip marked = embed_watermark(host, cfg, bank, pl);
    AudioClip y = apply_channel(marked, chan);
    ScoreTrace trace = scan(y, cfg, bank, params);
    const std::int64_t stride = params.scan_stride;
    int hits = 0;
    double peak_acc = 0.0;
    for (int n = 0; n < cal::kTrialsMisalign; ++n) {
      const std::int64_t t = leads[arm] + n * period;
      const std::int64_t lo = t - cfg.span() / 2;
      const std::int64_t hi = t + cfg.span() / 2;
      bool hit = false;
      double best = -1e300;
      for (std::int64_t k = std::max<std::int64_t>(0, (lo + stride - 1) / stride);
           k * stride <= hi && k < static_cast<std::int64_t>(trace.rho_bar.size());
           ++k) {
        hit |= (trace.decisions[static_cast<std::size_t>(k)] != 0);
        best = std::max(best, trace.rho_bar[static_cast<std::size_t>(k)]);
      }
      hits += hit;
      peak_acc += best;
    }
    tpr[arm] = static_cast<double>(hits) / cal::kTrialsMisalign;
    peak[arm] = peak_acc / cal::kTrialsMisalign;
  }
  const double ratio = tpr[1] / std::max(tpr[0], 1e-12);
  report(9, "misalignment-tol", tpr[0] > 0.9 && ratio >= 0.80,
         fmt("TPR aligned %.3f vs half-block offset %.3f (ratio %.0f%%, need "
             ">=80%%; mean peak rho_bar %.1f vs %.1f, beta %.2f)",
             tpr[0], tpr[1], 100.0 * ratio, peak[0], peak[1],
             cal::kBetaMisalign),
         now_s() - t0);
}

void c10_null_calibration() {
  const double t0 = now_s();
  auto cfg = base_config(0.1);
  auto bank = generate_bank(cfg);
  std::size_t points = 0;
  double worst_far = 0.0;
  for (const auto& room : room_grid()) {
    ChannelSpec chan;
    chan.impulse_response = synth_rir(room);
    AudioClip host = pink_host(105.0, 0xca00 + room.seed);
    AudioClip y = apply_channel(host, chan);
    ScoreTrace trace = scan(y, cfg, bank);
    std::size_t fired = 0;
    for (std::uint8_t d : trace.decisions) fired += d;
    points += trace.decisions.size();
    worst_far = std::max(
        worst_far, static_cast<double>(fired) /
                       static_cast<double>(trace.decisions.size()));
  }
  report(10, "null-calibration", points >= 100000 && worst_far < 1e-2,
         fmt("worst per-room FAR %.2e at gamma=3sigma0 over %zu points across "
             "12 rooms (need <1e-2)",
             worst_far, points),
         now_s() - t0);
}

void c11_realtime() {
  const double t0 = now_s();
  auto cfg = base_config(0.1);
  auto bank = generate_bank(cfg);
  AudioClip host = pink_host(60.0, 0xcb01);
  StreamingDetector det(cfg, bank);
  const double start = now_s();
  std::size_t fed = 0;
  const std::size_t chunk = 4800;
  while (fed < host.samples.size()) {
    const std::size_t n = std::min(chunk, host.samples.size() - fed);
    det.feed(host.samples.data() + fed, n);
    fed += n;
  }
  det.finish();
  const double elapsed = now_s() - start;
  report(11, "realtime-throughput", elapsed < 60.0,
         fmt("60 s @48kHz streamed in %.2f s (%.0fx real time, %lld points, "
             "backend %s)",
             elapsed, 60.0 / elapsed,
             static_cast<long long>(det.points_scored()),
             kernels::backend_name(kernels::active_backend())),
         now_s() - t0);
}

}  // namespace

int main() {
  std::printf("acceptance gate: %s kernels\n",
              kernels::backend_name(kernels::active_backend()));
  c1_embedding_exactness();
  c2_bank_orthonormality();
  c3_decoder_oracle();
  c4_channel_sign_invariance();
  c5_cross_corr_failure();
  c6_hypothesis_separation();
  c7_length_trend();
  c8_drift_robustness();
  c9_misalignment();
  c10_null_calibration();
  c11_realtime();
  std::printf("acceptance: %d/%d passed\n", g_pass, g_pass + g_fail);
  return g_fail == 0 ? 0 : 1;
}
