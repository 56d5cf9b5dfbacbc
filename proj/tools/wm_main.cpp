// Command-line front end: embed / attack / detect / eval.
// Exit codes: 0 ok or detected, 10 scanned clean, 1 usage, 2 I/O, 3 validation.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "wm/channel.hpp"
#include "wm/decoder.hpp"
#include "wm/encoder.hpp"
#include "wm/eval.hpp"
#include "wm/wav.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNoDetection = 10;

struct ToolConfig {
  wm::WatermarkConfig watermark;
  wm::DecoderParams decoder;
  double period_s = 0.0;  // 0 = single insertion
  std::int64_t start_offset = 0;
  int bits = 16;
};

ToolConfig parse_tool_config(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw wm::ConfigError(origin + ": " + e.what());
  }
  try {
    if (j.value("schema_version", 1) != 1) {
      throw wm::ConfigError(origin + ": unsupported schema_version");
    }
    ToolConfig tc;
    if (j.contains("watermark")) {
      const auto& w = j.at("watermark");
      tc.watermark.key.key_bytes = w.value("key", std::string());
      tc.watermark.key.sign_key_bytes = w.value("sign_key", std::string());
      tc.watermark.block_len = w.value("block_len", tc.watermark.block_len);
      if (w.contains("band")) {
        tc.watermark.band.k_lo = w.at("band").at(0).get<int>();
        tc.watermark.band.k_hi = w.at("band").at(1).get<int>();
      }
      tc.watermark.segments = w.value("segments", tc.watermark.segments);
      tc.watermark.repeats = w.value("repeats", tc.watermark.repeats);
      tc.watermark.beta = w.value("beta", tc.watermark.beta);
    }
    if (j.contains("decoder")) {
      const auto& d = j.at("decoder");
      tc.decoder.scan_stride = d.value("scan_stride", tc.decoder.scan_stride);
      tc.decoder.noise_window = d.value("noise_window", tc.decoder.noise_window);
      tc.decoder.smooth_window = d.value("smooth_window", tc.decoder.smooth_window);
      tc.decoder.threshold_multiplier =
          d.value("threshold_multiplier", tc.decoder.threshold_multiplier);
    }
    if (j.contains("embed")) {
      const auto& e = j.at("embed");
      tc.period_s = e.value("period_s", tc.period_s);
      tc.start_offset = e.value("start_offset", tc.start_offset);
    }
    tc.bits = j.value("bits", tc.bits);
    return tc;
  } catch (const nlohmann::json::exception& e) {
    throw wm::ConfigError(origin + ": bad field: " + e.what());
  }
}

ToolConfig load_config(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("WM_CONFIG")) path = env;
  }
  if (path.empty()) return {};
  return parse_tool_config(wm::read_file(path), path);
}

wm::AudioClip read_input(const std::string& path) {
  wm::WavInfo info;
  wm::AudioClip clip = wm::read_wav(path, &info);
  if (info.downmixed) {
    std::cerr << "warning: " << path << " is stereo; downmixed to mono\n";
  }
  if (clip.sample_rate != wm::kSampleRate) {
    throw wm::ConfigError(path + ": sample rate " +
                          std::to_string(clip.sample_rate) +
                          " not supported; resample to 48000 first");
  }
  return clip;
}

int run_embed(const ToolConfig& tc, const std::string& in_path,
              const std::string& out_path) {
  wm::AudioClip host = read_input(in_path);
  tc.watermark.validate();
  wm::WatermarkBank bank = wm::generate_bank(tc.watermark);

  wm::EmbedPlacement placement;
  placement.start_offset = tc.start_offset;
  placement.repeat_period =
      tc.period_s > 0
          ? static_cast<std::int64_t>(std::llround(tc.period_s * wm::kSampleRate))
          : 0;
  wm::EmbedReport report;
  wm::AudioClip marked =
      wm::embed_watermark(host, tc.watermark, bank, placement, &report);
  wm::HeadroomReport headroom = wm::perceptual_headroom(
      host, marked, tc.watermark.block_len, tc.watermark.band);
  wm::write_wav(out_path, marked, tc.bits);

  nlohmann::json out;
  out["output"] = out_path;
  out["insertions"] = report.positions.size();
  out["positions"] = report.positions;
  out["blocks_marked"] = report.blocks_marked;
  out["blocks_skipped"] = report.blocks_skipped;
  out["config_hash"] = tc.watermark.config_hash();
  out["headroom"] = {{"mean_ratio_db", headroom.mean_ratio_db},
                     {"max_ratio_db", headroom.max_ratio_db},
                     {"peak_delta", headroom.peak_delta},
                     {"zero_energy_blocks", headroom.zero_energy_blocks}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct AttackArgs {
  std::string rir_path;
  double rt60 = 0.0;
  double direct_db = 6.0;
  std::uint64_t room_seed = 1;
  double drift_ppm = 0.0;
  std::optional<double> snr_db;
  double gain_db = 0.0;
  std::optional<double> lowpass_hz;
  std::optional<double> highpass_hz;
  std::uint64_t noise_seed = 0;
  bool preserve_length = false;
};

int run_attack(const AttackArgs& a, const std::string& in_path,
               const std::string& out_path, int bits) {
  wm::AudioClip clip = read_input(in_path);
  wm::ChannelSpec spec;
  if (!a.rir_path.empty()) {
    spec.impulse_response = wm::read_wav(a.rir_path).samples;
  } else if (a.rt60 > 0.0) {
    wm::SyntheticRoom room;
    room.rt60_s = a.rt60;
    room.direct_ratio_db = a.direct_db;
    room.seed = a.room_seed;
    spec.impulse_response = wm::synth_rir(room);
  }
  spec.drift_ppm = a.drift_ppm;
  spec.noise_snr_db = a.snr_db;
  spec.gain_db = a.gain_db;
  spec.lowpass_hz = a.lowpass_hz;
  spec.highpass_hz = a.highpass_hz;
  spec.noise_seed = a.noise_seed;
  spec.preserve_length = a.preserve_length;

  wm::AudioClip out = wm::apply_channel(clip, spec);
  wm::write_wav(out_path, out, bits);

  nlohmann::json summary;
  summary["output"] = out_path;
  summary["samples_in"] = clip.length();
  summary["samples_out"] = out.length();
  summary["ir_taps"] = spec.impulse_response.size();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int run_detect(const ToolConfig& tc, const std::string& in_path,
               const std::string& csv_path, const std::string& json_path,
               bool stream, int chunk) {
  wm::AudioClip y = read_input(in_path);
  tc.watermark.validate();
  wm::WatermarkBank bank = wm::generate_bank(tc.watermark);

  if (stream) {
    wm::StreamingDetector det(tc.watermark, bank, tc.decoder);
    std::size_t fed = 0;
    nlohmann::json dets = nlohmann::json::array();
    while (fed < y.samples.size()) {
      const std::size_t n =
          std::min<std::size_t>(static_cast<std::size_t>(chunk),
                                y.samples.size() - fed);
      det.feed(y.samples.data() + fed, n);
      fed += n;
      for (const auto& d : det.take_detections()) {
        nlohmann::json jd = {{"t_samples", d.t},
                             {"t_end_samples", d.t_end},
                             {"peak_rho_bar", d.peak_rho_bar}};
        std::cout << jd.dump() << "\n";
        dets.push_back(jd);
      }
    }
    det.finish();
    for (const auto& d : det.take_detections()) {
      nlohmann::json jd = {{"t_samples", d.t},
                           {"t_end_samples", d.t_end},
                           {"peak_rho_bar", d.peak_rho_bar}};
      std::cout << jd.dump() << "\n";
      dets.push_back(jd);
    }
    nlohmann::json summary;
    summary["points"] = det.points_scored();
    summary["detections"] = dets;
    if (!json_path.empty()) wm::write_file_atomic(json_path, summary.dump(2));
    std::cout << summary.dump(2) << "\n";
    return dets.empty() ? kExitNoDetection : 0;
  }

  wm::ScoreTrace trace = wm::scan(y, tc.watermark, bank, tc.decoder);
  if (!csv_path.empty()) wm::write_file_atomic(csv_path, trace.to_csv());
  const std::string summary = trace.summary_json();
  if (!json_path.empty()) wm::write_file_atomic(json_path, summary);
  std::cout << summary << "\n";
  return trace.detections().empty() ? kExitNoDetection : 0;
}

int run_eval(const std::string& experiment_path, const std::string& out_dir) {
  wm::Experiment ex = wm::Experiment::from_json(wm::read_file(experiment_path));
  wm::sweep_report(ex, out_dir);
  nlohmann::json summary;
  summary["out_dir"] = out_dir;
  summary["cells"] =
      ex.config_grid.size() * ex.channel_grid.size();
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acoustic-robust audio watermark tool"};
  app.require_subcommand(1);

  std::string config_path, in_path, out_path, csv_path, json_path;
  std::string experiment_path, out_dir;

  // embed ---------------------------------------------------------------
  auto* embed = app.add_subcommand("embed", "insert a watermark into a WAV");
  embed->add_option("-i,--input", in_path, "input WAV (48 kHz PCM)")->required();
  embed->add_option("-o,--output", out_path, "output WAV")->required();
  embed->add_option("-c,--config", config_path, "tool config JSON");
  std::string key, sign_key;
  double beta = 0.0, duration_s = 0.0, period_s = -1.0;
  std::int64_t start_offset = -1;
  int repeats = 0, bits = 0;
  auto* opt_key = embed->add_option("--key", key, "watermark key string");
  auto* opt_sign = embed->add_option("--sign-key", sign_key, "separate sign-layer key");
  auto* opt_beta = embed->add_option("--beta", beta, "embedding strength");
  auto* opt_rep = embed->add_option("--repeats", repeats, "repeat count N_r");
  auto* opt_dur =
      embed->add_option("--duration-s", duration_s, "watermark duration (sets repeats)");
  auto* opt_period = embed->add_option("--period-s", period_s,
                                       "insertion period in seconds (0 = once)");
  auto* opt_start = embed->add_option("--start-offset", start_offset,
                                      "first insertion offset in samples");
  auto* opt_bits = embed->add_option("--bits", bits, "output bit depth (16 or 24)");

  // attack ----------------------------------------------------------------
  auto* attack = app.add_subcommand("attack", "run a clip through the channel simulator");
  AttackArgs aa;
  attack->add_option("-i,--input", in_path, "input WAV")->required();
  attack->add_option("-o,--output", out_path, "output WAV")->required();
  attack->add_option("--rir", aa.rir_path, "impulse response WAV");
  attack->add_option("--rt60", aa.rt60, "synthetic room RT60 seconds");
  attack->add_option("--direct-db", aa.direct_db, "synthetic room direct/reverb dB");
  attack->add_option("--room-seed", aa.room_seed, "synthetic room seed");
  attack->add_option("--drift-ppm", aa.drift_ppm, "clock drift in ppm");
  double snr = 0.0, lp = 0.0, hp = 0.0;
  auto* opt_snr = attack->add_option("--snr-db", snr, "add noise at this SNR");
  attack->add_option("--gain-db", aa.gain_db, "gain in dB");
  auto* opt_lp = attack->add_option("--lowpass", lp, "lowpass cutoff Hz");
  auto* opt_hp = attack->add_option("--highpass", hp, "highpass cutoff Hz");
  attack->add_option("--noise-seed", aa.noise_seed, "noise RNG seed");
  attack->add_flag("--preserve-length", aa.preserve_length,
                   "trim/pad output to the input length");
  int attack_bits = 16;
  attack->add_option("--bits", attack_bits, "output bit depth (16 or 24)");

  // detect ----------------------------------------------------------------
  auto* detect = app.add_subcommand("detect", "scan a WAV for the watermark");
  detect->add_option("-i,--input", in_path, "input WAV")->required();
  detect->add_option("-c,--config", config_path, "tool config JSON");
  detect->add_option("--csv", csv_path, "write the full score trace CSV here");
  detect->add_option("--json", json_path, "write the summary JSON here");
  bool stream = false;
  int chunk = 4800;
  detect->add_flag("--stream", stream, "causal chunked detection");
  detect->add_option("--chunk", chunk, "streaming chunk size in samples");
  auto* opt_key_d = detect->add_option("--key", key, "watermark key string");
  auto* opt_sign_d = detect->add_option("--sign-key", sign_key, "sign-layer key");
  auto* opt_rep_d = detect->add_option("--repeats", repeats, "repeat count N_r");
  auto* opt_dur_d =
      detect->add_option("--duration-s", duration_s, "watermark duration (sets repeats)");

  // eval ------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "run an experiment grid");
  eval->add_option("-e,--experiment", experiment_path, "experiment JSON")->required();
  eval->add_option("-o,--out-dir", out_dir, "results directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (embed->parsed() || detect->parsed()) {
      ToolConfig tc = load_config(config_path);
      if (opt_key->count() || opt_key_d->count()) tc.watermark.key.key_bytes = key;
      if (opt_sign->count() || opt_sign_d->count()) {
        tc.watermark.key.sign_key_bytes = sign_key;
      }
      if (opt_beta->count()) tc.watermark.beta = beta;
      if (opt_rep->count() || opt_rep_d->count()) tc.watermark.repeats = repeats;
      if (opt_dur->count() || opt_dur_d->count()) {
        tc.watermark.repeats = wm::repeats_for_duration(
            duration_s, tc.watermark.block_len, tc.watermark.segments);
      }
      if (opt_period->count()) tc.period_s = period_s;
      if (opt_start->count()) tc.start_offset = start_offset;
      if (opt_bits->count()) tc.bits = bits;
      if (tc.watermark.key.key_bytes.empty()) {
        throw wm::ConfigError("no watermark key: pass --key or a config file");
      }
      if (embed->parsed()) return run_embed(tc, in_path, out_path);
      return run_detect(tc, in_path, csv_path, json_path, stream, chunk);
    }
    if (attack->parsed()) {
      if (opt_snr->count()) aa.snr_db = snr;
      if (opt_lp->count()) aa.lowpass_hz = lp;
      if (opt_hp->count()) aa.highpass_hz = hp;
      return run_attack(aa, in_path, out_path, attack_bits);
    }
    if (eval->parsed()) return run_eval(experiment_path, out_dir);
  } catch (const wm::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const wm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const wm::RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
