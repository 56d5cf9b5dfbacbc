#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wm/audio.hpp"
#include "wm/bank.hpp"
#include "wm/channel.hpp"
#include "wm/decoder.hpp"

namespace wm {

// Synthetic or file-backed host audio. "chords" stresses the tonal-host
// noise floor; "pink" is the default program-like material.
struct HostSpec {
  std::string kind = "pink";  // white | pink | chords | file
  double duration_s = 0.0;    // 0 = sized by the experiment that uses it
  uint64_t seed = 1;
  std::string path;  // kind == "file"

  void validate() const;
};

AudioClip synth_host(const HostSpec& spec, double duration_s, uint64_t seed_mix);

// A channel-grid entry: either a synthetic room, a measured IR file, or a
// bare ChannelSpec (whose impulse_response is used as-is).
struct ChannelSetting {
  std::string label;
  std::optional<SyntheticRoom> room;
  std::string ir_path;  // measured IR WAV; overrides room when set
  ChannelSpec spec;

  ChannelSpec realize() const;  // resolves room/ir into spec.impulse_response
};

struct FaScanSpec {
  double duration_s = 60.0;
  double stride_ms = 5.0;
};

struct Experiment {
  std::vector<HostSpec> host_corpus{HostSpec{}};
  std::vector<WatermarkConfig> config_grid;
  std::vector<ChannelSetting> channel_grid;
  int trials_per_cell = 200;    // insertions credited per cell
  double insert_period_s = 4.0;
  FaScanSpec fa_scan;
  DecoderParams decoder;
  uint64_t seed = 1;

  void validate() const;
  std::string to_json() const;
  static Experiment from_json(const std::string& text);
};

// Null-hypothesis scan: every rho_bar value, plus a sanity flag that trips
// when the right tail is far too heavy for unwatermarked input (the usual
// cause is scanning a marked file by mistake).
struct FarScan {
  std::vector<double> rho_bar;
  double rho0_mean = 0.0;
  double sigma0 = 0.0;
  bool heavy_right_tail = false;
};

FarScan run_far_scan(const AudioClip& host, const WatermarkConfig& config,
                     const WatermarkBank& bank, const DecoderParams& params);

// One (config x channel) cell: insertions at known positions in a fresh
// host, the channel applied, one scan; signal scores are the max rho_bar in
// a +-half-span window around each (drift-corrected) true position, null
// scores come from the matching unwatermarked scan.
struct CellResult {
  int config_index = 0;
  int channel_index = 0;
  std::string channel_label;
  int insertions = 0;
  int detected_at_gamma = 0;  // credited epsilon=1 detections
  double gamma = 0.0;
  double sigma0 = 0.0;
  std::vector<double> signal_scores;
  std::vector<double> null_scores;
};

std::vector<CellResult> run_detection_trials(const Experiment& experiment);
CellResult run_cell(const Experiment& experiment, int config_index,
                    int channel_index);

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // threshold descending
  double auc = 0.0;
};

// Empirical ROC. The AUC is the exact rank statistic, i.e. the trapezoid
// integral of the complete empirical curve; the stored point list is
// decimated for plotting.
RocCurve build_roc(const std::vector<double>& signal_scores,
                   const std::vector<double>& null_scores);

// TPR at the largest threshold whose measured FAR stays <= far.
double tpr_at_far(const std::vector<double>& signal_scores,
                  const std::vector<double>& null_scores, double far);

// Full protocol: all cells, FA scans, ROC tables; plot-ready CSV + JSON
// under out_dir with a manifest. Byte-deterministic for a fixed seed.
void sweep_report(const Experiment& experiment, const std::string& out_dir);

}  // namespace wm
