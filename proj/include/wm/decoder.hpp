#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wm/audio.hpp"
#include "wm/bank.hpp"

namespace wm {

// Scan-time knobs. noise_window / smooth_window are counted in score points
// (scan_stride apart), not samples. max_repeats / max_segments restrict the
// pair sum to a prefix of the bank (0 = use everything) — the cheap-decode
// trade-off.
struct DecoderParams {
  int scan_stride = 240;  // 5 ms
  int noise_window = 400;
  int smooth_window = 8;
  double threshold_multiplier = 3.0;
  int max_repeats = 0;
  int max_segments = 0;

  void validate() const;  // throws ConfigError
};

struct Detection {
  int64_t t = 0;      // first scored offset of the run
  int64_t t_end = 0;  // one stride past the last
  double peak_rho_bar = 0.0;
};

// Full scan output. rho0_mean / sigma0 are the noise statistics of the final
// rolling window (watermark outliers excluded); gamma =
// threshold_multiplier * sigma0 and decisions[k] = (rho_bar[k] >= gamma),
// exactly.
struct ScoreTrace {
  std::vector<int64_t> times;
  std::vector<double> rho;
  std::vector<double> rho_bar;
  std::vector<uint8_t> decisions;
  double rho0_mean = 0.0;
  double sigma0 = 0.0;
  double gamma = 0.0;

  std::vector<Detection> detections() const;
  std::string to_csv() const;          // t_samples,rho,rho_bar,gamma,decision
  std::string summary_json() const;
};

// Band-restricted inner product of two block spectra.
double self_corr(const std::vector<double>& a, const std::vector<double>& b,
                 const Band& band);

// Sign-modulated self-correlation score of the N_r x N_s block grid starting
// at t. Blocks whose band norm falls below 1e-9 drop out of their pairs.
double score_at(const AudioClip& y, int64_t t, const WatermarkConfig& config,
                const WatermarkBank& bank, const DecoderParams& params = {});

// Score every scan_stride samples, track noise statistics over a rolling
// trailing window with high-side outlier exclusion, smooth forward over
// smooth_window points, and threshold. The published statistics are the
// final window's (one scalar gamma per trace keeps the decision rule exact
// and replayable); the streaming detector below is the causal variant.
ScoreTrace scan(const AudioClip& y, const WatermarkConfig& config,
                const WatermarkBank& bank, const DecoderParams& params = {});

// Plain per-block cross-correlation against a stored template; the baseline
// whose channel fragility motivates everything else here.
std::vector<double> detect_legacy(const AudioClip& y,
                                  const std::vector<double>& w, int block_len,
                                  const Band& band, int64_t start_offset = 0,
                                  int blocks = 0);

struct GainStats {
  double g_over_h = 1.0;  // typical encoder-gain / received-norm ratio
};

struct SignaturePrediction {
  double rho0_mean = 0.0;
  double rho0_var = 0.0;   // white-host, isotropic-block assumption
  double rho1_shift = 0.0;  // watermark-induced mean score shift
};

// Closed-form score signatures given the per-bin channel gain alpha (width =
// band width). alpha enters only squared, which is the whole trick.
SignaturePrediction analytic_signatures(const WatermarkConfig& config,
                                        const WatermarkBank& bank,
                                        const std::vector<double>& alpha,
                                        const GainStats& host_stats = {});

// Causal single-pass detector with bounded memory: scores as samples arrive,
// keeps the rolling noise window in real time, and emits a decision for each
// score point once its forward smoothing window is complete (latency =
// smooth_window * scan_stride + one block past the watermark span). Unlike
// scan(), thresholds use the statistics available at decision time, so
// early-trace decisions can differ from the batch result.
class StreamingDetector {
 public:
  StreamingDetector(const WatermarkConfig& config, const WatermarkBank& bank,
                    const DecoderParams& params = {});
  ~StreamingDetector();
  StreamingDetector(StreamingDetector&&) noexcept;
  StreamingDetector& operator=(StreamingDetector&&) noexcept;

  void feed(const double* samples, std::size_t count);
  void finish();  // flush tail decisions (truncated smoothing windows)

  // Completed detections since the last call.
  std::vector<Detection> take_detections();

  int64_t points_scored() const;
  int64_t samples_consumed() const;
  double current_gamma() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wm
