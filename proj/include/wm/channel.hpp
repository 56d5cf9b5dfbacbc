#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wm/audio.hpp"

namespace wm {

// One acoustic path: static room filter, replay clock error, additive noise,
// plus the usual processing attacks. Optional members switch stages off.
struct ChannelSpec {
  std::vector<double> impulse_response{1.0};
  double drift_ppm = 0.0;
  std::optional<double> noise_snr_db;  // AWGN at this SNR when set
  double gain_db = 0.0;
  std::optional<double> lowpass_hz;
  std::optional<double> highpass_hz;
  uint64_t noise_seed = 0;
  // Keep output length == input length (pad/truncate after drift). The
  // attack CLI turns this off to expose the real duration change.
  bool preserve_length = true;

  void validate() const;  // throws ConfigError
};

// Statistical room: unit direct impulse plus an exponentially decaying
// gaussian tail whose energy envelope falls 60 dB over rt60_s.
struct SyntheticRoom {
  double rt60_s = 0.3;
  double length_s = 0.0;  // 0 = auto (1.5 * rt60)
  double direct_ratio_db = 6.0;  // +inf collapses to a pure impulse
  uint64_t seed = 1;

  void validate() const;
};

std::vector<double> synth_rir(const SyntheticRoom& room,
                              int sample_rate = kSampleRate);

// The evaluation grid standing in for measured rooms:
// rt60 in {0.15, 0.3, 0.5, 0.8} s crossed with direct ratio {0, 6, 12} dB.
std::vector<SyntheticRoom> room_grid();

// Full pipeline in fixed order:
// gain -> IR convolution -> LPF/HPF -> drift resample -> AWGN.
// SNR is measured against the pre-noise signal power; noise is deterministic
// per noise_seed.
AudioClip apply_channel(const AudioClip& clip, const ChannelSpec& spec);

// Per-bin effective channel gain over the band: push each DCT basis vector
// through the channel (sans noise/drift), truncate, transform back, read the
// diagonal. This is the alpha the analytic score predictors consume.
std::vector<double> dct_channel_gain(const std::vector<double>& impulse_response,
                                     int block_len, const Band& band);

}  // namespace wm
