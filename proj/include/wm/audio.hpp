#pragma once

#include <cstdint>
#include <vector>

#include "wm/common.hpp"

namespace wm {

// Mono PCM carrier, normalized amplitude (nominal range [-1, 1]).
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  int64_t length() const { return static_cast<int64_t>(samples.size()); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  // Throws ConfigError on non-positive rate or non-finite samples.
  void validate() const;
};

// Inclusive DCT bin range [k_lo, k_hi]. All embedding and detection inner
// products are restricted to this range.
struct Band {
  int k_lo = 0;
  int k_hi = 0;

  int width() const { return k_hi - k_lo + 1; }
  void validate(int block_len) const;  // throws ConfigError
};

}  // namespace wm
