#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "wm/audio.hpp"

namespace wm {

// Orthonormal DCT-II of a fixed block length plus its inverse, in dense
// matrix form. Rows of the forward matrix are the cosine basis vectors, so
// forward/inverse are matvec calls and energy is preserved exactly up to
// rounding. Plans are cheap to copy; the tables are shared.
class DctPlan {
 public:
  explicit DctPlan(int block_len);

  int block_len() const { return len_; }
  void forward(std::span<const double> block, std::span<double> spec) const;
  void inverse(std::span<const double> spec, std::span<double> block) const;
  std::vector<double> forward(std::span<const double> block) const;
  std::vector<double> inverse(std::span<const double> spec) const;

 private:
  int len_;
  std::shared_ptr<const std::vector<double>> fwd_;  // row-major L x L
  std::shared_ptr<const std::vector<double>> inv_;  // its transpose
};

// Sum over the band of a_k * b_k (the restricted inner product every
// embedding and detection step uses).
double band_inner(std::span<const double> a, std::span<const double> b,
                  const Band& band);

// Non-overlapping contiguous blocks; concatenation reproduces the covered
// region exactly. Throws RangeError if the request runs past the clip.
std::vector<std::vector<double>> frame_blocks(const AudioClip& clip,
                                              int64_t offset, int block_len,
                                              int count);

// Full linear convolution truncated to the input length. Short filters run
// directly; long ones go through an overlap-add FFT path with identical
// semantics (equivalence covered by tests).
AudioClip convolve(const AudioClip& clip,
                   std::span<const double> impulse_response);

// Render the clip as if replayed with a relative clock error of `ppm` parts
// per million: output sample n reads input position n / (1 + ppm*1e-6)
// through a 32-tap windowed-sinc polyphase interpolator. Output length
// follows the rate change (positive ppm stretches).
AudioClip resample_drift(const AudioClip& clip, double ppm);

}  // namespace wm
