#pragma once

#include <cstdint>
#include <vector>

#include "wm/audio.hpp"
#include "wm/bank.hpp"

namespace wm {

// Where the watermark(s) go. repeat_period = 0 means a single insertion at
// start_offset; otherwise insertions repeat every repeat_period samples for
// as long as a full span fits.
struct EmbedPlacement {
  int64_t start_offset = 0;
  int64_t repeat_period = 0;
  double crossfade_ms = 0.0;  // raised-cosine seam blend, 0 disables

  void validate(int64_t span) const;  // throws ConfigError
};

struct EmbedReport {
  std::vector<int64_t> positions;  // start of each inserted watermark
  int blocks_marked = 0;
  int blocks_skipped = 0;  // near-silent blocks left untouched
};

// x~ = x - <x,w> w + eta * w on the band coefficients of one block spectrum.
// Out-of-band coefficients are untouched. Throws ConfigError if w is not
// unit-norm over the band.
void embed_eigen_block(std::vector<double>& spectrum,
                       const std::vector<double>& w, const Band& band,
                       double eta);

// Bi-layer embedding: for repeat n, segment i, the block at
// start + (n*N_s + i)*block_len carries beta * s_{n,i} * g_{n,i} * w^i where
// g is the band magnitude of the original host block. Samples outside the
// watermark spans are copied through bit-identically.
AudioClip embed_watermark(const AudioClip& host, const WatermarkConfig& config,
                          const WatermarkBank& bank,
                          const EmbedPlacement& placement,
                          EmbedReport* report = nullptr);

// Insertion start offsets that fit in a host of host_len samples.
std::vector<int64_t> plan_insertions(int64_t host_len, int64_t span,
                                     const EmbedPlacement& placement);

// Plain additive spread spectrum: every block gets + eta * w in the band, no
// projection removal, no sign modulation. Baseline for the cross-correlation
// comparison.
AudioClip embed_legacy_ss(const AudioClip& host, const std::vector<double>& w,
                          const Band& band, double eta, int block_len,
                          int64_t start_offset = 0, int blocks = 0);

// Objective imperceptibility proxies: per-block band-energy ratio of the
// difference signal against the host, and the worst sample delta.
struct HeadroomReport {
  double mean_ratio_db = 0.0;  // mean over blocks with host energy
  double max_ratio_db = 0.0;
  double peak_delta = 0.0;
  int zero_energy_blocks = 0;
  int blocks = 0;
};

HeadroomReport perceptual_headroom(const AudioClip& host,
                                   const AudioClip& marked, int block_len,
                                   const Band& band);

}  // namespace wm
