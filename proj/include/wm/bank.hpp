#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wm/audio.hpp"

namespace wm {

// Seed material. The sign layer may use its own key (multiple-access or
// accuracy splits); when sign_key_bytes is empty both streams derive from
// key_bytes under distinct domain tags.
struct WatermarkKey {
  std::string key_bytes;
  std::string sign_key_bytes;

  void validate() const;  // key_bytes must be non-empty
};

// All embedding parameters. span() = block_len * segments * repeats is the
// total watermark duration in samples.
struct WatermarkConfig {
  WatermarkKey key;
  int block_len = 480;  // 10 ms at 48 kHz
  Band band{20, 160};   // ~1-8 kHz for 480-sample blocks
  int segments = 2;     // N_s: orthogonal vectors cycled within a repeat
  int repeats = 50;     // N_r: how many times the segment set repeats
  double beta = 0.1;    // encoding strength relative to block band energy

  int64_t span() const {
    return static_cast<int64_t>(block_len) * segments * repeats;
  }
  int blocks() const { return segments * repeats; }
  void validate() const;
  std::string config_hash() const;  // hex digest binding banks to configs
};

// Repeat count giving the closest watermark duration to `seconds`.
int repeats_for_duration(double seconds, int block_len, int segments,
                         int sample_rate = kSampleRate);

// The keyed watermark material: `segments` mutually orthonormal band-domain
// vectors plus the per-(repeat, segment) sign matrix.
struct WatermarkBank {
  std::vector<std::vector<double>> vectors;  // segments x band width, unit norm
  std::vector<std::vector<int>> signs;       // repeats x segments, entries +-1
  std::string config_hash;
};

// Deterministically derive the bank from the config: a keyed gaussian matrix
// is symmetrized and eigendecomposed; the top-|eigenvalue| eigenvectors are
// kept, sign-canonicalized. Throws ConfigError if segments exceed the band
// width.
WatermarkBank generate_bank(const WatermarkConfig& config);

struct BankDiagnostics {
  double max_ortho_dev = 0.0;  // max |<wi,wj> - delta_ij|
  double max_norm_dev = 0.0;   // max | ||wi|| - 1 |
  bool hash_match = false;
  bool signs_valid = false;
  bool shape_valid = false;

  bool ok(double tol = 1e-9) const {
    return shape_valid && hash_match && signs_valid && max_ortho_dev < tol;
  }
};

BankDiagnostics verify_bank(const WatermarkBank& bank,
                            const WatermarkConfig& config);

// Worst-case |<wa_i, wb_j>| between two banks; coexistence diagnostic for
// simultaneous multi-duration watermarks.
double bank_cross_coherence(const WatermarkBank& a, const WatermarkBank& b);

// JSON export/import for cross-implementation testing. Vectors are decimal
// arrays at full round-trip precision; the config is echoed alongside.
std::string bank_to_json(const WatermarkBank& bank, const WatermarkConfig& config);

struct BankFile {
  WatermarkConfig config;
  WatermarkBank bank;
};
BankFile bank_from_json(const std::string& text);

}  // namespace wm
