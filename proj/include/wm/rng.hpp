#pragma once

#include <cstdint>
#include <string_view>

namespace wm {

// 64-bit FNV-1a over a byte string.
uint64_t fnv1a64(std::string_view bytes, uint64_t basis = 0xcbf29ce484222325ull);

// splitmix64 step; mutates state, returns next output.
uint64_t splitmix64(uint64_t& state);

// Deterministic random stream keyed by (key bytes, domain tag, nonce).
// xoshiro256** seeded through splitmix64, with hand-rolled Box-Muller for
// gaussians so streams do not depend on the standard library's
// implementation-defined distributions.
class KeyedRng {
 public:
  KeyedRng(std::string_view key, std::string_view domain, uint64_t nonce = 0);
  explicit KeyedRng(uint64_t seed);

  uint64_t next_u64();
  double next_unit();      // uniform in (0, 1]
  double next_gaussian();  // standard normal
  int next_sign();         // -1 or +1, fair

 private:
  uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wm
