#pragma once

#include <stdexcept>
#include <string>

namespace wm {

inline constexpr const char* kVersion = "0.1.0";

// Fixed processing rate. Inputs at other rates are rejected, not resampled,
// so the embedding band stays at fixed physical frequencies.
inline constexpr int kSampleRate = 48000;

// Bad parameter values, mismatched lengths/rates, malformed configs.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Request outside the bounds of the data it addresses.
struct RangeError : std::runtime_error {
  explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace wm
