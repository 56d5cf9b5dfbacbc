#pragma once

#include <string>

#include "wm/audio.hpp"

namespace wm {

struct WavInfo {
  int channels = 1;
  int bits = 16;
  int sample_rate = 0;
  bool downmixed = false;  // stereo input was averaged to mono
};

// RIFF PCM reader: 16- or 24-bit, mono or stereo (stereo is downmixed by
// averaging; the caller decides whether to warn). Unknown chunks are
// skipped. Throws IoError on malformed or unsupported files.
AudioClip read_wav(const std::string& path, WavInfo* info = nullptr);

// PCM writer (mono), 16 or 24 bits, atomic (temp file + rename). Samples are
// clamped to full scale; quantization is round-to-nearest.
void write_wav(const std::string& path, const AudioClip& clip, int bits = 16);

// Whole-file helpers with the same atomicity contract.
std::string read_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace wm
