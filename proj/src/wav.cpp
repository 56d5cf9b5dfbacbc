#include "wm/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace wm {

namespace {

uint32_t rd_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t rd_u16(const unsigned char* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void wr_u32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 24) & 0xff));
}

void wr_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failed: " + path);
  return bytes;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (!target.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot create " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("rename failed for " + path);
  }
}

AudioClip read_wav(const std::string& path, WavInfo* info) {
  const std::string bytes = read_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw IoError(path + ": not a RIFF/WAVE file");
  }

  WavInfo wi;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const uint32_t chunk_len = rd_u32(p + off + 4);
    const unsigned char* body = p + off + 8;
    if (off + 8 + chunk_len > n) throw IoError(path + ": truncated chunk");
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw IoError(path + ": short fmt chunk");
      uint16_t format = rd_u16(body);
      wi.channels = rd_u16(body + 2);
      wi.sample_rate = static_cast<int>(rd_u32(body + 4));
      wi.bits = rd_u16(body + 14);
      if (format == 0xfffe && chunk_len >= 40) format = rd_u16(body + 24);
      if (format != 1) throw IoError(path + ": only PCM WAV is supported");
      have_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data = body;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  if (!have_fmt || !data) throw IoError(path + ": missing fmt or data chunk");
  if (wi.bits != 16 && wi.bits != 24) {
    throw IoError(path + ": only 16- or 24-bit PCM is supported");
  }
  if (wi.channels < 1 || wi.channels > 2) {
    throw IoError(path + ": only mono or stereo is supported");
  }

  const int bytes_per = wi.bits / 8;
  const std::size_t frame = static_cast<std::size_t>(bytes_per) * wi.channels;
  const std::size_t frames = data_len / frame;

  AudioClip clip;
  clip.sample_rate = wi.sample_rate;
  clip.samples.resize(frames);
  const double scale = wi.bits == 16 ? 1.0 / 32768.0 : 1.0 / 8388608.0;
  for (std::size_t fidx = 0; fidx < frames; ++fidx) {
    double acc = 0.0;
    for (int c = 0; c < wi.channels; ++c) {
      const unsigned char* s = data + fidx * frame + c * bytes_per;
      int32_t v;
      if (wi.bits == 16) {
        v = static_cast<int16_t>(s[0] | (s[1] << 8));
      } else {
        v = static_cast<int32_t>(s[0] | (s[1] << 8) | (s[2] << 16));
        if (v & 0x800000) v -= 0x1000000;  // sign-extend
      }
      acc += v * scale;
    }
    clip.samples[fidx] = acc / wi.channels;
  }
  wi.downmixed = wi.channels == 2;
  if (info) *info = wi;
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip, int bits) {
  if (bits != 16 && bits != 24) throw ConfigError("write_wav: bits must be 16 or 24");
  const int bytes_per = bits / 8;
  const uint32_t data_len =
      static_cast<uint32_t>(clip.samples.size()) * static_cast<uint32_t>(bytes_per);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  wr_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  wr_u32(out, 16);
  wr_u16(out, 1);  // PCM
  wr_u16(out, 1);  // mono
  wr_u32(out, static_cast<uint32_t>(clip.sample_rate));
  wr_u32(out, static_cast<uint32_t>(clip.sample_rate * bytes_per));
  wr_u16(out, static_cast<uint16_t>(bytes_per));
  wr_u16(out, static_cast<uint16_t>(bits));
  out += "data";
  wr_u32(out, data_len);

  if (bits == 16) {
    for (double x : clip.samples) {
      const double scaled = std::lround(x * 32768.0);
      const auto v = static_cast<int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      wr_u16(out, static_cast<uint16_t>(v));
    }
  } else {
    for (double x : clip.samples) {
      const double scaled = std::lround(x * 8388608.0);
      const auto v = static_cast<int32_t>(std::clamp(scaled, -8388608.0, 8388607.0));
      out.push_back(static_cast<char>(v & 0xff));
      out.push_back(static_cast<char>((v >> 8) & 0xff));
      out.push_back(static_cast<char>((v >> 16) & 0xff));
    }
  }
  write_file_atomic(path, out);
}

}  // namespace wm
