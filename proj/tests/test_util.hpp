#pragma once

// Shared oracles for the test binaries. Everything here is the slow, obvious
// version of something the library does cleverly; keep it that way.

#include <cmath>
#include <cstdint>
#include <vector>

#include "wm/audio.hpp"
#include "wm/bank.hpp"
#include "wm/dsp.hpp"
#include "wm/rng.hpp"

namespace tu {

inline std::vector<double> naive_dct(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      acc += x[j] * std::cos(pi / static_cast<double>(n) *
                             (static_cast<double>(j) + 0.5) *
                             static_cast<double>(k));
    }
    const double scale =
        (k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                : std::sqrt(2.0 / static_cast<double>(n)));
    out[k] = scale * acc;
  }
  return out;
}

inline std::vector<double> naive_idct(const std::vector<double>& c) {
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  const double pi = 3.14159265358979323846;
  for (std::size_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double scale =
          (k == 0 ? std::sqrt(1.0 / static_cast<double>(n))
                  : std::sqrt(2.0 / static_cast<double>(n)));
      acc += scale * c[k] *
             std::cos(pi / static_cast<double>(n) *
                      (static_cast<double>(j) + 0.5) * static_cast<double>(k));
    }
    out[j] = acc;
  }
  return out;
}

// Direct-summation modulated self-correlation: sum over segments i and block
// pairs n < m of s_n s_m <u_n, u_m>, with u the normalized band spectrum and
// blocks below the dead-norm cutoff dropped from every pair.
inline double naive_score(const wm::AudioClip& y, std::int64_t t,
                          const wm::WatermarkConfig& config,
                          const wm::WatermarkBank& bank) {
  const int d = config.band.width();
  const int n_s = config.segments;
  const int n_r = config.repeats;
  wm::DctPlan plan(config.block_len);
  auto blocks = wm::frame_blocks(y, t, config.block_len, n_r * n_s);
  std::vector<std::vector<double>> u;
  std::vector<bool> live;
  for (auto& b : blocks) {
    std::vector<double> spec = plan.forward(b);
    std::vector<double> band(spec.begin() + config.band.k_lo,
                             spec.begin() + config.band.k_hi + 1);
    double h = 0.0;
    for (double v : band) h += v * v;
    h = std::sqrt(h);
    if (h < 1e-9) {
      live.push_back(false);
      u.emplace_back(d, 0.0);
      continue;
    }
    for (double& v : band) v /= h;
    live.push_back(true);
    u.push_back(std::move(band));
  }
  double score = 0.0;
  for (int i = 0; i < n_s; ++i) {
    for (int m = 1; m < n_r; ++m) {
      for (int n = 0; n < m; ++n) {
        const std::size_t bn = static_cast<std::size_t>(n) * n_s + i;
        const std::size_t bm = static_cast<std::size_t>(m) * n_s + i;
        if (!live[bn] || !live[bm]) continue;
        double ip = 0.0;
        for (int k = 0; k < d; ++k) ip += u[bn][k] * u[bm][k];
        score += bank.signs[static_cast<std::size_t>(n)][i] *
                 bank.signs[static_cast<std::size_t>(m)][i] * ip;
      }
    }
  }
  return score;
}

inline wm::AudioClip white_clip(std::int64_t n, std::uint64_t seed,
                                double rms = 0.2) {
  wm::KeyedRng rng(seed);
  wm::AudioClip clip;
  clip.samples.resize(static_cast<std::size_t>(n));
  for (auto& s : clip.samples) s = rng.next_gaussian() * rms;
  return clip;
}

inline double rms(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(x.size()));
}

inline double mean(const std::vector<double>& x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

}  // namespace tu
