#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "test_util.hpp"
#include "wm/bank.hpp"
#include "wm/common.hpp"
#include "wm/dsp.hpp"
#include "wm/encoder.hpp"

using namespace wm;

namespace {
WatermarkConfig test_config(double beta = 0.1) {
  WatermarkConfig c;
  c.key.key_bytes = "encoder-test";
  c.beta = beta;
  c.repeats = 4;  // short span keeps the hosts small
  return c;
}
}  // namespace

TEST_CASE("projection removal post-condition per block") {
  auto cfg = test_config();
  auto bank = generate_bank(cfg);
  AudioClip host = tu::white_clip(cfg.span(), 2024);
  EmbedReport report;
  AudioClip marked = embed_watermark(host, cfg, bank, {}, &report);
  REQUIRE(report.positions.size() == 1);
  CHECK(report.blocks_marked == cfg.blocks());

  DctPlan plan(cfg.block_len);
  auto host_blocks = frame_blocks(host, 0, cfg.block_len, cfg.blocks());
  auto marked_blocks = frame_blocks(marked, 0, cfg.block_len, cfg.blocks());
  for (int n = 0; n < cfg.repeats; ++n) {
    for (int i = 0; i < cfg.segments; ++i) {
      const std::size_t b = static_cast<std::size_t>(n) * cfg.segments + i;
      auto hs = plan.forward(host_blocks[b]);
      auto ms = plan.forward(marked_blocks[b]);
      const double g = std::sqrt(band_inner(hs, hs, cfg.band));
      const double eta = cfg.beta * bank.signs[static_cast<std::size_t>(n)][i] * g;
      std::vector<double> w_full(static_cast<std::size_t>(cfg.block_len), 0.0);
      for (int k = 0; k < cfg.band.width(); ++k) {
        w_full[static_cast<std::size_t>(cfg.band.k_lo + k)] =
            bank.vectors[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
      const double got = band_inner(ms, w_full, cfg.band);
      CHECK(std::abs(got - eta) <= 1e-6 * std::max(1.0, std::abs(eta)));

      // Out-of-band DCT bins match the host to 1e-9.
      for (int k = 0; k < cfg.block_len; ++k) {
        if (k >= cfg.band.k_lo && k <= cfg.band.k_hi) continue;
        CHECK(std::abs(ms[static_cast<std::size_t>(k)] -
                       hs[static_cast<std::size_t>(k)]) < 1e-9);
      }

      // Energy bound: band energy of marked <= residual + beta^2 g^2 + tol.
      const double e_marked = band_inner(ms, ms, cfg.band);
      const double e_host = band_inner(hs, hs, cfg.band);
      CHECK(e_marked <= e_host + cfg.beta * cfg.beta * g * g + 1e-6);
    }
  }
}

TEST_CASE("full-band spectrum oracle: x - <x,w>w + eta w") {
  auto cfg = test_config(0.2);
  auto bank = generate_bank(cfg);
  AudioClip host = tu::white_clip(cfg.span(), 77);
  AudioClip marked = embed_watermark(host, cfg, bank, {});
  DctPlan plan(cfg.block_len);
  auto hb = frame_blocks(host, 0, cfg.block_len, 2);
  auto mb = frame_blocks(marked, 0, cfg.block_len, 2);
  for (std::size_t b = 0; b < 2; ++b) {
    const int i = static_cast<int>(b) % cfg.segments;
    auto hs = plan.forward(hb[b]);
    auto ms = plan.forward(mb[b]);
    const auto& w = bank.vectors[static_cast<std::size_t>(i)];
    double proj = 0.0, g2 = 0.0;
    for (int k = 0; k < cfg.band.width(); ++k) {
      proj += hs[static_cast<std::size_t>(cfg.band.k_lo + k)] * w[static_cast<std::size_t>(k)];
      g2 += hs[static_cast<std::size_t>(cfg.band.k_lo + k)] *
            hs[static_cast<std::size_t>(cfg.band.k_lo + k)];
    }
    const double eta = cfg.beta * bank.signs[0][i] * std::sqrt(g2);
    for (int k = 0; k < cfg.band.width(); ++k) {
      const double want =
          hs[static_cast<std::size_t>(cfg.band.k_lo + k)] +
          (eta - proj) * w[static_cast<std::size_t>(k)];
      CHECK(ms[static_cast<std::size_t>(cfg.band.k_lo + k)] ==
            doctest::Approx(want).epsilon(1e-9));
    }
  }
}

TEST_CASE("beta linearity of the watermark component") {
  auto cfg1 = test_config(0.1);
  auto cfg2 = test_config(0.2);
  auto bank = generate_bank(cfg1);  // same key, beta not in the bank
  AudioClip host = tu::white_clip(cfg1.span(), 31);
  AudioClip m1 = embed_watermark(host, cfg1, bank, {});
  // Bank hash covers beta via the config; regenerate for cfg2.
  auto bank2 = generate_bank(cfg2);
  AudioClip m2 = embed_watermark(host, cfg2, bank2, {});
  DctPlan plan(cfg1.block_len);
  auto b1 = frame_blocks(m1, 0, cfg1.block_len, 1);
  auto b2 = frame_blocks(m2, 0, cfg1.block_len, 1);
  auto bh = frame_blocks(host, 0, cfg1.block_len, 1);
  auto s1 = plan.forward(b1[0]);
  auto s2 = plan.forward(b2[0]);
  auto sh = plan.forward(bh[0]);
  const double g = std::sqrt(band_inner(sh, sh, cfg1.band));
  // (embed(2b) - embed(b)) band content = b * s * g * w.
  for (int k = 0; k < cfg1.band.width(); ++k) {
    const double diff = s2[static_cast<std::size_t>(cfg1.band.k_lo + k)] -
                        s1[static_cast<std::size_t>(cfg1.band.k_lo + k)];
    const double want = 0.1 * bank.signs[0][0] * g *
                        bank.vectors[0][static_cast<std::size_t>(k)];
    CHECK(diff == doctest::Approx(want).epsilon(1e-9));
  }
}

TEST_CASE("silent blocks are skipped, not scaled") {
  auto cfg = test_config();
  auto bank = generate_bank(cfg);
  AudioClip host;
  host.samples.assign(static_cast<std::size_t>(cfg.span()), 0.0);
  EmbedReport report;
  AudioClip marked = embed_watermark(host, cfg, bank, {}, &report);
  CHECK(report.blocks_marked == 0);
  CHECK(report.blocks_skipped == cfg.blocks());
  for (double v : marked.samples) CHECK(v == 0.0);
}

TEST_CASE("placement plans periodic insertions") {
  auto starts = plan_insertions(480000, 48000, {0, 192000, 0.0});
  REQUIRE(starts.size() == 3);
  CHECK(starts[0] == 0);
  CHECK(starts[1] == 192000);
  CHECK(starts[2] == 384000);
  auto one = plan_insertions(480000, 48000, {1000, 0, 0.0});
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 1000);
  CHECK(plan_insertions(1000, 48000, {}).empty());
  EmbedPlacement bad;
  bad.repeat_period = 100;  // shorter than the span
  CHECK_THROWS_AS(bad.validate(48000), ConfigError);
}

TEST_CASE("host too short throws RangeError") {
  auto cfg = test_config();
  auto bank = generate_bank(cfg);
  AudioClip tiny = tu::white_clip(cfg.span() - 1, 5);
  CHECK_THROWS_AS(embed_watermark(tiny, cfg, bank, {}), RangeError);
}

TEST_CASE("bank/config hash mismatch is rejected") {
  auto cfg = test_config();
  auto bank = generate_bank(cfg);
  auto other = cfg;
  other.key.key_bytes = "different";
  AudioClip host = tu::white_clip(cfg.span(), 6);
  CHECK_THROWS_AS(embed_watermark(host, other, bank, {}), ConfigError);
}

TEST_CASE("headroom report sits near -20 dB at beta 0.1") {
  auto cfg = test_config(0.1);
  auto bank = generate_bank(cfg);
  AudioClip host = tu::white_clip(cfg.span(), 99);
  AudioClip marked = embed_watermark(host, cfg, bank, {});
  auto hr = perceptual_headroom(host, marked, cfg.block_len, cfg.band);
  CHECK(hr.blocks == cfg.blocks());
  CHECK(hr.zero_energy_blocks == 0);
  // Distortion per block: projection swap plus beta^2 g^2; mean ratio should
  // land well below -10 dB and loosely around -20 dB for beta = 0.1.
  CHECK(hr.mean_ratio_db < -10.0);
  CHECK(hr.mean_ratio_db > -30.0);
  CHECK(hr.peak_delta < 0.5);
  // Identical clips: no measurable distortion anywhere.
  auto same = perceptual_headroom(host, host, cfg.block_len, cfg.band);
  CHECK(same.mean_ratio_db == -std::numeric_limits<double>::infinity());
}

TEST_CASE("legacy mode adds the template without projection removal") {
  auto cfg = test_config();
  auto bank = generate_bank(cfg);
  AudioClip host = tu::white_clip(cfg.block_len * 4, 55);
  const double eta = 0.05;
  AudioClip marked =
      embed_legacy_ss(host, bank.vectors[0], cfg.band, eta, cfg.block_len);
  DctPlan plan(cfg.block_len);
  auto hb = frame_blocks(host, 0, cfg.block_len, 4);
  auto mb = frame_blocks(marked, 0, cfg.block_len, 4);
  for (std::size_t b = 0; b < 4; ++b) {
    auto hs = plan.forward(hb[b]);
    auto ms = plan.forward(mb[b]);
    for (int k = 0; k < cfg.band.width(); ++k) {
      const double want = hs[static_cast<std::size_t>(cfg.band.k_lo + k)] +
                          eta * bank.vectors[0][static_cast<std::size_t>(k)];
      CHECK(ms[static_cast<std::size_t>(cfg.band.k_lo + k)] ==
            doctest::Approx(want).epsilon(1e-9));
    }
  }
}
