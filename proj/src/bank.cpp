#include "wm/bank.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include <json.hpp>

#include "wm/kernels.hpp"
#include "wm/rng.hpp"

namespace wm {

void WatermarkKey::validate() const {
  if (key_bytes.empty()) throw ConfigError("watermark key must be non-empty");
}

void WatermarkConfig::validate() const {
  key.validate();
  if (block_len < 2) throw ConfigError("block_len must be at least 2");
  band.validate(block_len);
  if (segments < 1) throw ConfigError("segments (N_s) must be >= 1");
  if (repeats < 2) throw ConfigError("repeats (N_r) must be >= 2");
  // beta == 0 is the degenerate null encode (embedding becomes a no-op).
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ConfigError("beta must be non-negative");
  }
  if (segments > band.width()) {
    throw ConfigError("cannot supply " + std::to_string(segments) +
                      " orthonormal vectors in band of width " +
                      std::to_string(band.width()));
  }
}

int repeats_for_duration(double seconds, int block_len, int segments,
                         int sample_rate) {
  if (!(seconds > 0)) throw ConfigError("watermark duration must be positive");
  const double blocks = seconds * sample_rate / block_len / segments;
  return std::max(2, static_cast<int>(std::lround(blocks)));
}

namespace {

void hash_append(std::string& buf, const void* data, std::size_t n) {
  buf.append(static_cast<const char*>(data), n);
}

template <typename T>
void hash_append_pod(std::string& buf, T v) {
  hash_append(buf, &v, sizeof v);
}

}  // namespace

std::string WatermarkConfig::config_hash() const {
  std::string buf;
  hash_append_pod(buf, static_cast<uint64_t>(key.key_bytes.size()));
  buf += key.key_bytes;
  hash_append_pod(buf, static_cast<uint64_t>(key.sign_key_bytes.size()));
  buf += key.sign_key_bytes;
  hash_append_pod(buf, static_cast<int64_t>(block_len));
  hash_append_pod(buf, static_cast<int64_t>(band.k_lo));
  hash_append_pod(buf, static_cast<int64_t>(band.k_hi));
  hash_append_pod(buf, static_cast<int64_t>(segments));
  hash_append_pod(buf, static_cast<int64_t>(repeats));
  uint64_t beta_bits;
  static_assert(sizeof beta_bits == sizeof beta);
  std::memcpy(&beta_bits, &beta, sizeof beta_bits);
  hash_append_pod(buf, beta_bits);

  const uint64_t h = fnv1a64(buf);
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

namespace {

// Largest-magnitude component positive; ties break toward the lowest index.
void canonicalize_sign(std::vector<double>& v) {
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > best) {
      best = a;
      arg = i;
    }
  }
  if (v[arg] < 0.0) {
    for (auto& x : v) x = -x;
  }
}

}  // namespace

WatermarkBank generate_bank(const WatermarkConfig& config) {
  config.validate();
  const int d = config.band.width();

  Eigen::MatrixXd h(d, d);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  for (uint64_t nonce = 0;; ++nonce) {
    if (nonce >= 16) throw ConfigError("bank generation failed: degenerate spectrum");
    KeyedRng rng(config.key.key_bytes, "eigenvector", nonce);
    Eigen::MatrixXd a(d, d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) a(r, c) = rng.next_gaussian();
    }
    h = 0.5 * (a + a.transpose());
    solver.compute(h);
    if (solver.info() != Eigen::Success) continue;
    const auto& ev = solver.eigenvalues();
    const double max_abs = std::max(std::abs(ev(0)), std::abs(ev(d - 1)));
    double min_abs = max_abs;
    for (int i = 0; i < d; ++i) min_abs = std::min(min_abs, std::abs(ev(i)));
    if (max_abs > 0.0 && min_abs > 1e-10 * max_abs) break;  // full rank
  }

  // top-|eigenvalue| selection with deterministic index tie-breaking
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return std::abs(ev(i)) > std::abs(ev(j));
  });

  WatermarkBank bank;
  bank.vectors.reserve(config.segments);
  for (int i = 0; i < config.segments; ++i) {
    const auto col = solver.eigenvectors().col(order[i]);
    std::vector<double> v(col.data(), col.data() + d);
    canonicalize_sign(v);
    bank.vectors.push_back(std::move(v));
  }

  const std::string& sign_key = config.key.sign_key_bytes.empty()
                                    ? config.key.key_bytes
                                    : config.key.sign_key_bytes;
  KeyedRng sign_rng(sign_key, "sign");
  bank.signs.assign(config.repeats, std::vector<int>(config.segments));
  for (int n = 0; n < config.repeats; ++n) {
    for (int i = 0; i < config.segments; ++i) bank.signs[n][i] = sign_rng.next_sign();
  }

  bank.config_hash = config.config_hash();
  return bank;
}

BankDiagnostics verify_bank(const WatermarkBank& bank,
                            const WatermarkConfig& config) {
  BankDiagnostics diag;
  diag.hash_match = (bank.config_hash == config.config_hash());

  const std::size_t d = static_cast<std::size_t>(config.band.width());
  diag.shape_valid = static_cast<int>(bank.vectors.size()) == config.segments &&
                     static_cast<int>(bank.signs.size()) == config.repeats;
  for (const auto& v : bank.vectors) {
    if (v.size() != d) diag.shape_valid = false;
  }
  diag.signs_valid = true;
  for (const auto& row : bank.signs) {
    if (static_cast<int>(row.size()) != config.segments) diag.shape_valid = false;
    for (int s : row) {
      if (s != 1 && s != -1) diag.signs_valid = false;
    }
  }
  if (!diag.shape_valid) return diag;

  for (std::size_t i = 0; i < bank.vectors.size(); ++i) {
    for (std::size_t j = i; j < bank.vectors.size(); ++j) {
      const double ip =
          kernels::dot(bank.vectors[i].data(), bank.vectors[j].data(), d);
      if (i == j) {
        diag.max_norm_dev = std::max(diag.max_norm_dev, std::abs(std::sqrt(ip) - 1.0));
        diag.max_ortho_dev = std::max(diag.max_ortho_dev, std::abs(ip - 1.0));
      } else {
        diag.max_ortho_dev = std::max(diag.max_ortho_dev, std::abs(ip));
      }
    }
  }
  return diag;
}

double bank_cross_coherence(const WatermarkBank& a, const WatermarkBank& b) {
  double worst = 0.0;
  for (const auto& va : a.vectors) {
    for (const auto& vb : b.vectors) {
      if (va.size() != vb.size()) throw ConfigError("bank_cross_coherence: band width mismatch");
      worst = std::max(worst, std::abs(kernels::dot(va.data(), vb.data(), va.size())));
    }
  }
  return worst;
}

std::string bank_to_json(const WatermarkBank& bank, const WatermarkConfig& config) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config"] = {
      {"key", config.key.key_bytes},
      {"sign_key", config.key.sign_key_bytes},
      {"block_len", config.block_len},
      {"band", {config.band.k_lo, config.band.k_hi}},
      {"segments", config.segments},
      {"repeats", config.repeats},
      {"beta", config.beta},
  };
  j["hash"] = bank.config_hash;
  j["vectors"] = bank.vectors;
  j["signs"] = bank.signs;
  return j.dump(2);
}

BankFile bank_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bank json parse error: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != 1) {
      throw ConfigError("bank json: unsupported schema_version");
    }
    BankFile f;
    const auto& c = j.at("config");
    f.config.key.key_bytes = c.at("key").get<std::string>();
    f.config.key.sign_key_bytes = c.value("sign_key", std::string());
    f.config.block_len = c.at("block_len").get<int>();
    f.config.band.k_lo = c.at("band").at(0).get<int>();
    f.config.band.k_hi = c.at("band").at(1).get<int>();
    f.config.segments = c.at("segments").get<int>();
    f.config.repeats = c.at("repeats").get<int>();
    f.config.beta = c.at("beta").get<double>();
    f.bank.vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
    f.bank.signs = j.at("signs").get<std::vector<std::vector<int>>>();
    f.bank.config_hash = j.at("hash").get<std::string>();
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bank json: missing or malformed field: ") + e.what());
  }
}

}  // namespace wm
