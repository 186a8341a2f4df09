#pragma once

// Shared fixtures and independent oracles for the test suite. Oracles here
// are written against the definitions, not against the library code: direct
// summation, brute-force scans, separate accumulation loops.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "vrfp/eval.hpp"
#include "vrfp/outlier.hpp"
#include "vrfp/rerank.hpp"

namespace testutil {

inline double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline vrfp::FeatureBag make_bag(const std::string& id, std::uint32_t dim,
                                 const std::vector<std::vector<float>>& rows) {
  vrfp::FeatureBag bag;
  bag.id = id;
  bag.dim = dim;
  for (const auto& r : rows) bag.data.insert(bag.data.end(), r.begin(), r.end());
  return bag;
}

inline vrfp::FeatureBag random_bag(const std::string& id, std::uint32_t dim, std::size_t t,
                                   std::mt19937_64& rng, double lo = -2.0, double hi = 2.0) {
  vrfp::FeatureBag bag;
  bag.id = id;
  bag.dim = dim;
  bag.data.resize(t * dim);
  for (auto& v : bag.data) v = static_cast<float>(lo + (hi - lo) * u01(rng));
  return bag;
}

inline vrfp::GmmCodebook random_gmm(std::uint32_t K, std::uint32_t D, std::mt19937_64& rng) {
  vrfp::GmmCodebook cb;
  cb.K = K;
  cb.D = D;
  cb.weights.resize(K);
  cb.means.resize(static_cast<std::size_t>(K) * D);
  cb.variances.resize(static_cast<std::size_t>(K) * D);
  double wsum = 0.0;
  for (auto& w : cb.weights) {
    w = 0.1 + u01(rng);
    wsum += w;
  }
  for (auto& w : cb.weights) w /= wsum;
  for (auto& m : cb.means) m = -2.0 + 4.0 * u01(rng);
  for (auto& v : cb.variances) v = 0.5 + 1.5 * u01(rng);
  return cb;
}

// Posterior oracle: direct density ratios, no log domain, own truncation.
inline std::vector<double> posteriors_oracle(const vrfp::GmmCodebook& cb,
                                             std::span<const float> x) {
  std::vector<double> dens(cb.K);
  double total = 0.0;
  for (std::uint32_t c = 0; c < cb.K; ++c) {
    double e = 0.0, norm = 1.0;
    for (std::uint32_t d = 0; d < cb.D; ++d) {
      double var = cb.variances[static_cast<std::size_t>(c) * cb.D + d];
      double diff = x[d] - cb.means[static_cast<std::size_t>(c) * cb.D + d];
      e += diff * diff / var;
      norm *= std::sqrt(2.0 * 3.14159265358979323846 * var);
    }
    dens[c] = cb.weights[c] * std::exp(-0.5 * e) / norm;
    total += dens[c];
  }
  double kept = 0.0;
  for (auto& g : dens) {
    g /= total;
    if (g < vrfp::kPosteriorTruncation) g = 0.0;
    kept += g;
  }
  for (auto& g : dens) g /= kept;
  return dens;
}

// Fisher vector oracle: direct per-component, per-dimension, per-sample
// summation of the two derivative formulas.
inline std::vector<double> fv_oracle(const vrfp::GmmCodebook& cb, const vrfp::FeatureBag& bag) {
  const std::size_t t = bag.count();
  std::vector<std::vector<double>> gammas(t);
  for (std::size_t s = 0; s < t; ++s) gammas[s] = posteriors_oracle(cb, bag.row(s));
  std::vector<double> out(static_cast<std::size_t>(2) * cb.K * cb.D, 0.0);
  for (std::uint32_t c = 0; c < cb.K; ++c) {
    for (std::uint32_t d = 0; d < cb.D; ++d) {
      double mu = cb.means[static_cast<std::size_t>(c) * cb.D + d];
      double sigma = std::sqrt(cb.variances[static_cast<std::size_t>(c) * cb.D + d]);
      double sum_mu = 0.0, sum_var = 0.0;
      for (std::size_t s = 0; s < t; ++s) {
        double g = gammas[s][c];
        double xv = bag.row(s)[d];
        sum_mu += g * (xv - mu) / sigma;
        sum_var += g * ((xv - mu) * (xv - mu) / (sigma * sigma) - 1.0);
      }
      out[static_cast<std::size_t>(c) * 2 * cb.D + d] =
          sum_mu / (static_cast<double>(t) * std::sqrt(cb.weights[c]));
      out[static_cast<std::size_t>(c) * 2 * cb.D + cb.D + d] =
          sum_var / (static_cast<double>(t) * std::sqrt(2.0 * cb.weights[c]));
    }
  }
  return out;
}

// Dense dot oracle: single accumulator, ascending element order.
inline double dot_oracle(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

// Average precision oracle: precision at every relevant rank, then the mean
// over the full relevant set.
inline double ap_oracle(const std::vector<std::pair<std::string, bool>>& ranked,
                        std::size_t relevant_total) {
  double hits = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (!ranked[i].second) continue;
    hits += 1.0;
    sum += hits / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(relevant_total);
}

// Random finalized sparse vector drawn the same way the synthetic profiles
// do it, but through the public encode API.
inline vrfp::SparseFV random_sparse(std::uint32_t K, std::uint32_t D, double p, float threshold,
                                    std::mt19937_64& rng) {
  const std::size_t bs = static_cast<std::size_t>(2) * D;
  for (;;) {
    vrfp::FisherVector v;
    v.K = K;
    v.D = D;
    v.values.assign(static_cast<std::size_t>(K) * bs, 0.0f);
    for (std::uint32_t c = 0; c < K; ++c) {
      if (u01(rng) >= p) continue;
      for (std::size_t e = 0; e < bs; ++e) {
        double sign = u01(rng) < 0.5 ? 1.0 : -1.0;
        v.values[static_cast<std::size_t>(c) * bs + e] =
            static_cast<float>(sign * (threshold + (1.0 - threshold) * u01(rng)));
      }
    }
    vrfp::FisherVector norm = l2_normalize(std::move(v));
    if (norm.degenerate) continue;
    vrfp::SparseFV s = vrfp::sparsify(norm, threshold);
    if (!s.indices.empty()) return s;
  }
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("vrfp_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace testutil
