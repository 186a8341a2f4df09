#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vrfp/corpus.hpp"
#include "vrfp/errors.hpp"

namespace vrfp {

// Posterior mass below this is treated as exactly zero (after which the
// surviving posteriors are renormalized). This is what makes encoded vectors
// block-sparse in the first place.
inline constexpr double kPosteriorTruncation = 1e-6;

// Per-dimension GMM variance floor, as a fraction of the data variance in
// that dimension.
inline constexpr double kVarianceFloorScale = 1e-4;

struct PcaModel {
  std::uint32_t d_in = 0;
  std::uint32_t d_out = 0;
  std::vector<double> mean;         // d_in
  std::vector<double> basis;        // d_out x d_in row-major, orthonormal rows
  std::vector<double> eigenvalues;  // d_out, non-increasing, >= 0
};

struct GmmCodebook {
  std::uint32_t K = 0;
  std::uint32_t D = 0;
  std::vector<double> weights;    // K, positive, sums to 1
  std::vector<double> means;      // K x D row-major
  std::vector<double> variances;  // K x D diagonal covariances, floored > 0
};

struct KmeansCodebook {
  std::uint32_t K = 0;
  std::uint32_t D = 0;
  std::vector<double> centers;  // K x D row-major
};

struct GmmTrainLog {
  std::vector<double> log_likelihood;  // one entry per EM iteration
  int collapse_reinits = 0;
};

struct KmeansTrainLog {
  std::vector<double> wcss;  // within-cluster sum of squares per Lloyd iteration
};

// Data arguments are row-major float matrices, data.size() % dim == 0.

// Principal components of the rows. Components are unit length, mutually
// orthogonal, ordered by non-increasing eigenvalue (the variance along the
// component); each component's largest-magnitude coefficient is made
// positive so the sign is reproducible. Throws ArgumentError when d_out
// exceeds the achievable rank, naming the rank.
PcaModel fit_pca(std::span<const float> data, std::uint32_t d_in, std::uint32_t d_out);

// Projects x (length d_in) to d_out dims. whiten divides each projection by
// sqrt(eigenvalue); components with eigenvalue 0 stay 0 under whitening.
std::vector<float> apply_pca(const PcaModel& m, std::span<const float> x, bool whiten = false);

// Diagonal-covariance GMM via EM, kmeans++ initialization, closed-form
// M-step. Deterministic for a fixed seed. Stops on relative log-likelihood
// improvement < 1e-6 or 100 iterations. Collapsed components are reseeded
// from the farthest point, at most 3 times. Requires data.rows >= 10 * K.
GmmCodebook fit_gmm(std::span<const float> data, std::uint32_t dim, std::uint32_t K,
                    std::uint64_t seed, GmmTrainLog* log = nullptr);

// Lloyd k-means with kmeans++ seeding. Requires at least K distinct rows.
KmeansCodebook fit_kmeans(std::span<const float> data, std::uint32_t dim, std::uint32_t K,
                          std::uint64_t seed, KmeansTrainLog* log = nullptr);

// Posterior responsibilities gamma_i(x) of each component, computed in the
// log domain, truncated at kPosteriorTruncation and renormalized. The result
// sums to 1 and most entries are exactly 0.
std::vector<double> posteriors(const GmmCodebook& cb, std::span<const float> x);

// Model files (all little-endian; f64 payloads):
//   "VRFPPCA1": u32 d_out, u32 d_in, mean, basis, eigenvalues
//   "VRFPGMM1": u32 K, u32 D, weights, means, variances
//   "VRFPKMS1": u32 K, u32 D, centers
void save_pca(const PcaModel& m, const std::filesystem::path& path);
PcaModel load_pca(const std::filesystem::path& path);
void save_gmm(const GmmCodebook& cb, const std::filesystem::path& path);
GmmCodebook load_gmm(const std::filesystem::path& path);
void save_kmeans(const KmeansCodebook& cb, const std::filesystem::path& path);
KmeansCodebook load_kmeans(const std::filesystem::path& path);

}  // namespace vrfp
