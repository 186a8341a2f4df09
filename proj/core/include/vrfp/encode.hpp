#pragma once

#include <cstdint>
#include <vector>

#include "vrfp/codebook.hpp"
#include "vrfp/corpus.hpp"

namespace vrfp {

// Entries with magnitude below this are dropped when sparsifying a
// normalized encoding. The value is part of the index format; query and
// gallery must use the same one for scores to be comparable.
inline constexpr float kDefaultShrinkThreshold = 1e-3f;

enum class NormOp : std::uint8_t { Power, IntraL2, L2 };

// Fisher vector of a bag under a GMM codebook. Values are laid out in K
// codeword blocks of 2D: block i holds the D mean derivatives followed by
// the D variance derivatives for component i. Storage is float32; all
// accumulation happens in double.
struct FisherVector {
  std::uint32_t K = 0;
  std::uint32_t D = 0;
  std::vector<float> values;      // 2 * K * D
  std::vector<NormOp> norm_state; // normalizations applied, in order
  bool degenerate = false;        // a zero vector reached L2 normalization

  std::size_t size() const { return values.size(); }
  std::size_t block_offset(std::uint32_t i) const { return static_cast<std::size_t>(i) * 2 * D; }
};

// VLAD encoding: K blocks of D residual sums.
struct VladVector {
  std::uint32_t K = 0;
  std::uint32_t D = 0;
  std::vector<float> values;  // K * D
  std::vector<NormOp> norm_state;
  bool degenerate = false;
};

// Block-sparse Fisher vector: only codeword blocks with at least one entry
// at or above the shrink threshold survive, stored as their index plus the
// full 2D block (interior values below threshold zeroed).
struct SparseFV {
  std::uint32_t K = 0;
  std::uint32_t D = 0;
  float threshold = 0.0f;
  std::vector<std::uint32_t> indices;  // strictly increasing codeword ids
  std::vector<float> blocks;           // indices.size() * 2 * D values

  std::size_t nnz_blocks() const { return indices.size(); }
  const float* block(std::size_t pos) const { return blocks.data() + pos * 2 * D; }
};

struct PooledFeature {
  std::vector<float> values;
  bool degenerate = false;  // zero vector, left unnormalized
};

// Baseline global descriptors: L2-normalized mean / max over the bag.
PooledFeature avg_pool(const FeatureBag& bag);
PooledFeature max_pool(const FeatureBag& bag);

// Raw (unnormalized) Fisher vector. For component i with weight w_i, mean
// derivatives are (1 / (T sqrt(w_i))) * sum_t gamma_t(i) (x_d - mu_id) / sig_id
// and variance derivatives (1 / (T sqrt(2 w_i))) * sum_t gamma_t(i)
// ((x_d - mu_id)^2 / sig_id^2 - 1). Posteriors come from posteriors(), so
// blocks whose component never fires are exactly zero.
FisherVector fv_encode(const GmmCodebook& cb, const FeatureBag& bag);

// Raw VLAD with soft multiple assignment: each feature adds its residual
// x - c_i to the blocks of its k nearest centers. k defaults to 3.
VladVector vlad_raw(const KmeansCodebook& cb, const FeatureBag& bag, std::uint32_t k = 3);

// vlad_raw followed by signed square root, per-block intra-normalization and
// global L2.
VladVector vlad_encode(const KmeansCodebook& cb, const FeatureBag& bag, std::uint32_t k = 3);

// Normalizations append to norm_state. Signed square root maps z to
// sign(z) sqrt(|z|); L2 leaves an all-zero vector untouched and flags it
// degenerate; intra-normalization skips all-zero blocks.
FisherVector power_normalize(FisherVector v);
FisherVector l2_normalize(FisherVector v);
VladVector power_normalize(VladVector v);
VladVector l2_normalize(VladVector v);
VladVector intra_normalize(VladVector v);

// Query finalization: power then L2 on a raw encoding.
FisherVector finalize_query_fv(FisherVector raw);
// Video finalization: two power+L2 rounds, which empirically spreads block
// energy before shrinking.
FisherVector finalize_video_fv(FisherVector raw);

// Drops sub-threshold entries and empty blocks from a finalized (L2-last)
// vector. densify() reconstructs the post-shrink dense vector with empty
// norm_state; sparsify(densify(s), s.threshold) round-trips bit-exactly.
SparseFV sparsify(const FisherVector& v, float threshold = kDefaultShrinkThreshold);
FisherVector densify(const SparseFV& s);

// Structural checks shared by the index loader and tests: increasing
// indices, matching sizes, every block justified by a >= threshold entry.
void validate_sparse_fv(const SparseFV& s);

}  // namespace vrfp
