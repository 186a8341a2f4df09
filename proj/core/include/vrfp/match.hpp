#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vrfp/index.hpp"

namespace vrfp {

// Deterministic cost model. Operation counts are the asserted performance
// metric; wall-clock time is reported but never asserted.
struct OpCounter {
  std::uint64_t multiplies = 0;
  std::uint64_t additions = 0;
  std::uint64_t intersection_ops = 0;  // membership probes while intersecting

  OpCounter& operator+=(const OpCounter& o) {
    multiplies += o.multiplies;
    additions += o.additions;
    intersection_ops += o.intersection_ops;
    return *this;
  }
};

struct ScoredId {
  std::string id;
  double score = 0.0;
};

// Sorted by score descending, ties by id ascending.
struct RankedList {
  std::vector<ScoredId> items;
};

struct ScoreResult {
  RankedList ranking;
  OpCounter ops;
};

// All three lossless scorers accumulate products in one double per entry, in
// ascending element order, so their scores agree bit for bit: skipped terms
// are exact zeros. Since finalized encodings end in L2, dot products are
// cosine similarities up to shrinkage (the threshold removes entries of
// magnitude < t, perturbing each score by at most t * sqrt(2KD)).
//
// Scoring honors the VRFP_THREADS environment variable (default 1): entries
// are scored in parallel slices and results stitched back in entry order, so
// output is identical at any thread count.

// Full dense dot against every entry, densified on the fly: 2KD multiplies
// and additions per entry.
ScoreResult naive_dot(const FisherVector& query, const GalleryIndex& index);

// Walks only the entry's stored blocks but ignores query sparsity.
ScoreResult sparse_side_dot(const FisherVector& query, const GalleryIndex& index);

// Intersects the entry's codeword set with the query's: membership probes
// cost min(|entry|, |query|) intersection ops, then 2D multiplies per
// surviving codeword. Codewords on the drop list are excluded from the
// query side (lossy unless the list is empty).
ScoreResult ffp_dot(const SparseFV& query, const GalleryIndex& index,
                    const DropList& drop = {});

// Product quantization over densified entries (asymmetric distance
// computation on inner products). Subvector length m must divide 2KD.
struct PqCodebook {
  std::uint32_t m = 0;
  std::uint32_t n_subspaces = 0;
  std::vector<std::uint32_t> counts;        // centroids per subspace, <= 256
  std::vector<std::vector<float>> tables;   // per subspace: counts[s] * m
};

struct PqCodes {
  std::uint32_t m = 0;
  std::uint32_t n_subspaces = 0;
  std::vector<std::string> ids;
  std::vector<std::uint8_t> codes;  // ids.size() * n_subspaces
};

// Trains min(256, M, distinct) centroids per subspace with seeded k-means.
PqCodebook pq_train(const GalleryIndex& index, std::uint32_t m, std::uint64_t seed,
                    std::vector<KmeansTrainLog>* logs = nullptr);
PqCodes pq_encode(const GalleryIndex& index, const PqCodebook& cb);

// Scores via per-subspace lookup tables: one table build (m multiplies per
// centroid) plus n_subspaces additions per entry.
ScoreResult pq_score(const FisherVector& query, const PqCodebook& cb, const PqCodes& codes);

// Two-stage filtering: stage one scores only the fraction f of codewords
// with the highest gallery variance, stage two rescores the top rerank_depth
// candidates exactly and places them above the rest.
struct HvsfModel {
  std::uint32_t K = 0;
  double fraction = 0.2;
  std::uint32_t rerank_depth = 500;
  std::vector<double> variances;      // K, per-codeword gallery variance
  std::vector<std::uint32_t> hot;     // ceil(f * K) highest-variance codewords
};

HvsfModel hvsf_build(const GalleryIndex& index, double fraction = 0.2,
                     std::uint32_t rerank_depth = 500);
ScoreResult hvsf_score(const SparseFV& query, const GalleryIndex& index, const HvsfModel& model);

// Ranked list file: one "<rank>\t<id>\t<score>" line per item, rank starting
// at 1, score printed with %.9g (enough to round-trip any float-derived
// score difference that matters here).
void write_ranked_tsv(const RankedList& list, const std::filesystem::path& path);
RankedList read_ranked_tsv(const std::filesystem::path& path);

// Shared final ordering: score descending, then id ascending.
RankedList finalize_ranking(std::vector<ScoredId> scored);

}  // namespace vrfp
