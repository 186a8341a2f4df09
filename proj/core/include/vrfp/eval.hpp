#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "vrfp/match.hpp"

namespace vrfp {

// Synthetic block-sparsity profile. Unbiased: every codeword block appears
// independently with probability p_gallery (entries) / p_query (query).
// Biased: the first hot_count codewords appear with probability p_hot, the
// rest with p_low, on both sides.
struct SparsityProfile {
  std::uint32_t K = 256;
  std::uint32_t D = 16;
  std::uint32_t M = 2000;  // gallery size
  double p_gallery = 0.07;
  double p_query = 0.15;
  bool biased = false;
  std::uint32_t hot_count = 0;
  double p_hot = 0.5;
  double p_low = 0.1;
  float threshold = kDefaultShrinkThreshold;
  std::uint64_t seed = 0;
};

// Realized (post-normalization, post-shrink) sparsity of one draw.
struct SynthStats {
  std::uint64_t gallery_blocks = 0;        // stored codeword blocks, all entries
  std::uint64_t query_blocks = 0;
  std::uint64_t gallery_value_nonzeros = 0;  // C1: non-zero stored values
  std::uint64_t query_value_nonzeros = 0;    // C2
  double mean_block_occupancy = 0.0;         // gallery_blocks / (M * K)
  double query_block_fraction = 0.0;         // query_blocks / K
};

struct SynthResult {
  GalleryIndex index;
  SparseFV query;
  SynthStats stats;
};

// Deterministic for a fixed profile. Values are uniform in [threshold, 1)
// with random sign, so drawn blocks survive shrinking; a bag that ends up
// with no blocks is redrawn.
SynthResult synth_gallery(const SparsityProfile& profile);

// Operation-count speedup of intersection matching over the dense baseline
// under the unbiased model: 1 / (p_t * p_q + min(p_t, p_q) / (2 D)). K
// cancels out of the ratio; it is taken for interface symmetry only.
double expected_speedup_unbiased(double p_t, double p_q, std::uint32_t K, std::uint32_t D);

// Same ratio when X of K codewords are hot on both sides:
// K / (X * p_h^2 + (K - X) * p_l^2).
double expected_speedup_biased(std::uint32_t K, std::uint32_t X, double p_h, double p_l);

// After dropping the X hot codewords from the query side:
// K / ((K - X) * p_l^2).
double expected_speedup_biased_dropped(std::uint32_t K, std::uint32_t X, double p_l);

// Average precision of a ranked list against a non-empty relevant set, and
// the mean over queries.
double average_precision(const RankedList& ranked, const std::unordered_set<std::string>& relevant);
double mean_ap(const std::vector<double>& aps);

// |top-k of a  ∩  top-k of b| / k, the agreement measure used for lossy
// methods against the exact ranking.
double topk_overlap(const RankedList& a, const RankedList& b, std::size_t k);

enum class BenchMethod { Naive, SparseSide, Ffp, FfpLossy, Pq, Hvsf };

BenchMethod parse_bench_method(const std::string& name);  // throws ArgumentError
const char* bench_method_name(BenchMethod m);

struct MethodReport {
  std::string name;
  OpCounter ops;
  double wall_ms = 0.0;        // median of 5 timed runs after one warmup
  std::uint64_t checksum = 0;  // FNV-1a over (id, score) in rank order
  std::string note;
};

struct BenchReport {
  SparsityProfile profile;
  SynthStats stats;
  std::vector<MethodReport> methods;
  bool lossless_agree = true;  // naive / sparse-side / ffp checksums all equal
  double model_unbiased = 0.0;
  double model_biased = 0.0;          // only when profile.biased
  double model_biased_dropped = 0.0;  // only when drop_r > 0 and biased
  std::uint32_t drop_r = 0;
};

// Draws the profile, runs each method (timing the scoring pass only; PQ
// training, HVSF model building and drop list construction are set up
// outside the clock) and cross-checks the lossless chain.
BenchReport run_bench(const SparsityProfile& profile, const std::vector<BenchMethod>& methods,
                      std::uint32_t drop_r = 0);

// Human-readable table, and "key\tvalue" lines for scripts.
std::string format_bench_table(const BenchReport& report);
std::string format_bench_kv(const BenchReport& report);

}  // namespace vrfp
