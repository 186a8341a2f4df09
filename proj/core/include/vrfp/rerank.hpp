#pragma once

#include "vrfp/match.hpp"

namespace vrfp {

struct PrfConfig {
  std::uint32_t top_n = 50;
};

struct PrfResult {
  RankedList ranking;
  bool degenerate = false;  // feedback mean was zero, initial list returned
};

// Pseudo-relevance feedback: treat the current top_n results as relevant,
// average their densified encodings, L2-normalize the mean, shrink it at the
// index threshold and score the whole gallery with it. Every id in the
// initial list must exist in the index and top_n must not exceed the list.
PrfResult prf_rerank(const RankedList& initial, const GalleryIndex& index, const PrfConfig& cfg);

}  // namespace vrfp
