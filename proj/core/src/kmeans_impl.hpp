#pragma once

// Seeded Lloyd k-means over row-major float data, shared by the codebook
// trainer and product quantization. Centers and all accumulation are double.

#include <cstdint>
#include <vector>

#include "vrfp/codebook.hpp"

namespace vrfp::detail {

struct KmeansScratch {
  std::vector<double> centers;       // k x dim
  std::vector<std::uint32_t> assign;  // n
};

// Caller must guarantee k >= 1, k <= n, and at least k distinct rows
// (otherwise duplicate centers can survive).
KmeansScratch lloyd_kmeans(const float* data, std::size_t n, std::uint32_t dim, std::uint32_t k,
                           std::uint64_t seed, KmeansTrainLog* log);

// Uniform double in [0, 1) built from the top 53 bits, identical across
// standard libraries.
inline double canonical_u01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace vrfp::detail
