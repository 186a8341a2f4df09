#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vrfp/encode.hpp"

namespace vrfp {

struct IndexedEntry {
  std::string id;
  SparseFV fv;
};

// Sparse gallery of encoded videos plus block-level occupancy counts
// (occupancy[i] = number of entries whose block i is stored).
struct GalleryIndex {
  std::uint32_t K = 0;
  std::uint32_t D = 0;
  float threshold = 0.0f;
  std::vector<IndexedEntry> entries;
  std::vector<std::uint32_t> occupancy;  // K

  std::size_t size() const { return entries.size(); }
};

// Codeword ids excluded from matching, sorted ascending.
struct DropList {
  std::vector<std::uint32_t> indices;
};

// Dimensions are explicit so an empty entry list still builds a valid empty
// index. Entries must all match K/D/threshold, carry unique non-empty ids,
// and pass sparse validation.
GalleryIndex build_index(std::uint32_t K, std::uint32_t D, float threshold,
                         std::vector<IndexedEntry> entries);

// Index file: magic "VRFPIDX1", u32 K, u32 D, f32 threshold, u64 M, then per
// entry: u32 id_len, id bytes, u32 nnz, nnz u32 codeword indices, nnz*2D f32
// block values. Little-endian throughout. Save/load round-trips bit-exactly.
void save_index(const GalleryIndex& index, const std::filesystem::path& path);
GalleryIndex load_index(const std::filesystem::path& path);

// The r codewords with highest occupancy (ties broken toward lower id).
// r = 0 gives an empty list; r must not exceed K.
DropList make_drop_list(const GalleryIndex& index, std::uint32_t r);

// Per-codeword count of features in the bag whose truncated posterior for
// that component is non-zero. Each feature contributes to at most a handful
// of codewords, which is what the drop heuristic feeds on.
std::vector<std::uint32_t> codeword_histogram(const GmmCodebook& cb, const FeatureBag& bag);

}  // namespace vrfp
