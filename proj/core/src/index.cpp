#include "vrfp/index.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "io_util.hpp"

namespace vrfp {

namespace {
constexpr char kIdxMagic[] = "VRFPIDX1";
constexpr std::uint32_t kMaxIdLen = 4096;
}  // namespace

GalleryIndex build_index(std::uint32_t K, std::uint32_t D, float threshold,
                         std::vector<IndexedEntry> entries) {
  if (K == 0 || D == 0) throw ArgumentError("build_index: K and D must be positive");
  if (!(threshold >= 0.0f) || !std::isfinite(threshold))
    throw ArgumentError("build_index: threshold must be finite and >= 0");

  GalleryIndex idx;
  idx.K = K;
  idx.D = D;
  idx.threshold = threshold;
  idx.occupancy.assign(K, 0);

  std::set<std::string> ids;
  for (auto& e : entries) {
    if (e.id.empty()) throw DataError("build_index: empty entry id");
    if (!ids.insert(e.id).second) throw DataError("build_index: duplicate entry id '" + e.id + "'");
    if (e.fv.K != K || e.fv.D != D)
      throw ArgumentError("build_index: entry '" + e.id + "' has mismatched K or D");
    if (e.fv.threshold != threshold)
      throw ArgumentError("build_index: entry '" + e.id + "' was shrunk at a different threshold");
    validate_sparse_fv(e.fv);
    for (std::uint32_t c : e.fv.indices) ++idx.occupancy[c];
  }
  idx.entries = std::move(entries);
  return idx;
}

void save_index(const GalleryIndex& index, const std::filesystem::path& path) {
  detail::Writer w(path, kIdxMagic);
  w.u32(index.K);
  w.u32(index.D);
  w.f32(index.threshold);
  w.u64(index.entries.size());
  for (const auto& e : index.entries) {
    w.u32(static_cast<std::uint32_t>(e.id.size()));
    w.str(e.id);
    w.u32(static_cast<std::uint32_t>(e.fv.indices.size()));
    for (std::uint32_t c : e.fv.indices) w.u32(c);
    w.f32_array(e.fv.blocks.data(), e.fv.blocks.size());
  }
  w.close();
}

GalleryIndex load_index(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.expect_magic(kIdxMagic);
  std::uint32_t K = r.u32();
  std::uint32_t D = r.u32();
  float threshold = r.f32();
  std::uint64_t m = r.u64();
  if (K == 0 || D == 0) throw FormatError(r.path() + ": invalid dimensions");

  std::vector<IndexedEntry> entries;
  entries.reserve(static_cast<std::size_t>(m));
  const std::size_t bs = static_cast<std::size_t>(2) * D;
  for (std::uint64_t i = 0; i < m; ++i) {
    IndexedEntry e;
    std::uint32_t id_len = r.u32();
    if (id_len == 0 || id_len > kMaxIdLen)
      throw FormatError(r.path() + ": implausible id length " + std::to_string(id_len));
    e.id = r.str(id_len);
    std::uint32_t nnz = r.u32();
    if (nnz > K) throw FormatError(r.path() + ": entry block count exceeds K");
    e.fv.K = K;
    e.fv.D = D;
    e.fv.threshold = threshold;
    e.fv.indices.resize(nnz);
    for (std::uint32_t j = 0; j < nnz; ++j) e.fv.indices[j] = r.u32();
    e.fv.blocks.resize(static_cast<std::size_t>(nnz) * bs);
    r.f32_array(e.fv.blocks.data(), e.fv.blocks.size());
    entries.push_back(std::move(e));
  }
  r.expect_eof();

  try {
    return build_index(K, D, threshold, std::move(entries));
  } catch (const ArgumentError& e) {
    // Structural problems in a file are format problems for the caller.
    throw FormatError(r.path() + ": " + e.what());
  }
}

DropList make_drop_list(const GalleryIndex& index, std::uint32_t r) {
  if (r > index.K) throw ArgumentError("make_drop_list: r exceeds K");
  DropList out;
  if (r == 0) return out;
  std::vector<std::uint32_t> order(index.K);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return index.occupancy[a] > index.occupancy[b];
  });
  out.indices.assign(order.begin(), order.begin() + r);
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

std::vector<std::uint32_t> codeword_histogram(const GmmCodebook& cb, const FeatureBag& bag) {
  validate_bag(bag);
  if (bag.dim != cb.D)
    throw ArgumentError("codeword_histogram: bag dim does not match codebook D");
  std::vector<std::uint32_t> counts(cb.K, 0);
  const std::size_t t = bag.count();
  for (std::size_t i = 0; i < t; ++i) {
    std::vector<double> g = posteriors(cb, bag.row(i));
    for (std::uint32_t c = 0; c < cb.K; ++c)
      if (g[c] > 0.0) ++counts[c];
  }
  return counts;
}

}  // namespace vrfp
