#include "vrfp/rerank.hpp"

#include <cmath>
#include <unordered_map>

namespace vrfp {

PrfResult prf_rerank(const RankedList& initial, const GalleryIndex& index, const PrfConfig& cfg) {
  if (cfg.top_n == 0) throw ArgumentError("prf_rerank: top_n must be >= 1");
  if (cfg.top_n > initial.items.size())
    throw ArgumentError("prf_rerank: top_n exceeds the initial list length");

  std::unordered_map<std::string, std::size_t> by_id;
  by_id.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) by_id.emplace(index.entries[i].id, i);

  const std::size_t n = static_cast<std::size_t>(2) * index.K * index.D;
  const std::size_t bs = static_cast<std::size_t>(2) * index.D;
  std::vector<double> mean(n, 0.0);
  for (std::uint32_t r = 0; r < cfg.top_n; ++r) {
    auto it = by_id.find(initial.items[r].id);
    if (it == by_id.end())
      throw ArgumentError("prf_rerank: id '" + initial.items[r].id + "' is not in the index");
    const SparseFV& fv = index.entries[it->second].fv;
    for (std::size_t pos = 0; pos < fv.indices.size(); ++pos) {
      const float* b = fv.block(pos);
      double* dst = mean.data() + static_cast<std::size_t>(fv.indices[pos]) * bs;
      for (std::size_t e = 0; e < bs; ++e) dst[e] += b[e];
    }
  }

  double ss = 0.0;
  for (double& v : mean) {
    v /= static_cast<double>(cfg.top_n);
    ss += v * v;
  }
  if (ss == 0.0) {
    PrfResult out;
    out.ranking = initial;
    out.degenerate = true;
    return out;
  }

  FisherVector pseudo;
  pseudo.K = index.K;
  pseudo.D = index.D;
  pseudo.values.resize(n);
  const double inv = 1.0 / std::sqrt(ss);
  for (std::size_t e = 0; e < n; ++e) pseudo.values[e] = static_cast<float>(mean[e] * inv);
  pseudo.norm_state.push_back(NormOp::L2);

  PrfResult out;
  out.ranking = ffp_dot(sparsify(pseudo, index.threshold), index).ranking;
  return out;
}

}  // namespace vrfp
