#include "vrfp/encode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vrfp {

namespace {

// Shared low-level passes over a value array. Everything accumulates in
// double and rounds back to float once.

void power_values(std::vector<float>& values) {
  for (float& v : values) {
    double a = v;
    v = static_cast<float>(std::copysign(std::sqrt(std::fabs(a)), a));
  }
}

// Returns false when the slice is all zero (left untouched).
bool l2_values(float* values, std::size_t n) {
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += static_cast<double>(values[i]) * values[i];
  if (ss == 0.0) return false;
  double inv = 1.0 / std::sqrt(ss);
  for (std::size_t i = 0; i < n; ++i)
    values[i] = static_cast<float>(static_cast<double>(values[i]) * inv);
  return true;
}

PooledFeature pool_impl(const FeatureBag& bag, bool use_max) {
  validate_bag(bag);
  const std::size_t t = bag.count();
  std::vector<double> acc(bag.dim, use_max ? -std::numeric_limits<double>::infinity() : 0.0);
  for (std::size_t i = 0; i < t; ++i) {
    auto row = bag.row(i);
    for (std::uint32_t d = 0; d < bag.dim; ++d) {
      if (use_max)
        acc[d] = std::max(acc[d], static_cast<double>(row[d]));
      else
        acc[d] += row[d];
    }
  }
  PooledFeature out;
  out.values.resize(bag.dim);
  for (std::uint32_t d = 0; d < bag.dim; ++d)
    out.values[d] = static_cast<float>(use_max ? acc[d] : acc[d] / static_cast<double>(t));
  if (!l2_values(out.values.data(), out.values.size())) out.degenerate = true;
  return out;
}

}  // namespace

PooledFeature avg_pool(const FeatureBag& bag) { return pool_impl(bag, false); }
PooledFeature max_pool(const FeatureBag& bag) { return pool_impl(bag, true); }

FisherVector fv_encode(const GmmCodebook& cb, const FeatureBag& bag) {
  validate_bag(bag);
  if (bag.dim != cb.D)
    throw ArgumentError("fv_encode: bag dim " + std::to_string(bag.dim) +
                        " does not match codebook D " + std::to_string(cb.D));
  const std::size_t t = bag.count();
  const std::uint32_t K = cb.K, D = cb.D;

  std::vector<double> inv_sigma(static_cast<std::size_t>(K) * D);
  std::vector<double> inv_var(static_cast<std::size_t>(K) * D);
  for (std::size_t i = 0; i < inv_sigma.size(); ++i) {
    inv_var[i] = 1.0 / cb.variances[i];
    inv_sigma[i] = std::sqrt(inv_var[i]);
  }

  std::vector<double> acc_mu(static_cast<std::size_t>(K) * D, 0.0);
  std::vector<double> acc_var(static_cast<std::size_t>(K) * D, 0.0);
  for (std::size_t s = 0; s < t; ++s) {
    auto x = bag.row(s);
    std::vector<double> g = posteriors(cb, x);
    for (std::uint32_t c = 0; c < K; ++c) {
      if (g[c] == 0.0) continue;
      const std::size_t base = static_cast<std::size_t>(c) * D;
      const double* mu = cb.means.data() + base;
      double* am = acc_mu.data() + base;
      double* av = acc_var.data() + base;
      for (std::uint32_t d = 0; d < D; ++d) {
        double diff = static_cast<double>(x[d]) - mu[d];
        am[d] += g[c] * diff * inv_sigma[base + d];
        av[d] += g[c] * (diff * diff * inv_var[base + d] - 1.0);
      }
    }
  }

  FisherVector fv;
  fv.K = K;
  fv.D = D;
  fv.values.resize(static_cast<std::size_t>(2) * K * D);
  const double tn = static_cast<double>(t);
  for (std::uint32_t c = 0; c < K; ++c) {
    double coef_mu = 1.0 / (tn * std::sqrt(cb.weights[c]));
    double coef_var = 1.0 / (tn * std::sqrt(2.0 * cb.weights[c]));
    float* block = fv.values.data() + fv.block_offset(c);
    const std::size_t base = static_cast<std::size_t>(c) * D;
    for (std::uint32_t d = 0; d < D; ++d) {
      block[d] = static_cast<float>(acc_mu[base + d] * coef_mu);
      block[D + d] = static_cast<float>(acc_var[base + d] * coef_var);
    }
  }
  return fv;
}

VladVector vlad_raw(const KmeansCodebook& cb, const FeatureBag& bag, std::uint32_t k) {
  validate_bag(bag);
  if (bag.dim != cb.D)
    throw ArgumentError("vlad_raw: bag dim does not match codebook D");
  if (k == 0 || k > cb.K)
    throw ArgumentError("vlad_raw: k must be in [1, K]");
  const std::size_t t = bag.count();
  const std::uint32_t K = cb.K, D = cb.D;

  std::vector<double> acc(static_cast<std::size_t>(K) * D, 0.0);
  std::vector<std::pair<double, std::uint32_t>> dist(K);
  for (std::size_t s = 0; s < t; ++s) {
    auto x = bag.row(s);
    for (std::uint32_t c = 0; c < K; ++c) {
      const double* ctr = cb.centers.data() + static_cast<std::size_t>(c) * D;
      double d2 = 0.0;
      for (std::uint32_t d = 0; d < D; ++d) {
        double diff = static_cast<double>(x[d]) - ctr[d];
        d2 += diff * diff;
      }
      dist[c] = {d2, c};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    for (std::uint32_t j = 0; j < k; ++j) {
      std::uint32_t c = dist[j].second;
      const double* ctr = cb.centers.data() + static_cast<std::size_t>(c) * D;
      double* a = acc.data() + static_cast<std::size_t>(c) * D;
      for (std::uint32_t d = 0; d < D; ++d) a[d] += static_cast<double>(x[d]) - ctr[d];
    }
  }

  VladVector v;
  v.K = K;
  v.D = D;
  v.values.resize(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) v.values[i] = static_cast<float>(acc[i]);
  return v;
}

VladVector vlad_encode(const KmeansCodebook& cb, const FeatureBag& bag, std::uint32_t k) {
  return l2_normalize(intra_normalize(power_normalize(vlad_raw(cb, bag, k))));
}

FisherVector power_normalize(FisherVector v) {
  power_values(v.values);
  v.norm_state.push_back(NormOp::Power);
  return v;
}

FisherVector l2_normalize(FisherVector v) {
  if (!l2_values(v.values.data(), v.values.size())) v.degenerate = true;
  v.norm_state.push_back(NormOp::L2);
  return v;
}

VladVector power_normalize(VladVector v) {
  power_values(v.values);
  v.norm_state.push_back(NormOp::Power);
  return v;
}

VladVector l2_normalize(VladVector v) {
  if (!l2_values(v.values.data(), v.values.size())) v.degenerate = true;
  v.norm_state.push_back(NormOp::L2);
  return v;
}

VladVector intra_normalize(VladVector v) {
  for (std::uint32_t c = 0; c < v.K; ++c)
    l2_values(v.values.data() + static_cast<std::size_t>(c) * v.D, v.D);
  v.norm_state.push_back(NormOp::IntraL2);
  return v;
}

FisherVector finalize_query_fv(FisherVector raw) {
  if (!raw.norm_state.empty())
    throw ArgumentError("finalize_query_fv: encoding is already normalized");
  return l2_normalize(power_normalize(std::move(raw)));
}

FisherVector finalize_video_fv(FisherVector raw) {
  if (!raw.norm_state.empty())
    throw ArgumentError("finalize_video_fv: encoding is already normalized");
  return l2_normalize(power_normalize(l2_normalize(power_normalize(std::move(raw)))));
}

SparseFV sparsify(const FisherVector& v, float threshold) {
  if (!(threshold >= 0.0f) || !std::isfinite(threshold))
    throw ArgumentError("sparsify: threshold must be finite and >= 0");
  if (v.norm_state.empty() || v.norm_state.back() != NormOp::L2)
    throw ArgumentError("sparsify: encoding must end in L2 normalization");
  for (float x : v.values)
    if (!std::isfinite(x)) throw DataError("sparsify: non-finite value in encoding");

  SparseFV s;
  s.K = v.K;
  s.D = v.D;
  s.threshold = threshold;
  const std::size_t bs = static_cast<std::size_t>(2) * v.D;
  for (std::uint32_t c = 0; c < v.K; ++c) {
    const float* block = v.values.data() + v.block_offset(c);
    bool keep = false;
    for (std::size_t e = 0; e < bs; ++e)
      if (std::fabs(block[e]) >= threshold) {
        keep = true;
        break;
      }
    if (!keep) continue;
    s.indices.push_back(c);
    for (std::size_t e = 0; e < bs; ++e)
      s.blocks.push_back(std::fabs(block[e]) >= threshold ? block[e] : 0.0f);
  }
  return s;
}

FisherVector densify(const SparseFV& s) {
  validate_sparse_fv(s);
  FisherVector v;
  v.K = s.K;
  v.D = s.D;
  v.values.assign(static_cast<std::size_t>(2) * s.K * s.D, 0.0f);
  const std::size_t bs = static_cast<std::size_t>(2) * s.D;
  for (std::size_t pos = 0; pos < s.indices.size(); ++pos)
    std::copy_n(s.block(pos), bs, v.values.data() + v.block_offset(s.indices[pos]));
  return v;
}

void validate_sparse_fv(const SparseFV& s) {
  if (s.K == 0 || s.D == 0) throw DataError("sparse encoding: zero dimensions");
  if (!(s.threshold >= 0.0f) || !std::isfinite(s.threshold))
    throw DataError("sparse encoding: bad threshold");
  const std::size_t bs = static_cast<std::size_t>(2) * s.D;
  if (s.blocks.size() != s.indices.size() * bs)
    throw DataError("sparse encoding: block storage does not match index count");
  for (std::size_t i = 0; i < s.indices.size(); ++i) {
    if (s.indices[i] >= s.K) throw DataError("sparse encoding: codeword index out of range");
    if (i > 0 && s.indices[i] <= s.indices[i - 1])
      throw DataError("sparse encoding: codeword indices not strictly increasing");
    const float* b = s.block(i);
    float peak = 0.0f;
    for (std::size_t e = 0; e < bs; ++e) {
      if (!std::isfinite(b[e])) throw DataError("sparse encoding: non-finite value");
      peak = std::max(peak, std::fabs(b[e]));
    }
    if (peak < s.threshold)
      throw DataError("sparse encoding: stored block is entirely below threshold");
  }
}

}  // namespace vrfp
