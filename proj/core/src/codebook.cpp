#include "vrfp/codebook.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "io_util.hpp"
#include "kmeans_impl.hpp"

namespace vrfp {

namespace {

constexpr char kPcaMagic[] = "VRFPPCA1";
constexpr char kGmmMagic[] = "VRFPGMM1";
constexpr char kKmsMagic[] = "VRFPKMS1";

std::size_t checked_rows(std::span<const float> data, std::uint32_t dim, const char* what) {
  if (dim == 0) throw ArgumentError(std::string(what) + ": dim is zero");
  if (data.empty() || data.size() % dim != 0)
    throw ArgumentError(std::string(what) + ": data size is not a positive multiple of dim");
  for (float v : data)
    if (!std::isfinite(v)) throw DataError(std::string(what) + ": non-finite training value");
  return data.size() / dim;
}

double sq_dist(const float* a, const double* b, std::uint32_t dim) {
  double s = 0.0;
  for (std::uint32_t d = 0; d < dim; ++d) {
    double diff = static_cast<double>(a[d]) - b[d];
    s += diff * diff;
  }
  return s;
}

// Per-dimension population variance, used for GMM variance floors and
// collapse reseeding.
void data_mean_var(std::span<const float> data, std::uint32_t dim, std::vector<double>& mean,
                   std::vector<double>& var) {
  const std::size_t n = data.size() / dim;
  mean.assign(dim, 0.0);
  var.assign(dim, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t d = 0; d < dim; ++d) mean[d] += data[i * dim + d];
  for (std::uint32_t d = 0; d < dim; ++d) mean[d] /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t d = 0; d < dim; ++d) {
      double diff = data[i * dim + d] - mean[d];
      var[d] += diff * diff;
    }
  for (std::uint32_t d = 0; d < dim; ++d) var[d] /= static_cast<double>(n);
}

}  // namespace

namespace detail {

namespace {

// kmeans++ seeding: first center uniform, then D^2-weighted picks.
void kmeanspp_init(const float* data, std::size_t n, std::uint32_t dim, std::uint32_t k,
                   std::mt19937_64& rng, std::vector<double>& centers) {
  centers.assign(static_cast<std::size_t>(k) * dim, 0.0);
  std::vector<double> mindist(n, std::numeric_limits<double>::infinity());

  std::size_t first = static_cast<std::size_t>(rng() % n);
  for (std::uint32_t d = 0; d < dim; ++d) centers[d] = data[first * dim + d];

  for (std::uint32_t c = 1; c < k; ++c) {
    const double* prev = centers.data() + static_cast<std::size_t>(c - 1) * dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = sq_dist(data + i * dim, prev, dim);
      if (d2 < mindist[i]) mindist[i] = d2;
      total += mindist[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double u = canonical_u01(rng()) * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += mindist[i];
        if (cum > u) {
          pick = i;
          break;
        }
      }
    } else {
      // All rows coincide with existing centers; preconditions rule this out
      // but stay deterministic anyway.
      pick = static_cast<std::size_t>(rng() % n);
    }
    double* dst = centers.data() + static_cast<std::size_t>(c) * dim;
    for (std::uint32_t d = 0; d < dim; ++d) dst[d] = data[pick * dim + d];
  }
}

}  // namespace

KmeansScratch lloyd_kmeans(const float* data, std::size_t n, std::uint32_t dim, std::uint32_t k,
                           std::uint64_t seed, KmeansTrainLog* log) {
  std::mt19937_64 rng(seed);
  KmeansScratch out;
  kmeanspp_init(data, n, dim, k, rng, out.centers);
  out.assign.assign(n, 0);

  std::vector<double> sums(static_cast<std::size_t>(k) * dim);
  std::vector<std::size_t> counts(k);
  std::vector<double> pointdist(n);

  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_c = 0;
      for (std::uint32_t c = 0; c < k; ++c) {
        double d2 = sq_dist(data + i * dim, out.centers.data() + static_cast<std::size_t>(c) * dim,
                            dim);
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      if (out.assign[i] != best_c) {
        out.assign[i] = best_c;
        changed = true;
      }
      pointdist[i] = best;
      wcss += best;
    }
    if (log) log->wcss.push_back(wcss);
    if (!changed && iter > 0) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) {
      double* s = sums.data() + static_cast<std::size_t>(out.assign[i]) * dim;
      const float* x = data + i * dim;
      for (std::uint32_t d = 0; d < dim; ++d) s[d] += x[d];
      ++counts[out.assign[i]];
    }
    for (std::uint32_t c = 0; c < k; ++c) {
      double* ctr = out.centers.data() + static_cast<std::size_t>(c) * dim;
      if (counts[c] == 0) {
        // Reseed an empty cluster at the point currently worst served.
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i)
          if (pointdist[i] > pointdist[far]) far = i;
        for (std::uint32_t d = 0; d < dim; ++d) ctr[d] = data[far * dim + d];
        pointdist[far] = 0.0;
      } else {
        for (std::uint32_t d = 0; d < dim; ++d) ctr[d] = sums[c * dim + d] / counts[c];
      }
    }
  }
  return out;
}

}  // namespace detail

PcaModel fit_pca(std::span<const float> data, std::uint32_t d_in, std::uint32_t d_out) {
  const std::size_t n = checked_rows(data, d_in, "fit_pca");
  if (d_out == 0) throw ArgumentError("fit_pca: d_out must be >= 1");
  if (d_out > d_in) throw ArgumentError("fit_pca: d_out exceeds input dimension");

  PcaModel m;
  m.d_in = d_in;
  m.d_out = d_out;
  m.mean.assign(d_in, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::uint32_t d = 0; d < d_in; ++d) m.mean[d] += data[i * d_in + d];
  for (std::uint32_t d = 0; d < d_in; ++d) m.mean[d] /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d_in, d_in);
  Eigen::VectorXd y(d_in);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t d = 0; d < d_in; ++d) y(d) = data[i * d_in + d] - m.mean[d];
    cov.selfadjointView<Eigen::Lower>().rankUpdate(y, 1.0);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw DataError("fit_pca: eigendecomposition failed");

  // Eigen returns eigenvalues ascending; we want them non-increasing.
  Eigen::VectorXd evals = es.eigenvalues();
  double lmax = std::max(0.0, evals(d_in - 1));
  double rank_cut = std::max(1e-12, 1e-9 * lmax);
  std::uint32_t rank = 0;
  for (std::uint32_t i = 0; i < d_in; ++i)
    if (evals(i) > rank_cut) ++rank;
  if (d_out > rank)
    throw ArgumentError("fit_pca: requested " + std::to_string(d_out) +
                        " components but achievable rank is " + std::to_string(rank));

  m.basis.assign(static_cast<std::size_t>(d_out) * d_in, 0.0);
  m.eigenvalues.assign(d_out, 0.0);
  for (std::uint32_t r = 0; r < d_out; ++r) {
    Eigen::Index src = static_cast<Eigen::Index>(d_in) - 1 - r;
    Eigen::VectorXd v = es.eigenvectors().col(src);
    // Deterministic sign: largest-magnitude coefficient positive.
    Eigen::Index pivot = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
      if (std::abs(v(i)) > std::abs(v(pivot))) pivot = i;
    if (v(pivot) < 0.0) v = -v;
    for (std::uint32_t d = 0; d < d_in; ++d) m.basis[static_cast<std::size_t>(r) * d_in + d] = v(d);
    m.eigenvalues[r] = std::max(0.0, evals(src));
  }
  return m;
}

std::vector<float> apply_pca(const PcaModel& m, std::span<const float> x, bool whiten) {
  if (x.size() != m.d_in)
    throw ArgumentError("apply_pca: vector length " + std::to_string(x.size()) +
                        " does not match model d_in " + std::to_string(m.d_in));
  std::vector<float> out(m.d_out);
  for (std::uint32_t r = 0; r < m.d_out; ++r) {
    const double* row = m.basis.data() + static_cast<std::size_t>(r) * m.d_in;
    double acc = 0.0;
    for (std::uint32_t d = 0; d < m.d_in; ++d)
      acc += row[d] * (static_cast<double>(x[d]) - m.mean[d]);
    if (whiten) acc = m.eigenvalues[r] > 0.0 ? acc / std::sqrt(m.eigenvalues[r]) : 0.0;
    out[r] = static_cast<float>(acc);
  }
  return out;
}

KmeansCodebook fit_kmeans(std::span<const float> data, std::uint32_t dim, std::uint32_t K,
                          std::uint64_t seed, KmeansTrainLog* log) {
  const std::size_t n = checked_rows(data, dim, "fit_kmeans");
  if (K == 0) throw ArgumentError("fit_kmeans: K must be >= 1");
  if (n < K) throw ArgumentError("fit_kmeans: fewer rows than clusters");

  // K distinct rows are required, otherwise some center must duplicate.
  {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    auto row_less = [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(data.begin() + a * dim, data.begin() + (a + 1) * dim,
                                          data.begin() + b * dim, data.begin() + (b + 1) * dim);
    };
    std::sort(order.begin(), order.end(), row_less);
    std::size_t distinct = n == 0 ? 0 : 1;
    for (std::size_t i = 1; i < n; ++i)
      if (row_less(order[i - 1], order[i])) ++distinct;
    if (distinct < K)
      throw ArgumentError("fit_kmeans: only " + std::to_string(distinct) +
                          " distinct rows for K=" + std::to_string(K));
  }

  detail::KmeansScratch s = detail::lloyd_kmeans(data.data(), n, dim, K, seed, log);
  KmeansCodebook cb;
  cb.K = K;
  cb.D = dim;
  cb.centers = std::move(s.centers);
  return cb;
}

GmmCodebook fit_gmm(std::span<const float> data, std::uint32_t dim, std::uint32_t K,
                    std::uint64_t seed, GmmTrainLog* log) {
  const std::size_t n = checked_rows(data, dim, "fit_gmm");
  if (K == 0) throw ArgumentError("fit_gmm: K must be >= 1");
  if (n < 10 * static_cast<std::size_t>(K))
    throw ArgumentError("fit_gmm: need at least 10*K rows, got " + std::to_string(n));

  std::vector<double> dmean, dvar;
  data_mean_var(data, dim, dmean, dvar);
  std::vector<double> floor(dim);
  for (std::uint32_t d = 0; d < dim; ++d)
    floor[d] = std::max(kVarianceFloorScale * dvar[d], 1e-12);

  GmmCodebook cb;
  cb.K = K;
  cb.D = dim;
  cb.weights.assign(K, 0.0);
  cb.means.assign(static_cast<std::size_t>(K) * dim, 0.0);
  cb.variances.assign(static_cast<std::size_t>(K) * dim, 0.0);

  // Initialization: kmeans++ centers, one hard assignment, closed-form stats.
  {
    std::mt19937_64 rng(seed);
    std::vector<double> centers;
    detail::kmeanspp_init(data.data(), n, dim, K, rng, centers);
    std::vector<std::uint32_t> assign(n);
    std::vector<std::size_t> counts(K, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_c = 0;
      for (std::uint32_t c = 0; c < K; ++c) {
        double d2 = sq_dist(data.data() + i * dim, centers.data() + static_cast<std::size_t>(c) * dim, dim);
        if (d2 < best) {
          best = d2;
          best_c = c;
        }
      }
      assign[i] = best_c;
      ++counts[best_c];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double* mu = cb.means.data() + static_cast<std::size_t>(assign[i]) * dim;
      for (std::uint32_t d = 0; d < dim; ++d) mu[d] += data[i * dim + d];
    }
    for (std::uint32_t c = 0; c < K; ++c) {
      double* mu = cb.means.data() + static_cast<std::size_t>(c) * dim;
      if (counts[c] > 0)
        for (std::uint32_t d = 0; d < dim; ++d) mu[d] /= static_cast<double>(counts[c]);
      else
        for (std::uint32_t d = 0; d < dim; ++d) mu[d] = centers[static_cast<std::size_t>(c) * dim + d];
      cb.weights[c] = counts[c] > 0 ? static_cast<double>(counts[c]) / static_cast<double>(n)
                                    : 1.0 / static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double* mu = cb.means.data() + static_cast<std::size_t>(assign[i]) * dim;
      double* var = cb.variances.data() + static_cast<std::size_t>(assign[i]) * dim;
      for (std::uint32_t d = 0; d < dim; ++d) {
        double diff = data[i * dim + d] - mu[d];
        var[d] += diff * diff;
      }
    }
    for (std::uint32_t c = 0; c < K; ++c) {
      double* var = cb.variances.data() + static_cast<std::size_t>(c) * dim;
      for (std::uint32_t d = 0; d < dim; ++d) {
        double v = counts[c] > 0 ? var[d] / static_cast<double>(counts[c]) : dvar[d];
        var[d] = std::max(v, floor[d]);
      }
    }
    double wsum = 0.0;
    for (double w : cb.weights) wsum += w;
    for (double& w : cb.weights) w /= wsum;
  }

  constexpr double kLogTwoPi = 1.8378770664093454836;
  std::vector<double> logw(K), lognorm(K), li(K);
  std::vector<double> nk(K), sk(static_cast<std::size_t>(K) * dim), qk(static_cast<std::size_t>(K) * dim);
  int reinits = 0;
  double prev_ll = -std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < 100; ++iter) {
    for (std::uint32_t c = 0; c < K; ++c) {
      logw[c] = std::log(cb.weights[c]);
      double s = 0.0;
      const double* var = cb.variances.data() + static_cast<std::size_t>(c) * dim;
      for (std::uint32_t d = 0; d < dim; ++d) s += std::log(var[d]);
      lognorm[c] = -0.5 * (dim * kLogTwoPi + s);
    }

    std::fill(nk.begin(), nk.end(), 0.0);
    std::fill(sk.begin(), sk.end(), 0.0);
    std::fill(qk.begin(), qk.end(), 0.0);
    double ll = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
      const float* x = data.data() + i * dim;
      double m = -std::numeric_limits<double>::infinity();
      for (std::uint32_t c = 0; c < K; ++c) {
        const double* mu = cb.means.data() + static_cast<std::size_t>(c) * dim;
        const double* var = cb.variances.data() + static_cast<std::size_t>(c) * dim;
        double maha = 0.0;
        for (std::uint32_t d = 0; d < dim; ++d) {
          double diff = x[d] - mu[d];
          maha += diff * diff / var[d];
        }
        li[c] = logw[c] + lognorm[c] - 0.5 * maha;
        if (li[c] > m) m = li[c];
      }
      double s = 0.0;
      for (std::uint32_t c = 0; c < K; ++c) s += std::exp(li[c] - m);
      ll += m + std::log(s);
      for (std::uint32_t c = 0; c < K; ++c) {
        double g = std::exp(li[c] - m) / s;
        if (g == 0.0) continue;
        nk[c] += g;
        double* skc = sk.data() + static_cast<std::size_t>(c) * dim;
        double* qkc = qk.data() + static_cast<std::size_t>(c) * dim;
        for (std::uint32_t d = 0; d < dim; ++d) {
          double xd = x[d];
          skc[d] += g * xd;
          qkc[d] += g * xd * xd;
        }
      }
    }

    if (log) log->log_likelihood.push_back(ll);
    // EM cannot decrease the likelihood; the variance floor could in theory
    // nick it, so leave generous slack before calling it a bug.
    if (iter > 0 && ll < prev_ll - 1e-6 * (1.0 + std::abs(prev_ll)))
      throw std::logic_error("fit_gmm: log-likelihood decreased");
    bool converged = iter > 0 && (ll - prev_ll) < 1e-6 * std::abs(prev_ll);
    prev_ll = ll;

    bool collapsed = false;
    for (std::uint32_t c = 0; c < K; ++c) {
      if (nk[c] < 1e-10) {
        if (++reinits > 3) throw DataError("fit_gmm: component collapsed more than 3 times");
        if (log) log->collapse_reinits = reinits;
        collapsed = true;
        // Reseed at the point farthest from every current mean.
        std::size_t far = 0;
        double far_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          double mind = std::numeric_limits<double>::infinity();
          for (std::uint32_t c2 = 0; c2 < K; ++c2) {
            double d2 = sq_dist(data.data() + i * dim,
                                cb.means.data() + static_cast<std::size_t>(c2) * dim, dim);
            if (d2 < mind) mind = d2;
          }
          if (mind > far_d) {
            far_d = mind;
            far = i;
          }
        }
        double* mu = cb.means.data() + static_cast<std::size_t>(c) * dim;
        double* var = cb.variances.data() + static_cast<std::size_t>(c) * dim;
        for (std::uint32_t d = 0; d < dim; ++d) {
          mu[d] = data[far * dim + d];
          var[d] = std::max(dvar[d], floor[d]);
        }
        cb.weights[c] = 1.0 / static_cast<double>(n);
      } else {
        double* mu = cb.means.data() + static_cast<std::size_t>(c) * dim;
        double* var = cb.variances.data() + static_cast<std::size_t>(c) * dim;
        const double* skc = sk.data() + static_cast<std::size_t>(c) * dim;
        const double* qkc = qk.data() + static_cast<std::size_t>(c) * dim;
        for (std::uint32_t d = 0; d < dim; ++d) {
          mu[d] = skc[d] / nk[c];
          var[d] = std::max(qkc[d] / nk[c] - mu[d] * mu[d], floor[d]);
        }
        cb.weights[c] = nk[c] / static_cast<double>(n);
      }
    }
    double wsum = 0.0;
    for (double w : cb.weights) wsum += w;
    for (double& w : cb.weights) w /= wsum;

    if (converged && !collapsed) break;
  }
  return cb;
}

std::vector<double> posteriors(const GmmCodebook& cb, std::span<const float> x) {
  if (x.size() != cb.D)
    throw ArgumentError("posteriors: vector length does not match codebook D");
  constexpr double kLogTwoPi = 1.8378770664093454836;
  std::vector<double> li(cb.K);
  double m = -std::numeric_limits<double>::infinity();
  for (std::uint32_t c = 0; c < cb.K; ++c) {
    const double* mu = cb.means.data() + static_cast<std::size_t>(c) * cb.D;
    const double* var = cb.variances.data() + static_cast<std::size_t>(c) * cb.D;
    double acc = 0.0;
    for (std::uint32_t d = 0; d < cb.D; ++d) {
      double diff = x[d] - mu[d];
      acc += diff * diff / var[d] + std::log(var[d]);
    }
    li[c] = std::log(cb.weights[c]) - 0.5 * (acc + cb.D * kLogTwoPi);
    if (li[c] > m) m = li[c];
  }

  std::vector<double> g(cb.K, 0.0);
  if (!std::isfinite(m)) {
    // Every density underflowed; fall back to the nearest mean in
    // Mahalanobis distance. Unreachable with finite inputs and floored
    // variances, kept for robustness.
    std::uint32_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t c = 0; c < cb.K; ++c) {
      const double* mu = cb.means.data() + static_cast<std::size_t>(c) * cb.D;
      const double* var = cb.variances.data() + static_cast<std::size_t>(c) * cb.D;
      double acc = 0.0;
      for (std::uint32_t d = 0; d < cb.D; ++d) {
        double diff = x[d] - mu[d];
        acc += diff * diff / var[d];
      }
      if (acc < best_d) {
        best_d = acc;
        best = c;
      }
    }
    g[best] = 1.0;
    return g;
  }

  double s = 0.0;
  for (std::uint32_t c = 0; c < cb.K; ++c) s += std::exp(li[c] - m);
  double kept = 0.0;
  for (std::uint32_t c = 0; c < cb.K; ++c) {
    double v = std::exp(li[c] - m) / s;
    if (v < kPosteriorTruncation) v = 0.0;
    g[c] = v;
    kept += v;
  }
  for (std::uint32_t c = 0; c < cb.K; ++c) g[c] /= kept;
  return g;
}

void save_pca(const PcaModel& m, const std::filesystem::path& path) {
  detail::Writer w(path, kPcaMagic);
  w.u32(m.d_out);
  w.u32(m.d_in);
  w.f64_array(m.mean.data(), m.mean.size());
  w.f64_array(m.basis.data(), m.basis.size());
  w.f64_array(m.eigenvalues.data(), m.eigenvalues.size());
  w.close();
}

PcaModel load_pca(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.expect_magic(kPcaMagic);
  PcaModel m;
  m.d_out = r.u32();
  m.d_in = r.u32();
  if (m.d_out == 0 || m.d_in == 0 || m.d_out > m.d_in)
    throw FormatError(r.path() + ": invalid dimensions");
  m.mean.resize(m.d_in);
  m.basis.resize(static_cast<std::size_t>(m.d_out) * m.d_in);
  m.eigenvalues.resize(m.d_out);
  r.f64_array(m.mean.data(), m.mean.size());
  r.f64_array(m.basis.data(), m.basis.size());
  r.f64_array(m.eigenvalues.data(), m.eigenvalues.size());
  r.expect_eof();
  for (double v : m.mean)
    if (!std::isfinite(v)) throw DataError(r.path() + ": non-finite mean");
  for (double v : m.basis)
    if (!std::isfinite(v)) throw DataError(r.path() + ": non-finite basis");
  for (double v : m.eigenvalues)
    if (!(v >= 0.0)) throw DataError(r.path() + ": negative eigenvalue");
  return m;
}

void save_gmm(const GmmCodebook& cb, const std::filesystem::path& path) {
  detail::Writer w(path, kGmmMagic);
  w.u32(cb.K);
  w.u32(cb.D);
  w.f64_array(cb.weights.data(), cb.weights.size());
  w.f64_array(cb.means.data(), cb.means.size());
  w.f64_array(cb.variances.data(), cb.variances.size());
  w.close();
}

GmmCodebook load_gmm(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.expect_magic(kGmmMagic);
  GmmCodebook cb;
  cb.K = r.u32();
  cb.D = r.u32();
  if (cb.K == 0 || cb.D == 0) throw FormatError(r.path() + ": invalid dimensions");
  cb.weights.resize(cb.K);
  cb.means.resize(static_cast<std::size_t>(cb.K) * cb.D);
  cb.variances.resize(static_cast<std::size_t>(cb.K) * cb.D);
  r.f64_array(cb.weights.data(), cb.weights.size());
  r.f64_array(cb.means.data(), cb.means.size());
  r.f64_array(cb.variances.data(), cb.variances.size());
  r.expect_eof();
  double wsum = 0.0;
  for (double w : cb.weights) {
    if (!(w > 0.0)) throw DataError(r.path() + ": non-positive mixture weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-6) throw DataError(r.path() + ": mixture weights do not sum to 1");
  for (double v : cb.means)
    if (!std::isfinite(v)) throw DataError(r.path() + ": non-finite mean");
  for (double v : cb.variances)
    if (!(v > 0.0)) throw DataError(r.path() + ": non-positive variance");
  return cb;
}

void save_kmeans(const KmeansCodebook& cb, const std::filesystem::path& path) {
  detail::Writer w(path, kKmsMagic);
  w.u32(cb.K);
  w.u32(cb.D);
  w.f64_array(cb.centers.data(), cb.centers.size());
  w.close();
}

KmeansCodebook load_kmeans(const std::filesystem::path& path) {
  detail::Reader r(path);
  r.expect_magic(kKmsMagic);
  KmeansCodebook cb;
  cb.K = r.u32();
  cb.D = r.u32();
  if (cb.K == 0 || cb.D == 0) throw FormatError(r.path() + ": invalid dimensions");
  cb.centers.resize(static_cast<std::size_t>(cb.K) * cb.D);
  r.f64_array(cb.centers.data(), cb.centers.size());
  r.expect_eof();
  for (double v : cb.centers)
    if (!std::isfinite(v)) throw DataError(r.path() + ": non-finite center");
  return cb;
}

}  // namespace vrfp
