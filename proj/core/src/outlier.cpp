#include "vrfp/outlier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "kmeans_impl.hpp"

namespace vrfp {

namespace {

double act(double x, Activation a) { return a == Activation::Tanh ? std::tanh(x) : x; }

// Derivative in terms of the activation output (1 - tanh^2 for tanh).
double act_grad(double h, Activation a) { return a == Activation::Tanh ? 1.0 - h * h : 1.0; }

std::uint32_t resolve_hidden(const AeTrainConfig& cfg, std::uint32_t d) {
  std::uint32_t h = cfg.hidden != 0 ? cfg.hidden : std::max(1u, d / 4);
  if (h >= d) throw ArgumentError("train_autoencoder: hidden width must be smaller than d");
  return h;
}

}  // namespace

AeModel train_autoencoder(const FeatureBag& bag, const AeTrainConfig& cfg, std::uint64_t seed,
                          AeTrainLog* log) {
  validate_bag(bag);
  const std::size_t t = bag.count();
  const std::uint32_t d = bag.dim;
  if (t < 2) throw ArgumentError("train_autoencoder: need at least 2 rows");
  const std::uint32_t h = resolve_hidden(cfg, d);
  if (cfg.epochs == 0) throw ArgumentError("train_autoencoder: epochs must be >= 1");
  if (!(cfg.lr > 0.0) || !std::isfinite(cfg.lr))
    throw ArgumentError("train_autoencoder: learning rate must be positive");
  if (cfg.batch == 0) throw ArgumentError("train_autoencoder: batch size must be >= 1");

  // Standardize per dimension; constant dimensions keep scale 1.
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::uint32_t j = 0; j < d; ++j) mean[j] += bag.data[i * d + j];
  for (std::uint32_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(t);
  for (std::size_t i = 0; i < t; ++i)
    for (std::uint32_t j = 0; j < d; ++j) {
      double diff = bag.data[i * d + j] - mean[j];
      scale[j] += diff * diff;
    }
  for (std::uint32_t j = 0; j < d; ++j) {
    scale[j] = std::sqrt(scale[j] / static_cast<double>(t));
    if (scale[j] == 0.0) scale[j] = 1.0;
  }

  std::vector<double> z(t * d);
  for (std::size_t i = 0; i < t; ++i)
    for (std::uint32_t j = 0; j < d; ++j)
      z[i * d + j] = (bag.data[i * d + j] - mean[j]) / scale[j];

  std::mt19937_64 rng(seed);
  const double glorot = std::sqrt(6.0 / (static_cast<double>(d) + h));
  auto uniform = [&]() { return (2.0 * detail::canonical_u01(rng()) - 1.0) * glorot; };

  std::vector<double> w1(static_cast<std::size_t>(h) * d), b1(h, 0.0);
  std::vector<double> w2(static_cast<std::size_t>(d) * h), b2(d, 0.0);
  for (double& w : w1) w = uniform();
  for (double& w : w2) w = uniform();

  std::vector<std::size_t> order(t);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> pre(h), hid(h), y(d), dy(d), dh(h);
  std::vector<double> gw1(w1.size()), gb1(h), gw2(w2.size()), gb2(d);

  for (std::uint32_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with the shared stream keeps runs reproducible.
    for (std::size_t i = t - 1; i > 0; --i) {
      std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
      std::swap(order[i], order[j]);
    }

    for (std::size_t start = 0; start < t; start += cfg.batch) {
      const std::size_t stop = std::min(t, start + cfg.batch);
      const double bsz = static_cast<double>(stop - start);
      std::fill(gw1.begin(), gw1.end(), 0.0);
      std::fill(gb1.begin(), gb1.end(), 0.0);
      std::fill(gw2.begin(), gw2.end(), 0.0);
      std::fill(gb2.begin(), gb2.end(), 0.0);

      for (std::size_t s = start; s < stop; ++s) {
        const double* x = z.data() + order[s] * d;
        for (std::uint32_t a = 0; a < h; ++a) {
          double acc = b1[a];
          const double* row = w1.data() + static_cast<std::size_t>(a) * d;
          for (std::uint32_t j = 0; j < d; ++j) acc += row[j] * x[j];
          pre[a] = acc;
          hid[a] = act(acc, cfg.activation);
        }
        for (std::uint32_t j = 0; j < d; ++j) {
          double acc = b2[j];
          const double* row = w2.data() + static_cast<std::size_t>(j) * h;
          for (std::uint32_t a = 0; a < h; ++a) acc += row[a] * hid[a];
          y[j] = acc;
          dy[j] = 2.0 * (acc - x[j]) / bsz;
        }
        for (std::uint32_t a = 0; a < h; ++a) {
          double acc = 0.0;
          for (std::uint32_t j = 0; j < d; ++j) acc += w2[static_cast<std::size_t>(j) * h + a] * dy[j];
          dh[a] = acc * act_grad(hid[a], cfg.activation);
        }
        for (std::uint32_t j = 0; j < d; ++j) {
          double* row = gw2.data() + static_cast<std::size_t>(j) * h;
          for (std::uint32_t a = 0; a < h; ++a) row[a] += dy[j] * hid[a];
          gb2[j] += dy[j];
        }
        for (std::uint32_t a = 0; a < h; ++a) {
          double* row = gw1.data() + static_cast<std::size_t>(a) * d;
          for (std::uint32_t j = 0; j < d; ++j) row[j] += dh[a] * x[j];
          gb1[a] += dh[a];
        }
      }

      for (std::size_t i = 0; i < w1.size(); ++i) w1[i] -= cfg.lr * gw1[i];
      for (std::uint32_t a = 0; a < h; ++a) b1[a] -= cfg.lr * gb1[a];
      for (std::size_t i = 0; i < w2.size(); ++i) w2[i] -= cfg.lr * gw2[i];
      for (std::uint32_t j = 0; j < d; ++j) b2[j] -= cfg.lr * gb2[j];
    }

    // Full objective in the raw feature space, for the log and the
    // divergence check.
    double loss = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
      const double* x = z.data() + i * d;
      for (std::uint32_t a = 0; a < h; ++a) {
        double acc = b1[a];
        const double* row = w1.data() + static_cast<std::size_t>(a) * d;
        for (std::uint32_t j = 0; j < d; ++j) acc += row[j] * x[j];
        hid[a] = act(acc, cfg.activation);
      }
      for (std::uint32_t j = 0; j < d; ++j) {
        double acc = b2[j];
        const double* row = w2.data() + static_cast<std::size_t>(j) * h;
        for (std::uint32_t a = 0; a < h; ++a) acc += row[a] * hid[a];
        double e = scale[j] * (acc - x[j]);
        loss += e * e;
      }
    }
    if (!std::isfinite(loss))
      throw DataError("train_autoencoder: loss diverged; try a lower learning rate");
    if (log) log->epoch_loss.push_back(loss);
  }

  // Fold standardization into the weights so the model consumes raw rows:
  // enc(x) = W1 ((x - m) / s) + b1, dec(h) = s * (W2 h + b2) + m.
  AeModel model;
  model.d = d;
  model.hidden = h;
  model.activation = cfg.activation;
  model.enc_w.resize(w1.size());
  model.enc_b.assign(h, 0.0);
  model.dec_w.resize(w2.size());
  model.dec_b.assign(d, 0.0);
  for (std::uint32_t a = 0; a < h; ++a) {
    double shift = 0.0;
    for (std::uint32_t j = 0; j < d; ++j) {
      model.enc_w[static_cast<std::size_t>(a) * d + j] = w1[static_cast<std::size_t>(a) * d + j] / scale[j];
      shift += w1[static_cast<std::size_t>(a) * d + j] * mean[j] / scale[j];
    }
    model.enc_b[a] = b1[a] - shift;
  }
  for (std::uint32_t j = 0; j < d; ++j) {
    for (std::uint32_t a = 0; a < h; ++a)
      model.dec_w[static_cast<std::size_t>(j) * h + a] = scale[j] * w2[static_cast<std::size_t>(j) * h + a];
    model.dec_b[j] = scale[j] * b2[j] + mean[j];
  }
  return model;
}

std::vector<double> reconstruction_errors(const AeModel& model, const FeatureBag& bag) {
  validate_bag(bag);
  if (bag.dim != model.d)
    throw ArgumentError("reconstruction_errors: bag dim does not match model");
  const std::size_t t = bag.count();
  std::vector<double> errors(t, 0.0);
  std::vector<double> hid(model.hidden);
  for (std::size_t i = 0; i < t; ++i) {
    auto x = bag.row(i);
    for (std::uint32_t a = 0; a < model.hidden; ++a) {
      double acc = model.enc_b[a];
      const double* row = model.enc_w.data() + static_cast<std::size_t>(a) * model.d;
      for (std::uint32_t j = 0; j < model.d; ++j) acc += row[j] * x[j];
      hid[a] = act(acc, model.activation);
    }
    double err = 0.0;
    for (std::uint32_t j = 0; j < model.d; ++j) {
      double acc = model.dec_b[j];
      const double* row = model.dec_w.data() + static_cast<std::size_t>(j) * model.hidden;
      for (std::uint32_t a = 0; a < model.hidden; ++a) acc += row[a] * hid[a];
      double e = acc - x[j];
      err += e * e;
    }
    errors[i] = err;
  }
  return errors;
}

OutlierSplit two_means_split(std::span<const double> errors) {
  const std::size_t n = errors.size();
  OutlierSplit split;
  split.outlier.assign(n, false);
  if (n == 0) return split;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (errors[a] != errors[b]) return errors[a] < errors[b];
    return a < b;
  });

  if (n == 1 || errors[order.front()] == errors[order.back()]) {
    double m = 0.0;
    for (double e : errors) m += e;
    m /= static_cast<double>(n);
    split.inlier_mean = m;
    split.outlier_mean = m;
    return split;
  }

  // In one dimension the optimal 2-means clustering is a sorted split, so
  // scanning every split point with prefix sums finds the exact optimum.
  std::vector<double> psum(n + 1, 0.0), psq(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double v = errors[order[i]];
    psum[i + 1] = psum[i] + v;
    psq[i + 1] = psq[i] + v * v;
  }
  std::size_t best_k = 1;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < n; ++k) {
    double ls = psum[k], lq = psq[k];
    double rs = psum[n] - ls, rq = psq[n] - lq;
    double cost = (lq - ls * ls / static_cast<double>(k)) +
                  (rq - rs * rs / static_cast<double>(n - k));
    if (cost < best_cost) {
      best_cost = cost;
      best_k = k;
    }
  }

  for (std::size_t i = best_k; i < n; ++i) split.outlier[order[i]] = true;
  split.inlier_mean = psum[best_k] / static_cast<double>(best_k);
  split.outlier_mean = (psum[n] - psum[best_k]) / static_cast<double>(n - best_k);
  return split;
}

OutlierRemovalResult remove_outliers(const FeatureBag& bag, const AeTrainConfig& cfg,
                                     std::uint64_t seed) {
  AeModel model = train_autoencoder(bag, cfg, seed);
  std::vector<double> errors = reconstruction_errors(model, bag);
  OutlierSplit split = two_means_split(errors);

  OutlierRemovalResult out;
  out.bag.id = bag.id;
  out.bag.dim = bag.dim;
  const std::size_t t = bag.count();
  for (std::size_t i = 0; i < t; ++i) {
    if (split.outlier[i]) {
      ++out.removed;
      continue;
    }
    auto row = bag.row(i);
    out.bag.data.insert(out.bag.data.end(), row.begin(), row.end());
  }
  if (out.bag.data.empty()) {
    out.bag = bag;
    out.removed = 0;
    out.kept_all_warning = true;
  }
  return out;
}

}  // namespace vrfp
