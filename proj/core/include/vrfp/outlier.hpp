#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vrfp/corpus.hpp"

namespace vrfp {

enum class Activation : std::uint8_t { Tanh, Linear };

// Single-hidden-layer autoencoder. The input standardization learned during
// training is folded into the weights, so encode/decode work directly on raw
// feature vectors.
struct AeModel {
  std::uint32_t d = 0;
  std::uint32_t hidden = 0;
  Activation activation = Activation::Tanh;
  std::vector<double> enc_w;  // hidden x d
  std::vector<double> enc_b;  // hidden
  std::vector<double> dec_w;  // d x hidden
  std::vector<double> dec_b;  // d
};

struct AeTrainConfig {
  std::uint32_t hidden = 0;  // 0 means max(1, d / 4)
  std::uint32_t epochs = 50;
  double lr = 0.01;
  std::uint32_t batch = 32;
  Activation activation = Activation::Tanh;
};

struct AeTrainLog {
  std::vector<double> epoch_loss;  // summed reconstruction error, raw space
};

// Mini-batch SGD with seeded shuffling and Glorot-uniform init. Deterministic
// for a fixed seed. Throws DataError if the loss stops being finite.
AeModel train_autoencoder(const FeatureBag& bag, const AeTrainConfig& cfg, std::uint64_t seed,
                          AeTrainLog* log = nullptr);

// Squared reconstruction error of each row under the model.
std::vector<double> reconstruction_errors(const AeModel& model, const FeatureBag& bag);

struct OutlierSplit {
  std::vector<bool> outlier;  // per row, true = high-error cluster
  double inlier_mean = 0.0;
  double outlier_mean = 0.0;  // >= inlier_mean
};

// Exact 1-D 2-means on the errors: every sorted split point is evaluated and
// the within-cluster sum of squares minimized, so this is the true optimum,
// not a local one. All-equal input puts everything in the inlier cluster.
OutlierSplit two_means_split(std::span<const double> errors);

struct OutlierRemovalResult {
  FeatureBag bag;               // inlier rows, original order
  std::size_t removed = 0;
  bool kept_all_warning = false;  // split would have removed every row
};

// Train on the bag, split reconstruction errors, drop the high-error
// cluster. Never returns an empty bag: if the split marks every row an
// outlier the original bag comes back with a warning flag.
OutlierRemovalResult remove_outliers(const FeatureBag& bag, const AeTrainConfig& cfg,
                                     std::uint64_t seed);

}  // namespace vrfp
