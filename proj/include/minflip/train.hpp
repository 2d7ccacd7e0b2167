#pragma once

#include <cstdint>

#include "minflip/model.hpp"

namespace minflip {

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;
  // When set, training throws if the model misses 100% train accuracy.
  bool require_clean_perfect = true;
  // Post-training calibration: the output logit is divided by this value.
  // Predictions (and accuracy) are unchanged; probabilities move toward 0.5
  // for temperature > 1. Useful to mirror low-confidence production models.
  double temperature = 1.0;
};

struct TrainResult {
  Model model;
  double accuracy = 0.0;
  int epochs_run = 0;
};

// Plain SGD on binary cross-entropy with a fixed learning rate. Stops early
// once the model classifies every training row correctly; with
// require_clean_perfect it throws a "surrogate not clean-perfect"
// ValidationError when that never happens within the epoch budget.
TrainResult train_surrogate(const Dataset& data, const ModelSpec& spec,
                            const TrainOptions& opts = {});

// Fraction of rows where predict(model, x_i) == y_i.
double train_accuracy(const Model& model, const Dataset& data);

}  // namespace minflip
