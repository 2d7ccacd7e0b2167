#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "minflip/matrix.hpp"

namespace minflip {

enum class Activation { kRelu, kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Architecture of the attacked classifier: dense hidden layers and a single
// sigmoid output unit.
struct ModelSpec {
  int input_dim = 87;
  std::vector<int> hidden_dims = {64, 32, 8};
  Activation hidden_activation = Activation::kRelu;

  void validate() const;  // throws ValidationError
};

struct Layer {
  Matrix weights;             // out x in, row-major
  std::vector<double> bias;   // out
};

// Immutable after construction and safe to share across threads. The last
// layer is the single output unit; hidden layers precede it in order.
struct Model {
  ModelSpec spec;
  std::vector<Layer> layers;

  void validate() const;  // shape chain + finiteness, throws on violation
};

// Zero-initialized model matching the spec (used by the trainer and tests).
Model make_model(ModelSpec spec);

// Labelled tabular data: N x d feature matrix with binary labels.
struct Dataset {
  Matrix features;
  std::vector<int> labels;

  std::size_t size() const { return features.rows(); }
  std::size_t dim() const { return features.cols(); }
  void validate() const;  // finite features, labels in {0,1}, N >= 1
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy with the probability clamped to [1e-12, 1-1e-12] so
// a saturated sigmoid cannot produce ln(0) mid-attack.
double bce(double p, int y);

// Reusable forward/backward buffers for one evaluation stream. Not thread
// safe; give each worker its own instance.
class EvalWorkspace {
 public:
  EvalWorkspace() = default;
  explicit EvalWorkspace(const Model& model) { resize(model); }

  void resize(const Model& model);

  // Unchecked forward pass; records activations for a later backward pass.
  double forward(const Model& model, std::span<const double> x) {
    return sigmoid(forward_logit(model, x));
  }

  // Same pass, stopping at the output-unit logit. p >= 0.5 iff logit >= 0,
  // so branch decisions can skip the sigmoid.
  double forward_logit(const Model& model, std::span<const double> x);

  // Gradient of bce(forward(x), y) with respect to x, reusing the
  // activations captured by the last forward() call on the same input.
  void bce_input_gradient(const Model& model, int y, std::span<double> out);

 private:
  std::vector<std::vector<double>> acts_;  // post-activation per hidden layer
  std::vector<double> down_;               // backward buffers
  std::vector<double> up_;
  double logit_ = 0.0;
};

// Checked single-shot operations (validate inputs, allocate a workspace).
double forward(const Model& model, std::span<const double> x);
int predict(const Model& model, std::span<const double> x);
std::vector<double> input_gradient(const Model& model, std::span<const double> x, int y);

// Central-difference oracle for input_gradient: (L(x+h e_k) - L(x-h e_k)) / 2h
// with L = bce(forward(.), y).
std::vector<double> finite_diff_gradient(const Model& model, std::span<const double> x,
                                         int y, double h = 1e-4);

}  // namespace minflip
