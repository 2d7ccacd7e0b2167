#include "minflip/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "minflip/errors.hpp"
#include "minflip/rng.hpp"

namespace minflip {

namespace {

Model random_init(const ModelSpec& spec, std::uint64_t seed) {
  Model m = make_model(spec);
  std::mt19937_64 engine(splitmix64(seed ^ 0x7261696E65727375ull));
  for (Layer& layer : m.layers) {
    // He-style scale keeps relu stacks trainable; harmless for tanh.
    const double scale = std::sqrt(2.0 / static_cast<double>(layer.weights.cols()));
    std::normal_distribution<double> dist(0.0, scale);
    for (std::size_t i = 0; i < layer.weights.rows(); ++i) {
      for (std::size_t j = 0; j < layer.weights.cols(); ++j) {
        layer.weights(i, j) = dist(engine);
      }
    }
  }
  return m;
}

// Per-sample forward keeping every activation, then backprop into weight and
// bias gradients applied in place (SGD).
class SgdTrainer {
 public:
  explicit SgdTrainer(Model& model) : model_(model) {
    acts_.resize(model.layers.size());
    deltas_.resize(model.layers.size());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
      acts_[l].assign(model.layers[l].weights.rows(), 0.0);
      deltas_[l].assign(model.layers[l].weights.rows(), 0.0);
    }
  }

  void step(std::span<const double> x, int y, double lr) {
    const std::size_t n_layers = model_.layers.size();
    std::span<const double> a = x;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
      const Layer& layer = model_.layers[l];
      for (std::size_t i = 0; i < layer.weights.rows(); ++i) {
        double z = layer.bias[i];
        const double* wr = layer.weights.data() + i * layer.weights.cols();
        for (std::size_t j = 0; j < layer.weights.cols(); ++j) z += wr[j] * a[j];
        acts_[l][i] = model_.spec.hidden_activation == Activation::kRelu
                          ? (z > 0.0 ? z : 0.0)
                          : std::tanh(z);
      }
      a = acts_[l];
    }
    const Layer& outl = model_.layers.back();
    double z = outl.bias[0];
    for (std::size_t j = 0; j < outl.weights.cols(); ++j) z += outl.weights.data()[j] * a[j];
    const double p = sigmoid(z);

    // Backward.
    deltas_[n_layers - 1][0] = p - static_cast<double>(y);
    for (std::size_t l = n_layers - 1; l-- > 0;) {
      const Layer& upper = model_.layers[l + 1];
      for (std::size_t i = 0; i < deltas_[l].size(); ++i) {
        double s = 0.0;
        for (std::size_t r = 0; r < deltas_[l + 1].size(); ++r) {
          s += upper.weights(r, i) * deltas_[l + 1][r];
        }
        if (model_.spec.hidden_activation == Activation::kRelu) {
          deltas_[l][i] = acts_[l][i] > 0.0 ? s : 0.0;
        } else {
          const double av = acts_[l][i];
          deltas_[l][i] = s * (1.0 - av * av);
        }
      }
    }

    // SGD update, layer by layer.
    std::span<const double> inputs = x;
    for (std::size_t l = 0; l < n_layers; ++l) {
      Layer& layer = model_.layers[l];
      for (std::size_t i = 0; i < layer.weights.rows(); ++i) {
        const double d = deltas_[l][i];
        if (d != 0.0) {
          double* wr = layer.weights.data() + i * layer.weights.cols();
          for (std::size_t j = 0; j < layer.weights.cols(); ++j) {
            wr[j] -= lr * d * inputs[j];
          }
          layer.bias[i] -= lr * d;
        }
      }
      if (l + 1 < n_layers) inputs = acts_[l];
    }
  }

 private:
  Model& model_;
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> deltas_;
};

}  // namespace

double train_accuracy(const Model& model, const Dataset& data) {
  EvalWorkspace ws(model);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int yhat = ws.forward(model, data.features.row(i)) >= 0.5 ? 1 : 0;
    if (yhat == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainResult train_surrogate(const Dataset& data, const ModelSpec& spec,
                            const TrainOptions& opts) {
  data.validate();
  spec.validate();
  if (static_cast<std::size_t>(spec.input_dim) != data.dim()) {
    throw StructuralError("spec input_dim does not match dataset feature count");
  }
  const bool has_zero = std::find(data.labels.begin(), data.labels.end(), 0) != data.labels.end();
  const bool has_one = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
  if (!has_zero || !has_one) {
    throw ValidationError("labels contain one class; need both 0 and 1 to train");
  }
  if (opts.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(opts.learning_rate > 0.0)) throw ValidationError("learning rate must be > 0");
  if (!(opts.temperature > 0.0)) throw ValidationError("temperature must be > 0");

  // SGD is scale-sensitive; train on RMS-normalized features and fold the
  // scale into the (linear) first layer afterwards. z(x) is unchanged up to
  // rounding, so the returned model still consumes raw features.
  double sq = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (double v : data.features.row(i)) sq += v * v;
  }
  double scale = std::sqrt(sq / static_cast<double>(data.size() * data.dim()));
  if (!(scale > 0.0)) scale = 1.0;

  Dataset scaled;
  scaled.features = data.features;
  scaled.labels = data.labels;
  for (std::size_t i = 0; i < scaled.size(); ++i) {
    for (double& v : scaled.features.row(i)) v /= scale;
  }

  TrainResult result;
  result.model = random_init(spec, opts.seed);
  SgdTrainer trainer(result.model);

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_engine(splitmix64(opts.seed ^ 0x73687566666C65ull));

  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_engine);
    for (std::size_t i : order) {
      trainer.step(scaled.features.row(i), scaled.labels[i], opts.learning_rate);
    }
    result.epochs_run = epoch;
    result.accuracy = train_accuracy(result.model, scaled);
    if (result.accuracy == 1.0) break;
  }

  Layer& first = result.model.layers.front();
  for (std::size_t i = 0; i < first.weights.rows(); ++i) {
    for (std::size_t j = 0; j < first.weights.cols(); ++j) first.weights(i, j) /= scale;
  }
  if (opts.temperature != 1.0) {
    Layer& out = result.model.layers.back();
    for (std::size_t j = 0; j < out.weights.cols(); ++j) {
      out.weights(0, j) /= opts.temperature;
    }
    out.bias[0] /= opts.temperature;
  }
  // Folding divides by the same scale the features were divided by, so the
  // raw-feature accuracy can only move on razor-thin margins; re-measure it.
  result.accuracy = train_accuracy(result.model, data);

  if (opts.require_clean_perfect && result.accuracy < 1.0) {
    throw ValidationError("surrogate not clean-perfect: train accuracy " +
                          std::to_string(result.accuracy) + " after " +
                          std::to_string(result.epochs_run) + " epochs");
  }
  return result;
}

}  // namespace minflip
