#include "minflip/model.hpp"

#include <cmath>
#include <stdexcept>

#include "minflip/errors.hpp"

namespace minflip {

std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw ValidationError("unknown hidden_activation '" + name + "' (expected relu or tanh)");
}

void ModelSpec::validate() const {
  if (input_dim < 1) throw ValidationError("input_dim must be >= 1");
  for (int h : hidden_dims) {
    if (h < 1) throw ValidationError("hidden dims must be >= 1");
  }
}

void Model::validate() const {
  spec.validate();
  if (layers.size() != spec.hidden_dims.size() + 1) {
    throw StructuralError("layer count does not match spec");
  }
  std::size_t in = static_cast<std::size_t>(spec.input_dim);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    std::size_t out = l < spec.hidden_dims.size()
                          ? static_cast<std::size_t>(spec.hidden_dims[l])
                          : 1;
    if (layer.weights.rows() != out || layer.weights.cols() != in) {
      throw StructuralError("layer " + std::to_string(l) + " has shape " +
                            std::to_string(layer.weights.rows()) + "x" +
                            std::to_string(layer.weights.cols()) + ", expected " +
                            std::to_string(out) + "x" + std::to_string(in));
    }
    if (layer.bias.size() != out) {
      throw StructuralError("layer " + std::to_string(l) + " bias size mismatch");
    }
    for (std::size_t i = 0; i < out; ++i) {
      if (!std::isfinite(layer.bias[i])) throw ValidationError("non-finite bias entry");
      for (std::size_t j = 0; j < in; ++j) {
        if (!std::isfinite(layer.weights(i, j))) {
          throw ValidationError("non-finite weight entry");
        }
      }
    }
    in = out;
  }
}

Model make_model(ModelSpec spec) {
  spec.validate();
  Model m;
  m.spec = std::move(spec);
  std::size_t in = static_cast<std::size_t>(m.spec.input_dim);
  for (std::size_t l = 0; l <= m.spec.hidden_dims.size(); ++l) {
    std::size_t out = l < m.spec.hidden_dims.size()
                          ? static_cast<std::size_t>(m.spec.hidden_dims[l])
                          : 1;
    m.layers.push_back(Layer{Matrix(out, in), std::vector<double>(out, 0.0)});
    in = out;
  }
  return m;
}

void Dataset::validate() const {
  if (features.rows() < 1) throw ValidationError("dataset must contain at least one row");
  if (labels.size() != features.rows()) {
    throw StructuralError("label count does not match row count");
  }
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t j = 0; j < features.cols(); ++j) {
      if (!std::isfinite(features(i, j))) {
        throw ValidationError("non-finite feature at row " + std::to_string(i + 1) +
                              ", column " + std::to_string(j));
      }
    }
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError("label out of {0,1} at row " + std::to_string(i + 1));
    }
  }
}

double bce(double p, int y) {
  constexpr double kEps = 1e-12;
  if (p < kEps) p = kEps;
  if (p > 1.0 - kEps) p = 1.0 - kEps;
  return y == 1 ? -std::log(p) : -std::log1p(-p);
}

void EvalWorkspace::resize(const Model& model) {
  acts_.resize(model.spec.hidden_dims.size());
  std::size_t widest = 1;
  for (std::size_t l = 0; l < acts_.size(); ++l) {
    acts_[l].assign(static_cast<std::size_t>(model.spec.hidden_dims[l]), 0.0);
    widest = std::max(widest, acts_[l].size());
  }
  down_.assign(widest, 0.0);
  up_.assign(widest, 0.0);
}

namespace {

#if defined(__GNUC__) && defined(__SSE2__)

// Four-lane vector accumulators: lane-wise sums are IEEE-exact and the
// horizontal combine order is fixed, so results are deterministic without
// -ffast-math. Loads go through memcpy, so alignment never matters.
typedef double vd4 __attribute__((vector_size(32)));

inline vd4 load4(const double* p) {
  vd4 v;
  __builtin_memcpy(&v, p, sizeof(v));
  return v;
}

inline double dot(const double* __restrict__ w, const double* __restrict__ x,
                  std::size_t n) {
  vd4 acc0 = {0.0, 0.0, 0.0, 0.0};
  vd4 acc1 = {0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    acc0 += load4(w + j) * load4(x + j);
    acc1 += load4(w + j + 4) * load4(x + j + 4);
  }
  if (j + 4 <= n) {
    acc0 += load4(w + j) * load4(x + j);
    j += 4;
  }
  double tail = 0.0;
  for (; j < n; ++j) tail += w[j] * x[j];
  const vd4 acc = acc0 + acc1;
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

#else

inline double dot(const double* __restrict__ w, const double* __restrict__ x,
                  std::size_t n) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    a0 += w[j] * x[j];
    a1 += w[j + 1] * x[j + 1];
    a2 += w[j + 2] * x[j + 2];
    a3 += w[j + 3] * x[j + 3];
  }
  for (; j < n; ++j) a0 += w[j] * x[j];
  return (a0 + a1) + (a2 + a3);
}

#endif

}  // namespace

double EvalWorkspace::forward_logit(const Model& model, std::span<const double> x) {
  std::span<const double> a = x;
  const Activation act = model.spec.hidden_activation;
  for (std::size_t l = 0; l < acts_.size(); ++l) {
    const Layer& layer = model.layers[l];
    const std::size_t rows = layer.weights.rows();
    const std::size_t cols = layer.weights.cols();
    const double* w = layer.weights.data();
    double* __restrict__ z = acts_[l].data();
    for (std::size_t i = 0; i < rows; ++i) {
      const double v = layer.bias[i] + dot(w + i * cols, a.data(), cols);
      z[i] = act == Activation::kRelu ? (v > 0.0 ? v : 0.0) : std::tanh(v);
    }
    a = acts_[l];
  }
  const Layer& outl = model.layers.back();
  logit_ = outl.bias[0] + dot(outl.weights.data(), a.data(), a.size());
  return logit_;
}

void EvalWorkspace::bce_input_gradient(const Model& model, int y, std::span<double> out) {
  // Output-unit error term; d(bce)/dz at a sigmoid output is p - y.
  const double err = sigmoid(logit_) - static_cast<double>(y);
  const std::size_t n_hidden = acts_.size();

  // Seed the backward sweep with err * W_out (gradient at the last hidden
  // activation, or directly at the input when there are no hidden layers).
  {
    const Layer& outl = model.layers.back();
    const std::size_t cols = outl.weights.cols();
    double* __restrict__ dst = n_hidden == 0 ? out.data() : down_.data();
    const double* __restrict__ wr = outl.weights.data();
    for (std::size_t j = 0; j < cols; ++j) dst[j] = err * wr[j];
    if (n_hidden == 0) return;
  }

  for (std::size_t l = n_hidden; l-- > 0;) {
    const Layer& layer = model.layers[l];
    const std::size_t rows = layer.weights.rows();
    const std::size_t cols = layer.weights.cols();
    double* __restrict__ d = down_.data();

    // Multiply by the activation derivative at this layer's pre-activation.
    const double* __restrict__ a = acts_[l].data();
    if (model.spec.hidden_activation == Activation::kRelu) {
      for (std::size_t i = 0; i < rows; ++i) {
        if (a[i] <= 0.0) d[i] = 0.0;
      }
    } else {
      for (std::size_t i = 0; i < rows; ++i) d[i] *= 1.0 - a[i] * a[i];
    }

    // Propagate: g = W^T d, accumulated row-wise to keep the weight reads
    // sequential.
    double* __restrict__ g = l == 0 ? out.data() : up_.data();
    for (std::size_t j = 0; j < cols; ++j) g[j] = 0.0;
    const double* w = layer.weights.data();
    for (std::size_t i = 0; i < rows; ++i) {
      const double di = d[i];
      if (di == 0.0) continue;
      const double* __restrict__ wr = w + i * cols;
      for (std::size_t j = 0; j < cols; ++j) g[j] += di * wr[j];
    }
    if (l != 0) std::swap(down_, up_);
  }
}

namespace {

void check_input(const Model& model, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(model.spec.input_dim)) {
    throw StructuralError("input length " + std::to_string(x.size()) +
                          " does not match input_dim " +
                          std::to_string(model.spec.input_dim));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw ValidationError("non-finite input value");
  }
}

}  // namespace

double forward(const Model& model, std::span<const double> x) {
  check_input(model, x);
  EvalWorkspace ws(model);
  return ws.forward(model, x);
}

int predict(const Model& model, std::span<const double> x) {
  return forward(model, x) >= 0.5 ? 1 : 0;
}

std::vector<double> input_gradient(const Model& model, std::span<const double> x, int y) {
  check_input(model, x);
  EvalWorkspace ws(model);
  ws.forward(model, x);
  std::vector<double> g(x.size());
  ws.bce_input_gradient(model, y, g);
  return g;
}

std::vector<double> finite_diff_gradient(const Model& model, std::span<const double> x,
                                         int y, double h) {
  check_input(model, x);
  EvalWorkspace ws(model);
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < probe.size(); ++k) {
    const double saved = probe[k];
    probe[k] = saved + h;
    const double lp = bce(ws.forward(model, probe), y);
    probe[k] = saved - h;
    const double lm = bce(ws.forward(model, probe), y);
    probe[k] = saved;
    g[k] = (lp - lm) / (2.0 * h);
  }
  return g;
}

}  // namespace minflip
