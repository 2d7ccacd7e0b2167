#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "minflip/attack.hpp"
#include "minflip/campaign.hpp"
#include "minflip/errors.hpp"
#include "minflip/io.hpp"
#include "minflip/metrics.hpp"
#include "minflip/model.hpp"
#include "minflip/train.hpp"

namespace py = pybind11;
using namespace minflip;

namespace {

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw ValidationError("expected a 1-d array");
  return {a.data(), a.data() + a.shape(0)};
}

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ValidationError("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data());
  return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
  py::array_t<double> a({m.rows(), m.cols()});
  std::copy(m.data(), m.data() + m.rows() * m.cols(), a.mutable_data());
  return a;
}

py::array_t<double> from_vector(const std::vector<double>& v) {
  // The (ssize_t, ptr) constructor of this pybind11 release builds the array
  // with empty strides, and a braced {n} still picks it; spell out the shape
  // container so the stride-computing overload is chosen.
  return py::array_t<double>(py::array::ShapeContainer{static_cast<py::ssize_t>(v.size())},
                             v.data());
}

Dataset to_dataset(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                   const std::vector<int>& y) {
  Dataset d;
  d.features = to_matrix(x);
  d.labels = y;
  d.validate();
  return d;
}

}  // namespace

PYBIND11_MODULE(_minflip, m) {
  m.doc() = "White-box L1-minimal adversarial attack pipeline for dense binary classifiers";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::enum_<Activation>(m, "Activation")
      .value("relu", Activation::kRelu)
      .value("tanh", Activation::kTanh);

  py::class_<ModelSpec>(m, "ModelSpec")
      .def(py::init<>())
      .def_readwrite("input_dim", &ModelSpec::input_dim)
      .def_readwrite("hidden_dims", &ModelSpec::hidden_dims)
      .def_readwrite("hidden_activation", &ModelSpec::hidden_activation);

  py::class_<Model>(m, "Model")
      .def_property_readonly("spec", [](const Model& m_) { return m_.spec; })
      .def("__repr__", [](const Model& m_) {
        std::string r = "Model(input_dim=" + std::to_string(m_.spec.input_dim) + ", hidden=[";
        for (std::size_t i = 0; i < m_.spec.hidden_dims.size(); ++i) {
          if (i) r += ",";
          r += std::to_string(m_.spec.hidden_dims[i]);
        }
        return r + "], " + to_string(m_.spec.hidden_activation) + ")";
      });

  py::class_<GdConfig>(m, "GdConfig")
      .def(py::init<>())
      .def_readwrite("steps", &GdConfig::steps)
      .def_readwrite("followup_steps", &GdConfig::followup_steps)
      .def_readwrite("followup_step_size", &GdConfig::followup_step_size)
      .def_readwrite("step_size", &GdConfig::step_size);

  py::class_<CampaignConfig>(m, "CampaignConfig")
      .def(py::init<>())
      .def_readwrite("rounds", &CampaignConfig::rounds)
      .def_readwrite("runs_per_round", &CampaignConfig::runs_per_round)
      .def_readwrite("gd", &CampaignConfig::gd)
      .def_readwrite("base_seed", &CampaignConfig::base_seed)
      .def_readwrite("refresh_probability", &CampaignConfig::refresh_probability)
      .def_readwrite("threads", &CampaignConfig::threads);

  py::class_<AttackCandidate>(m, "AttackCandidate")
      .def_property_readonly("delta", [](const AttackCandidate& c) { return from_vector(c.delta); })
      .def_readonly("flipped", &AttackCandidate::flipped)
      .def_readonly("l1", &AttackCandidate::l1);

  py::class_<MetricsRecord>(m, "MetricsRecord")
      .def_readonly("round", &MetricsRecord::round)
      .def_readonly("fooling_ratio", &MetricsRecord::fooling_ratio)
      .def_readonly("mean_l1_fooled", &MetricsRecord::mean_l1_fooled)
      .def_readonly("score", &MetricsRecord::score)
      .def_readonly("n_fooled", &MetricsRecord::n_fooled)
      .def("__repr__", [](const MetricsRecord& r) {
        return "MetricsRecord(round=" + std::to_string(r.round) + ", " +
               summary_line(r.fooling_ratio, r.mean_l1_fooled, r.score) + ")";
      });

  m.def("forward", [](const Model& model, py::array_t<double> x) {
    return forward(model, to_vector(x));
  }, py::arg("model"), py::arg("x"));
  m.def("predict", [](const Model& model, py::array_t<double> x) {
    return predict(model, to_vector(x));
  }, py::arg("model"), py::arg("x"));
  m.def("bce", &bce, py::arg("p"), py::arg("y"));
  m.def("input_gradient", [](const Model& model, py::array_t<double> x, int y) {
    return from_vector(input_gradient(model, to_vector(x), y));
  }, py::arg("model"), py::arg("x"), py::arg("y"));
  m.def("finite_diff_gradient", [](const Model& model, py::array_t<double> x, int y, double h) {
    return from_vector(finite_diff_gradient(model, to_vector(x), y, h));
  }, py::arg("model"), py::arg("x"), py::arg("y"), py::arg("h") = 1e-4);

  m.def("train_surrogate",
        [](py::array_t<double> x, const std::vector<int>& y, const ModelSpec& spec,
           int epochs, double lr, std::uint64_t seed, bool require_clean_perfect,
           double temperature) {
          TrainOptions opts;
          opts.epochs = epochs;
          opts.learning_rate = lr;
          opts.seed = seed;
          opts.require_clean_perfect = require_clean_perfect;
          opts.temperature = temperature;
          TrainResult r = train_surrogate(to_dataset(x, y), spec, opts);
          return py::make_tuple(std::move(r.model), r.accuracy, r.epochs_run);
        },
        py::arg("x"), py::arg("y"), py::arg("spec"), py::arg("epochs") = 200,
        py::arg("lr") = 0.1, py::arg("seed") = 0, py::arg("require_clean_perfect") = true,
        py::arg("temperature") = 1.0, "Returns (model, train_accuracy, epochs_run).");

  m.def("generate_synthetic", [](std::size_t n, std::size_t d, double margin, double noise,
                                 std::uint64_t seed) {
    Dataset data = generate_synthetic(n, d, margin, noise, seed);
    return py::make_tuple(from_matrix(data.features), data.labels);
  }, py::arg("n"), py::arg("d") = 87, py::arg("margin") = 1.0, py::arg("noise") = 0.3,
     py::arg("seed") = 0, "Returns (features, labels).");

  m.def("piecewise_loss", [](const Model& model, py::array_t<double> x,
                             py::array_t<double> delta, int y_ref) {
    PiecewiseLoss out = piecewise_loss(model, to_vector(x), to_vector(delta), y_ref);
    return py::make_tuple(out.value, out.branch == LossBranch::kFool ? "fool" : "reduce");
  }, py::arg("model"), py::arg("x"), py::arg("delta"), py::arg("y_ref"));

  m.def("loss_subgradient", [](const Model& model, py::array_t<double> x,
                               py::array_t<double> delta, int y_ref) {
    return from_vector(loss_subgradient(model, to_vector(x), to_vector(delta), y_ref));
  }, py::arg("model"), py::arg("x"), py::arg("delta"), py::arg("y_ref"));

  m.def("gd_attack", [](const Model& model, py::array_t<double> x, int y_ref,
                        py::array_t<double> delta0, const GdConfig& cfg) {
    return gd_attack(model, to_vector(x), y_ref, to_vector(delta0), cfg);
  }, py::arg("model"), py::arg("x"), py::arg("y_ref"), py::arg("delta0"), py::arg("cfg"));

  m.def("follow_up", [](const Model& model, py::array_t<double> x, int y_ref,
                        py::array_t<double> delta, const GdConfig& cfg) {
    return from_vector(follow_up(model, to_vector(x), y_ref, to_vector(delta), cfg));
  }, py::arg("model"), py::arg("x"), py::arg("y_ref"), py::arg("delta"), py::arg("cfg"));

  m.def("core_baseline", [](const Model& model, py::array_t<double> x,
                            const std::vector<int>& y, std::uint64_t seed, int threads) {
    return core_baseline(model, to_dataset(x, y), seed, threads);
  }, py::arg("model"), py::arg("x"), py::arg("y"), py::arg("seed") = 0,
     py::arg("threads") = 0, py::call_guard<py::gil_scoped_release>());

  m.def("core_step_size", &core_step_size, py::arg("step_index"));

  m.def("step_bounds", [](int n) {
    StepBounds b = step_bounds(n);
    return py::make_tuple(b.min, b.max);
  }, py::arg("n"), "Returns (min_n, max_n) of the round-n step-size window.");

  m.def("run_campaign", [](const Model& model, py::array_t<double> x,
                           const std::vector<int>& y, const CampaignConfig& cfg) {
    Dataset data = to_dataset(x, y);
    CampaignResult result;
    {
      py::gil_scoped_release release;
      result = run_campaign(model, data, cfg);
    }
    return py::make_tuple(from_matrix(result.x_adv), result.history);
  }, py::arg("model"), py::arg("x"), py::arg("y"), py::arg("cfg"),
     "Returns (x_adv, metrics_history).");

  m.def("fooling_ratio", [](const Model& model, py::array_t<double> x,
                            py::array_t<double> x_adv, const std::vector<int>& y) {
    return fooling_ratio(model, to_matrix(x), to_matrix(x_adv), y);
  }, py::arg("model"), py::arg("x"), py::arg("x_adv"), py::arg("y"));

  m.def("evaluate", [](const Model& model, py::array_t<double> x,
                       py::array_t<double> x_adv, const std::vector<int>& y) {
    return compute_metrics(0, model, to_matrix(x), to_matrix(x_adv), y);
  }, py::arg("model"), py::arg("x"), py::arg("x_adv"), py::arg("y"),
     "Recomputes FR/D/S for an adversarial matrix.");

  m.def("score", &score, py::arg("fr"), py::arg("d"));

  m.def("load_model", [](const std::string& path) { return load_model(path); }, py::arg("path"));
  m.def("save_model", [](const Model& model, const std::string& path) {
    save_model(model, path);
  }, py::arg("model"), py::arg("path"));
  m.def("load_dataset", [](const std::string& path) {
    Dataset d = load_dataset(path);
    return py::make_tuple(from_matrix(d.features), d.labels);
  }, py::arg("path"), "Returns (features, labels).");
  m.def("save_dataset", [](py::array_t<double> x, const std::vector<int>& y,
                           const std::string& path) {
    save_dataset(to_dataset(x, y), path);
  }, py::arg("x"), py::arg("y"), py::arg("path"));
  m.def("save_adversarial", [](py::array_t<double> x_adv, const std::string& path) {
    save_adversarial(to_matrix(x_adv), path);
  }, py::arg("x_adv"), py::arg("path"));
  m.def("load_adversarial", [](const std::string& path) {
    return from_matrix(load_matrix_csv(path));
  }, py::arg("path"));
}
