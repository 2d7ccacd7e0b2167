#include "minflip/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "minflip/errors.hpp"
#include "minflip/rng.hpp"

namespace minflip {

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& cell, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ValidationError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                          ": cannot parse '" + cell + "' as a number");
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

namespace {

std::string feature_header(std::size_t d, bool with_label) {
  std::string h;
  for (std::size_t j = 0; j < d; ++j) {
    if (j) h += ',';
    h += "f" + std::to_string(j);
  }
  if (with_label) h += ",label";
  return h;
}

std::string read_line_or_throw(std::ifstream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("'" + path.string() + "' is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

std::size_t parse_feature_header(const std::string& header,
                                 const std::filesystem::path& path, bool expect_label) {
  const std::vector<std::string> cells = split_csv_line(header);
  const std::size_t d = expect_label ? cells.size() - 1 : cells.size();
  if (cells.empty() || d < 1 || header != feature_header(d, expect_label)) {
    throw ValidationError("'" + path.string() + "': bad header, expected f0,...,f{d-1}" +
                          (expect_label ? ",label" : ""));
  }
  return d;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset '" + path.string() + "'");
  const std::size_t d = parse_feature_header(read_line_or_throw(in, path), path, true);

  Dataset data;
  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != d + 1) {
      throw StructuralError("row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(d + 1));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double v = parse_double(cells[j], row, j);
      if (!std::isfinite(v)) {
        throw ValidationError("row " + std::to_string(row) + ", column " +
                              std::to_string(j) + ": non-finite value");
      }
      values.push_back(v);
    }
    const double label = parse_double(cells[d], row, d);
    if (label != 0.0 && label != 1.0) {
      throw ValidationError("row " + std::to_string(row) + ": label " + cells[d] +
                            " is not in {0,1}");
    }
    data.labels.push_back(label == 1.0 ? 1 : 0);
  }
  if (row == 0) throw ValidationError("'" + path.string() + "' contains no data rows");
  data.features = Matrix(row, d);
  std::copy(values.begin(), values.end(), data.features.data());
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << feature_header(data.dim(), true) << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < data.dim(); ++j) {
      if (j) out << ',';
      out << format_double(data.features(i, j));
    }
    out << ',' << data.labels[i] << '\n';
  }
  if (!out.flush()) throw ValidationError("failed writing '" + path.string() + "'");
}

Matrix load_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open matrix file '" + path.string() + "'");
  const std::size_t d = parse_feature_header(read_line_or_throw(in, path), path, false);

  std::vector<double> values;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != d) {
      throw StructuralError("row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) values.push_back(parse_double(cells[j], row, j));
  }
  if (row == 0) throw ValidationError("'" + path.string() + "' contains no data rows");
  Matrix m(row, d);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void save_adversarial(const Matrix& x_adv, const std::filesystem::path& path) {
  if (x_adv.empty()) throw ValidationError("refusing to write an empty matrix");
  for (std::size_t i = 0; i < x_adv.rows(); ++i) {
    for (std::size_t j = 0; j < x_adv.cols(); ++j) {
      if (!std::isfinite(x_adv(i, j))) {
        throw ValidationError("non-finite value at row " + std::to_string(i + 1) +
                              ", column " + std::to_string(j));
      }
    }
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << feature_header(x_adv.cols(), false) << '\n';
  for (std::size_t i = 0; i < x_adv.rows(); ++i) {
    for (std::size_t j = 0; j < x_adv.cols(); ++j) {
      if (j) out << ',';
      out << format_double(x_adv(i, j));
    }
    out << '\n';
  }
  if (!out.flush()) throw ValidationError("failed writing '" + path.string() + "'");
}

Dataset generate_synthetic(std::size_t n, std::size_t d, double margin, double noise,
                           std::uint64_t seed) {
  if (n < 2) throw ValidationError("need at least 2 rows");
  if (d < 1) throw ValidationError("need at least 1 feature");
  if (!(margin > 0.0)) throw ValidationError("margin must be > 0");
  if (!(noise >= 0.0)) throw ValidationError("noise must be >= 0");

  std::mt19937_64 engine(splitmix64(seed ^ 0x73796E7468ull));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> direction(d);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& u : direction) {
      u = normal(engine);
      norm2 += u * u;
    }
  } while (norm2 == 0.0);
  const double inv_norm = 1.0 / std::sqrt(norm2);
  for (double& u : direction) u *= inv_norm;

  Dataset data;
  data.features = Matrix(n, d);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const double side = label == 1 ? margin : -margin;
    data.labels[i] = label;
    auto row = data.features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = side * direction[j] + (noise > 0.0 ? noise * normal(engine) : 0.0);
    }
  }
  return data;
}

namespace {

nlohmann::json layer_to_json(const Layer& layer) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < layer.weights.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < layer.weights.cols(); ++j) row.push_back(layer.weights(i, j));
    rows.push_back(std::move(row));
  }
  return nlohmann::json{{"weights", std::move(rows)}, {"bias", layer.bias}};
}

Layer layer_from_json(const nlohmann::json& j) {
  const auto& rows = j.at("weights");
  if (!rows.is_array() || rows.empty()) throw ValidationError("layer weights must be a non-empty array");
  const std::size_t out = rows.size();
  const std::size_t in = rows[0].size();
  Layer layer{Matrix(out, in), j.at("bias").get<std::vector<double>>()};
  for (std::size_t i = 0; i < out; ++i) {
    if (rows[i].size() != in) throw StructuralError("ragged weight matrix in model file");
    for (std::size_t c = 0; c < in; ++c) layer.weights(i, c) = rows[i][c].get<double>();
  }
  return layer;
}

nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
  return j;
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << '\n';
  if (!out.flush()) throw ValidationError("failed writing '" + path.string() + "'");
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  model.validate();
  nlohmann::json layers = nlohmann::json::array();
  for (const Layer& layer : model.layers) layers.push_back(layer_to_json(layer));
  const nlohmann::json j{{"input_dim", model.spec.input_dim},
                         {"hidden_dims", model.spec.hidden_dims},
                         {"hidden_activation", to_string(model.spec.hidden_activation)},
                         {"layers", std::move(layers)}};
  write_json_file(j, path);
}

Model load_model(const std::filesystem::path& path) {
  const nlohmann::json j = parse_json_file(path);
  Model m;
  try {
    m.spec.input_dim = j.at("input_dim").get<int>();
    m.spec.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
    m.spec.hidden_activation = activation_from_string(j.at("hidden_activation").get<std::string>());
    for (const auto& layer : j.at("layers")) m.layers.push_back(layer_from_json(layer));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
  m.validate();
  return m;
}

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw StructuralError("checkpoint matrix row mismatch");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw StructuralError("checkpoint matrix column mismatch");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

}  // namespace

void save_checkpoint(const CampaignState& state, const CampaignConfig& cfg,
                     const std::filesystem::path& path) {
  nlohmann::json best_l1 = nlohmann::json::array();
  for (double v : state.best_l1) {
    if (std::isfinite(v)) {
      best_l1.push_back(v);
    } else {
      best_l1.push_back(nullptr);  // +inf sentinel: no flip yet
    }
  }
  nlohmann::json flipped = nlohmann::json::array();
  for (char f : state.best_flipped) flipped.push_back(f != 0);
  nlohmann::json carried = nlohmann::json::array();
  for (const Matrix& m : state.carried) carried.push_back(matrix_to_json(m));
  nlohmann::json history = nlohmann::json::array();
  for (const MetricsRecord& rec : state.history) {
    history.push_back(nlohmann::json{{"round", rec.round},
                                     {"fooling_ratio", rec.fooling_ratio},
                                     {"mean_l1_fooled", std::isnan(rec.mean_l1_fooled)
                                                            ? nlohmann::json(nullptr)
                                                            : nlohmann::json(rec.mean_l1_fooled)},
                                     {"score", rec.score},
                                     {"n_fooled", rec.n_fooled}});
  }
  const nlohmann::json j{{"format", "minflip-checkpoint-v1"},
                         {"base_seed", cfg.base_seed},
                         {"runs_per_round", cfg.runs_per_round},
                         {"round", state.round},
                         {"x_best", matrix_to_json(state.x_best)},
                         {"best_l1", std::move(best_l1)},
                         {"best_flipped", std::move(flipped)},
                         {"carried", std::move(carried)},
                         {"history", std::move(history)}};
  write_json_file(j, path);
}

CampaignState load_checkpoint(const std::filesystem::path& path, const Dataset& data,
                              const CampaignConfig& cfg) {
  const nlohmann::json j = parse_json_file(path);
  CampaignState state;
  try {
    if (j.at("format").get<std::string>() != "minflip-checkpoint-v1") {
      throw ValidationError("'" + path.string() + "' is not a checkpoint file");
    }
    if (j.at("base_seed").get<std::uint64_t>() != cfg.base_seed) {
      throw ValidationError("checkpoint base_seed does not match --seed; refusing to resume");
    }
    if (j.at("runs_per_round").get<int>() != cfg.runs_per_round) {
      throw ValidationError("checkpoint runs_per_round does not match --runs; refusing to resume");
    }
    state.round = j.at("round").get<int>();
    state.x_best = matrix_from_json(j.at("x_best"), data.size(), data.dim());
    for (const auto& v : j.at("best_l1")) {
      state.best_l1.push_back(v.is_null() ? std::numeric_limits<double>::infinity()
                                          : v.get<double>());
    }
    for (const auto& f : j.at("best_flipped")) state.best_flipped.push_back(f.get<bool>() ? 1 : 0);
    for (const auto& m : j.at("carried")) {
      state.carried.push_back(matrix_from_json(m, data.size(), data.dim()));
    }
    for (const auto& rec : j.at("history")) {
      MetricsRecord r;
      r.round = rec.at("round").get<int>();
      r.fooling_ratio = rec.at("fooling_ratio").get<double>();
      r.mean_l1_fooled = rec.at("mean_l1_fooled").is_null()
                             ? std::numeric_limits<double>::quiet_NaN()
                             : rec.at("mean_l1_fooled").get<double>();
      r.score = rec.at("score").get<double>();
      r.n_fooled = rec.at("n_fooled").get<long>();
      state.history.push_back(r);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("'" + path.string() + "': " + e.what());
  }
  if (state.best_l1.size() != data.size() || state.best_flipped.size() != data.size()) {
    throw StructuralError("checkpoint row count does not match dataset");
  }
  return state;
}

}  // namespace minflip
