#include "minflip/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "minflip/errors.hpp"
#include "minflip/io.hpp"

namespace minflip {

std::vector<char> fooled_mask(const Model& model, const Matrix& x, const Matrix& x_adv,
                              const std::vector<int>& y) {
  if (x.rows() != x_adv.rows() || x.cols() != x_adv.cols()) {
    throw StructuralError("clean and adversarial matrices have different shapes");
  }
  if (y.size() != x.rows()) throw StructuralError("label count does not match row count");
  EvalWorkspace ws(model);
  std::vector<char> mask(x.rows(), 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int clean = ws.forward(model, x.row(i)) >= 0.5 ? 1 : 0;
    if (clean != y[i]) continue;  // originally misclassified rows never count
    const int attacked = ws.forward(model, x_adv.row(i)) >= 0.5 ? 1 : 0;
    mask[i] = attacked != y[i] ? 1 : 0;
  }
  return mask;
}

double fooling_ratio(const Model& model, const Matrix& x, const Matrix& x_adv,
                     const std::vector<int>& y) {
  if (x.rows() != x_adv.rows() || x.cols() != x_adv.cols()) {
    throw StructuralError("clean and adversarial matrices have different shapes");
  }
  if (y.size() != x.rows()) throw StructuralError("label count does not match row count");
  EvalWorkspace ws(model);
  std::size_t correct = 0;
  std::size_t fooled = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int clean = ws.forward(model, x.row(i)) >= 0.5 ? 1 : 0;
    if (clean != y[i]) continue;
    ++correct;
    const int attacked = ws.forward(model, x_adv.row(i)) >= 0.5 ? 1 : 0;
    if (attacked != y[i]) ++fooled;
  }
  if (correct == 0) {
    throw ValidationError("model classifies nothing correctly; fooling ratio undefined");
  }
  return static_cast<double>(fooled) / static_cast<double>(correct);
}

double mean_l1_fooled(const Matrix& x, const Matrix& x_adv, const std::vector<char>& fooled) {
  if (x.rows() != x_adv.rows() || x.cols() != x_adv.cols()) {
    throw StructuralError("clean and adversarial matrices have different shapes");
  }
  if (fooled.size() != x.rows()) throw StructuralError("mask size does not match row count");
  double total = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!fooled[i]) continue;
    total += l1_distance(x_adv.row(i), x.row(i));
    ++n;
  }
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return total / static_cast<double>(n);
}

double score(double fr, double d) {
  if (std::isnan(d)) return 0.0;
  return fr * std::exp(-20.0 * d);
}

MetricsRecord compute_metrics(int round, const Model& model, const Matrix& x,
                              const Matrix& x_adv, const std::vector<int>& y) {
  MetricsRecord rec;
  rec.round = round;
  rec.fooling_ratio = fooling_ratio(model, x, x_adv, y);
  const std::vector<char> mask = fooled_mask(model, x, x_adv, y);
  rec.n_fooled = 0;
  for (char f : mask) rec.n_fooled += f ? 1 : 0;
  rec.mean_l1_fooled = mean_l1_fooled(x, x_adv, mask);
  rec.score = score(rec.fooling_ratio, rec.mean_l1_fooled);
  return rec;
}

void emit_metrics_csv(const std::vector<MetricsRecord>& history,
                      const std::filesystem::path& path) {
  if (history.empty()) throw ValidationError("metrics history is empty; nothing to write");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << "round,fooling_ratio,mean_l1_fooled,score,n_fooled\n";
  for (const MetricsRecord& rec : history) {
    out << rec.round << ',' << format_double(rec.fooling_ratio) << ','
        << format_double(rec.mean_l1_fooled) << ',' << format_double(rec.score) << ','
        << rec.n_fooled << '\n';
  }
  if (!out.flush()) throw ValidationError("failed writing '" + path.string() + "'");
}

std::vector<MetricsRecord> load_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open metrics file '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line != "round,fooling_ratio,mean_l1_fooled,score,n_fooled") {
    throw ValidationError("bad metrics header in '" + path.string() + "'");
  }
  std::vector<MetricsRecord> history;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 5) {
      throw ValidationError("metrics row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " fields, expected 5");
    }
    MetricsRecord rec;
    rec.round = static_cast<int>(parse_double(cells[0], row, 0));
    rec.fooling_ratio = parse_double(cells[1], row, 1);
    rec.mean_l1_fooled = parse_double(cells[2], row, 2);
    rec.score = parse_double(cells[3], row, 3);
    rec.n_fooled = static_cast<long>(parse_double(cells[4], row, 4));
    history.push_back(rec);
  }
  if (history.empty()) throw ValidationError("metrics file '" + path.string() + "' has no rows");
  return history;
}

std::string summary_line(double fr, double d, double s) {
  std::string out = "FR=" + format_double(fr);
  out += " D=";
  out += std::isnan(d) ? "—" : format_double(d);
  out += " S=" + format_double(s);
  return out;
}

}  // namespace minflip
