#pragma once

#include <filesystem>
#include <vector>

#include "minflip/model.hpp"

namespace minflip {

// One round's metric triple plus bookkeeping. mean_l1_fooled is NaN when no
// row is fooled; the score is 0 in that case.
struct MetricsRecord {
  int round = 0;
  double fooling_ratio = 0.0;
  double mean_l1_fooled = std::numeric_limits<double>::quiet_NaN();
  double score = 0.0;
  long n_fooled = 0;
};

// Rows counted as fooled: originally classified correctly and misclassified
// after the attack.
std::vector<char> fooled_mask(const Model& model, const Matrix& x, const Matrix& x_adv,
                              const std::vector<int>& y);

// Fraction of originally correctly classified rows that the attack
// misclassifies. Throws when the model classifies nothing correctly.
double fooling_ratio(const Model& model, const Matrix& x, const Matrix& x_adv,
                     const std::vector<int>& y);

// Mean per-row L1 distance over fooled rows only; NaN when none are fooled.
double mean_l1_fooled(const Matrix& x, const Matrix& x_adv, const std::vector<char>& fooled);

// Competition score fr * exp(-20 d); 0 when d is the no-fooled-rows sentinel.
double score(double fr, double d);

// All of the above in one pass, stamped with a round number.
MetricsRecord compute_metrics(int round, const Model& model, const Matrix& x,
                              const Matrix& x_adv, const std::vector<int>& y);

// CSV with header round,fooling_ratio,mean_l1_fooled,score,n_fooled and one
// row per record, full double-precision text.
void emit_metrics_csv(const std::vector<MetricsRecord>& history,
                      const std::filesystem::path& path);
std::vector<MetricsRecord> load_metrics_csv(const std::filesystem::path& path);

// One-line human summary: FR=<v> D=<v> S=<v> (D prints as an em dash when no
// row is fooled).
std::string summary_line(double fr, double d, double s);

}  // namespace minflip
