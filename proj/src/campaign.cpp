#include "minflip/campaign.hpp"

#include <algorithm>
#include <cmath>

#include "minflip/errors.hpp"
#include "minflip/parallel.hpp"

namespace minflip {

void CampaignConfig::validate() const {
  if (rounds < 0) throw ValidationError("rounds must be >= 0");
  if (runs_per_round < 1) throw ValidationError("runs_per_round must be >= 1");
  if (!(refresh_probability >= 0.0 && refresh_probability <= 1.0)) {
    throw ValidationError("refresh_probability must lie in [0,1]");
  }
  gd.validate();
}

CampaignState init_campaign_state(const Dataset& data, const CampaignConfig& cfg) {
  cfg.validate();
  CampaignState state;
  state.round = 0;
  state.x_best = data.features;
  state.best_l1.assign(data.size(), std::numeric_limits<double>::infinity());
  state.best_flipped.assign(data.size(), 0);
  return state;
}

StepBounds step_bounds(int n) {
  if (n < 1) throw ValidationError("round index must be >= 1");
  StepBounds b;
  b.max = std::exp2(9.0 - static_cast<double>(n) / 5.0);
  b.min = b.max / 10.0;
  return b;
}

double sample_step(int n, RunRng& rng) {
  const StepBounds b = step_bounds(n);
  return rng.uniform(b.min, b.max);
}

std::vector<double> mix_rows(std::span<const double> a, std::span<const double> b, double w) {
  if (a.size() != b.size()) throw StructuralError("mixture rows have different lengths");
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * w + b[k] * (1.0 - w);
  return out;
}

std::vector<double> mix_rows(std::span<const double> a, std::span<const double> b, RunRng& rng) {
  return mix_rows(a, b, rng.uniform01());
}

namespace {

std::vector<std::size_t> rows_with_label(const std::vector<int>& y, int label) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == label) rows.push_back(i);
  }
  return rows;
}

}  // namespace

std::vector<double> build_init(int j, std::size_t row, const Matrix& x,
                               const std::vector<int>& y, const CampaignState& state,
                               RunRng& rng) {
  if (j < 1) throw ValidationError("run index must be >= 1");
  std::span<const double> base = x.row(row);
  if (j == 1) return {base.begin(), base.end()};
  if (j == 2) {
    std::span<const double> best = state.x_best.row(row);
    return {best.begin(), best.end()};
  }
  if (j <= 10) return mix_rows(base, state.x_best.row(row), rng);

  // Opposite-label mixture: pull the start toward a row the model already
  // classifies as the other class.
  const std::vector<std::size_t> partners = rows_with_label(y, y[row] == 1 ? 0 : 1);
  if (partners.empty()) {
    throw ValidationError("no opposite-label sample available for mixture strategies");
  }
  const std::size_t partner = partners[rng.index(partners.size())];
  return mix_rows(base, x.row(partner), rng);
}

void reduce_best(const RoundCandidates& candidates, const Matrix& x, CampaignState& state) {
  for (const RunCandidates& run : candidates) {
    if (run.candidates.size() != x.rows()) {
      throw StructuralError("candidate list does not cover every row");
    }
  }
  const std::size_t n_rows = x.rows();
  for (std::size_t i = 0; i < n_rows; ++i) {
    // Argmin over (l1, run index) among this round's flipped candidates.
    const AttackCandidate* pick = nullptr;
    int pick_run = 0;
    for (const RunCandidates& run : candidates) {
      const AttackCandidate& cand = run.candidates[i];
      if (!cand.flipped) continue;
      if (pick == nullptr || cand.l1 < pick->l1 ||
          (cand.l1 == pick->l1 && run.run < pick_run)) {
        pick = &cand;
        pick_run = run.run;
      }
    }
    if (pick == nullptr) continue;
    // The incumbent wins exact ties (strict improvement required).
    if (!(pick->l1 < state.best_l1[i])) continue;
    state.best_l1[i] = pick->l1;
    state.best_flipped[i] = 1;
    auto dst = state.x_best.row(i);
    std::span<const double> base = x.row(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = base[k] + pick->delta[k];
  }
}

namespace {

struct RunPlan {
  double step_size = 0.0;
  Matrix init;  // initial adversarial inputs, one row per sample
};

// All randomness for a round is consumed here, before any parallel work, so
// results do not depend on scheduling. Stream order per run: step size,
// then per-row mixture draws (row order), then the refresh coin.
std::vector<RunPlan> plan_round(const Model& model, const Dataset& data,
                                const CampaignState& state, const CampaignConfig& cfg,
                                int n) {
  const std::size_t n_rows = data.size();
  std::vector<RunPlan> plans(static_cast<std::size_t>(cfg.runs_per_round));
  for (int j = 1; j <= cfg.runs_per_round; ++j) {
    RunPlan& plan = plans[static_cast<std::size_t>(j - 1)];
    RunRng rng(derive_run_seed(cfg.base_seed, n, j));
    plan.step_size = sample_step(n, rng);
    Matrix fresh(n_rows, data.dim());
    for (std::size_t i = 0; i < n_rows; ++i) {
      const std::vector<double> row = build_init(j, i, data.features, data.labels, state, rng);
      std::copy(row.begin(), row.end(), fresh.row(i).begin());
    }
    // j=1 and j=2 are pinned to their sources every round; the other runs
    // flip one refresh coin per round once a previous state exists.
    const bool has_carried = !state.carried.empty();
    if (j <= 2 || !has_carried) {
      plan.init = std::move(fresh);
    } else {
      plan.init = maybe_refresh(state.carried[static_cast<std::size_t>(j - 1)], fresh,
                                rng, cfg.refresh_probability);
    }
  }
  return plans;
}

}  // namespace

void run_round(const Model& model, const Dataset& data, CampaignState& state,
               const CampaignConfig& cfg, int n) {
  cfg.validate();
  if (state.round != n - 1) {
    throw ValidationError("round " + std::to_string(n) + " requires state at round " +
                          std::to_string(n - 1));
  }
  if (cfg.runs_per_round >= 11) {
    const bool has_zero = std::find(data.labels.begin(), data.labels.end(), 0) != data.labels.end();
    const bool has_one = std::find(data.labels.begin(), data.labels.end(), 1) != data.labels.end();
    if (!has_zero || !has_one) {
      throw ValidationError("mixture strategies j>=11 need both labels in the dataset");
    }
  }

  const std::size_t n_rows = data.size();
  const std::size_t n_runs = static_cast<std::size_t>(cfg.runs_per_round);

  std::vector<int> y_ref(n_rows);
  {
    EvalWorkspace ws(model);
    for (std::size_t i = 0; i < n_rows; ++i) {
      y_ref[i] = ws.forward(model, data.features.row(i)) >= 0.5 ? 1 : 0;
    }
  }

  std::vector<RunPlan> plans = plan_round(model, data, state, cfg, n);

  RoundCandidates candidates(n_runs);
  for (std::size_t j = 0; j < n_runs; ++j) {
    candidates[j].run = static_cast<int>(j + 1);
    candidates[j].candidates.resize(n_rows);
  }
  struct Scratch {
    std::vector<double> delta0;
  };
  parallel_for(n_runs * n_rows, cfg.threads, [&](std::size_t item, Scratch& scratch) {
    const std::size_t j = item / n_rows;
    const std::size_t i = item % n_rows;
    const RunPlan& plan = plans[j];
    std::span<const double> base = data.features.row(i);
    std::span<const double> init = plan.init.row(i);
    scratch.delta0.resize(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) scratch.delta0[k] = init[k] - base[k];
    GdConfig gd = cfg.gd;
    gd.step_size = plan.step_size;
    candidates[j].candidates[i] = gd_attack(model, base, y_ref[i], scratch.delta0, gd);
  }, [] { return Scratch{}; });

  reduce_best(candidates, data.features, state);

  // Each run carries its own final adversarial rows into the next round.
  state.carried.assign(n_runs, Matrix(n_rows, data.dim()));
  for (std::size_t j = 0; j < n_runs; ++j) {
    for (std::size_t i = 0; i < n_rows; ++i) {
      auto dst = state.carried[j].row(i);
      std::span<const double> base = data.features.row(i);
      const std::vector<double>& delta = candidates[j].candidates[i].delta;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = base[k] + delta[k];
    }
  }

  state.round = n;
  state.history.push_back(
      compute_metrics(n, model, data.features, state.x_best, data.labels));
}

CampaignResult run_campaign(const Model& model, const Dataset& data,
                            const CampaignConfig& cfg, const RoundCallback& on_round) {
  return run_campaign(model, data, cfg, init_campaign_state(data, cfg), on_round);
}

CampaignResult run_campaign(const Model& model, const Dataset& data,
                            const CampaignConfig& cfg, CampaignState state,
                            const RoundCallback& on_round) {
  cfg.validate();
  model.validate();
  data.validate();
  if (data.dim() != static_cast<std::size_t>(model.spec.input_dim)) {
    throw StructuralError("dataset feature count does not match model input_dim");
  }
  if (state.x_best.rows() != data.size() || state.x_best.cols() != data.dim()) {
    throw StructuralError("campaign state does not match dataset shape");
  }
  for (int n = state.round + 1; n <= cfg.rounds; ++n) {
    run_round(model, data, state, cfg, n);
    if (on_round) on_round(state);
  }
  CampaignResult result;
  result.x_adv = std::move(state.x_best);
  result.history = std::move(state.history);
  return result;
}

}  // namespace minflip
