#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "minflip/attack.hpp"
#include "minflip/metrics.hpp"
#include "minflip/rng.hpp"

namespace minflip {

struct CampaignConfig {
  int rounds = 150;
  int runs_per_round = 20;
  GdConfig gd;
  std::uint64_t base_seed = 0;
  double refresh_probability = 0.5;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

// Per-row running best plus each run's carried state. x_best starts as the
// original data with best_l1 = +inf until a flip lands.
struct CampaignState {
  int round = 0;
  Matrix x_best;
  std::vector<double> best_l1;
  std::vector<char> best_flipped;
  std::vector<Matrix> carried;  // per run: that run's final adversarial rows
  std::vector<MetricsRecord> history;
};

CampaignState init_campaign_state(const Dataset& data, const CampaignConfig& cfg);

struct StepBounds {
  double min = 0.0;
  double max = 0.0;
};

// Decaying per-round step-size window: max_n = 2^(9 - n/5), min_n = max_n/10.
StepBounds step_bounds(int n);

// Uniform draw from [min_n, max_n).
double sample_step(int n, RunRng& rng);

// Convex combination a*w + b*(1-w); the rng overload draws one scalar
// w ~ U(0,1) for the whole row.
std::vector<double> mix_rows(std::span<const double> a, std::span<const double> b, double w);
std::vector<double> mix_rows(std::span<const double> a, std::span<const double> b, RunRng& rng);

// Initial adversarial input for row i under run strategy j (1-based):
// j=1 the original row, j=2 the best state, j in [3,10] a random mixture of
// the two, j in [11,20] a random mixture with a uniformly drawn
// opposite-label row.
std::vector<double> build_init(int j, std::size_t row, const Matrix& x,
                               const std::vector<int>& y, const CampaignState& state,
                               RunRng& rng);

// One coin per call: returns fresh with probability p_refresh, else carried.
template <typename T>
const T& maybe_refresh(const T& carried, const T& fresh, RunRng& rng, double p_refresh) {
  return rng.bernoulli(p_refresh) ? fresh : carried;
}

// One run's per-row candidates, tagged with the run index so the reduction
// does not depend on list order.
struct RunCandidates {
  int run = 0;
  std::vector<AttackCandidate> candidates;  // one per row
};
using RoundCandidates = std::vector<RunCandidates>;

// Folds this round's flipped candidates into the per-row best. Unflipped
// candidates never displace a flipped best; exact ties keep the incumbent,
// then the lowest run index. The result is invariant under permutation of
// the runs.
void reduce_best(const RoundCandidates& candidates, const Matrix& x, CampaignState& state);

// One full optimization round n: per-run streams and step sizes, fresh or
// carried initial conditions, parallel per-row attacks, best reduction and a
// metrics record on the updated x_best.
void run_round(const Model& model, const Dataset& data, CampaignState& state,
               const CampaignConfig& cfg, int n);

struct CampaignResult {
  Matrix x_adv;
  std::vector<MetricsRecord> history;
};

// Called after every completed round (checkpointing hook).
using RoundCallback = std::function<void(const CampaignState&)>;

// Executes rounds state.round+1 .. cfg.rounds. Passing a previously saved
// state resumes a campaign; the default state starts from scratch.
CampaignResult run_campaign(const Model& model, const Dataset& data,
                            const CampaignConfig& cfg,
                            const RoundCallback& on_round = {});
CampaignResult run_campaign(const Model& model, const Dataset& data,
                            const CampaignConfig& cfg, CampaignState state,
                            const RoundCallback& on_round = {});

}  // namespace minflip
