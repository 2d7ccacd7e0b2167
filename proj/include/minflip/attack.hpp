#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "minflip/model.hpp"

namespace minflip {

// One run's proposed perturbation for one sample. `delta` is stored in its
// round-tripped form: x + delta re-evaluates to the exact adversarial row the
// flip flag and the L1 cost were computed from.
struct AttackCandidate {
  std::vector<double> delta;
  bool flipped = false;
  double l1 = 0.0;
};

// Canonical constructor: re-derives l1 and the flip flag from the model and
// the base row, so the stored fields can never drift from the perturbation.
AttackCandidate make_candidate(const Model& model, std::span<const double> x,
                               std::span<const double> raw_delta, int y_ref);

struct GdConfig {
  int steps = 2500;
  int followup_steps = 250;
  double followup_step_size = 0.01;
  double step_size = 0.0;  // per-run, supplied by the orchestrator

  void validate() const;
};

enum class LossBranch { kFool, kReduce };

struct PiecewiseLoss {
  double value = 0.0;
  LossBranch branch = LossBranch::kFool;
};

// Piecewise objective: while the prediction still matches y_ref the loss is
// -bce (push the prediction across the boundary); once it flips the loss is
// the plain L1 norm of the perturbation (shrink it).
PiecewiseLoss piecewise_loss(const Model& model, std::span<const double> x,
                             std::span<const double> delta, int y_ref);

// Subgradient of the active branch with respect to delta. The fool branch is
// the negated bce input gradient; the reduce branch is sign(delta) with
// sign(0) = 0.
std::vector<double> loss_subgradient(const Model& model, std::span<const double> x,
                                     std::span<const double> delta, int y_ref);

// Short pure fool-branch refinement at a fixed small step. It descends on
// -bce until the prediction is flipped and then takes one more securing
// step, so marginal cases end strictly past the boundary without walking the
// perturbation further into the flipped region than the flip requires.
std::vector<double> follow_up(const Model& model, std::span<const double> x, int y_ref,
                              std::span<const double> delta, const GdConfig& cfg);

// Vanilla gradient descent on the piecewise objective (branch re-evaluated
// every step), then the follow-up phase. Reduce-branch steps are clipped at
// zero crossings (soft threshold), so a large step zeroes a small coordinate
// instead of flinging it to the other sign. A non-finite state aborts the
// run and the last finite state is returned.
AttackCandidate gd_attack(const Model& model, std::span<const double> x, int y_ref,
                          std::span<const double> delta0, const GdConfig& cfg);

// Step size for step index i of the 50,000-step baseline schedule:
// 10^(-2+k) on segment k = i / 10000, i.e. 0.01 up through 100.
double core_step_size(int step_index);

// Single-trajectory baseline: per-sample piecewise GD from delta = 0 for
// 50,000 steps under the geometric schedule, then the standard follow-up.
std::vector<AttackCandidate> core_baseline(const Model& model, const Dataset& data,
                                           std::uint64_t seed, int threads = 0);

}  // namespace minflip
