#include "minflip/attack.hpp"

#include <cmath>

#include "minflip/errors.hpp"
#include "minflip/parallel.hpp"

namespace minflip {

namespace {

void check_pair(const Model& model, std::span<const double> x,
                std::span<const double> delta) {
  const auto d = static_cast<std::size_t>(model.spec.input_dim);
  if (x.size() != d || delta.size() != d) {
    throw StructuralError("base/perturbation length does not match input_dim");
  }
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

// Round-trip delta through the adversarial row until x + delta - x is a
// fixed point, so every consumer reconstructing the row from (x, delta) gets
// bit-identical values and l1 matches the stored matrix exactly.
void canonicalize_delta(std::span<const double> x, std::vector<double>& delta) {
  for (int pass = 0; pass < 4; ++pass) {
    bool stable = true;
    for (std::size_t k = 0; k < delta.size(); ++k) {
      const double rt = (x[k] + delta[k]) - x[k];
      if (rt != delta[k]) {
        delta[k] = rt;
        stable = false;
      }
    }
    if (stable) break;
  }
}

inline int hard_label(double p) { return p >= 0.5 ? 1 : 0; }

}  // namespace

AttackCandidate make_candidate(const Model& model, std::span<const double> x,
                               std::span<const double> raw_delta, int y_ref) {
  check_pair(model, x, raw_delta);
  AttackCandidate cand;
  cand.delta.assign(raw_delta.begin(), raw_delta.end());
  canonicalize_delta(x, cand.delta);

  EvalWorkspace ws(model);
  std::vector<double> adv(x.size());
  double l1 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    adv[k] = x[k] + cand.delta[k];
    l1 += cand.delta[k] < 0 ? -cand.delta[k] : cand.delta[k];
  }
  cand.l1 = l1;
  cand.flipped = all_finite(adv) && hard_label(ws.forward(model, adv)) != y_ref;
  return cand;
}

void GdConfig::validate() const {
  if (steps < 0 || followup_steps < 0) {
    throw ValidationError("step counts must be non-negative");
  }
  if (!(followup_step_size >= 0.0) || !std::isfinite(followup_step_size)) {
    throw ValidationError("followup_step_size must be finite and >= 0");
  }
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) {
    throw ValidationError("step_size must be finite and >= 0");
  }
}

PiecewiseLoss piecewise_loss(const Model& model, std::span<const double> x,
                             std::span<const double> delta, int y_ref) {
  check_pair(model, x, delta);
  EvalWorkspace ws(model);
  std::vector<double> adv(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) adv[k] = x[k] + delta[k];
  const double p = ws.forward(model, adv);
  PiecewiseLoss out;
  if (hard_label(p) == y_ref) {
    out.branch = LossBranch::kFool;
    out.value = -bce(p, y_ref);
  } else {
    out.branch = LossBranch::kReduce;
    out.value = l1_norm(delta);
  }
  return out;
}

std::vector<double> loss_subgradient(const Model& model, std::span<const double> x,
                                     std::span<const double> delta, int y_ref) {
  check_pair(model, x, delta);
  EvalWorkspace ws(model);
  std::vector<double> adv(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) adv[k] = x[k] + delta[k];
  const double p = ws.forward(model, adv);
  std::vector<double> g(x.size());
  if (hard_label(p) == y_ref) {
    ws.bce_input_gradient(model, y_ref, g);
    for (double& v : g) v = -v;
  } else {
    for (std::size_t k = 0; k < x.size(); ++k) {
      g[k] = delta[k] > 0.0 ? 1.0 : (delta[k] < 0.0 ? -1.0 : 0.0);
    }
  }
  return g;
}

namespace {

// Shared step kernel for the main and follow-up phases. Writes the updated
// perturbation into `next`; returns false when the state went non-finite.
struct AttackScratch {
  std::vector<double> adv;
  std::vector<double> grad;
  std::vector<double> next;
  EvalWorkspace ws;

  explicit AttackScratch(const Model& model)
      : adv(static_cast<std::size_t>(model.spec.input_dim)),
        grad(static_cast<std::size_t>(model.spec.input_dim)),
        next(static_cast<std::size_t>(model.spec.input_dim)),
        ws(model) {}
};

// Vectorizable per-coordinate kernels; buffers never alias.
inline void add_into(const double* __restrict__ a, const double* __restrict__ b,
                     double* __restrict__ dst, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) dst[k] = a[k] + b[k];
}

inline bool axpy_finite(const double* __restrict__ a, double s,
                        const double* __restrict__ g, double* __restrict__ dst,
                        std::size_t n) {
  bool ok = true;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = a[k] + s * g[k];
    dst[k] = v;
    ok &= std::fabs(v) <= std::numeric_limits<double>::max();  // false for NaN too
  }
  return ok;
}

// Sign descent on the L1 norm with the step clipped at the zero crossing
// (soft threshold). An unclipped step catapults small coordinates to the
// other sign, where the piecewise dynamics strand the run in a saturated
// region no later round can leave.
inline bool sign_step_finite(const double* __restrict__ a, double s,
                             double* __restrict__ dst, std::size_t n) {
  bool ok = true;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = a[k];
    const double w = v > 0.0 ? std::max(0.0, v - s) : (v < 0.0 ? std::min(0.0, v + s) : v);
    dst[k] = w;
    ok &= std::fabs(w) <= std::numeric_limits<double>::max();
  }
  return ok;
}

AttackCandidate run_gd(const Model& model, std::span<const double> x, int y_ref,
                       std::span<const double> delta0, const GdConfig& cfg,
                       std::span<const double> schedule, AttackScratch& scratch) {
  const std::size_t d = x.size();
  std::vector<double> delta(delta0.begin(), delta0.end());
  std::vector<double>& adv = scratch.adv;
  std::vector<double>& grad = scratch.grad;
  std::vector<double>& next = scratch.next;
  EvalWorkspace& ws = scratch.ws;
  // The hard 0.5 threshold on p is the same test as logit >= 0.
  const bool y_ref_high = y_ref == 1;

  const int total_steps = schedule.empty() ? cfg.steps : static_cast<int>(schedule.size());
  for (int step = 0; step < total_steps; ++step) {
    const double step_size = schedule.empty() ? cfg.step_size
                                              : schedule[static_cast<std::size_t>(step)];
    add_into(x.data(), delta.data(), adv.data(), d);
    const double z = ws.forward_logit(model, adv);
    if (std::isnan(z)) break;
    bool ok;
    if ((z >= 0.0) == y_ref_high) {
      // Fool branch: descend on -bce, i.e. push the prediction away from
      // y_ref along the bce gradient.
      ws.bce_input_gradient(model, y_ref, grad);
      ok = axpy_finite(delta.data(), step_size, grad.data(), next.data(), d);
    } else {
      // Reduce branch: sign descent on the L1 norm, sign(0) = 0.
      ok = sign_step_finite(delta.data(), step_size, next.data(), d);
    }
    if (!ok) break;
    delta.swap(next);
  }

  // Follow-up phase: pure fool-branch descent at the fixed small step until
  // the flip is secured by one step taken from a flipped state.
  bool secured = false;
  for (int step = 0; step < cfg.followup_steps; ++step) {
    add_into(x.data(), delta.data(), adv.data(), d);
    const double z = ws.forward_logit(model, adv);
    if (std::isnan(z)) break;
    if ((z >= 0.0) != y_ref_high) {
      if (secured) break;
      secured = true;
    } else {
      secured = false;
    }
    ws.bce_input_gradient(model, y_ref, grad);
    if (!axpy_finite(delta.data(), cfg.followup_step_size, grad.data(), next.data(), d)) break;
    delta.swap(next);
  }

  return make_candidate(model, x, delta, y_ref);
}

}  // namespace

std::vector<double> follow_up(const Model& model, std::span<const double> x, int y_ref,
                              std::span<const double> delta, const GdConfig& cfg) {
  check_pair(model, x, delta);
  cfg.validate();
  GdConfig fu = cfg;
  fu.steps = 0;  // main phase skipped; only the follow-up loop runs
  AttackScratch scratch(model);
  AttackCandidate cand = run_gd(model, x, y_ref, delta, fu, {}, scratch);
  return cand.delta;
}

AttackCandidate gd_attack(const Model& model, std::span<const double> x, int y_ref,
                          std::span<const double> delta0, const GdConfig& cfg) {
  check_pair(model, x, delta0);
  cfg.validate();
  if (!all_finite(delta0)) throw ValidationError("non-finite initial perturbation");
  AttackScratch scratch(model);
  return run_gd(model, x, y_ref, delta0, cfg, {}, scratch);
}

double core_step_size(int step_index) {
  if (step_index < 0 || step_index >= 50000) {
    throw ValidationError("core schedule index out of [0, 50000)");
  }
  const int segment = step_index / 10000;
  return std::pow(10.0, -2 + segment);
}

std::vector<AttackCandidate> core_baseline(const Model& model, const Dataset& data,
                                           [[maybe_unused]] std::uint64_t seed,
                                           int threads) {
  model.validate();
  data.validate();
  if (data.dim() != static_cast<std::size_t>(model.spec.input_dim)) {
    throw StructuralError("dataset feature count does not match model input_dim");
  }

  std::vector<double> schedule(50000);
  for (int i = 0; i < 50000; ++i) schedule[static_cast<std::size_t>(i)] = core_step_size(i);

  std::vector<int> y_ref(data.size());
  {
    EvalWorkspace ws(model);
    for (std::size_t i = 0; i < data.size(); ++i) {
      y_ref[i] = hard_label(ws.forward(model, data.features.row(i)));
    }
  }

  GdConfig cfg;  // follow-up defaults; main phase comes from the schedule
  cfg.steps = 0;
  std::vector<AttackCandidate> out(data.size());
  std::vector<double> zero(data.dim(), 0.0);
  parallel_for(data.size(), threads, [&](std::size_t i, AttackScratch& scratch) {
    out[i] = run_gd(model, data.features.row(i), y_ref[i], zero, cfg, schedule, scratch);
  }, [&] { return AttackScratch(model); });
  return out;
}

}  // namespace minflip
