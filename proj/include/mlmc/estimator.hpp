#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlmc/errors.hpp"
#include "mlmc/grid.hpp"
#include "mlmc/parallel.hpp"
#include "mlmc/rng.hpp"
#include "mlmc/scheme.hpp"
#include "mlmc/sde.hpp"
#include "mlmc/truncation.hpp"

namespace mlmc {

// Rate constants describing the scheme on a given problem:
//   weak/strong coupling decay:  |E[Y_l]| <= c1 * s_l^alpha,
//                                 Var[Y_l] <= c2 * s_l^beta,
//   cost model: cost of one sample at level l <= c3 * s_l^{-1} * T.
// For the truncated Euler-Maruyama scheme the guaranteed exponents are
// alpha = 1/4 and beta = 1/2.
struct RateConstants {
  double alpha = 0.25;
  double beta = 0.5;
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;

  void validate() const {
    if (!(alpha > 0.0)) throw ConfigError("config/bad_constants", "constants.alpha", "alpha must be positive");
    if (!(beta > 0.0)) throw ConfigError("config/bad_constants", "constants.beta", "beta must be positive");
    if (!(c1 > 0.0)) throw ConfigError("config/bad_constants", "constants.c1", "c1 must be positive");
    if (!(c2 > 0.0)) throw ConfigError("config/bad_constants", "constants.c2", "c2 must be positive");
    if (!(c3 > 0.0)) throw ConfigError("config/bad_constants", "constants.c3", "c3 must be positive");
  }
};

enum class BetaRegime { below_one, equal_one, above_one };

inline BetaRegime beta_regime(double beta) {
  if (beta == 1.0) return BetaRegime::equal_one;
  return beta > 1.0 ? BetaRegime::above_one : BetaRegime::below_one;
}

// ---------------------------------------------------------------------------
// Planning formulas.
// ---------------------------------------------------------------------------

// Smallest integer L with c1 * s_L^alpha <= epsilon / sqrt(2):
//   L = ceil( log(sqrt(2) c1 T^alpha / epsilon) / (alpha log M) ),
// where ceil maps an exact integer to itself.  The raw value may be
// negative (a single coarse step already meets the bias budget) or exceed
// the grid's max_level; callers clamp when building an executable plan.
// With this choice the step size satisfies the two-sided bracket
//   (1/sqrt(2)) M^{-alpha} epsilon < c1 s_L^alpha <= (1/sqrt(2)) epsilon.
inline int choose_L(const RateConstants& constants, const LevelGrid& grid, double epsilon) {
  constants.validate();
  if (!(epsilon > 0.0)) {
    throw PlanningError("planning/bad_epsilon", "epsilon must be positive");
  }
  const double numerator =
      std::log(std::sqrt(2.0) * constants.c1 * std::pow(grid.horizon(), constants.alpha) /
               epsilon);
  const double raw = numerator / (constants.alpha * std::log(static_cast<double>(grid.refinement())));
  if (!std::isfinite(raw) || std::fabs(raw) > 1e9) {
    throw PlanningError("planning/overflow", "level selection formula overflowed");
  }
  return static_cast<int>(std::ceil(raw));
}

// Per-level sample counts N_0..N_L minimizing cost subject to the variance
// budget sum_l c2 N_l^{-1} s_l^beta <= epsilon^2 / 2.  The closed forms are
//   beta = 1:   N_l = ceil( 2 eps^-2 (L+1) c2 s_l )
//   beta > 1:   N_l = ceil( 2 eps^-2 c2 T^{(beta-1)/2}
//                           (1 - M^{-(beta-1)/2})^{-1} s_l^{(beta+1)/2} )
//   beta < 1:   N_l = ceil( 2 eps^-2 c2 s_L^{-(1-beta)/2}
//                           (1 - M^{-(1-beta)/2})^{-1} s_l^{(beta+1)/2} )
// with every count floored at 1.  Counts are reported as doubles so that
// plans too large to execute can still be inspected.
struct SampleAllocation {
  std::vector<double> counts;
  BetaRegime regime = BetaRegime::equal_one;
};

inline SampleAllocation allocate_samples(const RateConstants& constants, const LevelGrid& grid,
                                         int finest_level, double epsilon) {
  constants.validate();
  if (!(epsilon > 0.0)) {
    throw PlanningError("planning/bad_epsilon", "epsilon must be positive");
  }
  if (finest_level < 0) {
    throw PlanningError("planning/bad_level", "finest level must be >= 0");
  }
  const double inv_eps2 = 1.0 / (epsilon * epsilon);
  const double M = static_cast<double>(grid.refinement());
  const BetaRegime regime = beta_regime(constants.beta);

  double prefactor = 0.0;
  double exponent = 0.0;
  switch (regime) {
    case BetaRegime::equal_one:
      prefactor = 2.0 * inv_eps2 * static_cast<double>(finest_level + 1) * constants.c2;
      exponent = 1.0;
      break;
    case BetaRegime::above_one:
      prefactor = 2.0 * inv_eps2 * constants.c2 *
                  std::pow(grid.horizon(), (constants.beta - 1.0) / 2.0) /
                  (1.0 - std::pow(M, -(constants.beta - 1.0) / 2.0));
      exponent = (constants.beta + 1.0) / 2.0;
      break;
    case BetaRegime::below_one:
      prefactor = 2.0 * inv_eps2 * constants.c2 *
                  std::pow(grid.step(finest_level), -(1.0 - constants.beta) / 2.0) /
                  (1.0 - std::pow(M, -(1.0 - constants.beta) / 2.0));
      exponent = (constants.beta + 1.0) / 2.0;
      break;
  }

  SampleAllocation allocation;
  allocation.regime = regime;
  allocation.counts.reserve(static_cast<std::size_t>(finest_level) + 1);
  for (int level = 0; level <= finest_level; ++level) {
    const double raw = prefactor * std::pow(grid.step(level), exponent);
    if (!std::isfinite(raw)) {
      throw PlanningError("planning/overflow", "sample allocation formula overflowed");
    }
    allocation.counts.push_back(std::max(1.0, std::ceil(raw)));
  }
  return allocation;
}

// ---------------------------------------------------------------------------
// A-priori complexity bounds.
// ---------------------------------------------------------------------------

// Upper bound on the expected total cost of the multilevel estimator with
// the above level/sample choices, as a function of the rate constants.
// epsilon is assumed to lie in (0, e^{-1}); M >= 2, T > 0.
inline double complexity_bound(const RateConstants& constants, int refinement, double horizon,
                               double epsilon) {
  constants.validate();
  if (refinement < 2) throw PlanningError("planning/bad_refinement", "refinement must be >= 2");
  if (!(horizon > 0.0)) throw PlanningError("planning/bad_horizon", "horizon must be positive");
  if (!(epsilon > 0.0)) throw PlanningError("planning/bad_epsilon", "epsilon must be positive");
  const double M = static_cast<double>(refinement);
  const double sqrt2_c1 = std::sqrt(2.0) * constants.c1;
  // Cost of pushing the bias below epsilon/sqrt(2): present in every regime.
  const double bias_term = (M * M / (M - 1.0)) * std::pow(sqrt2_c1, 1.0 / constants.alpha);

  switch (beta_regime(constants.beta)) {
    case BetaRegime::equal_one: {
      const double log_M = std::log(M);
      const double c5 = 1.0 / (constants.alpha * log_M) +
                        std::max(0.0, std::log(sqrt2_c1 * std::pow(horizon, constants.alpha)) /
                                          (constants.alpha * log_M)) +
                        2.0;
      const double factor = constants.c3 * (2.0 * c5 * c5 * constants.c2 + bias_term);
      const double log_eps = std::log(epsilon);
      const double threshold = -log_eps / std::log(std::pow(log_eps / epsilon, 2.0));
      if (constants.alpha <= threshold) {
        return factor * std::pow(epsilon, -1.0 / constants.alpha);
      }
      return factor * std::pow(epsilon, -2.0) * log_eps * log_eps;
    }
    case BetaRegime::above_one: {
      const double variance_term =
          2.0 * constants.c2 * std::pow(horizon, constants.beta - 1.0) /
          std::pow(1.0 - std::pow(M, -(constants.beta - 1.0) / 2.0), 2.0);
      const double factor = constants.c3 * (variance_term + bias_term);
      if (constants.alpha >= 0.5) return factor * std::pow(epsilon, -2.0);
      return factor * std::pow(epsilon, -1.0 / constants.alpha);
    }
    case BetaRegime::below_one: {
      const double variance_term =
          2.0 * constants.c2 * std::pow(sqrt2_c1, (1.0 - constants.beta) / constants.alpha) *
          std::pow(M, 1.0 - constants.beta) /
          std::pow(1.0 - std::pow(M, -(1.0 - constants.beta) / 2.0), 2.0);
      const double factor = constants.c3 * (variance_term + bias_term);
      if (constants.beta <= 2.0 * constants.alpha) {
        return factor * std::pow(epsilon, -2.0 - (1.0 - constants.beta) / constants.alpha);
      }
      return factor * std::pow(epsilon, -1.0 / constants.alpha);
    }
  }
  throw std::logic_error("complexity_bound: unreachable");
}

// Specialization of complexity_bound to the truncated Euler-Maruyama rates
// alpha = 1/4, beta = 1/2 (so beta <= 2 alpha and the cost scales as
// epsilon^{-4}):
//   [ 4 c1^2 c2 c3 sqrt(M) (1 - M^{-1/4})^{-2} + (4 M^2 / (M-1)) c1^4 c3 ]
//   * epsilon^{-4}.
inline double truncated_em_complexity_bound(double c1, double c2, double c3, int refinement,
                                            double epsilon) {
  if (!(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0)) {
    throw PlanningError("planning/bad_constants", "c1, c2, c3 must be positive");
  }
  if (refinement < 2) throw PlanningError("planning/bad_refinement", "refinement must be >= 2");
  if (!(epsilon > 0.0)) throw PlanningError("planning/bad_epsilon", "epsilon must be positive");
  const double M = static_cast<double>(refinement);
  const double variance_term =
      4.0 * c1 * c1 * c2 * c3 * std::sqrt(M) / std::pow(1.0 - std::pow(M, -0.25), 2.0);
  const double bias_term = 4.0 * M * M / (M - 1.0) * std::pow(c1, 4.0) * c3;
  return (variance_term + bias_term) * std::pow(epsilon, -4.0);
}

// ---------------------------------------------------------------------------
// Executable plans and runs.
// ---------------------------------------------------------------------------

struct MlmcPlan {
  double epsilon = 0.0;
  int finest_level = 0;
  std::vector<double> samples;  // one count per level 0..finest_level
  BetaRegime regime = BetaRegime::equal_one;
  double predicted_cost_bound = 0.0;  // from complexity_bound
};

inline MlmcPlan make_plan(const RateConstants& constants, const LevelGrid& grid,
                          double epsilon) {
  const int raw_level = choose_L(constants, grid, epsilon);
  const int finest_level = std::max(0, raw_level);
  if (finest_level > grid.max_level()) {
    throw PlanningError("planning/level_overflow",
                        "target accuracy needs level " + std::to_string(finest_level) +
                            " but the grid allows max_level " +
                            std::to_string(grid.max_level()));
  }
  MlmcPlan plan;
  plan.epsilon = epsilon;
  plan.finest_level = finest_level;
  auto allocation = allocate_samples(constants, grid, finest_level, epsilon);
  plan.samples = std::move(allocation.counts);
  plan.regime = allocation.regime;
  plan.predicted_cost_bound =
      complexity_bound(constants, grid.refinement(), grid.horizon(), epsilon);
  return plan;
}

// One level's contribution to the telescoping estimator.
struct LevelEstimate {
  int level = 0;
  std::int64_t n_samples = 0;
  double mean = 0.0;             // divergence marker if no sample was finite
  double sample_variance = 0.0;  // over finite samples
  double cost = 0.0;             // total number of Euler steps at this level
  std::int64_t n_nonfinite = 0;  // samples excluded from mean/variance
};

namespace detail {

// Payoff of a path outcome.  Divergent paths yield non-finite samples: the
// payoff value itself if it is already non-finite (keeps the sign of the
// blowup), NaN otherwise so a divergent path can never launder into a finite
// sample.
inline double payoff_sample(const Payoff& payoff, const PathOutcome& outcome) {
  const double value = payoff.eval(outcome.terminal_state);
  if (outcome.finite) return value;
  return std::isfinite(value) ? std::numeric_limits<double>::quiet_NaN() : value;
}

}  // namespace detail

// Estimate E[Y_l] by Monte Carlo: Y_0 = f(X^0(T)) on the coarsest grid, and
// Y_l = f(X^l(T)) - f(X^{l-1}(T)) for l >= 1 with the coupled pair driven by
// one Brownian path.  Sample i uses the stream (seed, level, i, role), so
// the result is independent of threading and of the order levels are run in.
inline LevelEstimate run_level(const SdeProblem& problem, const Payoff& payoff,
                               SchemeKind scheme, const TruncationConfig* truncation,
                               const LevelGrid& grid, int level, std::int64_t n_samples,
                               std::uint64_t seed, const ExecPolicy& exec = {}) {
  problem.validate();
  if (level < 0 || level > grid.max_level()) {
    throw std::invalid_argument("run_level: level out of range");
  }
  if (n_samples < 1) throw std::invalid_argument("run_level: need n_samples >= 1");
  if (!payoff.eval) throw std::invalid_argument("run_level: payoff must be set");

  MomentAccumulator acc;
  if (level == 0) {
    const double step = grid.step(0);
    const std::int64_t n_steps = grid.steps_at(0);
    acc = parallel_moments(n_samples, exec, [&](std::int64_t i) {
      RandomStream stream = make_stream(seed, 0, i, StreamRole::standalone);
      const PathOutcome outcome =
          simulate_terminal(problem, scheme, truncation, step, n_steps, stream);
      return detail::payoff_sample(payoff, outcome);
    });
  } else {
    acc = parallel_moments(n_samples, exec, [&](std::int64_t i) {
      RandomStream stream = make_stream(seed, level, i, StreamRole::mlmc_pair);
      const auto [fine, coarse] =
          simulate_coupled_pair(problem, scheme, truncation, grid, level, stream);
      return detail::payoff_sample(payoff, fine) - detail::payoff_sample(payoff, coarse);
    });
  }

  LevelEstimate estimate;
  estimate.level = level;
  estimate.n_samples = n_samples;
  estimate.mean = acc.n > 0 ? acc.mean : acc.divergence_marker();
  estimate.sample_variance = acc.variance();
  estimate.n_nonfinite = acc.n_nonfinite;
  const double fine_steps = static_cast<double>(grid.steps_at(level));
  const double coarse_steps = level > 0 ? static_cast<double>(grid.steps_at(level - 1)) : 0.0;
  estimate.cost = static_cast<double>(n_samples) * (fine_steps + coarse_steps);
  return estimate;
}

struct MlmcResult {
  double estimate = 0.0;
  std::vector<LevelEstimate> levels;
  double total_cost = 0.0;
  MlmcPlan plan;
  bool divergent = false;  // some level mean was non-finite
};

// Full multilevel run: plan levels and samples for the target accuracy, run
// every level, and sum the telescoping means.
inline MlmcResult run_mlmc(const SdeProblem& problem, const Payoff& payoff, SchemeKind scheme,
                           const TruncationConfig* truncation, const RateConstants& constants,
                           const LevelGrid& grid, double epsilon, std::uint64_t seed,
                           const ExecPolicy& exec = {}) {
  MlmcResult result;
  result.plan = make_plan(constants, grid, epsilon);
  result.levels.reserve(result.plan.samples.size());
  double estimate = 0.0;
  for (int level = 0; level <= result.plan.finest_level; ++level) {
    const double planned = result.plan.samples[static_cast<std::size_t>(level)];
    if (!(planned <= 9.0e15)) {
      throw PlanningError("planning/allocation_too_large",
                          "planned sample count at level " + std::to_string(level) +
                              " is too large to execute");
    }
    const auto n_samples = static_cast<std::int64_t>(planned);
    LevelEstimate level_estimate = run_level(problem, payoff, scheme, truncation, grid, level,
                                             n_samples, seed, exec);
    estimate += level_estimate.mean;
    result.total_cost += level_estimate.cost;
    result.levels.push_back(std::move(level_estimate));
  }
  result.estimate = estimate;
  result.divergent = !std::isfinite(estimate);
  return result;
}

// ---------------------------------------------------------------------------
// Single-grid (standard) Monte Carlo baseline.
// ---------------------------------------------------------------------------

struct McBudget {
  int level = 0;           // grid level whose step meets the bias budget
  double step = 0.0;       // step size at that level
  std::int64_t n_samples = 0;
};

// Budget for a standard Monte Carlo run with MSE <= epsilon^2, split evenly:
// the step is the coarsest grid level with c1 * s^alpha <= epsilon/sqrt(2)
// (snapped to the geometric grid), and the sample count is
// ceil(2 * payoff_variance / epsilon^2).
inline McBudget standard_mc_budget(const RateConstants& constants, const LevelGrid& grid,
                                   double epsilon, double payoff_variance) {
  constants.validate();
  if (!(epsilon > 0.0)) {
    throw PlanningError("planning/bad_epsilon", "epsilon must be positive");
  }
  if (!(payoff_variance >= 0.0)) {
    throw PlanningError("planning/bad_variance", "payoff variance must be >= 0");
  }
  const double max_step =
      std::pow(epsilon / (std::sqrt(2.0) * constants.c1), 1.0 / constants.alpha);
  int level = 0;
  while (grid.step(level) > max_step && level < grid.max_level()) ++level;
  if (grid.step(level) > max_step) {
    throw PlanningError("planning/level_overflow",
                        "standard MC bias budget needs a level beyond max_level");
  }
  McBudget budget;
  budget.level = level;
  budget.step = grid.step(level);
  const double raw = std::ceil(2.0 * payoff_variance / (epsilon * epsilon));
  if (!(raw <= 9.0e15)) {
    throw PlanningError("planning/allocation_too_large",
                        "standard MC sample count is too large to execute");
  }
  budget.n_samples = std::max<std::int64_t>(1, static_cast<std::int64_t>(raw));
  return budget;
}

struct StandardMcResult {
  double estimate = 0.0;
  double sample_variance = 0.0;
  double cost = 0.0;
  std::int64_t n_samples = 0;
  std::int64_t n_nonfinite = 0;
  int level = 0;
  double step = 0.0;
};

// Plain Monte Carlo on the single grid at `level` with n_samples paths.
inline StandardMcResult run_standard_mc(const SdeProblem& problem, const Payoff& payoff,
                                        SchemeKind scheme, const TruncationConfig* truncation,
                                        const LevelGrid& grid, int level,
                                        std::int64_t n_samples, std::uint64_t seed,
                                        const ExecPolicy& exec = {}) {
  problem.validate();
  if (level < 0 || level > grid.max_level()) {
    throw std::invalid_argument("run_standard_mc: level out of range");
  }
  if (n_samples < 1) throw std::invalid_argument("run_standard_mc: need n_samples >= 1");
  const double step = grid.step(level);
  const std::int64_t n_steps = grid.steps_at(level);
  MomentAccumulator acc = parallel_moments(n_samples, exec, [&](std::int64_t i) {
    RandomStream stream = make_stream(seed, level, i, StreamRole::standalone);
    const PathOutcome outcome =
        simulate_terminal(problem, scheme, truncation, step, n_steps, stream);
    return detail::payoff_sample(payoff, outcome);
  });
  StandardMcResult result;
  result.estimate = acc.n > 0 ? acc.mean : acc.divergence_marker();
  result.sample_variance = acc.variance();
  result.n_samples = n_samples;
  result.n_nonfinite = acc.n_nonfinite;
  result.level = level;
  result.step = step;
  result.cost = static_cast<double>(n_samples) * static_cast<double>(n_steps);
  return result;
}

// ---------------------------------------------------------------------------
// Pilot estimation of the rate constants.
// ---------------------------------------------------------------------------

struct PilotOptions {
  std::int64_t paths = 100;  // paths per pilot level
  int levels = 4;            // coupled levels 1..levels used for the c1 fit
};

struct PilotResult {
  RateConstants constants;
  std::vector<LevelEstimate> pilot_levels;  // level 0 plus coupled levels
};

// Estimate c1 and c2 empirically, keeping alpha, beta, c3 from `base`:
// c1 from a least-squares fit of |mean Y_l| through the origin against
// s_l^alpha over the coupled pilot levels, and c2 as the max of
// Var[Y_l] / s_l^beta over levels 0 and 1 (level 0 carries the payoff
// variance itself, which dominates the budget when the coupling variance
// decays fast).
inline PilotResult estimate_constants(const SdeProblem& problem, const Payoff& payoff,
                                      SchemeKind scheme, const TruncationConfig* truncation,
                                      const RateConstants& base, const LevelGrid& grid,
                                      std::uint64_t seed, const ExecPolicy& exec = {},
                                      const PilotOptions& options = {}) {
  if (options.paths < 2) throw std::invalid_argument("estimate_constants: need paths >= 2");
  if (options.levels < 1 || options.levels > grid.max_level()) {
    throw std::invalid_argument("estimate_constants: pilot levels out of range");
  }
  PilotResult result;
  result.constants = base;
  result.pilot_levels.reserve(static_cast<std::size_t>(options.levels) + 1);
  for (int level = 0; level <= options.levels; ++level) {
    result.pilot_levels.push_back(run_level(problem, payoff, scheme, truncation, grid, level,
                                            options.paths, seed, exec));
  }
  double numerator = 0.0;
  double denominator = 0.0;
  for (int level = 1; level <= options.levels; ++level) {
    const auto& estimate = result.pilot_levels[static_cast<std::size_t>(level)];
    if (!std::isfinite(estimate.mean)) {
      throw PlanningError("planning/pilot_divergent",
                          "pilot level " + std::to_string(level) + " produced no finite samples");
    }
    const double basis = std::pow(grid.step(level), base.alpha);
    numerator += std::fabs(estimate.mean) * basis;
    denominator += basis * basis;
  }
  result.constants.c1 = std::max(numerator / denominator, 1e-12);
  double c2 = 0.0;
  for (int level = 0; level <= std::min(1, options.levels); ++level) {
    const auto& estimate = result.pilot_levels[static_cast<std::size_t>(level)];
    c2 = std::max(c2, estimate.sample_variance / std::pow(grid.step(level), base.beta));
  }
  result.constants.c2 = std::max(c2, 1e-12);
  return result;
}

}  // namespace mlmc
