#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mlmc/estimator.hpp"
#include "mlmc/grid.hpp"
#include "mlmc/parallel.hpp"
#include "mlmc/rng.hpp"
#include "mlmc/scheme.hpp"
#include "mlmc/sde.hpp"

namespace mlmc {

// ---------------------------------------------------------------------------
// Log-log rate fitting.
// ---------------------------------------------------------------------------

struct RateFit {
  double slope = 0.0;      // fitted exponent p in value ~ C * step^p
  double intercept = 0.0;  // log C
  double r_squared = 1.0;
  int n_points = 0;
};

// Ordinary least squares of log(values) against log(steps).  Requires at
// least three points and strictly positive, finite inputs.
inline RateFit fit_rate(std::span<const double> steps, std::span<const double> values) {
  if (steps.size() != values.size()) {
    throw std::invalid_argument("fit_rate: steps and values must have equal length");
  }
  if (steps.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
  const std::size_t n = steps.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(steps[i] > 0.0) || !std::isfinite(steps[i])) {
      throw std::invalid_argument("fit_rate: steps must be positive and finite");
    }
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw std::invalid_argument("fit_rate: values must be positive and finite");
    }
    xs[i] = std::log(steps[i]);
    ys[i] = std::log(values[i]);
  }
  double x_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x_mean += xs[i];
    y_mean += ys[i];
  }
  x_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - x_mean;
    const double dy = ys[i] - y_mean;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: steps must not all coincide");
  RateFit fit;
  fit.n_points = static_cast<int>(n);
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
      ss_res += r * r;
    }
    fit.r_squared = 1.0 - ss_res / syy;
  } else {
    fit.r_squared = 1.0;  // constant values: perfectly explained
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Strong error against a reference solution on a common Brownian path.
// ---------------------------------------------------------------------------

// Terminal-value oracle for strong error measurement.  When exact_terminal
// is set it receives the reference-grid increments and step size and returns
// the exact terminal state for that Brownian path (e.g. a closed form).
// When unset, the scheme itself on a grid `ref_factor` times finer than the
// finest measured level is used as the reference.
struct StrongOracle {
  std::function<std::vector<double>(const Matrix& ref_increments, double ref_step)>
      exact_terminal;
  int ref_factor = 64;
};

struct StrongErrorPoint {
  int level = 0;
  double step = 0.0;
  double rms_error = 0.0;       // sqrt(mean |X_level(T) - X_ref(T)|^2)
  double mean_abs_error = 0.0;  // mean |X_level(T) - X_ref(T)|
  std::int64_t n_nonfinite = 0;
};

namespace detail {

struct StrongAccumulator {
  std::vector<MomentAccumulator> squared;  // per level: |error|^2
  std::vector<MomentAccumulator> absolute;

  void merge(const StrongAccumulator& other) {
    for (std::size_t i = 0; i < squared.size(); ++i) {
      squared[i].merge(other.squared[i]);
      absolute[i].merge(other.absolute[i]);
    }
  }
};

inline double state_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace detail

// Measure the strong (pathwise) terminal error of the scheme at each level
// in `levels`.  All levels and the reference share one Brownian path per
// sample: the reference-grid increments are drawn once and aggregated down
// to each measured grid.  Paths whose error is non-finite are counted and
// excluded per level.
inline std::vector<StrongErrorPoint> strong_error_curve(
    const SdeProblem& problem, SchemeKind scheme, const TruncationConfig* truncation,
    const LevelGrid& grid, std::span<const int> levels, std::int64_t n_paths,
    const StrongOracle& oracle, std::uint64_t seed, const ExecPolicy& exec = {}) {
  problem.validate();
  if (levels.empty()) throw std::invalid_argument("strong_error_curve: need at least one level");
  if (n_paths < 1) throw std::invalid_argument("strong_error_curve: need n_paths >= 1");
  int finest = levels[0];
  for (const int level : levels) {
    if (level < 0 || level > grid.max_level()) {
      throw std::invalid_argument("strong_error_curve: level out of range");
    }
    finest = std::max(finest, level);
  }
  if (oracle.ref_factor < 2) {
    throw std::invalid_argument("strong_error_curve: ref_factor must be >= 2");
  }
  // Reference level: enough extra refinement to cover ref_factor.
  int extra = 0;
  std::int64_t span = 1;
  while (span < oracle.ref_factor) {
    span *= grid.refinement();
    ++extra;
  }
  const int ref_level = finest + extra;
  if (ref_level > grid.max_level()) {
    throw PlanningError("planning/level_overflow",
                        "strong error reference level exceeds max_level");
  }
  const double ref_step = grid.step(ref_level);
  const std::int64_t ref_steps = grid.steps_at(ref_level);

  detail::StrongAccumulator init;
  init.squared.resize(levels.size());
  init.absolute.resize(levels.size());
  auto totals = parallel_reduce(
      n_paths, exec, init,
      [&](detail::StrongAccumulator& acc, std::int64_t i) {
        RandomStream stream = make_stream(seed, ref_level, i, StreamRole::standalone);
        const Matrix ref_increments =
            brownian_increments(stream, ref_steps, ref_step, problem.noise_dim);
        std::vector<double> reference;
        if (oracle.exact_terminal) {
          reference = oracle.exact_terminal(ref_increments, ref_step);
        } else {
          reference =
              simulate_terminal(problem, scheme, truncation, ref_step, ref_increments)
                  .terminal_state;
        }
        const bool reference_finite = detail::all_finite(reference);
        for (std::size_t j = 0; j < levels.size(); ++j) {
          const int level = levels[j];
          const int factor = static_cast<int>(grid.steps_at(ref_level - level));
          const Matrix level_increments = aggregate_increments(ref_increments, factor);
          const PathOutcome outcome = simulate_terminal(problem, scheme, truncation,
                                                        grid.step(level), level_increments);
          double error = std::numeric_limits<double>::quiet_NaN();
          if (reference_finite && outcome.finite) {
            error = detail::state_distance(outcome.terminal_state, reference);
          }
          acc.squared[j].add(error * error);
          acc.absolute[j].add(error);
        }
      },
      [](detail::StrongAccumulator& acc, const detail::StrongAccumulator& other) {
        acc.merge(other);
      });

  std::vector<StrongErrorPoint> points;
  points.reserve(levels.size());
  for (std::size_t j = 0; j < levels.size(); ++j) {
    StrongErrorPoint point;
    point.level = levels[j];
    point.step = grid.step(levels[j]);
    point.rms_error = std::sqrt(totals.squared[j].mean);
    point.mean_abs_error = totals.absolute[j].mean;
    point.n_nonfinite = totals.absolute[j].n_nonfinite;
    points.push_back(point);
  }
  return points;
}

// ---------------------------------------------------------------------------
// Level-variance decay of the coupled differences.
// ---------------------------------------------------------------------------

struct VarianceDecayPoint {
  int level = 0;
  double step = 0.0;
  double variance = 0.0;  // sample variance of Y_l over finite samples
  double mean = 0.0;
  std::int64_t n_nonfinite = 0;
};

inline std::vector<VarianceDecayPoint> variance_decay_curve(
    const SdeProblem& problem, const Payoff& payoff, SchemeKind scheme,
    const TruncationConfig* truncation, const LevelGrid& grid, std::span<const int> levels,
    std::int64_t n_paths, std::uint64_t seed, const ExecPolicy& exec = {}) {
  if (levels.empty()) {
    throw std::invalid_argument("variance_decay_curve: need at least one level");
  }
  std::vector<VarianceDecayPoint> points;
  points.reserve(levels.size());
  for (const int level : levels) {
    if (level < 1) {
      throw std::invalid_argument("variance_decay_curve: levels must be >= 1");
    }
    const LevelEstimate estimate =
        run_level(problem, payoff, scheme, truncation, grid, level, n_paths, seed, exec);
    VarianceDecayPoint point;
    point.level = level;
    point.step = grid.step(level);
    point.variance = estimate.sample_variance;
    point.mean = estimate.mean;
    point.n_nonfinite = estimate.n_nonfinite;
    points.push_back(point);
  }
  return points;
}

// ---------------------------------------------------------------------------
// Cost curve: multilevel vs single-grid Monte Carlo over an accuracy sweep.
// ---------------------------------------------------------------------------

struct CostCurvePoint {
  double epsilon = 0.0;
  double mlmc_cost = 0.0;
  double mc_cost = 0.0;
  double mlmc_estimate = 0.0;
  double mc_estimate = 0.0;
  int mlmc_finest_level = 0;
  int mc_level = 0;
  std::int64_t mc_samples = 0;
};

struct CostCurve {
  std::vector<CostCurvePoint> points;
  double payoff_variance = 0.0;  // pilot estimate used for the MC budgets
};

namespace detail {

inline constexpr std::uint64_t kMlmcSweepTag = 0x4D4C4D43;   // per-epsilon MLMC runs
inline constexpr std::uint64_t kMcSweepTag = 0x53544443;     // per-epsilon MC runs
inline constexpr std::uint64_t kVariancePilotTag = 0x56415250;

}  // namespace detail

// For each accuracy in `epsilons` (strictly decreasing, each in (0, e^-1)),
// run the multilevel estimator and a standard Monte Carlo estimator tuned to
// the same MSE budget, recording measured costs in Euler steps.  The payoff
// variance for the MC budgets comes from one shared pilot (256 paths on a
// moderate grid).  Each run derives its own seed from `seed`, so points are
// reproducible individually.
inline CostCurve cost_curve(const SdeProblem& problem, const Payoff& payoff, SchemeKind scheme,
                            const TruncationConfig* truncation, const RateConstants& constants,
                            const LevelGrid& grid, std::span<const double> epsilons,
                            std::uint64_t seed, const ExecPolicy& exec = {}) {
  if (epsilons.empty()) {
    throw PlanningError("planning/bad_epsilon", "cost curve needs at least one accuracy");
  }
  const double e_inv = std::exp(-1.0);
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    if (!(epsilons[j] > 0.0) || !(epsilons[j] < e_inv)) {
      throw PlanningError("planning/bad_epsilon",
                          "cost curve accuracies must lie in (0, e^-1)");
    }
    if (j > 0 && !(epsilons[j] < epsilons[j - 1])) {
      throw PlanningError("planning/epsilons_not_decreasing",
                          "cost curve accuracies must be strictly decreasing");
    }
  }

  // Shared payoff-variance pilot for the standard MC budgets.
  const int pilot_level = std::min(4, grid.max_level());
  const std::uint64_t pilot_seed = split_seed(seed, detail::kVariancePilotTag);
  const StandardMcResult pilot = run_standard_mc(problem, payoff, scheme, truncation, grid,
                                                 pilot_level, 256, pilot_seed, exec);
  if (!std::isfinite(pilot.sample_variance)) {
    throw PlanningError("planning/pilot_divergent",
                        "payoff variance pilot produced no finite samples");
  }

  CostCurve curve;
  curve.payoff_variance = pilot.sample_variance;
  curve.points.reserve(epsilons.size());
  for (std::size_t j = 0; j < epsilons.size(); ++j) {
    const double epsilon = epsilons[j];
    const std::uint64_t mlmc_seed = split_seed(seed, detail::kMlmcSweepTag + 2 * j);
    const std::uint64_t mc_seed = split_seed(seed, detail::kMcSweepTag + 2 * j);
    const MlmcResult mlmc =
        run_mlmc(problem, payoff, scheme, truncation, constants, grid, epsilon, mlmc_seed, exec);
    const McBudget budget = standard_mc_budget(constants, grid, epsilon, curve.payoff_variance);
    const StandardMcResult mc = run_standard_mc(problem, payoff, scheme, truncation, grid,
                                                budget.level, budget.n_samples, mc_seed, exec);
    CostCurvePoint point;
    point.epsilon = epsilon;
    point.mlmc_cost = mlmc.total_cost;
    point.mc_cost = mc.cost;
    point.mlmc_estimate = mlmc.estimate;
    point.mc_estimate = mc.estimate;
    point.mlmc_finest_level = mlmc.plan.finest_level;
    point.mc_level = budget.level;
    point.mc_samples = budget.n_samples;
    curve.points.push_back(point);
  }
  return curve;
}

}  // namespace mlmc
