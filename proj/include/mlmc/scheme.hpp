#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlmc/grid.hpp"
#include "mlmc/rng.hpp"
#include "mlmc/sde.hpp"
#include "mlmc/truncation.hpp"

namespace mlmc {

enum class SchemeKind {
  classic_em,    // X_{k+1} = X_k + mu(X_k) s + sigma(X_k) dB_k
  truncated_em,  // coefficients evaluated at pi(X_k); the iterate itself is
                 // never clamped
};

// Result of simulating one path to the terminal time.  If a non-finite state
// appears, simulation stops there: `finite` is false, `blowup_step` is the
// 0-based index of the step that produced it, and `terminal_state` holds the
// non-finite state.
struct PathOutcome {
  std::vector<double> terminal_state;
  bool finite = true;
  std::int64_t steps_taken = 0;
  std::int64_t blowup_step = -1;
};

namespace detail {

inline bool all_finite(std::span<const double> x) {
  for (const double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

// One-step kernel with preallocated scratch and a precomputed truncation
// radius, so path loops do not recompute omega^{-1}(h(s)) or allocate.
class EmStepper {
 public:
  EmStepper(const SdeProblem& problem, SchemeKind scheme, const TruncationConfig* truncation,
            double step)
      : problem_(problem), scheme_(scheme), step_(step) {
    problem.validate();
    if (!(step > 0.0)) throw std::invalid_argument("EmStepper: step must be positive");
    if (scheme == SchemeKind::truncated_em) {
      if (truncation == nullptr) {
        throw std::invalid_argument("EmStepper: truncated_em requires a truncation config");
      }
      radius_ = truncation_radius(*truncation, step);
    }
    allocate_scratch();
  }

  // Truncated scheme with an explicitly given radius.
  EmStepper(const SdeProblem& problem, double radius, double step)
      : problem_(problem), scheme_(SchemeKind::truncated_em), step_(step), radius_(radius) {
    problem.validate();
    if (!(step > 0.0)) throw std::invalid_argument("EmStepper: step must be positive");
    if (!(radius > 0.0)) throw std::invalid_argument("EmStepper: radius must be positive");
    allocate_scratch();
  }

  double step_size() const { return step_; }

  // out = x + mu(arg) s + sigma(arg) dB, where arg = pi(x) for truncated_em
  // and arg = x for classic_em.  out may alias x.
  void advance(std::span<const double> x, std::span<const double> dB, std::span<double> out) {
    const int d = problem_.state_dim;
    const int m = problem_.noise_dim;
    std::span<const double> argument = x;
    if (scheme_ == SchemeKind::truncated_em) {
      truncate_state(x, radius_, std::span<double>(argument_));
      argument = argument_;
    }
    problem_.drift(argument, std::span<double>(drift_));
    problem_.diffusion(argument, std::span<double>(diffusion_));
    for (int i = 0; i < d; ++i) {
      double value = x[i] + drift_[i] * step_;
      for (int q = 0; q < m; ++q) {
        value += diffusion_[static_cast<std::size_t>(i) * m + q] * dB[q];
      }
      out[i] = value;
    }
  }

 private:
  void allocate_scratch() {
    const std::size_t d = static_cast<std::size_t>(problem_.state_dim);
    const std::size_t m = static_cast<std::size_t>(problem_.noise_dim);
    argument_.resize(d);
    drift_.resize(d);
    diffusion_.resize(d * m);
  }

  const SdeProblem& problem_;
  SchemeKind scheme_;
  double step_;
  double radius_ = 0.0;
  std::vector<double> argument_;
  std::vector<double> drift_;
  std::vector<double> diffusion_;
};

}  // namespace detail

// Single explicit Euler-Maruyama step (allocating convenience wrapper).
inline std::vector<double> em_step(const SdeProblem& problem, SchemeKind scheme,
                                   const TruncationConfig* truncation, double step,
                                   std::span<const double> x, std::span<const double> dB) {
  if (static_cast<int>(x.size()) != problem.state_dim ||
      static_cast<int>(dB.size()) != problem.noise_dim) {
    throw std::invalid_argument("em_step: state/noise dimension mismatch");
  }
  detail::EmStepper stepper(problem, scheme, truncation, step);
  std::vector<double> out(x.size());
  stepper.advance(x, dB, std::span<double>(out));
  return out;
}

// Truncated Euler-Maruyama step with the truncation radius given directly.
inline std::vector<double> truncated_em_step(const SdeProblem& problem, double radius,
                                             double step, std::span<const double> x,
                                             std::span<const double> dB) {
  if (static_cast<int>(x.size()) != problem.state_dim ||
      static_cast<int>(dB.size()) != problem.noise_dim) {
    throw std::invalid_argument("truncated_em_step: state/noise dimension mismatch");
  }
  detail::EmStepper stepper(problem, radius, step);
  std::vector<double> out(x.size());
  stepper.advance(x, dB, std::span<double>(out));
  return out;
}

namespace detail {

inline void check_horizon(const SdeProblem& problem, double step, std::int64_t n_steps) {
  const double total = step * static_cast<double>(n_steps);
  if (std::fabs(total - problem.horizon) > 1e-12 * problem.horizon) {
    throw std::invalid_argument("simulate_terminal: n_steps * step must equal the horizon");
  }
}

template <class DrawRow>
PathOutcome run_path(const SdeProblem& problem, detail::EmStepper& stepper, std::int64_t n_steps,
                     DrawRow&& draw_row) {
  PathOutcome outcome;
  outcome.terminal_state = problem.initial_value;
  std::span<double> state(outcome.terminal_state);
  std::vector<double> dB(static_cast<std::size_t>(problem.noise_dim));
  for (std::int64_t k = 0; k < n_steps; ++k) {
    draw_row(std::span<double>(dB));
    stepper.advance(state, dB, state);
    ++outcome.steps_taken;
    if (!all_finite(state)) {
      outcome.finite = false;
      outcome.blowup_step = k;
      return outcome;
    }
  }
  return outcome;
}

}  // namespace detail

// Simulate one path from a precomputed increment table (rows = steps).
inline PathOutcome simulate_terminal(const SdeProblem& problem, SchemeKind scheme,
                                     const TruncationConfig* truncation, double step,
                                     const Matrix& increments) {
  problem.validate();
  if (increments.cols() != problem.noise_dim) {
    throw std::invalid_argument("simulate_terminal: increment table has wrong noise dimension");
  }
  detail::check_horizon(problem, step, increments.rows());
  detail::EmStepper stepper(problem, scheme, truncation, step);
  std::int64_t row = 0;
  return detail::run_path(problem, stepper, increments.rows(), [&](std::span<double> dB) {
    const auto source = increments.row(row++);
    for (std::size_t q = 0; q < dB.size(); ++q) dB[q] = source[q];
  });
}

// Simulate one path drawing increments from `stream` on the fly, in the same
// order brownian_increments would fill them; produces the identical outcome
// without materializing the table.
inline PathOutcome simulate_terminal(const SdeProblem& problem, SchemeKind scheme,
                                     const TruncationConfig* truncation, double step,
                                     std::int64_t n_steps, RandomStream& stream) {
  problem.validate();
  if (n_steps < 1) throw std::invalid_argument("simulate_terminal: need n_steps >= 1");
  detail::check_horizon(problem, step, n_steps);
  detail::EmStepper stepper(problem, scheme, truncation, step);
  const double scale = std::sqrt(step);
  return detail::run_path(problem, stepper, n_steps, [&](std::span<double> dB) {
    for (std::size_t q = 0; q < dB.size(); ++q) dB[q] = scale * stream.next_normal();
  });
}

// Simulate the coupled pair (fine at `level`, coarse at `level - 1`) driven
// by one Brownian path drawn from `stream`.  Coarse increments are the sums
// of the refinement-many fine increments they span, accumulated in ascending
// step order.  Each grid uses the truncation radius of its own step size.
// Increments are drawn exactly while at least one of the two paths is still
// finite, in fine-grid order, so the outcome matches simulating both paths
// from the table returned by coupled_increments.
inline std::pair<PathOutcome, PathOutcome> simulate_coupled_pair(
    const SdeProblem& problem, SchemeKind scheme, const TruncationConfig* truncation,
    const LevelGrid& grid, int level, RandomStream& stream) {
  problem.validate();
  if (level < 1 || level > grid.max_level()) {
    throw std::invalid_argument("simulate_coupled_pair: level must be in [1, max_level]");
  }
  const int refinement = grid.refinement();
  const double fine_step = grid.step(level);
  const std::int64_t coarse_steps = grid.steps_at(level - 1);
  detail::EmStepper fine_stepper(problem, scheme, truncation, fine_step);
  detail::EmStepper coarse_stepper(problem, scheme, truncation, grid.step(level - 1));

  PathOutcome fine, coarse;
  fine.terminal_state = problem.initial_value;
  coarse.terminal_state = problem.initial_value;
  const std::size_t m = static_cast<std::size_t>(problem.noise_dim);
  std::vector<double> fine_dB(m);
  std::vector<double> coarse_dB(m);
  const double scale = std::sqrt(fine_step);

  for (std::int64_t j = 0; j < coarse_steps && (fine.finite || coarse.finite); ++j) {
    std::fill(coarse_dB.begin(), coarse_dB.end(), 0.0);
    for (int r = 0; r < refinement; ++r) {
      for (std::size_t q = 0; q < m; ++q) {
        fine_dB[q] = scale * stream.next_normal();
        coarse_dB[q] += fine_dB[q];
      }
      if (fine.finite) {
        std::span<double> state(fine.terminal_state);
        fine_stepper.advance(state, fine_dB, state);
        ++fine.steps_taken;
        if (!detail::all_finite(state)) {
          fine.finite = false;
          fine.blowup_step = j * refinement + r;
        }
      }
    }
    if (coarse.finite) {
      std::span<double> state(coarse.terminal_state);
      coarse_stepper.advance(state, coarse_dB, state);
      ++coarse.steps_taken;
      if (!detail::all_finite(state)) {
        coarse.finite = false;
        coarse.blowup_step = j;
      }
    }
  }
  return {std::move(fine), std::move(coarse)};
}

}  // namespace mlmc
