#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mlmc/analysis.hpp"
#include "mlmc/sde.hpp"
#include "mlmc/truncation.hpp"

namespace mlmc {

// "lewis35": dx = (x - x^3) dt + |x|^{3/2} dB.  Superlinear drift and
// diffusion; the classic Euler scheme diverges on it while the truncated
// scheme converges.
inline SdeProblem make_lewis35(double x0, double horizon) {
  SdeProblem problem;
  problem.name = "lewis35";
  problem.state_dim = 1;
  problem.noise_dim = 1;
  problem.initial_value = {x0};
  problem.horizon = horizon;
  problem.drift = [](std::span<const double> x, std::span<double> out) {
    const double v = x[0];
    out[0] = v - v * v * v;
  };
  problem.diffusion = [](std::span<const double> x, std::span<double> out) {
    const double a = std::fabs(x[0]);
    out[0] = a * std::sqrt(a);
  };
  return problem;
}

// Coefficient growth bound for lewis35: |x - x^3| and |x|^{3/2} are both at
// most u + u^3 <= 2 u^3 on |x| <= u for u >= 1, so omega(u) = 2 u^3.  Paired
// with h(s) = s^{-1/4} this gives radius (h(s)/2)^{1/3}.
inline TruncationConfig lewis35_truncation(double s_star = 1.0) {
  return power_law_truncation(2.0, 3.0, 1.0, -0.25, s_star);
}

// Geometric Brownian motion dx = mu x dt + sigma x dB; globally Lipschitz,
// with the closed-form terminal value x0 exp((mu - sigma^2/2) T + sigma B_T).
inline SdeProblem make_gbm(double mu, double sigma, double x0, double horizon) {
  SdeProblem problem;
  problem.name = "gbm";
  problem.state_dim = 1;
  problem.noise_dim = 1;
  problem.initial_value = {x0};
  problem.horizon = horizon;
  problem.drift = [mu](std::span<const double> x, std::span<double> out) { out[0] = mu * x[0]; };
  problem.diffusion = [sigma](std::span<const double> x, std::span<double> out) {
    out[0] = sigma * x[0];
  };
  return problem;
}

// |mu x| and |sigma x| are bounded by max(|mu|,|sigma|) u on |x| <= u; any
// omega at least that steep works.  Use omega(u) = c u with
// c = max(|mu|, |sigma|, 1).
inline TruncationConfig gbm_truncation(double mu, double sigma, double s_star = 1.0) {
  const double c = std::max({std::fabs(mu), std::fabs(sigma), 1.0});
  return power_law_truncation(c, 1.0, 1.0, -0.25, s_star);
}

// Exact-terminal oracle for GBM driven by the reference increments.
inline StrongOracle gbm_exact_oracle(double mu, double sigma, double x0) {
  StrongOracle oracle;
  oracle.exact_terminal = [mu, sigma, x0](const Matrix& increments, double ref_step) {
    double brownian_total = 0.0;
    for (std::int64_t k = 0; k < increments.rows(); ++k) brownian_total += increments(k, 0);
    const double horizon = ref_step * static_cast<double>(increments.rows());
    return std::vector<double>{
        x0 * std::exp((mu - 0.5 * sigma * sigma) * horizon + sigma * brownian_total)};
  };
  return oracle;
}

// Degenerate SDE dx = 0 dt + 0 dB; every scheme reproduces x0 exactly, which
// pins down bookkeeping (estimates, costs, telescoping) without statistics.
inline SdeProblem make_zero(double x0, double horizon) {
  SdeProblem problem;
  problem.name = "zero";
  problem.state_dim = 1;
  problem.noise_dim = 1;
  problem.initial_value = {x0};
  problem.horizon = horizon;
  problem.drift = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  problem.diffusion = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  return problem;
}

inline TruncationConfig zero_truncation(double s_star = 1.0) {
  return power_law_truncation(1.0, 1.0, 1.0, -0.25, s_star);
}

// ---------------------------------------------------------------------------
// Payoffs.
// ---------------------------------------------------------------------------

inline Payoff make_identity_payoff() {
  Payoff payoff;
  payoff.name = "identity";
  payoff.eval = [](std::span<const double> x) { return x[0]; };
  payoff.growth_constant = 1.0;
  return payoff;
}

inline Payoff make_square_payoff() {
  Payoff payoff;
  payoff.name = "square";
  payoff.eval = [](std::span<const double> x) { return x[0] * x[0]; };
  payoff.growth_constant = 2.0;
  return payoff;
}

inline Payoff make_call_payoff(double strike) {
  Payoff payoff;
  payoff.name = "call";
  payoff.eval = [strike](std::span<const double> x) { return std::max(x[0] - strike, 0.0); };
  payoff.growth_constant = 1.0;
  return payoff;
}

}  // namespace mlmc
