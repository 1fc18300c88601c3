#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mlmc/errors.hpp"

namespace mlmc {

// Truncation policy for the truncated Euler-Maruyama scheme.
//
// omega(u) bounds the coefficient growth:  sup_{|x|<=u} max(|mu(x)|,
// |sigma(x)|) <= omega(u) for u >= 1, with omega strictly increasing and
// unbounded.  h(s) converts a step size into a growth budget; it must be
// decreasing with h(s) -> infinity as s -> 0 and satisfy
// s^(1/4) h(s) <= 1 on (0, s_star].  The truncation radius at step s is
// omega^{-1}(h(s)).
struct TruncationConfig {
  std::function<double(double)> omega;
  std::function<double(double)> omega_inverse;
  std::function<double(double)> h;
  double s_star = 1.0;

  // Power-law parameters recorded for reports; NaN when the callables are
  // not from the power-law factory.
  double omega_coeff = std::numeric_limits<double>::quiet_NaN();
  double omega_exponent = std::numeric_limits<double>::quiet_NaN();
  double h_coeff = std::numeric_limits<double>::quiet_NaN();
  double h_exponent = std::numeric_limits<double>::quiet_NaN();
};

// omega(u) = omega_coeff * u^omega_exponent,  h(s) = h_coeff * s^h_exponent.
inline TruncationConfig power_law_truncation(double omega_coeff, double omega_exponent,
                                             double h_coeff, double h_exponent,
                                             double s_star = 1.0) {
  if (!(omega_coeff > 0.0) || !(omega_exponent > 0.0)) {
    throw ConfigError("config/bad_truncation", "truncation.omega",
                      "omega power law needs positive coefficient and exponent");
  }
  if (!(h_coeff > 0.0) || !(h_exponent < 0.0)) {
    throw ConfigError("config/bad_truncation", "truncation.h",
                      "h power law needs positive coefficient and negative exponent");
  }
  TruncationConfig config;
  config.omega = [omega_coeff, omega_exponent](double u) {
    return omega_coeff * std::pow(u, omega_exponent);
  };
  config.omega_inverse = [omega_coeff, omega_exponent](double v) {
    return std::pow(v / omega_coeff, 1.0 / omega_exponent);
  };
  config.h = [h_coeff, h_exponent](double s) { return h_coeff * std::pow(s, h_exponent); };
  config.s_star = s_star;
  config.omega_coeff = omega_coeff;
  config.omega_exponent = omega_exponent;
  config.h_coeff = h_coeff;
  config.h_exponent = h_exponent;
  return config;
}

// Check a truncation policy on a sampled grid of arguments.  Hard violations
// (non-monotone omega/h, inconsistent inverse, step-budget constraint
// s^(1/4) h(s) <= 1, s_star out of (0,1]) throw ConfigError; soft issues are
// returned as human-readable warnings.
inline std::vector<std::string> validate_truncation(const TruncationConfig& config) {
  if (!config.omega || !config.omega_inverse || !config.h) {
    throw ConfigError("config/bad_truncation", "truncation",
                      "omega, omega_inverse, and h must all be set");
  }
  if (!(config.s_star > 0.0) || config.s_star > 1.0) {
    throw ConfigError("config/bad_s_star", "truncation.s_star", "s_star must lie in (0, 1]");
  }
  // omega: strictly increasing with a consistent inverse on u in [2^-10, 2^6].
  double previous_omega = -std::numeric_limits<double>::infinity();
  for (int k = -10; k <= 6; ++k) {
    const double u = std::ldexp(1.0, k);
    const double w = config.omega(u);
    if (!std::isfinite(w) || w <= previous_omega) {
      throw ConfigError("config/bad_truncation", "truncation.omega",
                        "omega must be finite and strictly increasing");
    }
    previous_omega = w;
    const double back = config.omega_inverse(w);
    if (!(std::fabs(back - u) <= 1e-12 * std::max(1.0, u))) {
      throw ConfigError("config/bad_truncation", "truncation.omega_inverse",
                        "omega_inverse(omega(u)) must equal u");
    }
  }
  // h: positive, strictly increasing as the step shrinks, and within the
  // step budget on s in { s_star * 2^-k : k = 0..40 }.
  double previous_h = -std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 40; ++k) {
    const double s = std::ldexp(config.s_star, -k);
    const double hs = config.h(s);
    if (!std::isfinite(hs) || hs <= 0.0 || hs <= previous_h) {
      throw ConfigError("config/bad_truncation", "truncation.h",
                        "h must be finite, positive, and strictly decreasing in s");
    }
    previous_h = hs;
    if (std::pow(s, 0.25) * hs > 1.0 + 1e-9) {
      throw ConfigError("config/bad_truncation", "truncation.h",
                        "h violates the step budget s^(1/4) h(s) <= 1");
    }
  }
  std::vector<std::string> warnings;
  if (config.h(config.s_star) < config.omega(2.0)) {
    warnings.push_back(
        "h(s_star) < omega(2): truncation radius is below 2 at the coarsest step; "
        "strong convergence guarantees may need a smaller s_star");
  }
  return warnings;
}

// Truncation radius omega^{-1}(h(step)).  The theory assumes step <= s_star;
// larger steps are still computed (callers surface a warning) so that coarse
// exploratory grids do not hard-fail.
inline double truncation_radius(const TruncationConfig& config, double step) {
  if (!(step > 0.0)) {
    throw std::invalid_argument("truncation_radius: step must be positive");
  }
  const double radius = config.omega_inverse(config.h(step));
  if (!std::isfinite(radius) || radius <= 0.0) {
    throw std::invalid_argument("truncation_radius: omega_inverse(h(step)) must be positive");
  }
  return radius;
}

namespace detail {

// Euclidean norm with overflow-safe scaling by the largest magnitude.
inline double euclidean_norm(std::span<const double> x) {
  double amax = 0.0;
  for (const double v : x) amax = std::max(amax, std::fabs(v));
  if (amax == 0.0) return 0.0;
  if (!std::isfinite(amax)) return amax;
  double sum = 0.0;
  for (const double v : x) {
    const double scaled = v / amax;
    sum += scaled * scaled;
  }
  return amax * std::sqrt(sum);
}

}  // namespace detail

// Radial clamp pi(x) = (|x| ^ radius) * x/|x|: the identity inside the ball
// of the given radius (bit-exact copy), projection onto its boundary
// outside.  pi(0) = 0.
inline void truncate_state(std::span<const double> x, double radius, std::span<double> out) {
  if (!(radius > 0.0)) throw std::invalid_argument("truncate_state: radius must be positive");
  if (x.size() != out.size()) {
    throw std::invalid_argument("truncate_state: input/output size mismatch");
  }
  const double norm = detail::euclidean_norm(x);
  if (norm <= radius) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
    return;
  }
  const double scale = radius / norm;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * scale;
}

inline std::vector<double> truncate_state(const std::vector<double>& x, double radius) {
  std::vector<double> out(x.size());
  truncate_state(std::span<const double>(x), radius, std::span<double>(out));
  return out;
}

}  // namespace mlmc
