#pragma once

#include <cstdint>
#include <stdexcept>

#include "mlmc/errors.hpp"

namespace mlmc {

namespace detail {

// refinement^exponent as int64, throwing if it would not fit.
inline std::int64_t checked_ipow(int base, int exponent) {
  if (base < 2) throw std::invalid_argument("checked_ipow: base must be >= 2");
  if (exponent < 0) throw std::invalid_argument("checked_ipow: exponent must be >= 0");
  const std::int64_t limit = std::int64_t{1} << 62;
  std::int64_t r = 1;
  for (int i = 0; i < exponent; ++i) {
    if (r > limit / base) {
      throw std::overflow_error("checked_ipow: result exceeds 2^62");
    }
    r *= base;
  }
  return r;
}

// refinement^exponent in double via repeated multiplication.  Exact for any
// power of two and for small exponents of other bases; used so that step
// sizes at positive and negative levels come from one consistent rule.
inline double ipow_d(int base, int exponent) {
  double r = 1.0;
  for (int i = 0; i < exponent; ++i) r *= static_cast<double>(base);
  return r;
}

}  // namespace detail

// Geometric family of time grids on [0, T]: level l uses step size
// s_l = T * refinement^(-l), i.e. refinement^l uniform steps.
class LevelGrid {
 public:
  LevelGrid(int refinement, double horizon, int max_level)
      : refinement_(refinement), horizon_(horizon), max_level_(max_level) {
    if (refinement < 2) {
      throw ConfigError("config/bad_refinement", "refinement",
                        "grid refinement factor must be an integer >= 2");
    }
    if (!(horizon > 0.0)) {
      throw ConfigError("config/bad_horizon", "horizon", "time horizon must be positive");
    }
    if (max_level < 0) {
      throw ConfigError("config/bad_levels", "max_level", "max_level must be >= 0");
    }
    // Fail early if the deepest level would overflow the step counter.
    detail::checked_ipow(refinement, max_level);
  }

  int refinement() const { return refinement_; }
  double horizon() const { return horizon_; }
  int max_level() const { return max_level_; }

  // Step size s_l.  Defined for any integer level (negative levels give
  // steps coarser than the horizon) so that planning formulas can be
  // evaluated before clamping to [0, max_level].
  double step(int level) const {
    if (level >= 0) return horizon_ / detail::ipow_d(refinement_, level);
    return horizon_ * detail::ipow_d(refinement_, -level);
  }

  // Number of steps at a level actually simulated; requires 0 <= level <= max_level.
  std::int64_t steps_at(int level) const {
    if (level < 0 || level > max_level_) {
      throw std::invalid_argument("LevelGrid::steps_at: level out of range");
    }
    return detail::checked_ipow(refinement_, level);
  }

 private:
  int refinement_;
  double horizon_;
  int max_level_;
};

}  // namespace mlmc
