#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include "mlmc/matrix.hpp"

namespace mlmc {

// ---------------------------------------------------------------------------
// Philox4x32-10 counter-based generator.
//
// Every Monte Carlo sample owns an independent stream addressed by
// (seed, level, sample index, role).  Streams are stateless functions of the
// address, so results are reproducible regardless of scheduling: the i-th
// draw of stream (seed, l, n, role) is the same no matter which thread asks
// for it or in which order samples are processed.
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
inline constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;  // golden ratio
inline constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;  // sqrt(3) - 1

inline std::uint32_t mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  return static_cast<std::uint32_t>(product);
}

}  // namespace detail

// One 10-round Philox4x32 block: 128-bit counter, 64-bit key -> 128 bits.
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
  for (int round = 0;; ++round) {
    std::uint32_t hi0, hi1;
    const std::uint32_t lo0 = detail::mulhilo32(detail::kPhiloxM0, ctr[0], hi0);
    const std::uint32_t lo1 = detail::mulhilo32(detail::kPhiloxM1, ctr[2], hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    if (round == 9) return ctr;
    key[0] += detail::kPhiloxW0;
    key[1] += detail::kPhiloxW1;
  }
}

// splitmix64 finalizer; used to derive decorrelated sub-seeds for auxiliary
// runs (pilots, cost-curve sweeps) from one user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ (0x9E3779B97F4A7C15ull * (tag + 1)));
}

// Role of a stream within an estimator; kept in the counter so that the same
// (seed, level, sample) triple used by different estimator kinds cannot
// collide.
enum class StreamRole : std::uint32_t {
  mlmc_pair = 0,   // coupled fine/coarse difference samples
  standalone = 1,  // plain single-grid paths (level-0 term, standard MC)
};

// A deterministic stream of standard normal variates.
//
// Counter layout (one 128-bit counter per generated block):
//   word0 = sample index, low 32 bits
//   word1 = sample index, high 32 bits
//   word2 = block index within the stream
//   word3 = level | (role << 28)
// Key = 64-bit seed.  Each block yields two N(0,1) draws via Box-Muller on
// two 53-bit uniforms in (0, 1).
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t level, std::uint64_t sample_index,
               StreamRole role)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        sample_lo_(static_cast<std::uint32_t>(sample_index)),
        sample_hi_(static_cast<std::uint32_t>(sample_index >> 32)),
        tag_(level | (static_cast<std::uint32_t>(role) << 28)) {
    if (level >= (1u << 28)) {
      throw std::invalid_argument("RandomStream: level must be < 2^28");
    }
  }

  // Next standard normal draw.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto words = philox4x32_10({sample_lo_, sample_hi_, block_, tag_}, key_);
    ++block_;
    const std::uint64_t a =
        static_cast<std::uint64_t>(words[0]) | (static_cast<std::uint64_t>(words[1]) << 32);
    const std::uint64_t b =
        static_cast<std::uint64_t>(words[2]) | (static_cast<std::uint64_t>(words[3]) << 32);
    // 53-bit uniforms offset by half an ulp so u is never 0 or 1.
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(b >> 11) + 0.5) * 0x1.0p-53;
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t sample_lo_;
  std::uint32_t sample_hi_;
  std::uint32_t tag_;
  std::uint32_t block_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline RandomStream make_stream(std::uint64_t seed, int level, std::int64_t sample_index,
                                StreamRole role) {
  if (level < 0) throw std::invalid_argument("make_stream: level must be >= 0");
  if (sample_index < 0) throw std::invalid_argument("make_stream: sample index must be >= 0");
  return RandomStream(seed, static_cast<std::uint32_t>(level),
                      static_cast<std::uint64_t>(sample_index), role);
}

// ---------------------------------------------------------------------------
// Brownian increment tables.
// ---------------------------------------------------------------------------

// n_steps x noise_dim table of independent Brownian increments over step
// size dt, filled row by row (step-major) from `stream`.
inline Matrix brownian_increments(RandomStream& stream, std::int64_t n_steps, double dt,
                                  int noise_dim) {
  if (n_steps < 1) throw std::invalid_argument("brownian_increments: need n_steps >= 1");
  if (!(dt > 0.0)) throw std::invalid_argument("brownian_increments: need dt > 0");
  if (noise_dim < 1) throw std::invalid_argument("brownian_increments: need noise_dim >= 1");
  const double scale = std::sqrt(dt);
  Matrix increments(n_steps, noise_dim);
  for (std::int64_t k = 0; k < n_steps; ++k) {
    for (int q = 0; q < noise_dim; ++q) {
      increments(k, q) = scale * stream.next_normal();
    }
  }
  return increments;
}

// Sum consecutive groups of `factor` rows (in ascending row order) to obtain
// increments of the coarser grid driven by the same Brownian path.
inline Matrix aggregate_increments(const Matrix& fine, int factor) {
  if (factor < 1) throw std::invalid_argument("aggregate_increments: factor must be >= 1");
  if (fine.rows() % factor != 0) {
    throw std::invalid_argument("aggregate_increments: rows not divisible by factor");
  }
  Matrix coarse(fine.rows() / factor, fine.cols());
  for (std::int64_t j = 0; j < coarse.rows(); ++j) {
    for (std::int64_t q = 0; q < fine.cols(); ++q) {
      double sum = 0.0;
      for (int r = 0; r < factor; ++r) {
        sum += fine(j * factor + r, q);
      }
      coarse(j, q) = sum;
    }
  }
  return coarse;
}

struct CoupledIncrements {
  Matrix fine;    // refinement^level rows
  Matrix coarse;  // refinement^(level-1) rows, row j = sum of fine rows jM..jM+M-1
  int refinement = 0;
};

// Fine-grid increments at `level` plus their coarse aggregation at level-1,
// both driven by the same underlying path.  Requires level >= 1.
template <class Grid>
CoupledIncrements coupled_increments(RandomStream& stream, const Grid& grid, int level,
                                     int noise_dim) {
  if (level < 1) throw std::invalid_argument("coupled_increments: level must be >= 1");
  Matrix fine = brownian_increments(stream, grid.steps_at(level), grid.step(level), noise_dim);
  Matrix coarse = aggregate_increments(fine, grid.refinement());
  return {std::move(fine), std::move(coarse), grid.refinement()};
}

}  // namespace mlmc
