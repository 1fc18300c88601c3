#include "mlmc/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "mlmc/grid.hpp"

namespace mlmc {
namespace {

// Known-answer vectors for Philox4x32-10, cross-checked against an
// independent reference implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = philox4x32_10({0u, 0u, 0u, 0u}, {0u, 0u});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerAllOnes) {
  const auto out = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                 {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                 {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(RandomStream, SameAddressSameSequence) {
  RandomStream a = make_stream(42, 3, 17, StreamRole::mlmc_pair);
  RandomStream b = make_stream(42, 3, 17, StreamRole::mlmc_pair);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_normal(), b.next_normal());
  }
}

TEST(RandomStream, DistinctAddressesDecorrelated) {
  RandomStream base = make_stream(42, 3, 17, StreamRole::mlmc_pair);
  RandomStream other_sample = make_stream(42, 3, 18, StreamRole::mlmc_pair);
  RandomStream other_level = make_stream(42, 4, 17, StreamRole::mlmc_pair);
  RandomStream other_role = make_stream(42, 3, 17, StreamRole::standalone);
  RandomStream other_seed = make_stream(43, 3, 17, StreamRole::mlmc_pair);
  const double first = base.next_normal();
  EXPECT_NE(first, other_sample.next_normal());
  EXPECT_NE(first, other_level.next_normal());
  EXPECT_NE(first, other_role.next_normal());
  EXPECT_NE(first, other_seed.next_normal());
}

TEST(RandomStream, DrawsAreFiniteAndVaried) {
  RandomStream stream = make_stream(7, 0, 0, StreamRole::standalone);
  std::set<double> seen;
  for (int i = 0; i < 1000; ++i) {
    const double z = stream.next_normal();
    EXPECT_TRUE(std::isfinite(z));
    seen.insert(z);
  }
  EXPECT_EQ(seen.size(), 1000u);  // repeats have probability ~0
}

// First four moments of N(0,1), each within 4 standard errors.
TEST(RandomStream, NormalMoments) {
  const std::int64_t n = 1000000;
  RandomStream stream = make_stream(2024, 0, 0, StreamRole::standalone);
  double sum = 0.0, sum2 = 0.0, sum3 = 0.0, sum4 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double z = stream.next_normal();
    sum += z;
    sum2 += z * z;
    sum3 += z * z * z;
    sum4 += z * z * z * z;
  }
  const double nd = static_cast<double>(n);
  // SE(mean) = 1/sqrt(n); SE(E z^2) = sqrt(2/n); SE(E z^3) = sqrt(15/n);
  // SE(E z^4) = sqrt(96/n).
  EXPECT_NEAR(sum / nd, 0.0, 4.0 / std::sqrt(nd));
  EXPECT_NEAR(sum2 / nd, 1.0, 4.0 * std::sqrt(2.0 / nd));
  EXPECT_NEAR(sum3 / nd, 0.0, 4.0 * std::sqrt(15.0 / nd));
  EXPECT_NEAR(sum4 / nd, 3.0, 4.0 * std::sqrt(96.0 / nd));
}

TEST(RandomStream, InvalidAddressesRejected) {
  EXPECT_THROW(make_stream(1, -1, 0, StreamRole::standalone), std::invalid_argument);
  EXPECT_THROW(make_stream(1, 0, -1, StreamRole::standalone), std::invalid_argument);
  EXPECT_THROW(make_stream(1, 1 << 28, 0, StreamRole::standalone), std::invalid_argument);
}

TEST(SplitSeed, DeterministicAndSensitive) {
  EXPECT_EQ(split_seed(42, 7), split_seed(42, 7));
  EXPECT_NE(split_seed(42, 7), split_seed(42, 8));
  EXPECT_NE(split_seed(42, 7), split_seed(43, 7));
  EXPECT_NE(split_seed(0, 0), 0u);
}

TEST(BrownianIncrements, ShapeAndScaling) {
  RandomStream stream = make_stream(5, 2, 9, StreamRole::mlmc_pair);
  const double dt = 0.25;
  const Matrix increments = brownian_increments(stream, 8, dt, 3);
  ASSERT_EQ(increments.rows(), 8);
  ASSERT_EQ(increments.cols(), 3);
  // Entries are sqrt(dt) times the stream's normals in row-major order.
  RandomStream replay = make_stream(5, 2, 9, StreamRole::mlmc_pair);
  const double scale = std::sqrt(dt);
  for (std::int64_t k = 0; k < 8; ++k) {
    for (std::int64_t q = 0; q < 3; ++q) {
      EXPECT_EQ(increments(k, q), scale * replay.next_normal());
    }
  }
}

TEST(BrownianIncrements, RejectsDegenerateArguments) {
  RandomStream stream = make_stream(5, 0, 0, StreamRole::standalone);
  EXPECT_THROW(brownian_increments(stream, 0, 0.5, 1), std::invalid_argument);
  EXPECT_THROW(brownian_increments(stream, 4, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(brownian_increments(stream, 4, -1.0, 1), std::invalid_argument);
  EXPECT_THROW(brownian_increments(stream, 4, 0.5, 0), std::invalid_argument);
}

TEST(AggregateIncrements, SumsConsecutiveRowsExactly) {
  Matrix fine(6, 2);
  double value = 0.0;
  for (std::int64_t k = 0; k < 6; ++k) {
    for (std::int64_t q = 0; q < 2; ++q) fine(k, q) = (value += 0.37);
  }
  const Matrix coarse = aggregate_increments(fine, 3);
  ASSERT_EQ(coarse.rows(), 2);
  ASSERT_EQ(coarse.cols(), 2);
  for (std::int64_t j = 0; j < 2; ++j) {
    for (std::int64_t q = 0; q < 2; ++q) {
      // Identical association order: ascending fine index.
      const double expected = (fine(3 * j, q) + fine(3 * j + 1, q)) + fine(3 * j + 2, q);
      EXPECT_EQ(coarse(j, q), expected);
    }
  }
  EXPECT_THROW(aggregate_increments(fine, 4), std::invalid_argument);
  EXPECT_THROW(aggregate_increments(fine, 0), std::invalid_argument);
}

TEST(CoupledIncrements, CoarseRowsAreFineSums) {
  const LevelGrid grid(2, 1.0, 10);
  RandomStream stream = make_stream(11, 3, 4, StreamRole::mlmc_pair);
  const CoupledIncrements coupled = coupled_increments(stream, grid, 3, 1);
  ASSERT_EQ(coupled.fine.rows(), 8);
  ASSERT_EQ(coupled.coarse.rows(), 4);
  EXPECT_EQ(coupled.refinement, 2);
  double fine_total = 0.0, coarse_total = 0.0;
  for (std::int64_t j = 0; j < coupled.coarse.rows(); ++j) {
    EXPECT_EQ(coupled.coarse(j, 0), coupled.fine(2 * j, 0) + coupled.fine(2 * j + 1, 0));
    coarse_total += coupled.coarse(j, 0);
  }
  for (std::int64_t k = 0; k < coupled.fine.rows(); ++k) fine_total += coupled.fine(k, 0);
  // Same Brownian path: totals agree up to summation order.
  EXPECT_NEAR(fine_total, coarse_total, 1e-15 * (1.0 + std::fabs(fine_total)));
}

TEST(CoupledIncrements, RequiresLevelAtLeastOne) {
  const LevelGrid grid(3, 1.0, 5);
  RandomStream stream = make_stream(11, 0, 0, StreamRole::mlmc_pair);
  EXPECT_THROW(coupled_increments(stream, grid, 0, 1), std::invalid_argument);
}

TEST(LevelGrid, StepsAndValidation) {
  const LevelGrid grid(2, 1.0, 10);
  EXPECT_EQ(grid.step(0), 1.0);
  EXPECT_EQ(grid.step(5), 1.0 / 32.0);
  EXPECT_EQ(grid.step(-2), 4.0);  // planning formulas may probe coarser-than-T levels
  EXPECT_EQ(grid.steps_at(0), 1);
  EXPECT_EQ(grid.steps_at(10), 1024);
  EXPECT_THROW(grid.steps_at(11), std::invalid_argument);
  EXPECT_THROW(grid.steps_at(-1), std::invalid_argument);

  EXPECT_THROW(LevelGrid(1, 1.0, 5), ConfigError);
  EXPECT_THROW(LevelGrid(2, 0.0, 5), ConfigError);
  EXPECT_THROW(LevelGrid(2, -1.0, 5), ConfigError);
  EXPECT_THROW(LevelGrid(2, 1.0, -1), ConfigError);
  try {
    LevelGrid(1, 1.0, 5);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& error) {
    EXPECT_EQ(error.code(), "config/bad_refinement");
  }
  try {
    LevelGrid(2, -1.0, 5);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& error) {
    EXPECT_EQ(error.code(), "config/bad_horizon");
  }
}

TEST(LevelGrid, NonBinaryRefinement) {
  const LevelGrid grid(3, 2.0, 6);
  EXPECT_EQ(grid.steps_at(3), 27);
  EXPECT_DOUBLE_EQ(grid.step(3), 2.0 / 27.0);
}

}  // namespace
}  // namespace mlmc
