#include "mlmc/truncation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mlmc/problems.hpp"

namespace mlmc {
namespace {

// radius = omega^{-1}(h(s)) with omega(u) = 2u^3, h(s) = s^(-1/4):
// at s = 1/32 this is (32^(1/4)/2)^(1/3) = 2^(1/12).
TEST(TruncationRadius, CubicGrowthQuarterBudget) {
  const TruncationConfig config = lewis35_truncation();
  EXPECT_NEAR(truncation_radius(config, 1.0 / 32.0), 1.0594630943592953, 1e-14);
}

TEST(TruncationRadius, IdentityGrowth) {
  const TruncationConfig config = power_law_truncation(1.0, 1.0, 1.0, -0.25);
  EXPECT_NEAR(truncation_radius(config, 1.0 / 16.0), 2.0, 1e-14);
}

TEST(TruncationRadius, NondecreasingAsStepShrinks) {
  const TruncationConfig config = lewis35_truncation();
  double previous = 0.0;
  for (int k = 0; k <= 30; ++k) {
    const double radius = truncation_radius(config, std::ldexp(1.0, -k));
    EXPECT_GE(radius, previous);
    previous = radius;
  }
}

TEST(TruncationRadius, StepValidation) {
  const TruncationConfig config = lewis35_truncation();
  EXPECT_THROW(truncation_radius(config, 0.0), std::invalid_argument);
  EXPECT_THROW(truncation_radius(config, -0.5), std::invalid_argument);
  // Steps above s_star are outside the theory but still computable; the
  // config layer surfaces a warning instead of failing here.
  EXPECT_GT(truncation_radius(config, 2.0), 0.0);
}

TEST(TruncateState, ProjectsOntoSphere) {
  const std::vector<double> x = {6.0, 8.0};
  const std::vector<double> out = truncate_state(x, 5.0);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], 3.0);
  EXPECT_EQ(out[1], 4.0);
}

TEST(TruncateState, BitExactInsideBall) {
  const std::vector<double> x = {0.3, -0.4};
  const std::vector<double> out = truncate_state(x, 0.5);  // |x| == radius
  EXPECT_EQ(out[0], x[0]);
  EXPECT_EQ(out[1], x[1]);
  const std::vector<double> zero = truncate_state(std::vector<double>{0.0, 0.0}, 1.0);
  EXPECT_EQ(zero[0], 0.0);
  EXPECT_EQ(zero[1], 0.0);
}

TEST(TruncateState, IdempotentOnProjectedPoint) {
  const std::vector<double> projected = truncate_state({6.0, 8.0}, 5.0);
  const std::vector<double> again = truncate_state(projected, 5.0);
  EXPECT_EQ(again[0], projected[0]);
  EXPECT_EQ(again[1], projected[1]);
}

TEST(TruncateState, OverflowSafeForHugeStates) {
  const std::vector<double> x = {1e200, 1e200};
  const std::vector<double> out = truncate_state(x, 3.0);
  const double norm = std::hypot(out[0], out[1]);
  EXPECT_TRUE(std::isfinite(out[0]));
  EXPECT_NEAR(norm, 3.0, 1e-12);
  EXPECT_GT(out[0], 0.0);
}

TEST(TruncateState, MatchesClosedForm) {
  const std::vector<std::vector<double>> samples = {
      {1.7}, {-2.9, 0.4}, {5.0, -12.0, 0.1}, {1e-8, 3e-9}, {40.0, 9.0, -30.5, 2.0}};
  for (const auto& x : samples) {
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    for (const double radius : {0.5, 1.0, 7.0, 100.0}) {
      const std::vector<double> out = truncate_state(x, radius);
      const double scale = std::min(1.0, radius / norm);
      for (std::size_t i = 0; i < x.size(); ++i) {
        EXPECT_NEAR(out[i], x[i] * scale, 1e-15 * std::max(1.0, std::fabs(x[i])));
      }
    }
  }
}

TEST(TruncateState, ArgumentValidation) {
  std::vector<double> x = {1.0, 2.0};
  std::vector<double> out(3);
  EXPECT_THROW(truncate_state(std::span<const double>(x), 1.0, std::span<double>(out)),
               std::invalid_argument);
  EXPECT_THROW(truncate_state(x, 0.0), std::invalid_argument);
  EXPECT_THROW(truncate_state(x, -1.0), std::invalid_argument);
}

TEST(PowerLawFactory, RejectsBadParameters) {
  EXPECT_THROW(power_law_truncation(0.0, 3.0, 1.0, -0.25), ConfigError);
  EXPECT_THROW(power_law_truncation(2.0, -1.0, 1.0, -0.25), ConfigError);
  EXPECT_THROW(power_law_truncation(2.0, 3.0, 0.0, -0.25), ConfigError);
  EXPECT_THROW(power_law_truncation(2.0, 3.0, 1.0, 0.25), ConfigError);
  try {
    power_law_truncation(0.0, 3.0, 1.0, -0.25);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& error) {
    EXPECT_EQ(error.code(), "config/bad_truncation");
  }
}

TEST(ValidateTruncation, AcceptsCubicPolicyWithCoarseStepWarning) {
  // h(s_star) = 1 < omega(2) = 16, so the coarsest radius is below 2.
  const std::vector<std::string> warnings = validate_truncation(lewis35_truncation());
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("h(s_star)"), std::string::npos);
}

TEST(ValidateTruncation, NoWarningWhenBudgetGenerous) {
  // omega(2) = 0.02 < h(s_star) = 1: radius comfortably exceeds 2.
  const TruncationConfig config = power_law_truncation(0.01, 1.0, 1.0, -0.25);
  EXPECT_TRUE(validate_truncation(config).empty());
}

TEST(ValidateTruncation, RejectsNonIncreasingOmega) {
  TruncationConfig config = lewis35_truncation();
  config.omega = [](double u) { return 1.0 / u; };
  config.omega_inverse = [](double v) { return 1.0 / v; };
  try {
    validate_truncation(config);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& error) {
    EXPECT_EQ(error.code(), "config/bad_truncation");
  }
}

TEST(ValidateTruncation, RejectsInconsistentInverse) {
  TruncationConfig config = lewis35_truncation();
  config.omega_inverse = [](double v) { return v; };
  EXPECT_THROW(validate_truncation(config), ConfigError);
}

TEST(ValidateTruncation, RejectsIncreasingH) {
  TruncationConfig config = lewis35_truncation();
  config.h = [](double s) { return s; };
  EXPECT_THROW(validate_truncation(config), ConfigError);
}

TEST(ValidateTruncation, RejectsStepBudgetViolation) {
  // s^(1/4) h(s) = 10 > 1 for every s.
  TruncationConfig config = lewis35_truncation();
  config.h = [](double s) { return 10.0 * std::pow(s, -0.25); };
  EXPECT_THROW(validate_truncation(config), ConfigError);
}

TEST(ValidateTruncation, RejectsBadSStar) {
  TruncationConfig config = lewis35_truncation();
  config.s_star = 0.0;
  try {
    validate_truncation(config);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& error) {
    EXPECT_EQ(error.code(), "config/bad_s_star");
  }
  config.s_star = 1.5;
  EXPECT_THROW(validate_truncation(config), ConfigError);
}

TEST(ValidateTruncation, RejectsMissingCallables) {
  TruncationConfig config;
  EXPECT_THROW(validate_truncation(config), ConfigError);
}

// After clamping to the truncation radius, the drift and diffusion of the
// cubic problem stay within the step budget h(s): this is the property the
// scheme's stability rests on.
TEST(TruncationBudget, CubicCoefficientsBoundedAfterClamp) {
  const SdeProblem problem = make_lewis35(0.1, 1.0);
  const TruncationConfig config = lewis35_truncation();
  std::vector<double> state(1), clamped(1), drift(1), diffusion(1);
  for (int k = 0; k <= 20; ++k) {
    const double step = std::ldexp(1.0, -k);
    const double radius = truncation_radius(config, step);
    const double budget = config.h(step) * (1.0 + 1e-9);
    for (double magnitude = 1e-3; magnitude < 1e7; magnitude *= 3.7) {
      for (const double sign : {-1.0, 1.0}) {
        state[0] = sign * magnitude;
        truncate_state(state, radius, clamped);
        problem.drift(clamped, drift);
        problem.diffusion(clamped, diffusion);
        EXPECT_LE(std::fabs(drift[0]), budget);
        EXPECT_LE(std::fabs(diffusion[0]), budget);
      }
    }
  }
}

}  // namespace
}  // namespace mlmc
