#include "mlmc/config.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "mlmc/io.hpp"

namespace mlmc {
namespace {

nlohmann::json parse_json(const char* text) { return nlohmann::json::parse(text); }

void expect_config_error(const char* text, const std::string& code, const std::string& field) {
  try {
    parse_config(parse_json(text));
    FAIL() << "expected ConfigError " << code << " for " << text;
  } catch (const ConfigError& error) {
    EXPECT_EQ(error.code(), code) << text;
    EXPECT_EQ(error.field(), field) << text;
  }
}

TEST(ParseConfig, MinimalConfigGetsDefaults) {
  const ParsedExperiment parsed = parse_config(parse_json(R"({"problem":{"name":"lewis35"}})"));
  const ExperimentConfig& config = parsed.config;
  EXPECT_EQ(config.problem_name, "lewis35");
  EXPECT_EQ(config.x0, 1.0);
  EXPECT_EQ(config.horizon, 1.0);
  EXPECT_EQ(config.payoff_name, "identity");
  EXPECT_EQ(config.scheme, SchemeKind::truncated_em);
  EXPECT_EQ(config.omega_coeff, 2.0);
  EXPECT_EQ(config.omega_exponent, 3.0);
  EXPECT_EQ(config.h_coeff, 1.0);
  EXPECT_EQ(config.h_exponent, -0.25);
  EXPECT_EQ(config.s_star, 1.0);
  EXPECT_EQ(config.refinement, 2);
  EXPECT_EQ(config.max_level, 32);
  EXPECT_TRUE(config.pilot_mode);
  EXPECT_EQ(config.seed, 0u);
  EXPECT_EQ(config.n_paths, 1000);
  EXPECT_EQ(config.level_first, 1);
  EXPECT_EQ(config.level_last, 5);
  EXPECT_FALSE(config.has_epsilon);
  EXPECT_TRUE(config.epsilons.empty());
  EXPECT_EQ(config.ref_factor, 64);
  // The default cubic policy has h(s_star) = 1 < omega(2) = 16.
  ASSERT_EQ(parsed.warnings.size(), 1u);
  EXPECT_NE(parsed.warnings[0].find("h(s_star)"), std::string::npos);
}

TEST(ParseConfig, FullConfigRoundTrip) {
  const ParsedExperiment parsed = parse_config(parse_json(R"({
    "problem": {"name": "gbm", "x0": 2.0, "T": 0.5, "mu": 0.1, "sigma": 0.3},
    "payoff": {"name": "call", "strike": 2.5, "growth_constant": 1.5},
    "scheme": "classic_em",
    "truncation": {
      "omega": {"name": "power_law", "coeff": 1.0, "exponent": 2.0},
      "h": {"name": "power_law", "coeff": 0.5, "exponent": -0.2},
      "s_star": 0.5
    },
    "grid": {"M": 4, "L_max": 12},
    "constants": {"alpha": 1.0, "beta": 2.0, "c1": 0.3, "c2": 0.4, "c3": 1.5},
    "pilot": {"paths": 200, "levels": 3},
    "seed": 99,
    "n_paths": 5000,
    "levels": {"first": 2, "last": 4},
    "epsilon": 0.05,
    "epsilons": [0.1, 0.05],
    "ref_factor": 16
  })"));
  const ExperimentConfig& config = parsed.config;
  EXPECT_EQ(config.problem_name, "gbm");
  EXPECT_EQ(config.x0, 2.0);
  EXPECT_EQ(config.horizon, 0.5);
  EXPECT_EQ(config.gbm_mu, 0.1);
  EXPECT_EQ(config.gbm_sigma, 0.3);
  EXPECT_EQ(config.payoff_name, "call");
  EXPECT_EQ(config.strike, 2.5);
  EXPECT_EQ(config.growth_constant, 1.5);
  EXPECT_EQ(config.scheme, SchemeKind::classic_em);
  EXPECT_EQ(config.omega_coeff, 1.0);
  EXPECT_EQ(config.omega_exponent, 2.0);
  EXPECT_EQ(config.h_coeff, 0.5);
  EXPECT_EQ(config.h_exponent, -0.2);
  EXPECT_EQ(config.s_star, 0.5);
  EXPECT_EQ(config.refinement, 4);
  EXPECT_EQ(config.max_level, 12);
  EXPECT_FALSE(config.pilot_mode);
  EXPECT_EQ(config.constants.alpha, 1.0);
  EXPECT_EQ(config.constants.beta, 2.0);
  EXPECT_EQ(config.constants.c1, 0.3);
  EXPECT_EQ(config.constants.c2, 0.4);
  EXPECT_EQ(config.constants.c3, 1.5);
  EXPECT_EQ(config.pilot.paths, 200);
  EXPECT_EQ(config.pilot.levels, 3);
  EXPECT_EQ(config.seed, 99u);
  EXPECT_EQ(config.n_paths, 5000);
  EXPECT_EQ(config.level_first, 2);
  EXPECT_EQ(config.level_last, 4);
  EXPECT_TRUE(config.has_epsilon);
  EXPECT_EQ(config.epsilon, 0.05);
  ASSERT_EQ(config.epsilons.size(), 2u);
  EXPECT_EQ(config.epsilons[0], 0.1);
  EXPECT_EQ(config.epsilons[1], 0.05);
  EXPECT_EQ(config.ref_factor, 16);
  // classic_em skips truncation cross-checks.
  EXPECT_TRUE(parsed.warnings.empty());
}

TEST(ParseConfig, CallStrikeShorthand) {
  const ParsedExperiment parsed = parse_config(
      parse_json(R"json({"problem":{"name":"gbm"},"payoff":{"name":"call(2.5)"}})json"));
  EXPECT_EQ(parsed.config.payoff_name, "call");
  EXPECT_EQ(parsed.config.strike, 2.5);
}

TEST(ParseConfig, PilotConstantsString) {
  const ParsedExperiment parsed =
      parse_config(parse_json(R"({"problem":{"name":"gbm"},"constants":"pilot"})"));
  EXPECT_TRUE(parsed.config.pilot_mode);
}

TEST(ParseConfig, TruncationDefaultsFollowProblem) {
  const ParsedExperiment gbm = parse_config(
      parse_json(R"({"problem":{"name":"gbm","mu":3.0,"sigma":0.2}})"));
  EXPECT_EQ(gbm.config.omega_coeff, 3.0);  // max(|mu|, sigma, 1)
  EXPECT_EQ(gbm.config.omega_exponent, 1.0);
  const ParsedExperiment zero = parse_config(parse_json(R"({"problem":{"name":"zero"}})"));
  EXPECT_EQ(zero.config.omega_coeff, 1.0);
  EXPECT_EQ(zero.config.omega_exponent, 1.0);
}

TEST(ParseConfig, WarnsWhenCoarsestStepExceedsSStar) {
  const ParsedExperiment parsed =
      parse_config(parse_json(R"({"problem":{"name":"lewis35","T":2.0}})"));
  bool found = false;
  for (const std::string& warning : parsed.warnings) {
    if (warning.find("s_star") != std::string::npos &&
        warning.find("coarsest") != std::string::npos) {
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(ParseConfig, ErrorCodesAndFieldPaths) {
  EXPECT_THROW(parse_config(nlohmann::json::array()), ConfigError);
  expect_config_error(R"({"problem":{"name":"lewis35"},"bogus":1})", "config/unknown_key",
                      "bogus");
  expect_config_error(R"({})", "config/missing_field", "problem");
  expect_config_error(R"({"problem":{}})", "config/missing_field", "problem.name");
  expect_config_error(R"({"problem":{"name":"heston"}})", "config/unknown_problem",
                      "problem.name");
  expect_config_error(R"({"problem":{"name":"lewis35","x0":"one"}})", "config/bad_type",
                      "problem.x0");
  expect_config_error(R"({"problem":{"name":"lewis35","T":0}})", "config/bad_horizon",
                      "problem.T");
  expect_config_error(R"({"problem":{"name":"lewis35","mu":0.1}})", "config/unknown_key",
                      "problem.mu");
  expect_config_error(R"({"problem":{"name":"gbm","sigma":-0.2}})", "config/bad_value",
                      "problem.sigma");
  expect_config_error(R"({"problem":{"name":"gbm"},"payoff":{"name":"digital"}})",
                      "config/unknown_payoff", "payoff.name");
  expect_config_error(R"json({"problem":{"name":"gbm"},"payoff":{"name":"call(abc)"}})json",
                      "config/unknown_payoff", "payoff.name");
  expect_config_error(
      R"({"problem":{"name":"gbm"},"payoff":{"name":"identity","growth_constant":-1}})",
      "config/bad_value", "payoff.growth_constant");
  expect_config_error(R"({"problem":{"name":"gbm"},"scheme":"milstein"})",
                      "config/unknown_scheme", "scheme");
  expect_config_error(R"({"problem":{"name":"gbm"},"truncation":{"omega":{"name":"exp"}}})",
                      "config/unknown_name", "truncation.omega.name");
  expect_config_error(R"({"problem":{"name":"gbm"},"truncation":{"omega":{"junk":2}}})",
                      "config/unknown_key", "truncation.omega.junk");
  expect_config_error(R"({"problem":{"name":"gbm"},"truncation":{"s_star":0}})",
                      "config/bad_s_star", "truncation.s_star");
  expect_config_error(R"({"problem":{"name":"gbm"},"truncation":{"s_star":1.5}})",
                      "config/bad_s_star", "truncation.s_star");
  expect_config_error(R"({"problem":{"name":"gbm"},"grid":{"M":1}})", "config/bad_refinement",
                      "grid.M");
  expect_config_error(R"({"problem":{"name":"gbm"},"grid":{"M":2000}})",
                      "config/bad_refinement", "grid.M");
  expect_config_error(R"({"problem":{"name":"gbm"},"grid":{"M":2.5}})", "config/bad_type",
                      "grid.M");
  expect_config_error(R"({"problem":{"name":"gbm"},"grid":{"L_max":-1}})", "config/bad_levels",
                      "grid.L_max");
  expect_config_error(
      R"({"problem":{"name":"gbm"},"constants":{"alpha":1,"beta":1,"c1":1,"c2":1}})",
      "config/missing_field", "constants.c3");
  expect_config_error(
      R"({"problem":{"name":"gbm"},"constants":{"alpha":1,"beta":1,"c1":-1,"c2":1,"c3":1}})",
      "config/bad_constants", "constants.c1");
  expect_config_error(R"({"problem":{"name":"gbm"},"constants":7})", "config/bad_type",
                      "constants");
  expect_config_error(R"({"problem":{"name":"gbm"},"constants":"auto"})",
                      "config/bad_constants", "constants");
  expect_config_error(R"({"problem":{"name":"gbm"},"pilot":{"paths":1}})", "config/bad_value",
                      "pilot");
  expect_config_error(R"({"problem":{"name":"gbm"},"seed":-1})", "config/bad_value", "seed");
  expect_config_error(R"({"problem":{"name":"gbm"},"seed":"abc"})", "config/bad_value", "seed");
  expect_config_error(R"({"problem":{"name":"gbm"},"n_paths":0})", "config/bad_value",
                      "n_paths");
  expect_config_error(R"({"problem":{"name":"gbm"},"levels":{"first":0,"last":5}})",
                      "config/bad_levels", "levels");
  expect_config_error(R"({"problem":{"name":"gbm"},"levels":{"first":4,"last":2}})",
                      "config/bad_levels", "levels");
  expect_config_error(
      R"({"problem":{"name":"gbm"},"grid":{"L_max":4},"levels":{"first":1,"last":5}})",
      "config/bad_levels", "levels");
  expect_config_error(R"({"problem":{"name":"gbm"},"epsilon":0})", "config/bad_value",
                      "epsilon");
  expect_config_error(R"({"problem":{"name":"gbm"},"epsilons":[]})", "config/bad_type",
                      "epsilons");
  expect_config_error(R"({"problem":{"name":"gbm"},"epsilons":0.1})", "config/bad_type",
                      "epsilons");
  expect_config_error(R"({"problem":{"name":"gbm"},"epsilons":[0.1,-0.05]})",
                      "config/bad_value", "epsilons");
  expect_config_error(R"({"problem":{"name":"gbm"},"ref_factor":1})", "config/bad_value",
                      "ref_factor");
}

TEST(Builders, ProblemPayoffTruncationGridOracle) {
  const ParsedExperiment parsed = parse_config(parse_json(R"json({
    "problem": {"name": "gbm", "x0": 2.0, "mu": 0.1, "sigma": 0.3},
    "payoff": {"name": "call(2.5)", "growth_constant": 4.0},
    "grid": {"M": 4, "L_max": 10},
    "ref_factor": 16
  })json"));
  const ExperimentConfig& config = parsed.config;

  const SdeProblem problem = build_problem(config);
  EXPECT_EQ(problem.name, "gbm");
  EXPECT_EQ(problem.initial_value[0], 2.0);
  std::vector<double> out(1);
  problem.drift(std::vector<double>{3.0}, out);
  EXPECT_DOUBLE_EQ(out[0], 0.3);  // mu * x

  const Payoff payoff = build_payoff(config);
  EXPECT_EQ(payoff.name, "call");
  EXPECT_EQ(payoff.eval(std::vector<double>{3.0}), 0.5);
  EXPECT_EQ(payoff.eval(std::vector<double>{2.0}), 0.0);
  EXPECT_EQ(payoff.growth_constant, 4.0);

  const TruncationConfig truncation = build_truncation(config);
  EXPECT_EQ(truncation.omega_coeff, 1.0);  // max(0.1, 0.3, 1)
  EXPECT_EQ(truncation.omega_exponent, 1.0);

  const LevelGrid grid = build_grid(config);
  EXPECT_EQ(grid.refinement(), 4);
  EXPECT_EQ(grid.max_level(), 10);

  const StrongOracle oracle = build_strong_oracle(config);
  EXPECT_TRUE(static_cast<bool>(oracle.exact_terminal));
  EXPECT_EQ(oracle.ref_factor, 16);

  const ParsedExperiment cubic = parse_config(parse_json(R"({"problem":{"name":"lewis35"}})"));
  const StrongOracle self_reference = build_strong_oracle(cubic.config);
  EXPECT_FALSE(static_cast<bool>(self_reference.exact_terminal));
}

// ---------------------------------------------------------------------------
// Numeric formatting.
// ---------------------------------------------------------------------------

TEST(FormatDouble, RoundTripsExactly) {
  const std::vector<double> values = {0.0,
                                      0.1,
                                      -5.5,
                                      1.0 / 3.0,
                                      3.141592653589793,
                                      1.0512710963760240,
                                      1e-300,
                                      2.2250738585072014e-308,
                                      1.7976931348623157e308,
                                      std::ldexp(1.0, -52),
                                      -123456789.123456789};
  for (const double value : values) {
    const std::string text = format_double(value);
    const double parsed = std::stod(text);
    EXPECT_EQ(parsed, value) << "text: " << text;
    // Formatting the parsed value reproduces the identical cell.
    EXPECT_EQ(format_double(parsed), text);
  }
}

TEST(FormatDouble, NonFiniteSpellings) {
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_double(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(CsvStatistic, DivergenceMarker) {
  EXPECT_EQ(csv_statistic(std::numeric_limits<double>::infinity()), "DIV");
  EXPECT_EQ(csv_statistic(-std::numeric_limits<double>::infinity()), "DIV");
  EXPECT_EQ(csv_statistic(std::numeric_limits<double>::quiet_NaN()), "DIV");
  EXPECT_EQ(csv_statistic(2.5), "2.5");
}

TEST(JsonDouble, NonFiniteBecomesString) {
  EXPECT_TRUE(json_double(1.5).is_number());
  EXPECT_TRUE(json_double(std::numeric_limits<double>::infinity()).is_string());
  EXPECT_EQ(json_double(std::numeric_limits<double>::infinity()).get<std::string>(), "inf");
}

TEST(CsvDocument, AssembleAndSplit) {
  const std::string text = csv_document({"a", "b"}, {{"1", "2"}, {"3", "4"}});
  EXPECT_EQ(text, "a,b\n1,2\n3,4\n");
  const std::vector<std::string> cells = split_csv_line("x,y,,z");
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[0], "x");
  EXPECT_EQ(cells[2], "");
  EXPECT_EQ(cells[3], "z");
}

}  // namespace
}  // namespace mlmc
