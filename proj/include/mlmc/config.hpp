#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlmc/analysis.hpp"
#include "mlmc/errors.hpp"
#include "mlmc/estimator.hpp"
#include "mlmc/grid.hpp"
#include "mlmc/problems.hpp"
#include "mlmc/scheme.hpp"
#include "mlmc/sde.hpp"
#include "mlmc/truncation.hpp"

namespace mlmc {

// Fully resolved experiment description, parsed from the JSON config.  One
// config can drive every subcommand; fields a subcommand does not use are
// ignored by it (but still validated).
struct ExperimentConfig {
  // problem
  std::string problem_name;
  double x0 = 1.0;
  double horizon = 1.0;
  double gbm_mu = 0.05;
  double gbm_sigma = 0.2;
  // payoff
  std::string payoff_name = "identity";
  double strike = 1.0;
  double growth_constant = 0.0;  // 0 = use the payoff's default
  // scheme
  SchemeKind scheme = SchemeKind::truncated_em;
  // truncation (resolved power laws; defaults depend on the problem)
  double omega_coeff = 0.0;
  double omega_exponent = 0.0;
  double h_coeff = 1.0;
  double h_exponent = -0.25;
  double s_star = 1.0;
  // grid
  int refinement = 2;
  int max_level = 32;
  // constants
  bool pilot_mode = true;
  RateConstants constants;
  PilotOptions pilot;
  // run controls
  std::uint64_t seed = 0;
  std::int64_t n_paths = 1000;
  int level_first = 1;
  int level_last = 5;
  bool has_epsilon = false;
  double epsilon = 0.0;
  std::vector<double> epsilons;
  int ref_factor = 64;
};

struct ParsedExperiment {
  ExperimentConfig config;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void check_keys(const nlohmann::json& object, const std::string& path,
                       std::initializer_list<const char*> allowed) {
  for (auto it = object.begin(); it != object.end(); ++it) {
    bool known = false;
    for (const char* key : allowed) {
      if (it.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw ConfigError("config/unknown_key", join_path(path, it.key()),
                        "unknown config key '" + join_path(path, it.key()) + "'");
    }
  }
}

inline const nlohmann::json& need_object(const nlohmann::json& parent, const std::string& path,
                                         const char* key) {
  if (!parent.contains(key)) {
    throw ConfigError("config/missing_field", join_path(path, key),
                      "missing required config section '" + join_path(path, key) + "'");
  }
  const auto& value = parent.at(key);
  if (!value.is_object()) {
    throw ConfigError("config/bad_type", join_path(path, key),
                      "config section '" + join_path(path, key) + "' must be an object");
  }
  return value;
}

inline double get_number(const nlohmann::json& object, const std::string& path, const char* key,
                         double fallback, bool required = false) {
  if (!object.contains(key)) {
    if (required) {
      throw ConfigError("config/missing_field", join_path(path, key),
                        "missing required config field '" + join_path(path, key) + "'");
    }
    return fallback;
  }
  const auto& value = object.at(key);
  if (!value.is_number()) {
    throw ConfigError("config/bad_type", join_path(path, key),
                      "config field '" + join_path(path, key) + "' must be a number");
  }
  return value.get<double>();
}

inline std::int64_t get_integer(const nlohmann::json& object, const std::string& path,
                                const char* key, std::int64_t fallback) {
  if (!object.contains(key)) return fallback;
  const auto& value = object.at(key);
  if (!value.is_number_integer()) {
    throw ConfigError("config/bad_type", join_path(path, key),
                      "config field '" + join_path(path, key) + "' must be an integer");
  }
  return value.get<std::int64_t>();
}

inline std::string get_string(const nlohmann::json& object, const std::string& path,
                              const char* key, const std::string& fallback,
                              bool required = false) {
  if (!object.contains(key)) {
    if (required) {
      throw ConfigError("config/missing_field", join_path(path, key),
                        "missing required config field '" + join_path(path, key) + "'");
    }
    return fallback;
  }
  const auto& value = object.at(key);
  if (!value.is_string()) {
    throw ConfigError("config/bad_type", join_path(path, key),
                      "config field '" + join_path(path, key) + "' must be a string");
  }
  return value.get<std::string>();
}

// Power-law sub-block {name, coeff, exponent} for truncation.omega and
// truncation.h.
inline void parse_power_law(const nlohmann::json& object, const std::string& path,
                            double& coeff, double& exponent) {
  check_keys(object, path, {"name", "coeff", "exponent"});
  const std::string name = get_string(object, path, "name", "power_law");
  if (name != "power_law") {
    throw ConfigError("config/unknown_name", join_path(path, "name"),
                      "unknown function family '" + name + "' (supported: power_law)");
  }
  coeff = get_number(object, path, "coeff", coeff);
  exponent = get_number(object, path, "exponent", exponent);
}

}  // namespace detail

// Parse and validate the experiment config.  Unknown keys anywhere are
// rejected; every check failure carries a machine-readable code and the
// offending field path.
inline ParsedExperiment parse_config(const nlohmann::json& root) {
  if (!root.is_object()) {
    throw ConfigError("config/bad_type", "", "config root must be a JSON object");
  }
  detail::check_keys(root, "",
                     {"problem", "payoff", "scheme", "truncation", "grid", "constants", "pilot",
                      "seed", "n_paths", "levels", "epsilon", "epsilons", "ref_factor"});
  ParsedExperiment parsed;
  ExperimentConfig& config = parsed.config;

  // --- problem ---------------------------------------------------------
  const auto& problem = detail::need_object(root, "", "problem");
  detail::check_keys(problem, "problem", {"name", "x0", "T", "mu", "sigma"});
  config.problem_name = detail::get_string(problem, "problem", "name", "", true);
  if (config.problem_name != "lewis35" && config.problem_name != "gbm" &&
      config.problem_name != "zero") {
    throw ConfigError("config/unknown_problem", "problem.name",
                      "unknown problem '" + config.problem_name +
                          "' (registered: lewis35, gbm, zero)");
  }
  config.x0 = detail::get_number(problem, "problem", "x0", 1.0);
  config.horizon = detail::get_number(problem, "problem", "T", 1.0);
  if (!std::isfinite(config.x0)) {
    throw ConfigError("config/bad_value", "problem.x0", "x0 must be finite");
  }
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
    throw ConfigError("config/bad_horizon", "problem.T", "T must be positive and finite");
  }
  if (config.problem_name == "gbm") {
    config.gbm_mu = detail::get_number(problem, "problem", "mu", 0.05);
    config.gbm_sigma = detail::get_number(problem, "problem", "sigma", 0.2);
    if (!std::isfinite(config.gbm_mu) || !std::isfinite(config.gbm_sigma) ||
        config.gbm_sigma < 0.0) {
      throw ConfigError("config/bad_value", "problem.sigma",
                        "gbm needs finite mu and nonnegative sigma");
    }
  } else if (problem.contains("mu") || problem.contains("sigma")) {
    throw ConfigError("config/unknown_key", "problem.mu",
                      "mu/sigma apply to the gbm problem only");
  }

  // --- payoff ----------------------------------------------------------
  if (root.contains("payoff")) {
    const auto& payoff = detail::need_object(root, "", "payoff");
    detail::check_keys(payoff, "payoff", {"name", "strike", "growth_constant"});
    std::string name = detail::get_string(payoff, "payoff", "name", "identity");
    // Accept "call(K)" as shorthand for name "call" with strike K.
    if (name.size() > 6 && name.rfind("call(", 0) == 0 && name.back() == ')') {
      try {
        config.strike = std::stod(name.substr(5, name.size() - 6));
      } catch (const std::exception&) {
        throw ConfigError("config/unknown_payoff", "payoff.name",
                          "cannot parse strike in '" + name + "'");
      }
      name = "call";
    } else if (name == "call") {
      config.strike = detail::get_number(payoff, "payoff", "strike", 1.0);
    }
    if (name != "identity" && name != "square" && name != "call") {
      throw ConfigError("config/unknown_payoff", "payoff.name",
                        "unknown payoff '" + name +
                            "' (registered: identity, square, call(K))");
    }
    config.payoff_name = name;
    config.growth_constant = detail::get_number(payoff, "payoff", "growth_constant", 0.0);
    if (config.growth_constant < 0.0) {
      throw ConfigError("config/bad_value", "payoff.growth_constant",
                        "growth_constant must be nonnegative");
    }
  }

  // --- scheme ----------------------------------------------------------
  const std::string scheme = detail::get_string(root, "", "scheme", "truncated_em");
  if (scheme == "classic_em") {
    config.scheme = SchemeKind::classic_em;
  } else if (scheme == "truncated_em") {
    config.scheme = SchemeKind::truncated_em;
  } else {
    throw ConfigError("config/unknown_scheme", "scheme",
                      "unknown scheme '" + scheme +
                          "' (registered: classic_em, truncated_em)");
  }

  // --- truncation ------------------------------------------------------
  // Defaults depend on the problem's coefficient growth.
  if (config.problem_name == "lewis35") {
    config.omega_coeff = 2.0;
    config.omega_exponent = 3.0;
  } else if (config.problem_name == "gbm") {
    config.omega_coeff = std::max({std::fabs(config.gbm_mu), config.gbm_sigma, 1.0});
    config.omega_exponent = 1.0;
  } else {
    config.omega_coeff = 1.0;
    config.omega_exponent = 1.0;
  }
  if (root.contains("truncation")) {
    const auto& truncation = detail::need_object(root, "", "truncation");
    detail::check_keys(truncation, "truncation", {"omega", "h", "s_star"});
    if (truncation.contains("omega")) {
      const auto& omega = detail::need_object(truncation, "truncation", "omega");
      detail::parse_power_law(omega, "truncation.omega", config.omega_coeff,
                              config.omega_exponent);
    }
    if (truncation.contains("h")) {
      const auto& h = detail::need_object(truncation, "truncation", "h");
      detail::parse_power_law(h, "truncation.h", config.h_coeff, config.h_exponent);
    }
    config.s_star = detail::get_number(truncation, "truncation", "s_star", 1.0);
  }
  if (!(config.s_star > 0.0) || config.s_star > 1.0) {
    throw ConfigError("config/bad_s_star", "truncation.s_star", "s_star must lie in (0, 1]");
  }

  // --- grid ------------------------------------------------------------
  if (root.contains("grid")) {
    const auto& grid = detail::need_object(root, "", "grid");
    detail::check_keys(grid, "grid", {"M", "L_max"});
    const std::int64_t m = detail::get_integer(grid, "grid", "M", 2);
    if (m < 2 || m > 1024) {
      throw ConfigError("config/bad_refinement", "grid.M",
                        "grid refinement M must be an integer in [2, 1024]");
    }
    config.refinement = static_cast<int>(m);
    const std::int64_t l_max = detail::get_integer(grid, "grid", "L_max", 32);
    if (l_max < 0 || l_max > 1000) {
      throw ConfigError("config/bad_levels", "grid.L_max", "L_max must be in [0, 1000]");
    }
    config.max_level = static_cast<int>(l_max);
  }

  // --- constants -------------------------------------------------------
  config.constants = RateConstants{0.25, 0.5, 1.0, 1.0, 1.0};
  if (root.contains("constants")) {
    const auto& constants = root.at("constants");
    if (constants.is_string()) {
      if (constants.get<std::string>() != "pilot") {
        throw ConfigError("config/bad_constants", "constants",
                          "constants must be an object or the string \"pilot\"");
      }
      config.pilot_mode = true;
    } else if (constants.is_object()) {
      detail::check_keys(constants, "constants", {"alpha", "beta", "c1", "c2", "c3"});
      config.constants.alpha = detail::get_number(constants, "constants", "alpha", 0.0, true);
      config.constants.beta = detail::get_number(constants, "constants", "beta", 0.0, true);
      config.constants.c1 = detail::get_number(constants, "constants", "c1", 0.0, true);
      config.constants.c2 = detail::get_number(constants, "constants", "c2", 0.0, true);
      config.constants.c3 = detail::get_number(constants, "constants", "c3", 0.0, true);
      config.constants.validate();
      config.pilot_mode = false;
    } else {
      throw ConfigError("config/bad_type", "constants",
                        "constants must be an object or the string \"pilot\"");
    }
  }
  if (root.contains("pilot")) {
    const auto& pilot = detail::need_object(root, "", "pilot");
    detail::check_keys(pilot, "pilot", {"paths", "levels"});
    config.pilot.paths = detail::get_integer(pilot, "pilot", "paths", 100);
    config.pilot.levels = static_cast<int>(detail::get_integer(pilot, "pilot", "levels", 4));
    if (config.pilot.paths < 2 || config.pilot.levels < 1) {
      throw ConfigError("config/bad_value", "pilot",
                        "pilot needs paths >= 2 and levels >= 1");
    }
  }

  // --- run controls ----------------------------------------------------
  if (root.contains("seed")) {
    const auto& seed = root.at("seed");
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                      seed.get<std::int64_t>() < 0)) {
      throw ConfigError("config/bad_value", "seed", "seed must be a nonnegative integer");
    }
    config.seed = seed.get<std::uint64_t>();
  }
  config.n_paths = detail::get_integer(root, "", "n_paths", 1000);
  if (config.n_paths < 1 || config.n_paths > 1000000000) {
    throw ConfigError("config/bad_value", "n_paths", "n_paths must be in [1, 10^9]");
  }
  if (root.contains("levels")) {
    const auto& levels = detail::need_object(root, "", "levels");
    detail::check_keys(levels, "levels", {"first", "last"});
    config.level_first = static_cast<int>(detail::get_integer(levels, "levels", "first", 1));
    config.level_last = static_cast<int>(detail::get_integer(levels, "levels", "last", 5));
  }
  if (config.level_first < 1 || config.level_first > config.level_last ||
      config.level_last > config.max_level) {
    throw ConfigError("config/bad_levels", "levels",
                      "need 1 <= levels.first <= levels.last <= grid.L_max");
  }
  if (root.contains("epsilon")) {
    config.epsilon = detail::get_number(root, "", "epsilon", 0.0);
    if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon)) {
      throw ConfigError("config/bad_value", "epsilon", "epsilon must be positive and finite");
    }
    config.has_epsilon = true;
  }
  if (root.contains("epsilons")) {
    const auto& epsilons = root.at("epsilons");
    if (!epsilons.is_array() || epsilons.empty()) {
      throw ConfigError("config/bad_type", "epsilons", "epsilons must be a non-empty array");
    }
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
      if (!epsilons[i].is_number()) {
        throw ConfigError("config/bad_type", "epsilons", "epsilons entries must be numbers");
      }
      const double value = epsilons[i].get<double>();
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError("config/bad_value", "epsilons",
                          "epsilons entries must be positive and finite");
      }
      config.epsilons.push_back(value);
    }
  }
  config.ref_factor = static_cast<int>(detail::get_integer(root, "", "ref_factor", 64));
  if (config.ref_factor < 2 || config.ref_factor > 100000) {
    throw ConfigError("config/bad_value", "ref_factor", "ref_factor must be in [2, 10^5]");
  }

  // --- cross-field warnings -------------------------------------------
  if (config.scheme == SchemeKind::truncated_em) {
    const TruncationConfig truncation = power_law_truncation(
        config.omega_coeff, config.omega_exponent, config.h_coeff, config.h_exponent,
        config.s_star);
    auto warnings = validate_truncation(truncation);
    parsed.warnings.insert(parsed.warnings.end(), warnings.begin(), warnings.end());
    const LevelGrid grid(config.refinement, config.horizon, config.max_level);
    if (grid.step(0) > config.s_star) {
      parsed.warnings.push_back(
          "coarsest step T exceeds s_star; truncation theory assumes steps <= s_star");
    }
  }
  return parsed;
}

// --- builders ------------------------------------------------------------

inline SdeProblem build_problem(const ExperimentConfig& config) {
  if (config.problem_name == "lewis35") return make_lewis35(config.x0, config.horizon);
  if (config.problem_name == "gbm") {
    return make_gbm(config.gbm_mu, config.gbm_sigma, config.x0, config.horizon);
  }
  return make_zero(config.x0, config.horizon);
}

inline Payoff build_payoff(const ExperimentConfig& config) {
  Payoff payoff;
  if (config.payoff_name == "identity") {
    payoff = make_identity_payoff();
  } else if (config.payoff_name == "square") {
    payoff = make_square_payoff();
  } else {
    payoff = make_call_payoff(config.strike);
  }
  if (config.growth_constant > 0.0) payoff.growth_constant = config.growth_constant;
  return payoff;
}

inline TruncationConfig build_truncation(const ExperimentConfig& config) {
  return power_law_truncation(config.omega_coeff, config.omega_exponent, config.h_coeff,
                              config.h_exponent, config.s_star);
}

inline LevelGrid build_grid(const ExperimentConfig& config) {
  return LevelGrid(config.refinement, config.horizon, config.max_level);
}

// Oracle for strong-error measurement: closed form for gbm, self-reference
// on a ref_factor-times-finer grid otherwise.
inline StrongOracle build_strong_oracle(const ExperimentConfig& config) {
  StrongOracle oracle;
  oracle.ref_factor = config.ref_factor;
  if (config.problem_name == "gbm") {
    oracle = gbm_exact_oracle(config.gbm_mu, config.gbm_sigma, config.x0);
    oracle.ref_factor = config.ref_factor;
  }
  return oracle;
}

}  // namespace mlmc
