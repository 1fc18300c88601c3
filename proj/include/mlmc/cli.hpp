#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlmc/analysis.hpp"
#include "mlmc/config.hpp"
#include "mlmc/errors.hpp"
#include "mlmc/estimator.hpp"
#include "mlmc/io.hpp"

namespace mlmc {

namespace detail {

inline constexpr std::uint64_t kPilotConstantsTag = 0x50494C4F;  // constants pilot runs

inline std::string regime_name(BetaRegime regime) {
  switch (regime) {
    case BetaRegime::below_one: return "beta_below_one";
    case BetaRegime::equal_one: return "beta_equal_one";
    case BetaRegime::above_one: return "beta_above_one";
  }
  return "unknown";
}

inline std::string scheme_name(SchemeKind scheme) {
  return scheme == SchemeKind::classic_em ? "classic_em" : "truncated_em";
}

inline nlohmann::ordered_json constants_json(const RateConstants& constants) {
  nlohmann::ordered_json j;
  j["alpha"] = constants.alpha;
  j["beta"] = constants.beta;
  j["c1"] = constants.c1;
  j["c2"] = constants.c2;
  j["c3"] = constants.c3;
  return j;
}

}  // namespace detail

// Everything a subcommand needs, resolved once from the parsed config.
struct RunContext {
  ExperimentConfig config;
  std::vector<std::string> warnings;
  ExecPolicy exec;
  SdeProblem problem;
  Payoff payoff;
  TruncationConfig truncation;
  LevelGrid grid;

  explicit RunContext(const ParsedExperiment& parsed, const ExecPolicy& exec_policy)
      : config(parsed.config),
        warnings(parsed.warnings),
        exec(exec_policy),
        problem(build_problem(parsed.config)),
        payoff(build_payoff(parsed.config)),
        truncation(build_truncation(parsed.config)),
        grid(build_grid(parsed.config)) {}

  const TruncationConfig* truncation_ptr() const {
    return config.scheme == SchemeKind::truncated_em ? &truncation : nullptr;
  }

  // Constants for planning: as configured, or estimated by a pilot run.
  RateConstants resolve_constants() {
    if (!config.pilot_mode) return config.constants;
    const std::uint64_t pilot_seed = split_seed(config.seed, detail::kPilotConstantsTag);
    const PilotResult pilot =
        estimate_constants(problem, payoff, config.scheme, truncation_ptr(), config.constants,
                           grid, pilot_seed, exec, config.pilot);
    return pilot.constants;
  }

  nlohmann::ordered_json metadata(const RateConstants& active_constants) const {
    nlohmann::ordered_json meta;
    meta["seed"] = config.seed;
    meta["rng"] = "philox4x32-10";
    meta["normal_transform"] = "box-muller";
    meta["problem"] = config.problem_name;
    meta["x0"] = config.x0;
    meta["horizon"] = config.horizon;
    meta["payoff"] = config.payoff_name;
    meta["payoff_growth_constant"] = payoff.growth_constant;
    meta["scheme"] = detail::scheme_name(config.scheme);
    if (config.scheme == SchemeKind::truncated_em) {
      meta["truncation"] = {
          {"omega", {{"name", "power_law"},
                     {"coeff", config.omega_coeff},
                     {"exponent", config.omega_exponent}}},
          {"h", {{"name", "power_law"},
                 {"coeff", config.h_coeff},
                 {"exponent", config.h_exponent}}},
          {"s_star", config.s_star}};
    }
    meta["grid"] = {{"M", config.refinement}, {"L_max", config.max_level}};
    meta["constants_mode"] = config.pilot_mode ? "pilot" : "theorem";
    if (config.pilot_mode) {
      meta["constants_note"] = "c1 and c2 are heuristic pilot estimates";
      meta["pilot"] = {{"paths", config.pilot.paths}, {"levels", config.pilot.levels}};
    }
    meta["constants"] = detail::constants_json(active_constants);
    meta["warnings"] = warnings;
    return meta;
  }
};

// --- table: per-level coupled estimates (Tables 1-2 layout) ---------------

inline void cmd_table(RunContext& context, const std::string& out_dir) {
  std::vector<std::vector<std::string>> rows;
  for (int level = context.config.level_first; level <= context.config.level_last; ++level) {
    const LevelEstimate estimate =
        run_level(context.problem, context.payoff, context.config.scheme,
                  context.truncation_ptr(), context.grid, level, context.config.n_paths,
                  context.config.seed, context.exec);
    rows.push_back({std::to_string(estimate.level), csv_statistic(estimate.mean),
                    std::to_string(estimate.n_samples), format_double(estimate.sample_variance),
                    std::to_string(estimate.n_nonfinite)});
  }
  const std::string csv =
      csv_document({"level", "y_hat", "n_samples", "variance", "n_nonfinite"}, rows);
  write_text_file(out_dir + "/table.csv", csv);
  std::cout << "wrote " << out_dir << "/table.csv\n";
}

// --- mlmc: one full multilevel run as a JSON report ------------------------

inline void cmd_mlmc(RunContext& context, const std::string& out_dir) {
  if (!context.config.has_epsilon) {
    throw ConfigError("config/missing_field", "epsilon",
                      "the mlmc subcommand needs an epsilon in the config");
  }
  if (context.config.epsilon >= std::exp(-1.0)) {
    context.warnings.push_back("epsilon >= e^-1: outside the regime the cost bounds assume");
  }
  const RateConstants constants = context.resolve_constants();
  const MlmcResult result =
      run_mlmc(context.problem, context.payoff, context.config.scheme, context.truncation_ptr(),
               constants, context.grid, context.config.epsilon, context.config.seed,
               context.exec);

  nlohmann::ordered_json report;
  report["epsilon"] = context.config.epsilon;
  report["estimate"] = json_double(result.estimate);
  report["divergent"] = result.divergent;
  report["total_cost"] = result.total_cost;
  report["predicted_cost_bound"] = result.plan.predicted_cost_bound;
  report["plan"] = {{"finest_level", result.plan.finest_level},
                    {"samples", result.plan.samples},
                    {"regime", detail::regime_name(result.plan.regime)}};
  nlohmann::ordered_json levels = nlohmann::ordered_json::array();
  for (const auto& level : result.levels) {
    nlohmann::ordered_json row;
    row["level"] = level.level;
    row["n_samples"] = level.n_samples;
    row["mean"] = json_double(level.mean);
    row["sample_variance"] = json_double(level.sample_variance);
    row["cost"] = level.cost;
    row["n_nonfinite"] = level.n_nonfinite;
    levels.push_back(row);
  }
  report["levels"] = levels;
  report["metadata"] = context.metadata(constants);
  write_text_file(out_dir + "/mlmc.json", report.dump(2) + "\n");
  std::cout << "wrote " << out_dir << "/mlmc.json\n";
}

// --- cost-curve: MLMC vs standard MC over an accuracy sweep ----------------

inline void cmd_cost_curve(RunContext& context, const std::string& out_dir) {
  if (context.config.epsilons.empty()) {
    throw ConfigError("config/missing_field", "epsilons",
                      "the cost-curve subcommand needs an epsilons array in the config");
  }
  const RateConstants constants = context.resolve_constants();
  const CostCurve curve = cost_curve(context.problem, context.payoff, context.config.scheme,
                                     context.truncation_ptr(), constants, context.grid,
                                     context.config.epsilons, context.config.seed, context.exec);
  std::vector<std::vector<std::string>> rows;
  for (const auto& point : curve.points) {
    rows.push_back({format_double(point.epsilon), format_double(point.mlmc_cost),
                    format_double(point.mc_cost),
                    format_double(point.mc_cost / point.mlmc_cost)});
  }
  const std::string csv = csv_document({"epsilon", "mlmc_cost", "mc_cost", "ratio"}, rows);
  write_text_file(out_dir + "/cost_curve.csv", csv);
  std::cout << "wrote " << out_dir << "/cost_curve.csv\n";
}

// --- rates: strong-error and variance-decay curves with fitted slopes ------

inline void cmd_rates(RunContext& context, const std::string& out_dir) {
  std::vector<int> levels;
  for (int level = context.config.level_first; level <= context.config.level_last; ++level) {
    levels.push_back(level);
  }
  const StrongOracle oracle = build_strong_oracle(context.config);
  const auto strong = strong_error_curve(context.problem, context.config.scheme,
                                         context.truncation_ptr(), context.grid, levels,
                                         context.config.n_paths, oracle, context.config.seed,
                                         context.exec);
  const auto decay = variance_decay_curve(context.problem, context.payoff,
                                          context.config.scheme, context.truncation_ptr(),
                                          context.grid, levels, context.config.n_paths,
                                          context.config.seed, context.exec);

  std::vector<std::vector<std::string>> strong_rows;
  for (const auto& point : strong) {
    strong_rows.push_back({std::to_string(point.level), format_double(point.step),
                           format_double(point.rms_error), format_double(point.mean_abs_error),
                           std::to_string(point.n_nonfinite)});
  }
  write_text_file(out_dir + "/strong_error.csv",
                  csv_document({"level", "step", "rms_error", "mean_abs_error", "n_nonfinite"},
                               strong_rows));

  std::vector<std::vector<std::string>> decay_rows;
  for (const auto& point : decay) {
    decay_rows.push_back({std::to_string(point.level), format_double(point.step),
                          format_double(point.variance), csv_statistic(point.mean),
                          std::to_string(point.n_nonfinite)});
  }
  write_text_file(out_dir + "/variance_decay.csv",
                  csv_document({"level", "step", "variance", "mean", "n_nonfinite"}, decay_rows));

  // Fits; degenerate inputs (all-zero errors on the zero SDE) yield null.
  auto fit_or_null = [](const std::vector<double>& steps,
                        const std::vector<double>& values) -> nlohmann::ordered_json {
    try {
      const RateFit fit = fit_rate(steps, values);
      return {{"slope", fit.slope},
              {"intercept", fit.intercept},
              {"r_squared", fit.r_squared},
              {"n_points", fit.n_points}};
    } catch (const std::invalid_argument&) {
      return nullptr;
    }
  };
  std::vector<double> steps, rms, mae, variances;
  for (const auto& point : strong) {
    steps.push_back(point.step);
    rms.push_back(point.rms_error);
    mae.push_back(point.mean_abs_error);
  }
  for (const auto& point : decay) variances.push_back(point.variance);

  nlohmann::ordered_json summary;
  summary["strong_rms"] = fit_or_null(steps, rms);
  summary["strong_mean_abs"] = fit_or_null(steps, mae);
  summary["variance_decay"] = fit_or_null(steps, variances);
  summary["oracle"] =
      context.config.problem_name == "gbm" ? "closed_form" : "self_reference";
  summary["ref_factor"] = context.config.ref_factor;
  summary["metadata"] = context.metadata(context.config.constants);
  write_text_file(out_dir + "/rates_summary.json", summary.dump(2) + "\n");
  std::cout << "wrote " << out_dir << "/strong_error.csv\n";
  std::cout << "wrote " << out_dir << "/variance_decay.csv\n";
  std::cout << "wrote " << out_dir << "/rates_summary.json\n";
}

// --- entry point ------------------------------------------------------------

inline nlohmann::json load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("config/unreadable", "--config", "cannot open config file: " + path);
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& error) {
    throw ConfigError("config/parse", "--config",
                      std::string("config file is not valid JSON: ") + error.what());
  }
}

inline void print_error(const std::string& code, const std::string& field,
                        const std::string& message) {
  nlohmann::ordered_json error;
  error["error"]["code"] = code;
  if (!field.empty()) error["error"]["field"] = field;
  error["error"]["message"] = message;
  std::cerr << error.dump() << "\n";
}

// Dispatch one subcommand against a loaded config.  Used by main() and by
// tests to exercise subcommands in-process.
inline void run_subcommand(const std::string& name, const nlohmann::json& config_json,
                           const std::string& out_dir, std::optional<std::uint64_t> seed_override,
                           int threads) {
  ParsedExperiment parsed = parse_config(config_json);
  if (seed_override) parsed.config.seed = *seed_override;
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
      throw ConfigError("config/bad_out_dir", "--out",
                        "cannot create output directory '" + out_dir + "': " + ec.message());
    }
  }
  ExecPolicy exec;
  exec.threads = threads;
  RunContext context(parsed, exec);
  if (name == "table") {
    cmd_table(context, out_dir);
  } else if (name == "mlmc") {
    cmd_mlmc(context, out_dir);
  } else if (name == "cost-curve") {
    cmd_cost_curve(context, out_dir);
  } else if (name == "rates") {
    cmd_rates(context, out_dir);
  } else {
    throw std::logic_error("unknown subcommand: " + name);
  }
}

}  // namespace mlmc
