// o2nc: run optimizer experiments from a JSON config and/or flags.
//
// Exit codes: 0 success, 1 configuration error, 2 contract violation during a
// run, 3 verification failure.

#include "o2nc/experiment.hpp"
#include "o2nc/serialization.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kContractViolation = 2;
constexpr int kVerificationFailure = 3;

std::vector<nlohmann::json> parse_sweep_values(const std::string& axis, const std::string& list) {
  std::vector<nlohmann::json> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    if (axis == "optimizer") {
      out.emplace_back(item);
    } else {
      try {
        out.push_back(nlohmann::json::parse(item));
      } catch (const nlohmann::json::exception&) {
        throw o2nc::ConfigError("bad sweep value '" + item + "'");
      }
    }
  }
  return out;
}

void print_reports(const o2nc::ExperimentOutcome& outcome) {
  std::printf("%-40s %-8s %-20s %14s %14s  %s\n", "run", "seed", "check", "lhs", "rhs", "status");
  auto line = [](const std::string& run, const std::string& seed, const o2nc::BoundReport& r) {
    const char* status = r.skipped ? "skipped" : (r.satisfied ? "ok" : "VIOLATED");
    std::printf("%-40s %-8s %-20s %14.6g %14.6g  %s\n", run.c_str(), seed.c_str(), r.name.c_str(),
                r.lhs, r.rhs, status);
  };
  for (const auto& run : outcome.runs) {
    for (const auto& r : run.reports) line(run.tag, std::to_string(run.seed), r);
  }
  for (const auto& r : outcome.ensemble_reports) {
    line(r.context.value("run", std::string("-")), "all", r);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online doubly optimistic gradient experiments"};

  std::string config_path;
  std::optional<std::string> optimizer, problem, seeds, out, noise_mode, sweep_spec;
  std::optional<double> sigma, D;
  std::optional<long long> budget, T, trace_limit;
  std::optional<int> workers;
  bool auto_params = false;
  bool verify = false;

  app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
  app.add_option("--optimizer", optimizer, "odog-const | odog-adaptive | o2nc-ogd | gd | sgd");
  app.add_option("--problem", problem, "quadratic | cosine-quadratic | logistic");
  app.add_option("--sigma", sigma, "oracle noise level");
  app.add_option("--budget", budget, "iteration budget M");
  app.add_option("--seeds", seeds, "seed list, e.g. 0,1,2 or 0-29");
  app.add_flag("--auto-params", auto_params, "derive D, T, K and the step size from the problem");
  app.add_option("--D", D, "explicit direction radius");
  app.add_option("--T", T, "explicit episode length");
  app.add_flag("--verify", verify, "check every applicable bound after each run");
  app.add_option("--out", out, "output directory");
  app.add_option("--workers", workers, "parallel runs");
  app.add_option("--noise-mode", noise_mode, "shared-seed | fresh");
  app.add_option("--trace-limit", trace_limit, "max stored iteration records per run");
  app.add_option("--sweep", sweep_spec, "AXIS=v1,v2,... with AXIS in sigma, M, optimizer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    o2nc::ExperimentConfig cfg =
        config_path.empty() ? o2nc::ExperimentConfig{} : o2nc::load_config(config_path);
    if (optimizer) {
      cfg.optimizer = *optimizer;
      // Step options of the config file may not fit the new optimizer.
      if (*optimizer == "odog-adaptive") {
        cfg.eta.reset();
      } else {
        cfg.gamma.reset();
        cfg.alpha.reset();
        cfg.l1_hat.reset();
      }
    }
    if (problem) {
      cfg.problem = *problem;
      cfg.problem_params = nlohmann::json::object();
    }
    if (sigma) cfg.sigma = *sigma;
    if (budget) cfg.budget = *budget;
    if (seeds) cfg.seeds = o2nc::parse_seed_list(*seeds);
    if (D || T) {
      cfg.auto_params = false;
      if (D) cfg.D = *D;
      if (T) cfg.T = *T;
    }
    if (auto_params) {
      if (D || T) throw o2nc::ConfigError("--auto-params conflicts with --D/--T");
      cfg.auto_params = true;
    }
    if (verify) cfg.verify = true;
    if (out) cfg.output_dir = *out;
    if (workers) cfg.workers = *workers;
    if (noise_mode) cfg.noise_mode = o2nc::noise_mode_from_string(*noise_mode);
    if (trace_limit) cfg.trace_limit = *trace_limit;
    if (sweep_spec) {
      const auto eq = sweep_spec->find('=');
      if (eq == std::string::npos) throw o2nc::ConfigError("--sweep expects AXIS=v1,v2,...");
      const std::string axis = sweep_spec->substr(0, eq);
      cfg.sweep = o2nc::SweepSpec{axis, parse_sweep_values(axis, sweep_spec->substr(eq + 1))};
    }
    o2nc::validate(cfg);

    const auto outcome = o2nc::run_experiment(cfg);
    std::cout << o2nc::read_text(std::filesystem::path(cfg.output_dir) / "summary.csv");
    if (outcome.slope_mean_grad_norm) {
      std::cout << "loglog slope of mean |grad F(w_bar)|: "
                << o2nc::format_double(*outcome.slope_mean_grad_norm) << "\n";
    }
    if (cfg.verify) print_reports(outcome);
    for (const auto& r : outcome.runs) {
      if (!r.error.empty()) std::cerr << r.tag << " seed " << r.seed << ": " << r.error << "\n";
    }
    if (outcome.contract_violation) return kContractViolation;
    if (!outcome.verification_passed) return kVerificationFailure;
    return kOk;
  } catch (const o2nc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const o2nc::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return kContractViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}
