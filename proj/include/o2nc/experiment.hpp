#pragma once

#include "o2nc/diagnostics.hpp"
#include "o2nc/engine.hpp"
#include "o2nc/noise.hpp"
#include "o2nc/odog.hpp"
#include "o2nc/problems.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace o2nc {

// Known optimizer kinds: odog-const, odog-adaptive, o2nc-ogd, gd, sgd.
const std::vector<std::string>& optimizer_kinds();

struct SweepSpec {
  std::string axis;  // sigma | M | optimizer
  std::vector<nlohmann::json> values;
};

struct ExperimentConfig {
  std::string problem = "cosine-quadratic";
  nlohmann::json problem_params = nlohmann::json::object();

  std::string optimizer = "odog-const";
  std::optional<double> eta;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<double> l1_hat;

  long long budget = 4096;
  bool auto_params = true;
  std::optional<double> D;
  std::optional<long long> T;

  double sigma = 0.0;
  NoiseMode noise_mode = NoiseMode::kSharedSeed;
  std::vector<std::uint64_t> seeds = {0};

  std::string output_dir = "o2nc-out";
  bool verify = false;
  long long trace_limit = 100000;
  int workers = 1;
  std::optional<SweepSpec> sweep;
};

// Strict parse: unknown keys, wrong types and invalid values raise ConfigError.
//
// {
//   "problem":   {"name": "cosine-quadratic", "params": {"dim": 10}},
//   "optimizer": {"kind": "odog-const", "eta": 0.1, "gamma": 1.2, "alpha": 1e-12, "l1_hat": 2},
//   "budget": 4096,
//   "params": "auto" | {"D": 0.04, "T": 8},
//   "sigma": 0.0, "noise_mode": "shared-seed" | "fresh",
//   "seeds": [0, 1, 2],
//   "output_dir": "out", "verify": true, "trace_limit": 100000, "workers": 2,
//   "sweep": {"axis": "sigma" | "M" | "optimizer", "values": [...]}
// }
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

// Checks cross-field constraints (explicit D/T present when not auto, nonempty seeds, ...).
void validate(const ExperimentConfig& cfg);

// Parses "0,1,5" and ranges such as "0-29" (inclusive).
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

// Everything needed to execute one run.
struct RunPlan {
  ProblemPtr problem;
  std::string optimizer;
  EngineConfig engine;
  NoiseModel noise;
  HyperParams hyper;  // D, T, K and the schedule (constant eta or adaptive gamma/alpha)
};

RunPlan plan_run(const ExperimentConfig& cfg, std::uint64_t seed);
RunResult execute(const RunPlan& plan);
// plan_run + execute.
RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed);

struct RunOutcome {
  std::string tag;
  std::uint64_t seed = 0;
  nlohmann::json sweep_value;  // null outside sweeps
  std::optional<RunResult> result;
  std::vector<BoundReport> reports;
  std::string error;  // contract violation message, if the run failed
};

struct ExperimentOutcome {
  std::vector<RunOutcome> runs;
  std::vector<BoundReport> ensemble_reports;
  std::optional<double> slope_mean_grad_norm;   // M sweeps only
  std::optional<double> slope_output_grad_norm;  // M sweeps only
  bool contract_violation = false;
  bool verification_passed = true;
};

// Runs every (sweep value, seed) combination, writes
//   <out>/runs/<tag>_seed<s>.json, <out>/runs/<tag>_seed<s>_episodes.csv,
//   <out>/summary.csv, and with verify <out>/bound_reports.csv;
// sweeps add <out>/aggregate.csv and, for the M axis, <out>/slope.csv.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

// Same as run_experiment with cfg.sweep = {axis, values}.
ExperimentOutcome sweep(ExperimentConfig base, const std::string& axis,
                        std::vector<nlohmann::json> values);

}  // namespace o2nc
