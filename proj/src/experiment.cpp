#include "o2nc/experiment.hpp"

#include "o2nc/baselines.hpp"
#include "o2nc/serialization.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

namespace o2nc {

using nlohmann::json;

const std::vector<std::string>& optimizer_kinds() {
  static const std::vector<std::string> kinds = {"odog-const", "odog-adaptive", "o2nc-ogd", "gd",
                                                 "sgd"};
  return kinds;
}

namespace {

bool known_optimizer(const std::string& kind) {
  const auto& k = optimizer_kinds();
  return std::find(k.begin(), k.end(), kind) != k.end();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double as_number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(what + " must be finite");
  return x;
}

long long as_integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
  return v.get<long long>();
}

std::string as_string(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a string");
  return v.get<std::string>();
}

bool as_bool(const json& v, const std::string& what) {
  if (!v.is_boolean()) throw ConfigError(what + " must be a boolean");
  return v.get<bool>();
}

std::string value_label(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void apply_sweep_value(ExperimentConfig& cfg, const std::string& axis, const json& value) {
  if (axis == "sigma") {
    cfg.sigma = as_number(value, "sigma sweep value");
  } else if (axis == "M") {
    cfg.budget = as_integer(value, "M sweep value");
  } else if (axis == "optimizer") {
    cfg.optimizer = as_string(value, "optimizer sweep value");
  } else {
    throw ConfigError("unknown sweep axis '" + axis + "' (expected sigma, M or optimizer)");
  }
}

void validate_single(const ExperimentConfig& cfg, bool optimizer_swept) {
  if (!known_optimizer(cfg.optimizer)) throw ConfigError("unknown optimizer '" + cfg.optimizer + "'");
  make_problem(cfg.problem, cfg.problem_params);
  if (cfg.budget < 2) throw ConfigError("budget must be >= 2");
  if (!(cfg.sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (!cfg.auto_params) {
    if (!cfg.D || !cfg.T) throw ConfigError("explicit params need both D and T");
    if (!(*cfg.D > 0.0)) throw ConfigError("D must be > 0");
    if (*cfg.T < 1 || *cfg.T > cfg.budget) throw ConfigError("T must satisfy 1 <= T <= budget");
  }
  if (cfg.eta && !(*cfg.eta > 0.0)) throw ConfigError("eta must be > 0");
  if (cfg.gamma && !(*cfg.gamma > 0.0)) throw ConfigError("gamma must be > 0");
  if (cfg.alpha && !(*cfg.alpha > 0.0)) throw ConfigError("alpha must be > 0");
  if (cfg.l1_hat && !(*cfg.l1_hat > 0.0)) throw ConfigError("l1_hat must be > 0");
  if (!optimizer_swept) {
    const bool adaptive = cfg.optimizer == "odog-adaptive";
    if (adaptive && cfg.eta) throw ConfigError("eta does not apply to odog-adaptive (use gamma)");
    if (!adaptive && (cfg.gamma || cfg.alpha || cfg.l1_hat)) {
      throw ConfigError("gamma, alpha and l1_hat only apply to odog-adaptive");
    }
  }
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw ConfigError("seed list must be nonempty");
  std::set<std::uint64_t> unique(cfg.seeds.begin(), cfg.seeds.end());
  if (unique.size() != cfg.seeds.size()) throw ConfigError("seed list has duplicates");
  if (cfg.output_dir.empty()) throw ConfigError("output_dir must be nonempty");
  if (cfg.trace_limit < 0) throw ConfigError("trace_limit must be >= 0");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
  if (!cfg.sweep) {
    validate_single(cfg, false);
    return;
  }
  if (cfg.sweep->values.empty()) throw ConfigError("sweep values must be nonempty");
  std::set<std::string> labels;
  for (const auto& v : cfg.sweep->values) {
    ExperimentConfig c = cfg;
    apply_sweep_value(c, cfg.sweep->axis, v);
    validate_single(c, cfg.sweep->axis == "optimizer");
    if (!labels.insert(value_label(v)).second) throw ConfigError("sweep values have duplicates");
  }
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j,
                 {"problem", "optimizer", "budget", "params", "sigma", "noise_mode", "seeds",
                  "output_dir", "verify", "trace_limit", "workers", "sweep"},
                 "config");
  ExperimentConfig cfg;
  if (j.contains("problem")) {
    const auto& p = j.at("problem");
    reject_unknown(p, {"name", "params"}, "problem");
    if (p.contains("name")) cfg.problem = as_string(p.at("name"), "problem.name");
    if (p.contains("params")) {
      if (!p.at("params").is_object()) throw ConfigError("problem.params must be an object");
      cfg.problem_params = p.at("params");
    }
  }
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    reject_unknown(o, {"kind", "eta", "gamma", "alpha", "l1_hat"}, "optimizer");
    if (o.contains("kind")) cfg.optimizer = as_string(o.at("kind"), "optimizer.kind");
    if (o.contains("eta")) cfg.eta = as_number(o.at("eta"), "optimizer.eta");
    if (o.contains("gamma")) cfg.gamma = as_number(o.at("gamma"), "optimizer.gamma");
    if (o.contains("alpha")) cfg.alpha = as_number(o.at("alpha"), "optimizer.alpha");
    if (o.contains("l1_hat")) cfg.l1_hat = as_number(o.at("l1_hat"), "optimizer.l1_hat");
  }
  if (j.contains("budget")) cfg.budget = as_integer(j.at("budget"), "budget");
  if (j.contains("params")) {
    const auto& p = j.at("params");
    if (p.is_string()) {
      if (p.get<std::string>() != "auto") throw ConfigError("params must be \"auto\" or {D, T}");
      cfg.auto_params = true;
    } else {
      reject_unknown(p, {"D", "T"}, "params");
      cfg.auto_params = false;
      if (p.contains("D")) cfg.D = as_number(p.at("D"), "params.D");
      if (p.contains("T")) cfg.T = as_integer(p.at("T"), "params.T");
    }
  }
  if (j.contains("sigma")) cfg.sigma = as_number(j.at("sigma"), "sigma");
  if (j.contains("noise_mode")) {
    cfg.noise_mode = noise_mode_from_string(as_string(j.at("noise_mode"), "noise_mode"));
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (!s.is_array()) throw ConfigError("seeds must be an array of integers");
    cfg.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError("seeds must be nonnegative integers");
      }
      cfg.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  if (j.contains("output_dir")) cfg.output_dir = as_string(j.at("output_dir"), "output_dir");
  if (j.contains("verify")) cfg.verify = as_bool(j.at("verify"), "verify");
  if (j.contains("trace_limit")) cfg.trace_limit = as_integer(j.at("trace_limit"), "trace_limit");
  if (j.contains("workers")) cfg.workers = static_cast<int>(as_integer(j.at("workers"), "workers"));
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    reject_unknown(s, {"axis", "values"}, "sweep");
    SweepSpec spec;
    spec.axis = as_string(s.at("axis"), "sweep.axis");
    if (!s.at("values").is_array()) throw ConfigError("sweep.values must be an array");
    for (const auto& v : s.at("values")) spec.values.push_back(v);
    cfg.sweep = std::move(spec);
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(f, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
  json opt = {{"kind", cfg.optimizer}};
  if (cfg.eta) opt["eta"] = *cfg.eta;
  if (cfg.gamma) opt["gamma"] = *cfg.gamma;
  if (cfg.alpha) opt["alpha"] = *cfg.alpha;
  if (cfg.l1_hat) opt["l1_hat"] = *cfg.l1_hat;
  json params = "auto";
  if (!cfg.auto_params) {
    params = json::object();
    if (cfg.D) params["D"] = *cfg.D;
    if (cfg.T) params["T"] = *cfg.T;
  }
  json j = {{"problem", {{"name", cfg.problem}, {"params", cfg.problem_params}}},
            {"optimizer", opt},
            {"budget", cfg.budget},
            {"params", params},
            {"sigma", cfg.sigma},
            {"noise_mode", to_string(cfg.noise_mode)},
            {"seeds", cfg.seeds},
            {"output_dir", cfg.output_dir},
            {"verify", cfg.verify},
            {"trace_limit", cfg.trace_limit},
            {"workers", cfg.workers}};
  if (cfg.sweep) j["sweep"] = {{"axis", cfg.sweep->axis}, {"values", cfg.sweep->values}};
  return j;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  auto parse_u64 = [](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("bad seed '" + s + "'");
    }
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  while (std::getline(ss, item, ',')) {
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      out.push_back(parse_u64(item));
    } else {
      const auto lo = parse_u64(item.substr(0, dash));
      const auto hi = parse_u64(item.substr(dash + 1));
      if (hi < lo) throw ConfigError("bad seed range '" + item + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
    }
  }
  if (out.empty()) throw ConfigError("seed list must be nonempty");
  return out;
}

// ---------------------------------------------------------------------------

RunPlan plan_run(const ExperimentConfig& cfg, std::uint64_t seed) {
  RunPlan plan;
  plan.problem = make_problem(cfg.problem, cfg.problem_params);
  plan.optimizer = cfg.optimizer;
  const Problem& p = *plan.problem;
  const long long M = cfg.budget;
  const double sigma = cfg.sigma;
  const double f_gap = eval_f(p, p.x0()) - p.f_star();

  HyperParams hp;
  if (cfg.optimizer == "odog-adaptive") {
    const double gamma = cfg.gamma.value_or(default_gamma());
    const double l1_hat = cfg.l1_hat.value_or(p.L1());
    if (cfg.auto_params) {
      hp = theorem2_hyperparams(l1_hat, p.L2(), sigma, f_gap, M, gamma, cfg.alpha);
    } else {
      hp.D = *cfg.D;
      hp.T = *cfg.T;
      hp.K = M / hp.T;
      hp.schedule = StepSchedule::adaptive(gamma, cfg.alpha.value_or(default_alpha(l1_hat, hp.D)));
      hp.eta = hp.schedule.eta(hp.D);
    }
  } else {
    if (cfg.auto_params) {
      hp = theorem1_hyperparams(p.L1(), p.L2(), sigma, f_gap, M);
    } else {
      hp.D = *cfg.D;
      hp.T = *cfg.T;
      hp.K = M / hp.T;
      hp.eta = 1.0 / std::sqrt(3.0 * p.L1() * p.L1() +
                               12.0 * static_cast<double>(hp.T) * sigma * sigma / (hp.D * hp.D));
    }
    if (cfg.optimizer == "gd") {
      hp.eta = gd_eta(p.L1());
    } else if (cfg.optimizer == "sgd") {
      hp.eta = sgd_eta(p.L1(), sigma, M);
    }
    if (cfg.eta) hp.eta = *cfg.eta;
    hp.schedule = StepSchedule::constant(hp.eta);
  }

  const OracleMode mode = sigma > 0.0 ? OracleMode::kStochastic : OracleMode::kDeterministic;
  plan.engine = engine_config_from_budget(M, hp.T, hp.D, mode);
  plan.engine.trace_limit = cfg.trace_limit;
  plan.noise = NoiseModel{sigma, cfg.noise_mode, seed};
  plan.hyper = hp;
  return plan;
}

RunResult execute(const RunPlan& plan) {
  const Problem& p = *plan.problem;
  if (plan.optimizer == "odog-const" || plan.optimizer == "odog-adaptive") {
    OdogLearner learner(plan.hyper.schedule);
    return run(p, plan.noise, plan.engine, learner);
  }
  if (plan.optimizer == "o2nc-ogd") {
    OgdLearner learner(plan.hyper.eta);
    return run(p, plan.noise, plan.engine, learner);
  }
  if (plan.optimizer == "gd") {
    return run_gradient_method(p, plan.noise, plan.engine, GradientMethod::kGd, plan.hyper.eta);
  }
  if (plan.optimizer == "sgd") {
    return run_gradient_method(p, plan.noise, plan.engine, GradientMethod::kSgd, plan.hyper.eta);
  }
  throw ConfigError("unknown optimizer '" + plan.optimizer + "'");
}

RunResult run_single(const ExperimentConfig& cfg, std::uint64_t seed) {
  return execute(plan_run(cfg, seed));
}

// ---------------------------------------------------------------------------

namespace {

struct Job {
  ExperimentConfig cfg;
  std::uint64_t seed = 0;
  json value;
  std::size_t group = 0;
};

std::string run_tag(const ExperimentConfig& cfg) {
  return cfg.problem + "_" + cfg.optimizer + "_M" + std::to_string(cfg.budget) + "_sigma" +
         format_double(cfg.sigma);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

std::string report_row(const std::string& tag, const std::string& seed, const BoundReport& r) {
  return tag + "," + seed + "," + r.name + "," + format_double(r.lhs) + "," +
         format_double(r.rhs) + "," + format_double(r.slack) + "," +
         (r.satisfied ? "true" : "false") + "," + (r.skipped ? "true" : "false") + "\n";
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  std::vector<Job> jobs;
  std::vector<json> group_values;
  if (cfg.sweep) {
    for (const auto& v : cfg.sweep->values) {
      ExperimentConfig c = cfg;
      c.sweep.reset();
      apply_sweep_value(c, cfg.sweep->axis, v);
      for (auto s : cfg.seeds) jobs.push_back({c, s, v, group_values.size()});
      group_values.push_back(v);
    }
  } else {
    ExperimentConfig c = cfg;
    for (auto s : cfg.seeds) jobs.push_back({c, s, nullptr, 0});
    group_values.push_back(nullptr);
  }

  ExperimentOutcome outcome;
  outcome.runs.resize(jobs.size());
  std::vector<std::exception_ptr> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& job = jobs[i];
      RunOutcome& out = outcome.runs[i];
      out.tag = run_tag(job.cfg);
      out.seed = job.seed;
      out.sweep_value = job.value;
      try {
        const RunPlan plan = plan_run(job.cfg, job.seed);
        out.result = execute(plan);
        if (cfg.verify) out.reports = verify_run(*out.result, *plan.problem);
      } catch (const ContractViolation& e) {
        out.error = e.what();
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const auto n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), jobs.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  const std::filesystem::path out_dir(cfg.output_dir);
  std::string summary = summary_header() + "\n";
  std::string reports_csv = "run,seed,name,lhs,rhs,slack,satisfied,skipped\n";
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const RunOutcome& r = outcome.runs[i];
    const std::string stem = r.tag + "_seed" + std::to_string(r.seed);
    if (!r.error.empty()) {
      outcome.contract_violation = true;
      write_text(out_dir / "runs" / (stem + "_error.json"),
                 json{{"tag", r.tag}, {"seed", r.seed}, {"error", r.error}}.dump(2) + "\n");
      continue;
    }
    json doc = to_json(*r.result);
    doc["experiment"] = to_json(jobs[i].cfg);
    if (cfg.verify) {
      json reps = json::array();
      for (const auto& b : r.reports) {
        reps.push_back(to_json(b));
        reports_csv += report_row(r.tag, std::to_string(r.seed), b);
      }
      doc["bound_reports"] = std::move(reps);
      if (!all_satisfied(r.reports)) outcome.verification_passed = false;
    }
    write_text(out_dir / "runs" / (stem + ".json"), doc.dump() + "\n");
    write_text(out_dir / "runs" / (stem + "_episodes.csv"), episode_csv(*r.result));
    summary += summary_row(*r.result) + "\n";
  }

  // Per-group seed ensembles and aggregates.
  std::string aggregate =
      "axis,value,runs,mean_grad_norm_wbar_mean,mean_grad_norm_wbar_se,grad_norm_output_mean,"
      "grad_norm_output_se,total_regret_mean,total_regret_se\n";
  std::vector<std::pair<double, double>> slope_mean;
  std::vector<std::pair<double, double>> slope_output;
  for (std::size_t g = 0; g < group_values.size(); ++g) {
    std::vector<RunResult> group;
    std::string tag;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (jobs[i].group == g && outcome.runs[i].result) {
        group.push_back(*outcome.runs[i].result);
        tag = outcome.runs[i].tag;
      }
    }
    if (group.empty()) continue;
    if (cfg.verify) {
      for (auto& rep : verify_seed_ensemble(group)) {
        rep.context["run"] = tag;
        reports_csv += report_row(tag, "all", rep);
        if (!rep.skipped && !rep.satisfied) outcome.verification_passed = false;
        outcome.ensemble_reports.push_back(std::move(rep));
      }
    }
    if (cfg.sweep) {
      std::vector<double> mg, og, rg;
      for (const auto& r : group) {
        mg.push_back(r.mean_grad_norm_wbar);
        og.push_back(r.output_grad_norm);
        rg.push_back(r.total_regret);
      }
      aggregate += cfg.sweep->axis + "," + value_label(group_values[g]) + "," +
                   std::to_string(group.size()) + "," + format_double(mean_of(mg)) + "," +
                   format_double(se_of(mg)) + "," + format_double(mean_of(og)) + "," +
                   format_double(se_of(og)) + "," + format_double(mean_of(rg)) + "," +
                   format_double(se_of(rg)) + "\n";
      if (cfg.sweep->axis == "M") {
        const double M = static_cast<double>(group.front().config.M);
        slope_mean.emplace_back(M, mean_of(mg));
        slope_output.emplace_back(M, mean_of(og));
      }
    }
  }

  write_text(out_dir / "summary.csv", summary);
  if (cfg.verify) write_text(out_dir / "bound_reports.csv", reports_csv);
  if (cfg.sweep) {
    write_text(out_dir / "aggregate.csv", aggregate);
    if (cfg.sweep->axis == "M" && slope_mean.size() >= 3) {
      std::string slopes = "metric,slope\n";
      try {
        outcome.slope_mean_grad_norm = loglog_slope(slope_mean);
        slopes += "mean_grad_norm_wbar," + format_double(*outcome.slope_mean_grad_norm) + "\n";
      } catch (const InputError&) {
      }
      try {
        outcome.slope_output_grad_norm = loglog_slope(slope_output);
        slopes += "grad_norm_output," + format_double(*outcome.slope_output_grad_norm) + "\n";
      } catch (const InputError&) {
      }
      write_text(out_dir / "slope.csv", slopes);
    }
  }
  return outcome;
}

ExperimentOutcome sweep(ExperimentConfig base, const std::string& axis, std::vector<json> values) {
  base.sweep = SweepSpec{axis, std::move(values)};
  return run_experiment(base);
}

}  // namespace o2nc
