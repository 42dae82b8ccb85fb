#include "o2nc/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace o2nc {

std::string to_string(OracleMode mode) {
  return mode == OracleMode::kStochastic ? "stochastic" : "deterministic";
}

void validate(const EngineConfig& cfg) {
  if (cfg.M < 1 || cfg.K < 1 || cfg.T < 1) throw ConfigError("M, K and T must be >= 1");
  if (cfg.K > cfg.M / cfg.T) throw ConfigError("K * T exceeds the budget M");
  if (!(cfg.D > 0.0) || !std::isfinite(cfg.D)) throw ConfigError("D must be positive and finite");
  if (cfg.trace_limit < 0) throw ConfigError("trace_limit must be >= 0");
}

EngineConfig engine_config_from_budget(long long M, long long T, double D, OracleMode mode) {
  if (T < 1 || M < T) throw ConfigError("episode length must satisfy 1 <= T <= M");
  EngineConfig cfg;
  cfg.M = M;
  cfg.T = T;
  cfg.K = M / T;
  cfg.D = D;
  cfg.mode = mode;
  validate(cfg);
  return cfg;
}

bool RunResult::trace_complete() const {
  return trace_stride == 1 &&
         static_cast<long long>(iterations.size()) == config.K * config.T;
}

bool same_outcome(const RunResult& a, const RunResult& b) {
  auto same_info = [](const LearnerInfo& x, const LearnerInfo& y) {
    auto eq = [](double p, double q) { return (std::isnan(p) && std::isnan(q)) || p == q; };
    return x.kind == y.kind && eq(x.eta, y.eta) && eq(x.gamma, y.gamma) && eq(x.alpha, y.alpha);
  };
  auto same_episode = [](const EpisodeRecord& x, const EpisodeRecord& y) {
    auto eq = [](double p, double q) { return (std::isnan(p) && std::isnan(q)) || p == q; };
    return x.k == y.k && x.grad_sum == y.grad_sum && x.comparator == y.comparator &&
           x.w_bar == y.w_bar && eq(x.regret, y.regret) &&
           eq(x.grad_norm_at_wbar, y.grad_norm_at_wbar) && eq(x.linear_loss, y.linear_loss) &&
           eq(x.sq_error_sum, y.sq_error_sum) && eq(x.sq_step_change_sum, y.sq_step_change_sum) &&
           eq(x.mean_exact_grad_norm, y.mean_exact_grad_norm) &&
           eq(x.conversion_gap_min, y.conversion_gap_min) &&
           eq(x.geometry_error_max, y.geometry_error_max) && eq(x.local_l1_max, y.local_l1_max) &&
           x.local_l1_argmax == y.local_l1_argmax &&
           eq(x.local_l1_exact_max, y.local_l1_exact_max) &&
           eq(x.max_delta_norm, y.max_delta_norm) && eq(x.eta_start, y.eta_start) &&
           eq(x.eta_min, y.eta_min) && eq(x.eta_max, y.eta_max) && eq(x.eta_mean, y.eta_mean) &&
           x.eta_nonincreasing == y.eta_nonincreasing && eq(x.f_end, y.f_end);
  };
  if (a.episodes.size() != b.episodes.size()) return false;
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    if (!same_episode(a.episodes[i], b.episodes[i])) return false;
  }
  return a.problem == b.problem && same_info(a.learner, b.learner) && a.config == b.config &&
         a.noise == b.noise && a.ball_constrained == b.ball_constrained && a.x0 == b.x0 &&
         a.f_x0 == b.f_x0 && a.f_star == b.f_star && a.L1 == b.L1 && a.L2 == b.L2 &&
         a.trace_stride == b.trace_stride && a.iterations == b.iterations &&
         a.output_episode == b.output_episode && a.output == b.output &&
         a.output_grad_norm == b.output_grad_norm && a.total_regret == b.total_regret &&
         a.mean_grad_norm_wbar == b.mean_grad_norm_wbar && a.max_delta_norm == b.max_delta_norm &&
         a.final_delta_norm == b.final_delta_norm && a.f_final == b.f_final;
}

Vector comparator(const Vector& grad_sum, double D) {
  if (!(D > 0.0)) throw InputError("comparator radius must be positive");
  const double norm = grad_sum.norm();
  if (norm == 0.0) return Vector::Zero(grad_sum.size());
  return (-D / norm) * grad_sum;
}

double shifting_regret(std::span<const EpisodeTrace> episodes) {
  double total = 0.0;
  std::size_t T = 0;
  for (const auto& ep : episodes) {
    if (ep.g.size() != ep.delta.size()) throw InputError("episode g and Delta lengths differ");
    if (T == 0) T = ep.g.size();
    if (ep.g.size() != T) throw InputError("episodes must have equal length");
    for (std::size_t n = 0; n < ep.g.size(); ++n) {
      if (ep.g[n].size() != ep.u.size() || ep.delta[n].size() != ep.u.size()) {
        throw InputError("dimension mismatch in episode trace");
      }
      total += ep.g[n].dot(ep.delta[n] - ep.u);
    }
  }
  return total;
}

Vector episode_average(std::span<const Vector> ws) {
  if (ws.empty()) throw InputError("episode_average needs at least one point");
  Vector sum = Vector::Zero(ws.front().size());
  for (const auto& w : ws) {
    if (w.size() != sum.size()) throw InputError("dimension mismatch in episode_average");
    sum += w;
  }
  return sum / static_cast<double>(ws.size());
}

std::size_t select_output(std::span<const EpisodeRecord> episodes, OracleMode mode,
                          std::mt19937_64& rng) {
  if (episodes.empty()) throw InputError("select_output needs at least one episode");
  if (mode == OracleMode::kStochastic) {
    std::uniform_int_distribution<std::size_t> pick(0, episodes.size() - 1);
    return pick(rng);
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < episodes.size(); ++i) {
    if (episodes[i].grad_norm_at_wbar < episodes[best].grad_norm_at_wbar) best = i;
  }
  return best;
}

std::mt19937_64 output_rng(std::uint64_t seed) {
  return std::mt19937_64(SplitMix64::mix(seed ^ 0xbb67ae8584caa73bULL));
}

// ---------------------------------------------------------------------------

EpisodeAccumulator::EpisodeAccumulator(const Problem& problem, double D, long long k,
                                       long long T, double eta_start)
    : problem_(&problem), D_(D), T_(T) {
  rec_.k = k;
  rec_.eta_start = eta_start;
  rec_.grad_sum = Vector::Zero(problem.dim());
  w_sum_ = Vector::Zero(problem.dim());
  exact_grad_sum_ = Vector::Zero(problem.dim());
}

void EpisodeAccumulator::add(const Step& s) {
  const Vector& g = *s.g;
  const Vector& delta = *s.delta;
  rec_.grad_sum += g;
  w_sum_ += *s.w;
  exact_grad_sum_ += *s.grad_w;
  rec_.linear_loss += g.dot(delta);
  rec_.sq_error_sum += (g - *s.h).squaredNorm();
  rec_.max_delta_norm = std::max(rec_.max_delta_norm, delta.norm());

  const double gap = s.f_prev - s.f_x + s.grad_w->dot(delta);
  if (std::isnan(rec_.conversion_gap_min) || gap < rec_.conversion_gap_min) {
    rec_.conversion_gap_min = gap;
  }

  const double wz = (*s.w - *s.z_prev).norm();
  if (s.delta_prev != nullptr) {
    const double half_change = 0.5 * (delta - *s.delta_prev).norm();
    rec_.sq_step_change_sum += (delta - *s.delta_prev).squaredNorm();
    rec_.geometry_error_max = std::max(rec_.geometry_error_max, std::abs(wz - half_change));
  }
  if (wz >= 1e-14) {
    const double ratio = (g - *s.h).norm() / wz;
    if (ratio > rec_.local_l1_max) {
      rec_.local_l1_max = ratio;
      rec_.local_l1_argmax = s.n;
    }
    if (s.grad_z_prev != nullptr) {
      rec_.local_l1_exact_max =
          std::max(rec_.local_l1_exact_max, (*s.grad_w - *s.grad_z_prev).norm() / wz);
    }
  }

  if (count_ == 0) {
    rec_.eta_min = rec_.eta_max = s.eta;
  } else {
    rec_.eta_min = std::min(rec_.eta_min, s.eta);
    rec_.eta_max = std::max(rec_.eta_max, s.eta);
    if (s.eta > last_eta_) rec_.eta_nonincreasing = false;
  }
  last_eta_ = s.eta;
  eta_sum_ += s.eta;
  rec_.f_end = s.f_x;
  ++count_;
}

EpisodeRecord EpisodeAccumulator::finish() {
  if (count_ != T_) throw ContractViolation("episode finished with the wrong number of steps");
  const double t = static_cast<double>(count_);
  rec_.comparator = comparator(rec_.grad_sum, D_);
  rec_.regret = rec_.linear_loss - rec_.grad_sum.dot(rec_.comparator);
  rec_.w_bar = w_sum_ / t;
  rec_.grad_norm_at_wbar = eval_grad(*problem_, rec_.w_bar).norm();
  rec_.mean_exact_grad_norm = (exact_grad_sum_ / t).norm();
  rec_.eta_mean = eta_sum_ / t;
  return rec_;
}

// ---------------------------------------------------------------------------

namespace {

void check_ball(const Vector& delta, double D, long long n) {
  if (!delta.allFinite() || delta.norm() > D * (1.0 + 1e-12)) {
    throw ContractViolation("learner left the D-ball at iteration " + std::to_string(n));
  }
}

long long stride_for(const EngineConfig& cfg) {
  if (cfg.trace_limit == 0 || cfg.M <= cfg.trace_limit) return 1;
  return (cfg.M + cfg.trace_limit - 1) / cfg.trace_limit;
}

}  // namespace

void finalize_run(const Problem& problem, RunResult& result) {
  double regret = 0.0;
  double norm_sum = 0.0;
  double max_delta = result.final_delta_norm;
  for (const auto& ep : result.episodes) {
    regret += ep.regret;
    norm_sum += ep.grad_norm_at_wbar;
    max_delta = std::max(max_delta, ep.max_delta_norm);
  }
  result.total_regret = regret;
  result.mean_grad_norm_wbar = norm_sum / static_cast<double>(result.episodes.size());
  result.max_delta_norm = max_delta;

  auto rng = output_rng(result.noise.rng_seed);
  const std::size_t idx = select_output(result.episodes, result.config.mode, rng);
  result.output_episode = result.episodes[idx].k;
  result.output = result.episodes[idx].w_bar;
  result.output_grad_norm = eval_grad(problem, result.output).norm();
}

RunResult run(const Problem& problem, const NoiseModel& noise, const EngineConfig& cfg,
              OnlineLearner& learner) {
  validate(cfg);
  if (cfg.mode == OracleMode::kDeterministic && noise.sigma != 0.0) {
    throw ConfigError("deterministic mode needs sigma = 0");
  }
  const auto started = std::chrono::steady_clock::now();
  const StochasticOracle oracle(problem, noise);
  const double D = cfg.D;
  const bool exact = noise.sigma == 0.0;

  RunResult result;
  result.problem = problem.name();
  result.learner = learner.info();
  result.config = cfg;
  result.noise = noise;
  result.x0 = problem.x0();
  result.f_x0 = eval_f(problem, problem.x0());
  result.f_star = problem.f_star();
  result.L1 = problem.L1();
  result.L2 = problem.L2();
  result.trace_stride = stride_for(cfg);

  Vector x_prev = problem.x0();
  Vector z_prev = x_prev;  // z_0 = x_0 (Delta_0 = 0)
  Vector h = oracle(x_prev, 0);
  Vector grad_z_prev = exact ? h : eval_grad(problem, z_prev);
  Vector delta = learner.init(h, D);
  check_ball(delta, D, 1);
  Vector delta_prev;
  double f_prev = result.f_x0;

  long long n = 0;
  for (long long k = 1; k <= cfg.K; ++k) {
    if (k > 1) learner.episode_boundary();
    EpisodeAccumulator acc(problem, D, k, cfg.T, learner.current_eta());
    for (long long t = 1; t <= cfg.T; ++t) {
      ++n;
      const auto id = static_cast<std::uint64_t>(n);
      Vector x = x_prev + delta;
      Vector w = x_prev + 0.5 * delta;
      Vector z = x + 0.5 * delta;
      Vector g = oracle(w, id);
      Vector h_next = oracle(z, id);
      Vector grad_w = exact ? g : eval_grad(problem, w);
      Vector grad_z = exact ? h_next : eval_grad(problem, z);
      const double f_x = eval_f(problem, x);

      learner.observe(g);
      const double eta = learner.current_eta();
      Vector delta_next = learner.propose(h_next);
      check_ball(delta_next, D, n + 1);

      EpisodeAccumulator::Step s;
      s.n = n;
      s.x_prev = &x_prev;
      s.delta = &delta;
      s.delta_prev = n > 1 ? &delta_prev : nullptr;
      s.x = &x;
      s.w = &w;
      s.z_prev = &z_prev;
      s.g = &g;
      s.h = &h;
      s.grad_w = &grad_w;
      s.grad_z_prev = &grad_z_prev;
      s.f_prev = f_prev;
      s.f_x = f_x;
      s.eta = eta;
      acc.add(s);

      if (cfg.trace_limit > 0 && n % result.trace_stride == 0) {
        result.iterations.push_back(IterationRecord{n, x_prev, delta, x, w, z, g, h, eta});
      }

      delta_prev = std::move(delta);
      delta = std::move(delta_next);
      x_prev = std::move(x);
      z_prev = std::move(z);
      h = std::move(h_next);
      grad_z_prev = std::move(grad_z);
      f_prev = f_x;
    }
    result.episodes.push_back(acc.finish());
  }

  result.final_delta_norm = delta.norm();
  result.f_final = f_prev;
  finalize_run(problem, result);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace o2nc
