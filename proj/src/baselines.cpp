#include "o2nc/baselines.hpp"

#include "o2nc/odog.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace o2nc {

Vector gd_step(const Vector& x, const Vector& grad, double eta) {
  if (!(eta > 0.0)) throw InputError("step size must be positive");
  if (x.size() != grad.size()) throw InputError("dimension mismatch in gd_step");
  return x - eta * grad;
}

Vector o2nc_ogd_step(const Vector& delta, const Vector& g, double eta, double D) {
  if (!(eta > 0.0)) throw InputError("step size must be positive");
  if (delta.size() != g.size()) throw InputError("dimension mismatch in o2nc_ogd_step");
  return project_ball(delta - eta * g, D);
}

OgdLearner::OgdLearner(double eta) : eta_(eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("OGD step size must be positive");
}

LearnerInfo OgdLearner::info() const {
  LearnerInfo out;
  out.kind = "o2nc-ogd";
  out.eta = eta_;
  return out;
}

Vector OgdLearner::init(const Vector& first_hint, double radius) {
  radius_ = radius;
  delta_ = init_delta(first_hint, radius);
  last_gradient_ = Vector::Zero(first_hint.size());
  return delta_;
}

void OgdLearner::observe(const Vector& loss_gradient) { last_gradient_ = loss_gradient; }

Vector OgdLearner::propose(const Vector& /*next_hint*/) {
  delta_ = o2nc_ogd_step(delta_, last_gradient_, eta_, radius_);
  return delta_;
}

double gd_eta(double L1) {
  if (!(L1 > 0.0)) throw ConfigError("gd needs L1 > 0");
  return 1.0 / L1;
}

double sgd_eta(double L1, double sigma, long long M) {
  const double base = gd_eta(L1);
  if (sigma <= 0.0) return base;
  return std::min(base, 1.0 / (sigma * std::sqrt(static_cast<double>(M))));
}

RunResult run_gradient_method(const Problem& problem, const NoiseModel& noise,
                              const EngineConfig& cfg, GradientMethod method, double eta) {
  validate(cfg);
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("step size must be positive");
  if (cfg.mode == OracleMode::kDeterministic && noise.sigma != 0.0 &&
      method == GradientMethod::kSgd) {
    throw ConfigError("deterministic mode needs sigma = 0");
  }
  const auto started = std::chrono::steady_clock::now();

  RunResult result;
  result.problem = problem.name();
  result.learner.kind = method == GradientMethod::kGd ? "gd" : "sgd";
  result.learner.eta = eta;
  result.config = cfg;
  result.noise = noise;
  // gd ignores the oracle; sigma is kept only as an echo of the configuration.
  if (method == GradientMethod::kGd) result.config.mode = OracleMode::kDeterministic;
  result.ball_constrained = false;
  result.x0 = problem.x0();
  result.f_x0 = eval_f(problem, problem.x0());
  result.f_star = problem.f_star();
  result.L1 = problem.L1();
  result.L2 = problem.L2();
  result.trace_stride =
      (cfg.trace_limit == 0 || cfg.M <= cfg.trace_limit)
          ? 1
          : (cfg.M + cfg.trace_limit - 1) / cfg.trace_limit;

  const StochasticOracle oracle(problem, result.noise);
  const Vector zero = Vector::Zero(problem.dim());
  Vector x_prev = problem.x0();
  double f_prev = result.f_x0;
  long long n = 0;
  for (long long k = 1; k <= cfg.K; ++k) {
    EpisodeAccumulator acc(problem, cfg.D, k, cfg.T, eta);
    for (long long t = 1; t <= cfg.T; ++t) {
      ++n;
      Vector g = method == GradientMethod::kGd ? eval_grad(problem, x_prev)
                                               : oracle(x_prev, static_cast<std::uint64_t>(n));
      Vector grad_w =
          method == GradientMethod::kGd || noise.sigma == 0.0 ? g : eval_grad(problem, x_prev);
      Vector x = gd_step(x_prev, g, eta);
      Vector delta = x - x_prev;
      const double f_x = eval_f(problem, x);

      EpisodeAccumulator::Step s;
      s.n = n;
      s.x_prev = &x_prev;
      s.delta = &delta;
      s.x = &x;
      s.w = &x_prev;
      s.z_prev = &x_prev;
      s.g = &g;
      s.h = &zero;
      s.grad_w = &grad_w;
      s.f_prev = f_prev;
      s.f_x = f_x;
      s.eta = eta;
      acc.add(s);

      if (cfg.trace_limit > 0 && n % result.trace_stride == 0) {
        result.iterations.push_back(IterationRecord{n, x_prev, delta, x, x_prev, x, g, zero, eta});
      }
      x_prev = std::move(x);
      f_prev = f_x;
    }
    result.episodes.push_back(acc.finish());
  }
  result.final_delta_norm = 0.0;
  result.f_final = f_prev;
  finalize_run(problem, result);
  result.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

}  // namespace o2nc
