#include "o2nc/odog.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace o2nc {

Vector project_ball(const Vector& v, double radius) {
  if (!(radius > 0.0)) throw InputError("ball radius must be positive");
  const double norm = v.norm();
  if (norm <= radius) return v;
  return (radius / norm) * v;
}

Vector init_delta(const Vector& first_hint, double radius) {
  if (!(radius > 0.0)) throw InputError("ball radius must be positive");
  const double norm = first_hint.norm();
  if (norm == 0.0) return Vector::Zero(first_hint.size());
  return (-radius / norm) * first_hint;
}

Vector hint(const Vector& x_n, const Vector& delta_n, const StochasticOracle& oracle,
            std::uint64_t sample_id) {
  const Vector z = x_n + 0.5 * delta_n;
  return oracle(z, sample_id);
}

// ---------------------------------------------------------------------------

StepSchedule StepSchedule::constant(double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InputError("constant step size must be >= 0");
  return StepSchedule(ConstantStep{eta});
}

StepSchedule StepSchedule::adaptive(double gamma, double alpha) {
  if (!(gamma > 0.0)) throw InputError("adaptive schedule needs gamma > 0");
  if (!(alpha > 0.0)) throw InputError("adaptive schedule needs alpha > 0");
  return StepSchedule(AdaptiveStep{gamma, alpha});
}

double StepSchedule::eta(double radius) const {
  if (const auto* c = as_constant()) return c->eta;
  const auto& a = std::get<AdaptiveStep>(kind_);
  return a.gamma * radius / std::sqrt(a.alpha + a.accumulator);
}

void StepSchedule::observe(double squared_error) {
  if (auto* a = as_adaptive()) {
    ++a->within_episode_index;
    if (a->accumulate) a->accumulator += squared_error;
  }
}

void StepSchedule::reset_episode() {
  if (auto* a = as_adaptive()) {
    a->accumulator = 0.0;
    a->within_episode_index = 0;
  }
}

double adaptive_eta(const StepSchedule& s, double radius) {
  if (!s.is_adaptive()) throw InputError("adaptive_eta called on a constant schedule");
  return s.eta(radius);
}

OdogState odog_update(OdogState state, const Vector& g_n, const Vector& next_hint, double radius) {
  state.last_error = g_n - state.hint;
  state.schedule.observe(state.last_error.squaredNorm());
  const double eta = state.schedule.eta(radius);
  state.delta = project_ball(state.delta - eta * next_hint - eta * state.last_error, radius);
  state.hint = next_hint;
  return state;
}

// ---------------------------------------------------------------------------

OdogLearner::OdogLearner(StepSchedule schedule) : initial_schedule_(std::move(schedule)) {
  state_.schedule = initial_schedule_;
}

LearnerInfo OdogLearner::info() const {
  LearnerInfo out;
  if (const auto* a = initial_schedule_.as_adaptive()) {
    out.kind = "odog-adaptive";
    out.gamma = a->gamma;
    out.alpha = a->alpha;
  } else {
    out.kind = "odog-const";
    out.eta = initial_schedule_.as_constant()->eta;
  }
  return out;
}

Vector OdogLearner::init(const Vector& first_hint, double radius) {
  radius_ = radius;
  state_.schedule = initial_schedule_;
  state_.hint = first_hint;
  state_.delta = init_delta(first_hint, radius);
  state_.last_error = Vector::Zero(first_hint.size());
  return state_.delta;
}

void OdogLearner::observe(const Vector& loss_gradient) {
  state_.last_error = loss_gradient - state_.hint;
  state_.schedule.observe(state_.last_error.squaredNorm());
}

double OdogLearner::current_eta() const { return state_.schedule.eta(radius_); }

Vector OdogLearner::propose(const Vector& next_hint) {
  const double eta = state_.schedule.eta(radius_);
  state_.delta = project_ball(state_.delta - eta * next_hint - eta * state_.last_error, radius_);
  state_.hint = next_hint;
  return state_.delta;
}

void OdogLearner::episode_boundary() { state_.schedule.reset_episode(); }

// ---------------------------------------------------------------------------

double default_gamma() { return std::sqrt(1.5); }

double default_alpha(double L1, double D) { return 1e-12 * (L1 * D) * (L1 * D); }

namespace {

void check_common(double L1, double L2, double sigma, double f_gap, long long M) {
  if (!(L1 > 0.0)) throw ConfigError("hyperparameters need L1 > 0");
  if (!(L2 >= 0.0)) throw ConfigError("hyperparameters need L2 >= 0");
  if (!(sigma >= 0.0)) throw ConfigError("hyperparameters need sigma >= 0");
  if (!(f_gap > 0.0)) throw ConfigError("hyperparameters need F(x0) - F* > 0");
  if (M < 2) throw ConfigError("hyperparameters need a budget M >= 2");
}

long long half_budget(long long M) { return std::max<long long>(1, M / 2); }

double radius_formula(double L1, double L2, double sigma, double f_gap, long long M) {
  const auto m = static_cast<double>(M);
  double D = std::pow(2.0 * f_gap / (15.0 * m * std::cbrt(L1 * L1) * std::cbrt(L2)), 3.0 / 7.0);
  if (sigma > 0.0) {
    const double noisy =
        std::pow(2.0 * f_gap / (33.0 * std::pow(L2, 0.2) * std::pow(sigma, 0.8) * m), 5.0 / 7.0);
    D = std::min(D, noisy);
  }
  return D;
}

// ceil of a nonnegative real, saturated so huge ratios do not overflow.
long long ceil_count(double v) {
  if (!(v < 9e15)) return static_cast<long long>(9e15);
  return static_cast<long long>(std::ceil(v));
}

long long clamp_length(long long T, long long M) {
  return std::clamp<long long>(T, 1, half_budget(M));
}

}  // namespace

HyperParams theorem1_hyperparams(double L1, double L2, double sigma, double f_gap, long long M) {
  check_common(L1, L2, sigma, f_gap, M);
  HyperParams hp;
  if (L2 == 0.0) {
    hp.T = half_budget(M);
    hp.K = std::max<long long>(1, M / hp.T);
    hp.D = std::sqrt(f_gap / (10.0 * L1 * static_cast<double>(hp.K)));
  } else {
    hp.D = radius_formula(L1, L2, sigma, f_gap, M);
    long long T = ceil_count(std::cbrt(10.0 * L1 / (L2 * hp.D)));
    if (sigma > 0.0) {
      T = std::max(T, ceil_count(std::pow(20.0 * sigma / (L2 * hp.D * hp.D), 0.4)));
    }
    hp.T = clamp_length(T, M);
    hp.K = std::max<long long>(1, M / hp.T);
  }
  hp.eta = 1.0 / std::sqrt(3.0 * L1 * L1 +
                           12.0 * static_cast<double>(hp.T) * sigma * sigma / (hp.D * hp.D));
  hp.schedule = StepSchedule::constant(hp.eta);
  return hp;
}

HyperParams theorem2_hyperparams(double L1_hat, double L2, double sigma, double f_gap, long long M,
                                 double gamma, std::optional<double> alpha) {
  check_common(L1_hat, L2, sigma, f_gap, M);
  if (!(gamma > 0.0)) throw ConfigError("adaptive hyperparameters need gamma > 0");
  const double c1 = 3.0 / (2.0 * gamma) + gamma;
  const double c2 = 12.0 / gamma + 8.0 * gamma + 1.0;

  HyperParams hp;
  if (L2 == 0.0) {
    hp.T = half_budget(M);
    hp.K = std::max<long long>(1, M / hp.T);
    hp.D = std::sqrt(f_gap / (10.0 * L1_hat * static_cast<double>(hp.K)));
  } else {
    hp.D = radius_formula(L1_hat, L2, sigma, f_gap, M);
    long long T =
        ceil_count(std::cbrt(16.0 * std::pow(c1, 1.5) * L1_hat * std::sqrt(gamma) / (L2 * hp.D)));
    if (sigma > 0.0) {
      T = std::max(T, ceil_count(std::pow(c2 * sigma / (L2 * hp.D * hp.D), 0.4)));
    }
    hp.T = clamp_length(T, M);
    hp.K = std::max<long long>(1, M / hp.T);
  }
  const double a = alpha.value_or(default_alpha(L1_hat, hp.D));
  if (!(a > 0.0)) throw ConfigError("adaptive hyperparameters need alpha > 0");
  hp.schedule = StepSchedule::adaptive(gamma, a);
  hp.eta = hp.schedule.eta(hp.D);
  return hp;
}

}  // namespace o2nc
