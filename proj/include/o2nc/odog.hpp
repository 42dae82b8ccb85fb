#pragma once

#include "o2nc/common.hpp"
#include "o2nc/learner.hpp"
#include "o2nc/noise.hpp"

#include <cstdint>
#include <optional>
#include <variant>

namespace o2nc {

// Euclidean projection onto {v : |v| <= radius}.
Vector project_ball(const Vector& v, double radius);

// argmin_{|Delta| <= radius} <h1, Delta> = -radius h1 / |h1|; zero when h1 = 0.
Vector init_delta(const Vector& first_hint, double radius);

// Gradient at the extrapolated point z_n = x_n + Delta_n / 2, queried with the
// iteration's own sample id.  With Delta_0 = 0 this gives h_1 = grad f(x_0; xi_0).
Vector hint(const Vector& x_n, const Vector& delta_n, const StochasticOracle& oracle,
            std::uint64_t sample_id);

struct ConstantStep {
  double eta = 0.0;
};

// eta_t = gamma D / sqrt(alpha + sum_{i<=t} |g_i - h_i|^2) over the current episode.
struct AdaptiveStep {
  double gamma = 0.0;
  double alpha = 0.0;
  double accumulator = 0.0;
  long long within_episode_index = 0;
  // When false the accumulator stays at zero and eta is pinned to gamma D / sqrt(alpha).
  bool accumulate = true;
};

class StepSchedule {
 public:
  static StepSchedule constant(double eta);
  static StepSchedule adaptive(double gamma, double alpha);

  bool is_adaptive() const { return std::holds_alternative<AdaptiveStep>(kind_); }
  const ConstantStep* as_constant() const { return std::get_if<ConstantStep>(&kind_); }
  const AdaptiveStep* as_adaptive() const { return std::get_if<AdaptiveStep>(&kind_); }
  AdaptiveStep* as_adaptive() { return std::get_if<AdaptiveStep>(&kind_); }

  // Step size given everything observed so far in the episode.
  double eta(double radius) const;
  // Feeds |g_n - h_n|^2 for the iteration just observed.
  void observe(double squared_error);
  // Start of a new episode: clears the adaptive accumulator.
  void reset_episode();

 private:
  explicit StepSchedule(std::variant<ConstantStep, AdaptiveStep> kind) : kind_(kind) {}
  std::variant<ConstantStep, AdaptiveStep> kind_;
};

// gamma D / sqrt(alpha + accumulator).  InputError for constant schedules.
double adaptive_eta(const StepSchedule& s, double radius);

struct OdogState {
  Vector delta;       // Delta_n
  Vector hint;        // h_n
  Vector last_error;  // g_n - h_n, once observed
  StepSchedule schedule = StepSchedule::constant(0.0);
};

// Delta_{n+1} = Proj_D(Delta_n - eta h_{n+1} - eta (g_n - h_n)), eta taken from
// the schedule after it has seen |g_n - h_n|^2.  h_{n+1} becomes the stored hint.
OdogState odog_update(OdogState state, const Vector& g_n, const Vector& next_hint, double radius);

// The doubly optimistic learner behind the OnlineLearner interface.
class OdogLearner final : public OnlineLearner {
 public:
  explicit OdogLearner(StepSchedule schedule);

  LearnerInfo info() const override;
  Vector init(const Vector& first_hint, double radius) override;
  void observe(const Vector& loss_gradient) override;
  double current_eta() const override;
  Vector propose(const Vector& next_hint) override;
  void episode_boundary() override;

  const OdogState& state() const { return state_; }

 private:
  OdogState state_;
  StepSchedule initial_schedule_;
  double radius_ = 0.0;
};

struct HyperParams {
  double D = 0.0;
  long long T = 1;
  long long K = 1;
  // Constant step size; for adaptive schedules the episode-start value gamma D / sqrt(alpha).
  double eta = 0.0;
  StepSchedule schedule = StepSchedule::constant(0.0);
};

// sqrt(3/2), the minimiser of 3/(2 gamma) + gamma.
double default_gamma();
// 1e-12 (L1 D)^2.
double default_alpha(double L1, double D);

// Constant-step parameters:
//   D   = min{ (2 Fgap / (33 L2^{1/5} sigma^{4/5} M))^{5/7}, (2 Fgap / (15 M L1^{2/3} L2^{1/3}))^{3/7} }
//         (first branch only when sigma > 0),
//   T   = min(max(ceil((20 sigma / (L2 D^2))^{2/5}), ceil((10 L1 / (L2 D))^{1/3})), floor(M/2)),
//   K   = floor(M / T),
//   eta = 1 / sqrt(3 L1^2 + 12 T sigma^2 / D^2).
// L2 == 0: T = floor(M/2), D = sqrt(Fgap / (10 L1 K)).  Always 1 <= T <= max(1, M/2), K >= 1.
HyperParams theorem1_hyperparams(double L1, double L2, double sigma, double f_gap, long long M);

// Adaptive-step parameters: D as above with L1 -> L1_hat; with
// C1 = 3/(2 gamma) + gamma and C2 = 12/gamma + 8 gamma + 1,
//   T = min(max(ceil((C2 sigma / (L2 D^2))^{2/5}),
//               ceil((16 C1^{3/2} L1_hat gamma^{1/2} / (L2 D))^{1/3})), floor(M/2)).
// alpha defaults to default_alpha(L1_hat, D).
HyperParams theorem2_hyperparams(double L1_hat, double L2, double sigma, double f_gap, long long M,
                                 double gamma, std::optional<double> alpha = std::nullopt);

}  // namespace o2nc
