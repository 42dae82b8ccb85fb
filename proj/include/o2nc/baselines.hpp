#pragma once

#include "o2nc/common.hpp"
#include "o2nc/engine.hpp"
#include "o2nc/learner.hpp"

#include <string>

namespace o2nc {

// x - eta grad.
Vector gd_step(const Vector& x, const Vector& grad, double eta);

// Proj_D(delta - eta g).
Vector o2nc_ogd_step(const Vector& delta, const Vector& g, double eta, double D);

// Projected online gradient descent as a conversion-loop learner.  The first
// direction uses the same init as ODOG; hints are otherwise ignored.
class OgdLearner final : public OnlineLearner {
 public:
  explicit OgdLearner(double eta);

  LearnerInfo info() const override;
  Vector init(const Vector& first_hint, double radius) override;
  void observe(const Vector& loss_gradient) override;
  double current_eta() const override { return eta_; }
  Vector propose(const Vector& next_hint) override;
  void episode_boundary() override {}

 private:
  double eta_;
  double radius_ = 0.0;
  Vector delta_;
  Vector last_gradient_;
};

enum class GradientMethod { kGd, kSgd };

// 1 / L1.
double gd_eta(double L1);
// min(1/L1, 1/(sigma sqrt(M))); 1/L1 when sigma = 0.
double sgd_eta(double L1, double sigma, long long M);

// Plain (stochastic) gradient descent for K T iterations, recorded in the same
// shape as a conversion run: Delta_n = x_n - x_{n-1}, w_n = x_{n-1}, z_n = x_n,
// h_n = 0, with episodes of length T for comparable summaries.  gd queries exact
// gradients; sgd queries the oracle with sample id n.  The result is marked as
// not ball-constrained.
RunResult run_gradient_method(const Problem& problem, const NoiseModel& noise,
                              const EngineConfig& cfg, GradientMethod method, double eta);

}  // namespace o2nc
