#pragma once

#include "o2nc/common.hpp"

#include <limits>
#include <string>

namespace o2nc {

// Static description of a learner, echoed into run results.
struct LearnerInfo {
  std::string kind;
  double eta = std::numeric_limits<double>::quiet_NaN();
  double gamma = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
};

// Online learner over directions in the ball of radius D, driven by the
// conversion loop.  Per iteration the engine calls observe(g_n), reads
// current_eta(), then propose(h_{n+1}) to obtain Delta_{n+1}.
class OnlineLearner {
 public:
  virtual ~OnlineLearner() = default;

  virtual LearnerInfo info() const = 0;

  // Delta_1 from the first hint h_1.
  virtual Vector init(const Vector& first_hint, double radius) = 0;
  // Reveals the loss gradient g_n for the direction last proposed.
  virtual void observe(const Vector& loss_gradient) = 0;
  // Step size the next propose() will use.
  virtual double current_eta() const = 0;
  // Delta_{n+1} given the hint h_{n+1}.
  virtual Vector propose(const Vector& next_hint) = 0;
  // Called before the first iteration of every episode after the first.
  virtual void episode_boundary() = 0;
};

}  // namespace o2nc
