#pragma once

#include "o2nc/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace o2nc {

// Analytic constants of a smooth objective: gradient Lipschitz constant L1,
// Hessian Lipschitz constant L2 and a lower bound on the objective.
struct ProblemConstants {
  double L1 = 0.0;
  double L2 = 0.0;
  double f_star = 0.0;
};

// A smooth, bounded-below objective with analytic gradient and known constants.
//
// Derived classes implement value/gradient/hessian without argument checking;
// callers outside the problem module go through eval_f/eval_grad, which
// validate dimensions and finiteness.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual double value(const Vector& x) const = 0;
  virtual Vector gradient(const Vector& x) const = 0;
  // Empty when the problem has no closed-form Hessian.
  virtual std::optional<Matrix> hessian(const Vector& x) const = 0;

  Eigen::Index dim() const { return x0_.size(); }
  const Vector& x0() const { return x0_; }
  const ProblemConstants& constants() const { return constants_; }
  double L1() const { return constants_.L1; }
  double L2() const { return constants_.L2; }
  double f_star() const { return constants_.f_star; }

 protected:
  Problem(Vector x0, ProblemConstants constants);
  void set_f_star(double f_star) { constants_.f_star = f_star; }

 private:
  Vector x0_;
  ProblemConstants constants_;
};

using ProblemPtr = std::shared_ptr<const Problem>;

// F(x) = 1/2 sum_i a_i x_i^2 with a_i > 0.  L1 = max a_i, L2 = 0, F* = 0.
class DiagonalQuadratic final : public Problem {
 public:
  DiagonalQuadratic(Vector a, Vector x0);

  std::string name() const override { return "quadratic"; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  std::optional<Matrix> hessian(const Vector& x) const override;

  const Vector& curvatures() const { return a_; }

 private:
  Vector a_;
};

// F(x) = sum_i (a_i x_i^2 / 2 + b cos(c x_i)) with a_i >= 0, b, c >= 0.
// L1 = max a_i + b c^2, L2 = b c^3, F* = -b d.  Nonconvex when b c^2 > min a_i.
class CosineQuadratic final : public Problem {
 public:
  CosineQuadratic(Vector a, double b, double c, Vector x0);

  std::string name() const override { return "cosine-quadratic"; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  std::optional<Matrix> hessian(const Vector& x) const override;

 private:
  Vector a_;
  double b_;
  double c_;
};

// Mean logistic loss on a synthetic labelled dataset plus an l2 term:
//   F(x) = (1/m) sum_j log(1 + exp(-y_j <a_j, x>)) + mu/2 |x|^2.
// L1 = lambda_max(A^T A)/(4m) + mu,
// L2 = (1/(6 sqrt(3) m)) sum_j |a_j|^3  (max |phi'''| of the logistic loss),
// F* is the minimum value found by gradient descent to |grad| <= 1e-10.
class LogisticRegression final : public Problem {
 public:
  // Rows of `features` are the samples; labels are +-1.
  LogisticRegression(Matrix features, Vector labels, double mu, Vector x0);

  // Gaussian features, labels from a random teacher with 10% label flips.
  static std::shared_ptr<LogisticRegression> synthesize(Eigen::Index samples, Eigen::Index dim,
                                                        double mu, std::uint64_t data_seed,
                                                        Vector x0);

  std::string name() const override { return "logistic"; }
  double value(const Vector& x) const override;
  Vector gradient(const Vector& x) const override;
  std::optional<Matrix> hessian(const Vector& x) const override;

  const Matrix& features() const { return features_; }
  const Vector& labels() const { return labels_; }
  double mu() const { return mu_; }

 private:
  Matrix features_;
  Vector labels_;
  double mu_;
};

// Checked evaluations.  Throw InputError on dimension mismatch or non-finite input.
double eval_f(const Problem& p, const Vector& x);
Vector eval_grad(const Problem& p, const Vector& x);

// Central differences (f(x + delta e_i) - f(x - delta e_i)) / (2 delta).
Vector finite_diff_grad(const Problem& p, const Vector& x, double delta);

// Builds a bundled problem from its registry name and a JSON parameter object.
// Names: "quadratic", "cosine-quadratic", "logistic".  Unknown names or keys
// raise ConfigError.
ProblemPtr make_problem(std::string_view name, const nlohmann::json& params);

}  // namespace o2nc
