#include "o2nc/problems.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <set>
#include <string>
#include <utility>

namespace o2nc {

namespace {

void check_point(const Problem& p, const Vector& x) {
  if (x.size() != p.dim()) {
    throw InputError("point has dimension " + std::to_string(x.size()) + ", problem '" + p.name() +
                     "' expects " + std::to_string(p.dim()));
  }
  if (!x.allFinite()) throw InputError("point has non-finite entries");
}

// log(1 + exp(-t)) without overflow.
double logistic_loss(double t) {
  return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

Problem::Problem(Vector x0, ProblemConstants constants)
    : x0_(std::move(x0)), constants_(constants) {
  if (x0_.size() < 1) throw InputError("problem dimension must be >= 1");
  if (!x0_.allFinite()) throw InputError("start point has non-finite entries");
  if (!(constants_.L1 > 0.0)) throw InputError("L1 must be positive");
  if (!(constants_.L2 >= 0.0)) throw InputError("L2 must be nonnegative");
}

// ---------------------------------------------------------------------------

DiagonalQuadratic::DiagonalQuadratic(Vector a, Vector x0)
    : Problem(x0, {a.size() > 0 ? a.maxCoeff() : 0.0, 0.0, 0.0}), a_(std::move(a)) {
  if (a_.size() != dim()) throw InputError("curvature vector and x0 differ in dimension");
  if ((a_.array() <= 0.0).any()) throw InputError("quadratic curvatures must be positive");
}

double DiagonalQuadratic::value(const Vector& x) const {
  return 0.5 * (a_.array() * x.array().square()).sum();
}

Vector DiagonalQuadratic::gradient(const Vector& x) const { return a_.cwiseProduct(x); }

std::optional<Matrix> DiagonalQuadratic::hessian(const Vector&) const {
  return Matrix(a_.asDiagonal());
}

// ---------------------------------------------------------------------------

CosineQuadratic::CosineQuadratic(Vector a, double b, double c, Vector x0)
    : Problem(x0,
              {(a.size() > 0 ? a.maxCoeff() : 0.0) + b * c * c, b * c * c * c,
               -b * static_cast<double>(x0.size())}),
      a_(std::move(a)),
      b_(b),
      c_(c) {
  if (a_.size() != dim()) throw InputError("curvature vector and x0 differ in dimension");
  if ((a_.array() < 0.0).any()) throw InputError("cosine-quadratic curvatures must be >= 0");
  if (b_ < 0.0 || c_ < 0.0) throw InputError("cosine-quadratic needs b >= 0 and c >= 0");
}

double CosineQuadratic::value(const Vector& x) const {
  return (0.5 * a_.array() * x.array().square() + b_ * (c_ * x.array()).cos()).sum();
}

Vector CosineQuadratic::gradient(const Vector& x) const {
  return (a_.array() * x.array() - b_ * c_ * (c_ * x.array()).sin()).matrix();
}

std::optional<Matrix> CosineQuadratic::hessian(const Vector& x) const {
  const Vector diag = (a_.array() - b_ * c_ * c_ * (c_ * x.array()).cos()).matrix();
  return Matrix(diag.asDiagonal());
}

// ---------------------------------------------------------------------------

namespace {

ProblemConstants logistic_constants(const Matrix& features, const Vector& labels, double mu,
                                    const Vector& x0) {
  const auto m = static_cast<double>(features.rows());
  if (features.rows() < 1) throw InputError("logistic problem needs at least one sample");
  if (labels.size() != features.rows()) throw InputError("labels and features disagree");
  if (features.cols() != x0.size()) throw InputError("features and x0 differ in dimension");
  if (!(mu >= 0.0)) throw InputError("mu must be nonnegative");

  const Matrix gram = features.transpose() * features;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double lambda_max = eig.eigenvalues().maxCoeff();

  const double third_derivative_bound = 1.0 / (6.0 * std::sqrt(3.0));
  const double cubes = features.rowwise().norm().array().cube().sum();
  return {lambda_max / (4.0 * m) + mu, third_derivative_bound * cubes / m, 0.0};
}

}  // namespace

LogisticRegression::LogisticRegression(Matrix features, Vector labels, double mu, Vector x0)
    : Problem(x0, logistic_constants(features, labels, mu, x0)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      mu_(mu) {
  // F* by gradient descent with step 1/L1.  When mu > 0, subtracting
  // |grad|^2 / (2 mu) turns the final value into a certified lower bound.
  Vector x = Vector::Zero(dim());
  const double step = 1.0 / L1();
  Vector g = gradient(x);
  for (int it = 0; it < 1'000'000 && g.norm() > 1e-10; ++it) {
    x -= step * g;
    g = gradient(x);
  }
  double f_star = value(x);
  if (mu_ > 0.0) f_star -= g.squaredNorm() / (2.0 * mu_);
  set_f_star(f_star);
}

std::shared_ptr<LogisticRegression> LogisticRegression::synthesize(Eigen::Index samples,
                                                                   Eigen::Index dim, double mu,
                                                                   std::uint64_t data_seed,
                                                                   Vector x0) {
  if (samples < 1 || dim < 1) throw InputError("logistic problem needs samples >= 1 and dim >= 1");
  std::mt19937_64 rng(data_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Vector teacher(dim);
  for (Eigen::Index i = 0; i < dim; ++i) teacher(i) = normal(rng);
  Matrix features(samples, dim);
  Vector labels(samples);
  for (Eigen::Index j = 0; j < samples; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) features(j, i) = normal(rng);
    double label = features.row(j).dot(teacher) >= 0.0 ? 1.0 : -1.0;
    if (unif(rng) < 0.1) label = -label;
    labels(j) = label;
  }
  return std::make_shared<LogisticRegression>(std::move(features), std::move(labels), mu,
                                              std::move(x0));
}

double LogisticRegression::value(const Vector& x) const {
  const Vector margins = labels_.cwiseProduct(features_ * x);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < margins.size(); ++j) loss += logistic_loss(margins(j));
  return loss / static_cast<double>(features_.rows()) + 0.5 * mu_ * x.squaredNorm();
}

Vector LogisticRegression::gradient(const Vector& x) const {
  const Vector margins = labels_.cwiseProduct(features_ * x);
  Vector weights(margins.size());
  for (Eigen::Index j = 0; j < margins.size(); ++j) weights(j) = -labels_(j) * sigmoid(-margins(j));
  return features_.transpose() * weights / static_cast<double>(features_.rows()) + mu_ * x;
}

std::optional<Matrix> LogisticRegression::hessian(const Vector& x) const {
  const Vector margins = labels_.cwiseProduct(features_ * x);
  Vector curv(margins.size());
  for (Eigen::Index j = 0; j < margins.size(); ++j) {
    const double s = sigmoid(margins(j));
    curv(j) = s * (1.0 - s);
  }
  Matrix h = features_.transpose() * curv.asDiagonal() * features_ /
             static_cast<double>(features_.rows());
  h.diagonal().array() += mu_;
  return h;
}

// ---------------------------------------------------------------------------

double eval_f(const Problem& p, const Vector& x) {
  check_point(p, x);
  return p.value(x);
}

Vector eval_grad(const Problem& p, const Vector& x) {
  check_point(p, x);
  return p.gradient(x);
}

Vector finite_diff_grad(const Problem& p, const Vector& x, double delta) {
  check_point(p, x);
  if (!(delta > 0.0)) throw InputError("finite-difference step must be positive");
  Vector grad(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + delta;
    const double up = p.value(probe);
    probe(i) = x(i) - delta;
    const double down = p.value(probe);
    probe(i) = x(i);
    grad(i) = (up - down) / (2.0 * delta);
  }
  return grad;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

void reject_unknown(const json& params, const std::set<std::string>& allowed,
                    std::string_view problem) {
  if (!params.is_object()) throw ConfigError("problem parameters must be an object");
  for (const auto& [key, _] : params.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown parameter '" + key + "' for problem '" + std::string(problem) +
                        "'");
    }
  }
}

double number(const json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  if (!params[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return params[key].get<double>();
}

// Accepts a scalar (broadcast) or an array of length dim.
Vector vector_param(const json& params, const char* key, Eigen::Index dim, double fallback) {
  if (!params.contains(key)) return Vector::Constant(dim, fallback);
  const json& v = params[key];
  if (v.is_number()) return Vector::Constant(dim, v.get<double>());
  if (!v.is_array()) throw ConfigError(std::string("'") + key + "' must be a number or array");
  if (static_cast<Eigen::Index>(v.size()) != dim) {
    throw ConfigError(std::string("'") + key + "' has length " + std::to_string(v.size()) +
                      ", expected " + std::to_string(dim));
  }
  Vector out(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) {
      throw ConfigError(std::string("'") + key + "' entries must be numbers");
    }
    out(i) = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

Eigen::Index dim_param(const json& params, Eigen::Index fallback) {
  if (!params.contains("dim")) {
    // An explicit array for a or x0 fixes the dimension.
    for (const char* key : {"a", "x0"}) {
      if (params.contains(key) && params[key].is_array()) {
        return static_cast<Eigen::Index>(params[key].size());
      }
    }
    return fallback;
  }
  if (!params["dim"].is_number_integer() || params["dim"].get<long long>() < 1) {
    throw ConfigError("'dim' must be a positive integer");
  }
  return static_cast<Eigen::Index>(params["dim"].get<long long>());
}

}  // namespace

ProblemPtr make_problem(std::string_view name, const nlohmann::json& params_in) {
  const json params = params_in.is_null() ? json::object() : params_in;
  try {
    if (name == "quadratic") {
      reject_unknown(params, {"dim", "a", "x0"}, name);
      const auto d = dim_param(params, 10);
      return std::make_shared<DiagonalQuadratic>(vector_param(params, "a", d, 1.0),
                                                 vector_param(params, "x0", d, 2.0));
    }
    if (name == "cosine-quadratic") {
      reject_unknown(params, {"dim", "a", "b", "c", "x0"}, name);
      const auto d = dim_param(params, 10);
      return std::make_shared<CosineQuadratic>(vector_param(params, "a", d, 1.0),
                                               number(params, "b", 1.0), number(params, "c", 1.0),
                                               vector_param(params, "x0", d, 2.0));
    }
    if (name == "logistic") {
      reject_unknown(params, {"dim", "samples", "mu", "data_seed", "x0"}, name);
      const auto d = dim_param(params, 10);
      const double samples = number(params, "samples", 200);
      const double seed = number(params, "data_seed", 7);
      if (samples < 1 || seed < 0) throw ConfigError("logistic needs samples >= 1, data_seed >= 0");
      return LogisticRegression::synthesize(static_cast<Eigen::Index>(samples), d,
                                            number(params, "mu", 1e-2),
                                            static_cast<std::uint64_t>(seed),
                                            vector_param(params, "x0", d, 1.0));
    }
  } catch (const InputError& e) {
    throw ConfigError(std::string("problem '") + std::string(name) + "': " + e.what());
  }
  throw ConfigError("unknown problem '" + std::string(name) +
                    "' (expected quadratic, cosine-quadratic or logistic)");
}

}  // namespace o2nc
