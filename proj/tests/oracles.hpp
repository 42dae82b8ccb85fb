#pragma once

// Independent reference computations used to freeze expected values.  They
// deliberately avoid the library's implementations (plain std::vector loops,
// direct formula transcriptions).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using GradFn = std::function<Vec(const Vec&)>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec axpy(double alpha, const Vec& x, const Vec& y) {  // alpha x + y
  Vec out(y);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

inline Vec project(const Vec& v, double D) {
  const double n = norm(v);
  if (n <= D) return v;
  Vec out(v);
  for (double& x : out) x *= D / n;
  return out;
}

struct Step {
  Vec delta, x, w, z, g, h;
  double eta = 0.0;
};

struct Trace {
  std::vector<Step> steps;
  std::vector<double> episode_regret;
  std::vector<Vec> w_bar;
};

// Deterministic Algorithm 1 with a constant step or the adaptive schedule
// (adaptive when gamma > 0), written without the library.
inline Trace reference_run(const GradFn& grad, Vec x0, double D, long long K, long long T,
                           double eta, double gamma = 0.0, double alpha = 0.0) {
  Trace tr;
  const std::size_t d = x0.size();
  Vec h = grad(x0);
  Vec delta(d, 0.0);
  const double hn = norm(h);
  if (hn > 0.0) {
    for (std::size_t i = 0; i < d; ++i) delta[i] = -D * h[i] / hn;
  }
  Vec x_prev = x0;
  for (long long k = 0; k < K; ++k) {
    double acc = 0.0;
    Vec gsum(d, 0.0), wsum(d, 0.0);
    double lin = 0.0;
    for (long long t = 0; t < T; ++t) {
      Step s;
      s.delta = delta;
      s.x = axpy(1.0, delta, x_prev);
      s.w = axpy(0.5, delta, x_prev);
      s.z = axpy(0.5, delta, s.x);
      s.g = grad(s.w);
      s.h = h;
      Vec h_next = grad(s.z);
      Vec err = axpy(-1.0, h, s.g);
      double eta_n = eta;
      if (gamma > 0.0) {
        acc += dot(err, err);
        eta_n = gamma * D / std::sqrt(alpha + acc);
      }
      s.eta = eta_n;
      Vec step = axpy(-eta_n, h_next, delta);
      step = axpy(-eta_n, err, step);
      lin += dot(s.g, delta);
      gsum = axpy(1.0, s.g, gsum);
      wsum = axpy(1.0, s.w, wsum);
      delta = project(step, D);
      x_prev = s.x;
      h = h_next;
      tr.steps.push_back(s);
    }
    const double gn = norm(gsum);
    tr.episode_regret.push_back(lin + (gn > 0.0 ? D * gn : 0.0));
    for (double& v : wsum) v /= static_cast<double>(T);
    tr.w_bar.push_back(wsum);
  }
  return tr;
}

struct Params {
  double D = 0.0;
  long long T = 0;
  long long K = 0;
  double eta = 0.0;
};

// Direct transcription of the constant-step parameter choice (L2 > 0).
inline Params theorem1(double L1, double L2, double sigma, double f_gap, long long M) {
  Params p;
  const double m = static_cast<double>(M);
  p.D = std::pow(2.0 * f_gap / (15.0 * m * std::pow(L1, 2.0 / 3.0) * std::pow(L2, 1.0 / 3.0)),
                 3.0 / 7.0);
  if (sigma > 0.0) {
    p.D = std::min(p.D, std::pow(2.0 * f_gap / (33.0 * std::pow(L2, 0.2) * std::pow(sigma, 0.8) * m),
                                 5.0 / 7.0));
  }
  double t1 = sigma > 0.0 ? std::ceil(std::pow(20.0 * sigma / (L2 * p.D * p.D), 0.4)) : 1.0;
  double t2 = std::ceil(std::pow(10.0 * L1 / (L2 * p.D), 1.0 / 3.0));
  p.T = static_cast<long long>(std::min(std::max(t1, t2), std::floor(m / 2.0)));
  p.T = std::max<long long>(p.T, 1);
  p.K = M / p.T;
  p.eta = 1.0 / std::sqrt(3.0 * L1 * L1 + 12.0 * p.T * sigma * sigma / (p.D * p.D));
  return p;
}

// Cosine-quadratic with a_i = a, in closed form.
inline Vec cosine_grad(const Vec& x, double a, double b, double c) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = a * x[i] - b * c * std::sin(c * x[i]);
  return g;
}

}  // namespace oracle
