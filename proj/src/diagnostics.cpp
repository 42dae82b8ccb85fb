#include "o2nc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace o2nc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinDenominator = 1e-14;

double to_number(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

// Folds per-episode reports into one: satisfied iff all are, showing the
// first violation or else the tightest episode.
BoundReport worst_of(std::string name, const std::vector<BoundReport>& parts) {
  if (parts.empty()) return skipped_report(std::move(name), "no episodes");
  std::size_t pick = 0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i].satisfied) {
      if (violations == 0) pick = i;
      ++violations;
    } else if (violations == 0 && parts[i].slack < parts[pick].slack) {
      pick = i;
    }
  }
  BoundReport out = parts[pick];
  out.name = std::move(name);
  out.satisfied = violations == 0;
  out.context["violations"] = violations;
  out.context["checked"] = parts.size();
  return out;
}

bool is_odog(const RunResult& run) {
  return run.learner.kind == "odog-const" || run.learner.kind == "odog-adaptive";
}

}  // namespace

bool within(double lhs, double rhs, double rel, double abs) {
  if (std::isnan(lhs) || std::isnan(rhs)) return false;
  return lhs <= rhs + rel * std::abs(rhs) + abs;
}

BoundReport make_report(std::string name, double lhs, double rhs, nlohmann::json context,
                        double rel, double abs) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = rhs - lhs;
  r.satisfied = within(lhs, rhs, rel, abs);
  r.context = context.is_null() ? nlohmann::json::object() : std::move(context);
  return r;
}

BoundReport skipped_report(std::string name, std::string reason) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = r.rhs = r.slack = std::numeric_limits<double>::quiet_NaN();
  r.satisfied = true;
  r.skipped = true;
  r.context["reason"] = std::move(reason);
  return r;
}

bool all_satisfied(std::span<const BoundReport> reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const BoundReport& r) { return r.skipped || r.satisfied; });
}

// ---------------------------------------------------------------------------

namespace {

template <class Ratio>
LocalLipschitzEstimate scan_ratios(std::span<const IterationRecord> trace, Ratio ratio) {
  LocalLipschitzEstimate est;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    const Vector* z_prev = nullptr;
    if (r.n == 1) {
      z_prev = &r.x_prev;
    } else if (i > 0 && trace[i - 1].n == r.n - 1) {
      z_prev = &trace[i - 1].z;
    } else {
      continue;
    }
    const double wz = (r.w - *z_prev).norm();
    if (wz < kMinDenominator) continue;
    const double value = ratio(r, *z_prev) / wz;
    if (est.empty || value > est.value) {
      est.value = value;
      est.argmax_iteration = r.n;
      est.empty = false;
    }
  }
  return est;
}

}  // namespace

LocalLipschitzEstimate estimate_local_L1(std::span<const IterationRecord> trace) {
  return scan_ratios(trace, [](const IterationRecord& r, const Vector&) { return (r.g - r.h).norm(); });
}

LocalLipschitzEstimate estimate_local_L1_exact(std::span<const IterationRecord> trace,
                                               const Problem& p) {
  return scan_ratios(trace, [&p](const IterationRecord& r, const Vector& z_prev) {
    return (eval_grad(p, r.w) - eval_grad(p, z_prev)).norm();
  });
}

LocalLipschitzEstimate local_L1_from_episodes(const RunResult& run, bool exact_gradients) {
  LocalLipschitzEstimate est;
  for (const auto& ep : run.episodes) {
    const double v = exact_gradients ? ep.local_l1_exact_max : ep.local_l1_max;
    if (v > 0.0 && (est.empty || v > est.value)) {
      est.value = v;
      est.argmax_iteration = exact_gradients ? 0 : ep.local_l1_argmax;
      est.empty = false;
    }
  }
  return est;
}

// ---------------------------------------------------------------------------

BoundReport check_lemma1(std::span<const IterationRecord> trace, std::span<const Vector> u_list,
                         double eta, double D) {
  if (!(eta > 0.0)) throw ConfigError("shifting-regret check needs eta > 0");
  if (u_list.empty() || trace.empty()) throw InputError("shifting-regret check needs a nonempty trace");
  if (trace.size() % u_list.size() != 0) {
    throw InputError("trace length is not a multiple of the episode count");
  }
  const std::size_t T = trace.size() / u_list.size();
  double regret = 0.0;
  double sq_error = 0.0;
  double sq_change = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    regret += r.g.dot(r.delta - u_list[i / T]);
    sq_error += (r.g - r.h).squaredNorm();
    if (i > 0) sq_change += (r.delta - trace[i - 1].delta).squaredNorm();
  }
  const double K = static_cast<double>(u_list.size());
  const double rhs = 4.0 * K * D * D / eta + 2.5 * eta * sq_error - sq_change / (4.0 * eta);
  return make_report("lemma1", regret, rhs,
                     {{"K", u_list.size()}, {"T", T}, {"sum_sq_error", sq_error},
                      {"sum_sq_step_change", sq_change}, {"route", "trace"}});
}

BoundReport check_lemma1(const RunResult& run, double eta) {
  if (!(eta > 0.0)) throw ConfigError("shifting-regret check needs eta > 0");
  double sq_error = 0.0;
  double sq_change = 0.0;
  for (const auto& ep : run.episodes) {
    sq_error += ep.sq_error_sum;
    sq_change += ep.sq_step_change_sum;
  }
  const double D = run.config.D;
  const double K = static_cast<double>(run.episodes.size());
  const double rhs = 4.0 * K * D * D / eta + 2.5 * eta * sq_error - sq_change / (4.0 * eta);
  return make_report("lemma1", run.total_regret, rhs,
                     {{"K", run.episodes.size()}, {"sum_sq_error", sq_error},
                      {"sum_sq_step_change", sq_change}, {"route", "episodes"}});
}

double lemma2_bound(double eta, double D, double L1, double sigma, long long T) {
  if (!(eta > 0.0)) throw ConfigError("episode regret bound needs eta > 0");
  if (eta > (1.0 + 1e-12) / (std::sqrt(3.0) * L1)) {
    throw ConfigError("episode regret bound needs eta <= 1/(sqrt(3) L1)");
  }
  double rhs = 4.0 * D * D / eta + 4.5 * L1 * L1 * eta * D * D;
  if (sigma > 0.0) rhs += 18.0 * eta * static_cast<double>(T) * sigma * sigma;
  return rhs;
}

BoundReport check_lemma2_episode(const EpisodeRecord& episode, double eta, double D, double L1,
                                 double sigma, long long T) {
  const double rhs = lemma2_bound(eta, D, L1, sigma, T);
  const double noise_6 = 4.0 * D * D / eta + 4.5 * L1 * L1 * eta * D * D +
                         6.0 * eta * static_cast<double>(T) * sigma * sigma;
  return make_report("lemma2", episode.regret, rhs,
                     {{"episode", episode.k}, {"rhs_noise_coefficient_6", noise_6}});
}

double lemma3_bound(double gamma, double D, long long T, double sigma, double L1_hat) {
  if (!(gamma > 0.0)) throw ConfigError("adaptive regret bound needs gamma > 0");
  const double c = 3.0 / gamma + gamma;
  return 8.0 * c * D * std::sqrt(static_cast<double>(T)) * sigma +
         16.0 * std::pow(c, 1.5) * L1_hat * std::sqrt(gamma) * D * D;
}

BoundReport check_lemma3_episode(const EpisodeRecord& episode, double gamma, double D, long long T,
                                 double sigma, double L1_hat) {
  const double rhs = lemma3_bound(gamma, D, T, sigma, L1_hat);
  const double c = 3.0 / (2.0 * gamma) + gamma;
  const double tight = 8.0 * c * D * std::sqrt(static_cast<double>(T)) * sigma +
                       16.0 * std::pow(c, 1.5) * L1_hat * std::sqrt(gamma) * D * D;
  return make_report("lemma3", episode.regret, rhs,
                     {{"episode", episode.k}, {"L1_hat", L1_hat},
                      {"rhs_tight_constant", tight}});
}

BoundReport check_ensemble(std::string name,
                           const std::vector<std::vector<std::pair<double, double>>>& pairs,
                           std::size_t min_seeds) {
  if (pairs.size() < std::max<std::size_t>(min_seeds, 2)) {
    return skipped_report(std::move(name), "needs at least " + std::to_string(min_seeds) +
                                               " seeds, got " + std::to_string(pairs.size()));
  }
  const std::size_t K = pairs.front().size();
  for (const auto& seed : pairs) {
    if (seed.size() != K) throw InputError("seed runs have different episode counts");
  }
  const double S = static_cast<double>(pairs.size());
  std::vector<BoundReport> parts;
  parts.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    double lhs = 0.0;
    double rhs = 0.0;
    double excess = 0.0;
    for (const auto& seed : pairs) {
      lhs += seed[k].first;
      rhs += seed[k].second;
      excess += seed[k].first - seed[k].second;
    }
    lhs /= S;
    rhs /= S;
    excess /= S;
    double var = 0.0;
    for (const auto& seed : pairs) {
      const double e = seed[k].first - seed[k].second - excess;
      var += e * e;
    }
    const double se = std::sqrt(var / (S - 1.0) / S);
    parts.push_back(make_report(name, lhs, rhs + 3.0 * se,
                                {{"episode", k + 1}, {"mean_rhs", rhs}, {"standard_error", se},
                                 {"seeds", pairs.size()}}));
  }
  return worst_of(std::move(name), parts);
}

BoundReport check_prop1(const RunResult& run) {
  if (run.noise.sigma != 0.0) throw ConfigError("descent check is deterministic (sigma = 0)");
  const double D = run.config.D;
  const double K = static_cast<double>(run.episodes.size());
  const double T = static_cast<double>(run.config.T);
  const double DKT = D * K * T;
  const double rhs = (run.f_x0 - run.f_star) / DKT + run.total_regret / DKT +
                     run.L2 * D * D / 48.0 + 0.5 * run.L2 * T * T * D * D;
  return make_report("prop1", run.mean_grad_norm_wbar, rhs,
                     {{"regret", run.total_regret}, {"f_gap", run.f_x0 - run.f_star}});
}

BoundReport check_avg_grad(std::span<const Vector> ws, const Problem& p, long long T, double D,
                           double L2) {
  const Vector w_bar = episode_average(ws);
  Vector grad_sum = Vector::Zero(p.dim());
  for (const auto& w : ws) grad_sum += eval_grad(p, w);
  const double t = static_cast<double>(T);
  const double rhs = (grad_sum / static_cast<double>(ws.size())).norm() + 0.5 * L2 * t * t * D * D;
  return make_report("avg_grad", eval_grad(p, w_bar).norm(), rhs);
}

BoundReport check_conversion(std::span<const IterationRecord> trace, const Problem& p, double D) {
  const double rhs = p.L2() * D * D * D / 48.0;
  double worst = -kInf;
  long long at = 0;
  for (const auto& r : trace) {
    const double lhs = eval_f(p, r.x) - eval_f(p, r.x_prev) - eval_grad(p, r.w).dot(r.delta);
    if (lhs > worst) {
      worst = lhs;
      at = r.n;
    }
  }
  return make_report("conversion", worst, rhs, {{"iteration", at}, {"route", "trace"}});
}

BoundReport check_conversion(const RunResult& run) {
  const double D = run.config.D;
  const double rhs = run.L2 * D * D * D / 48.0;
  double worst = -kInf;
  long long at = 0;
  for (const auto& ep : run.episodes) {
    if (-ep.conversion_gap_min > worst) {
      worst = -ep.conversion_gap_min;
      at = ep.k;
    }
  }
  return make_report("conversion", worst, rhs, {{"episode", at}, {"route", "episodes"}});
}

BoundReport check_hint_geometry(std::span<const IterationRecord> trace) {
  double worst = 0.0;
  long long at = 0;
  std::size_t checked = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const auto& r = trace[i];
    const auto& prev = trace[i - 1];
    if (prev.n != r.n - 1) continue;
    const double err =
        std::abs((r.w - prev.z).norm() - 0.5 * (r.delta - prev.delta).norm());
    ++checked;
    if (err > worst) {
      worst = err;
      at = r.n;
    }
  }
  return make_report("hint_geometry", worst, 1e-12, {{"iteration", at}, {"checked", checked}}, 0.0,
                     0.0);
}

BoundReport check_hint_error(std::span<const IterationRecord> trace, double L1) {
  double worst = 0.0;
  long long at = 0;
  std::size_t degenerate_violations = 0;
  for (std::size_t i = 1; i < trace.size(); ++i) {
    const auto& r = trace[i];
    const auto& prev = trace[i - 1];
    if (prev.n != r.n - 1) continue;
    const double wz = (r.w - prev.z).norm();
    const double e = (r.g - r.h).norm();
    if (wz < kMinDenominator) {
      if (e > L1 * wz * (1.0 + kRelSlack) + kAbsSlack) ++degenerate_violations;
      continue;
    }
    if (e / wz > worst) {
      worst = e / wz;
      at = r.n;
    }
  }
  BoundReport rep = make_report("hint_error", worst, L1,
                                {{"iteration", at}, {"degenerate_violations", degenerate_violations}},
                                kRelSlack, 0.0);
  if (degenerate_violations > 0) rep.satisfied = false;
  return rep;
}

BoundReport check_feasibility(const RunResult& run) {
  if (!run.ball_constrained) {
    return skipped_report("feasibility", run.learner.kind + " steps are not ball-constrained");
  }
  return make_report("feasibility", run.max_delta_norm, run.config.D, {}, 1e-12, 0.0);
}

BoundReport check_adaptive_schedule(const RunResult& run) {
  if (run.learner.kind != "odog-adaptive") {
    return skipped_report("adaptive_schedule", "not an adaptive run");
  }
  const double expected = run.learner.gamma * run.config.D / std::sqrt(run.learner.alpha);
  double worst = 0.0;
  std::size_t non_monotone = 0;
  for (const auto& ep : run.episodes) {
    worst = std::max(worst, std::abs(ep.eta_start - expected) / expected);
    if (!ep.eta_nonincreasing) ++non_monotone;
    if (ep.eta_max > ep.eta_start) ++non_monotone;
  }
  BoundReport rep = make_report("adaptive_schedule", worst, 0.0,
                                {{"expected_eta_start", expected},
                                 {"non_monotone_episodes", non_monotone}},
                                0.0, 1e-12);
  if (non_monotone > 0) rep.satisfied = false;
  return rep;
}

// ---------------------------------------------------------------------------

double loglog_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) throw InputError("loglog_slope needs at least three points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [m, v] : points) {
    if (!(m > 0.0) || !(v > 0.0)) throw InputError("loglog_slope needs positive values");
    sx += std::log(m);
    sy += std::log(v);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [m, v] : points) {
    const double dx = std::log(m) - mx;
    sxy += dx * (std::log(v) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw InputError("loglog_slope needs at least two distinct budgets");
  return sxy / sxx;
}

LemmaC1Terms lemma_c1_terms(std::span<const double> a) {
  LemmaC1Terms out;
  double prefix = 0.0;
  for (double v : a) {
    if (!(v >= 0.0)) throw InputError("terms must be nonnegative");
    prefix += v;
    if (v > 0.0) out.middle += v / std::sqrt(prefix);
  }
  out.sqrt_sum = std::sqrt(prefix);
  out.upper = 2.0 * out.sqrt_sum;
  return out;
}

bool lemma_c2_holds(double a, double b) {
  const double s = (a + b) * (a + b);
  const double rhs = 2.0 * std::min(s, a * a) + 2.0 * b * b;
  return within(s, rhs, 1e-12, 0.0);
}

std::vector<BoundReport> inequality_oracles(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> length(1, 64);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> exponent(-6.0, 6.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::size_t c1_violations = 0;
  double c1_worst_low = kInf;   // min of middle / sqrt_sum
  double c1_worst_high = 0.0;   // max of middle / upper
  std::vector<double> a;
  for (std::size_t i = 0; i < instances; ++i) {
    a.assign(static_cast<std::size_t>(length(rng)), 0.0);
    for (double& v : a) v = unit(rng) < 0.2 ? 0.0 : std::pow(10.0, exponent(rng));
    const auto t = lemma_c1_terms(a);
    if (t.sqrt_sum == 0.0) continue;
    const bool ok = within(t.sqrt_sum, t.middle, 1e-12, 0.0) && within(t.middle, t.upper, 1e-12, 0.0);
    if (!ok) ++c1_violations;
    c1_worst_low = std::min(c1_worst_low, t.middle / t.sqrt_sum);
    c1_worst_high = std::max(c1_worst_high, t.middle / t.upper);
  }

  std::size_t c2_violations = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const double scale = std::pow(10.0, exponent(rng) / 2.0);
    const double x = scale * normal(rng);
    const double y = scale * normal(rng);
    if (!lemma_c2_holds(x, y)) ++c2_violations;
  }

  return {
      make_report("lemma_c1", static_cast<double>(c1_violations), 0.0,
                  {{"instances", instances}, {"min_middle_over_lower", c1_worst_low},
                   {"max_middle_over_upper", c1_worst_high}},
                  0.0, 0.0),
      make_report("lemma_c2", static_cast<double>(c2_violations), 0.0, {{"instances", instances}},
                  0.0, 0.0),
  };
}

// ---------------------------------------------------------------------------

std::vector<BoundReport> verify_run(const RunResult& run, const Problem& p) {
  std::vector<BoundReport> out;
  out.push_back(check_feasibility(run));
  if (!run.ball_constrained) return out;

  const bool exact = run.noise.sigma == 0.0;
  const bool complete = run.trace_complete();
  const double D = run.config.D;
  const long long T = run.config.T;

  if (run.learner.kind == "odog-const") {
    if (complete) {
      std::vector<Vector> u;
      for (const auto& ep : run.episodes) u.push_back(ep.comparator);
      out.push_back(check_lemma1(run.iterations, u, run.learner.eta, D));
    } else {
      out.push_back(check_lemma1(run, run.learner.eta));
    }
    if (exact) {
      if (run.learner.eta > (1.0 + 1e-12) / (std::sqrt(3.0) * run.L1)) {
        out.push_back(skipped_report("lemma2", "eta exceeds 1/(sqrt(3) L1)"));
      } else {
        std::vector<BoundReport> parts;
        for (const auto& ep : run.episodes) {
          parts.push_back(check_lemma2_episode(ep, run.learner.eta, D, run.L1, 0.0, T));
        }
        out.push_back(worst_of("lemma2", parts));
      }
    }
  }

  if (run.learner.kind == "odog-adaptive") {
    out.push_back(check_adaptive_schedule(run));
    if (exact) {
      const auto l1_hat = local_L1_from_episodes(run, false);
      std::vector<BoundReport> parts;
      for (const auto& ep : run.episodes) {
        parts.push_back(check_lemma3_episode(ep, run.learner.gamma, D, T, 0.0, l1_hat.value));
      }
      out.push_back(worst_of("lemma3", parts));
    }
  }

  if (exact) {
    if (complete) {
      out.push_back(check_hint_geometry(run.iterations));
      out.push_back(check_hint_error(run.iterations, run.L1));
      out.push_back(check_conversion(run.iterations, p, D));
    } else {
      double geometry = 0.0;
      for (const auto& ep : run.episodes) geometry = std::max(geometry, ep.geometry_error_max);
      out.push_back(make_report("hint_geometry", geometry, 1e-12, {{"route", "episodes"}}, 0.0, 0.0));
      const auto est = local_L1_from_episodes(run, false);
      out.push_back(make_report("hint_error", est.value, run.L1,
                                {{"iteration", est.argmax_iteration}, {"route", "episodes"}},
                                kRelSlack, 0.0));
      out.push_back(check_conversion(run));
    }
    std::vector<BoundReport> parts;
    for (const auto& ep : run.episodes) {
      const double t = static_cast<double>(T);
      parts.push_back(make_report("avg_grad", ep.grad_norm_at_wbar,
                                  ep.mean_exact_grad_norm + 0.5 * run.L2 * t * t * D * D,
                                  {{"episode", ep.k}}));
    }
    out.push_back(worst_of("avg_grad", parts));
    out.push_back(check_prop1(run));
    const auto est = local_L1_from_episodes(run, false);
    out.push_back(make_report("local_L1", est.value, run.L1,
                              {{"iteration", est.argmax_iteration}}, kRelSlack, 0.0));
  }
  return out;
}

std::vector<BoundReport> verify_seed_ensemble(std::span<const RunResult> runs,
                                              std::size_t min_seeds) {
  std::vector<BoundReport> out;
  if (runs.empty()) return out;
  const auto& first = runs.front();
  if (!is_odog(first) || first.noise.sigma == 0.0) return out;
  for (const auto& r : runs) {
    if (r.learner.kind != first.learner.kind || !(r.config == first.config) ||
        r.noise.sigma != first.noise.sigma) {
      throw InputError("seed ensemble mixes different configurations");
    }
  }
  const double D = first.config.D;
  const long long T = first.config.T;
  const double sigma = first.noise.sigma;

  std::vector<std::vector<std::pair<double, double>>> pairs;
  if (first.learner.kind == "odog-const") {
    if (first.learner.eta > (1.0 + 1e-12) / (std::sqrt(3.0) * first.L1)) {
      out.push_back(skipped_report("lemma2_seed_mean", "eta exceeds 1/(sqrt(3) L1)"));
      return out;
    }
    const double rhs = lemma2_bound(first.learner.eta, D, first.L1, sigma, T);
    for (const auto& r : runs) {
      auto& row = pairs.emplace_back();
      for (const auto& ep : r.episodes) row.emplace_back(ep.regret, rhs);
    }
    out.push_back(check_ensemble("lemma2_seed_mean", pairs, min_seeds));
  } else {
    for (const auto& r : runs) {
      const double l1_hat = local_L1_from_episodes(r, true).value;
      const double rhs = lemma3_bound(r.learner.gamma, D, T, sigma, l1_hat);
      auto& row = pairs.emplace_back();
      for (const auto& ep : r.episodes) row.emplace_back(ep.regret, rhs);
    }
    out.push_back(check_ensemble("lemma3_seed_mean", pairs, min_seeds));
  }
  return out;
}

nlohmann::json to_json(const BoundReport& r) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
  };
  return {{"name", r.name},         {"lhs", num(r.lhs)},         {"rhs", num(r.rhs)},
          {"satisfied", r.satisfied}, {"slack", num(r.slack)}, {"skipped", r.skipped},
          {"context", r.context}};
}

BoundReport bound_report_from_json(const nlohmann::json& j) {
  auto num = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>() == "inf" ? kInf : -kInf;
    return to_number(v);
  };
  BoundReport r;
  r.name = j.at("name").get<std::string>();
  r.lhs = num(j.at("lhs"));
  r.rhs = num(j.at("rhs"));
  r.satisfied = j.at("satisfied").get<bool>();
  r.slack = num(j.at("slack"));
  r.skipped = j.at("skipped").get<bool>();
  r.context = j.at("context");
  return r;
}

}  // namespace o2nc
