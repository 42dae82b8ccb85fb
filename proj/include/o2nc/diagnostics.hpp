#pragma once

#include "o2nc/common.hpp"
#include "o2nc/engine.hpp"
#include "o2nc/problems.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace o2nc {

constexpr double kRelSlack = 1e-9;
constexpr double kAbsSlack = 1e-12;

struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool satisfied = true;
  double slack = 0.0;  // rhs - lhs
  // Not evaluated (e.g. too few seeds).  Skipped reports count as satisfied.
  bool skipped = false;
  nlohmann::json context = nlohmann::json::object();
};

// lhs <= rhs + rel |rhs| + abs.
bool within(double lhs, double rhs, double rel = kRelSlack, double abs = kAbsSlack);

BoundReport make_report(std::string name, double lhs, double rhs,
                        nlohmann::json context = nlohmann::json::object(),
                        double rel = kRelSlack, double abs = kAbsSlack);
BoundReport skipped_report(std::string name, std::string reason);

bool all_satisfied(std::span<const BoundReport> reports);

struct LocalLipschitzEstimate {
  double value = 0.0;
  long long argmax_iteration = 0;
  bool empty = true;  // no iteration had |w_n - z_{n-1}| >= 1e-14
};

// max |g_n - h_n| / |w_n - z_{n-1}| over the trace.  Only records whose
// predecessor is present count (z_0 = x_0 for n = 1).
LocalLipschitzEstimate estimate_local_L1(std::span<const IterationRecord> trace);
// Same ratio with exact gradients grad F(w_n) and grad F(z_{n-1}).
LocalLipschitzEstimate estimate_local_L1_exact(std::span<const IterationRecord> trace,
                                               const Problem& p);
// Run-global estimate from the episode aggregates.
LocalLipschitzEstimate local_L1_from_episodes(const RunResult& run, bool exact_gradients);

// Reg <= 4 K D^2/eta + (5 eta/2) sum |g - h|^2 - (1/(4 eta)) sum_{n>=2} |Delta_n - Delta_{n-1}|^2
// from a complete trace and the per-episode comparators.
BoundReport check_lemma1(std::span<const IterationRecord> trace, std::span<const Vector> u_list,
                         double eta, double D);
// Same from the episode aggregates.
BoundReport check_lemma1(const RunResult& run, double eta);

// Episode regret <= 4 D^2/eta + (9/2) L1^2 eta D^2 (+ 18 eta T sigma^2 when sigma > 0).
// ConfigError unless eta <= 1/(sqrt(3) L1).
double lemma2_bound(double eta, double D, double L1, double sigma, long long T);
BoundReport check_lemma2_episode(const EpisodeRecord& episode, double eta, double D, double L1,
                                 double sigma, long long T);

// Episode regret <= 8 (3/gamma + gamma) D sqrt(T) sigma + 16 (3/gamma + gamma)^{3/2} L1_hat gamma^{1/2} D^2.
double lemma3_bound(double gamma, double D, long long T, double sigma, double L1_hat);
BoundReport check_lemma3_episode(const EpisodeRecord& episode, double gamma, double D, long long T,
                                 double sigma, double L1_hat);

// Seed-ensemble form.  pairs[s][k] = (lhs, rhs) of seed s, episode k.  For
// every k: mean_s lhs <= mean_s rhs + 3 SE_s(lhs - rhs).  The report shows
// the tightest episode.  Skipped with fewer than `min_seeds` seeds.
BoundReport check_ensemble(std::string name,
                           const std::vector<std::vector<std::pair<double, double>>>& pairs,
                           std::size_t min_seeds = 30);

// (1/K) sum |grad F(w_bar^k)| <= Fgap/(DKT) + Reg/(DKT) + L2 D^2/48 + L2 T^2 D^2 / 2.
BoundReport check_prop1(const RunResult& run);

// |grad F(w_bar)| <= |(1/T) sum grad F(w_n)| + (L2/2) T^2 D^2.
BoundReport check_avg_grad(std::span<const Vector> ws, const Problem& p, long long T, double D,
                           double L2);

// F(x_n) - F(x_{n-1}) <= <grad F(w_n), Delta_n> + L2 D^3 / 48 for every iteration.
BoundReport check_conversion(std::span<const IterationRecord> trace, const Problem& p, double D);
BoundReport check_conversion(const RunResult& run);

// max_n | |w_n - z_{n-1}| - |Delta_n - Delta_{n-1}|/2 | <= 1e-12 (n >= 2).
BoundReport check_hint_geometry(std::span<const IterationRecord> trace);
// |g_n - h_n| <= L1 |w_n - z_{n-1}| (1 + 1e-9) for n >= 2.
BoundReport check_hint_error(std::span<const IterationRecord> trace, double L1);

// max |Delta_n| <= D (1 + 1e-12).
BoundReport check_feasibility(const RunResult& run);

// Adaptive runs: eta nonincreasing inside every episode and equal to gamma D / sqrt(alpha)
// at every episode start.
BoundReport check_adaptive_schedule(const RunResult& run);

// Least-squares slope of log(value) against log(M).  InputError on fewer than
// three points or nonpositive entries.
double loglog_slope(std::span<const std::pair<double, double>> points);

struct LemmaC1Terms {
  double sqrt_sum = 0.0;  // sqrt(sum a)
  double middle = 0.0;    // sum a_i / sqrt(sum_{j<=i} a_j), zero terms skipped
  double upper = 0.0;     // 2 sqrt(sum a)
};
LemmaC1Terms lemma_c1_terms(std::span<const double> a);
// (a + b)^2 <= 2 min{(a + b)^2, a^2} + 2 b^2.
bool lemma_c2_holds(double a, double b);

// Randomised property checks of the two helper inequalities.
std::vector<BoundReport> inequality_oracles(std::size_t instances = 10000, std::uint64_t seed = 1);

// Every check that applies to a single run.
std::vector<BoundReport> verify_run(const RunResult& run, const Problem& p);
// Seed-averaged checks over runs that differ only in their seed.
std::vector<BoundReport> verify_seed_ensemble(std::span<const RunResult> runs,
                                              std::size_t min_seeds = 30);

nlohmann::json to_json(const BoundReport& r);
BoundReport bound_report_from_json(const nlohmann::json& j);

}  // namespace o2nc
