#pragma once

#include "o2nc/common.hpp"
#include "o2nc/learner.hpp"
#include "o2nc/noise.hpp"
#include "o2nc/problems.hpp"

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace o2nc {

enum class OracleMode { kDeterministic, kStochastic };

std::string to_string(OracleMode mode);

struct EngineConfig {
  long long M = 1;  // budget
  long long K = 1;  // episodes
  long long T = 1;  // episode length
  double D = 1.0;   // direction radius
  OracleMode mode = OracleMode::kDeterministic;
  // Full trace when M <= trace_limit, otherwise every ceil(M / trace_limit)-th
  // iteration.  0 disables the iteration trace.
  long long trace_limit = 100000;

  bool operator==(const EngineConfig&) const = default;
};

// Throws ConfigError unless M, K, T >= 1, K T <= M and D > 0.
void validate(const EngineConfig& cfg);

// Builds a config from a budget with K = floor(M / T).
EngineConfig engine_config_from_budget(long long M, long long T, double D, OracleMode mode);

struct IterationRecord {
  long long n = 0;
  Vector x_prev;
  Vector delta;
  Vector x;
  Vector w;
  Vector z;
  Vector g;
  Vector h;  // h_n, the hint the learner held when it chose delta
  double eta = 0.0;

  bool operator==(const IterationRecord&) const = default;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Episode summary.  Besides the defining quantities it carries aggregates of
// the per-iteration quantities so that bound checks do not need a full trace.
struct EpisodeRecord {
  long long k = 0;  // 1-based
  Vector grad_sum;
  Vector comparator;
  Vector w_bar;
  double regret = 0.0;  // sum <g, Delta - u>
  double grad_norm_at_wbar = 0.0;

  double linear_loss = 0.0;        // sum <g, Delta>
  double sq_error_sum = 0.0;       // sum |g - h|^2
  double sq_step_change_sum = 0.0; // sum |Delta_n - Delta_{n-1}|^2 over n >= 2
  double mean_exact_grad_norm = 0.0;  // |(1/T) sum grad F(w_n)|
  // min_n F(x_{n-1}) - F(x_n) + <grad F(w_n), Delta_n>
  double conversion_gap_min = kNaN;
  // max_n | |w_n - z_{n-1}| - |Delta_n - Delta_{n-1}| / 2 | over n >= 2
  double geometry_error_max = 0.0;
  // max |g_n - h_n| / |w_n - z_{n-1}| (z_0 = x_0), skipping denominators < 1e-14
  double local_l1_max = 0.0;
  long long local_l1_argmax = 0;
  // Same ratio with exact gradients grad F(w_n), grad F(z_{n-1}).
  double local_l1_exact_max = 0.0;
  double max_delta_norm = 0.0;
  double eta_start = kNaN;  // step size after the episode boundary, before any observation
  double eta_min = kNaN;
  double eta_max = kNaN;
  double eta_mean = kNaN;
  bool eta_nonincreasing = true;
  double f_end = kNaN;  // F(x_{kT})

  bool operator==(const EpisodeRecord&) const = default;
};

struct RunResult {
  std::string problem;
  LearnerInfo learner;
  EngineConfig config;
  NoiseModel noise;
  // False for methods whose steps are not confined to the D-ball (gd, sgd).
  bool ball_constrained = true;

  Vector x0;
  double f_x0 = 0.0;
  double f_star = 0.0;
  double L1 = 0.0;
  double L2 = 0.0;

  long long trace_stride = 1;
  std::vector<IterationRecord> iterations;
  std::vector<EpisodeRecord> episodes;

  long long output_episode = 1;  // 1-based k of the selected w_bar
  Vector output;
  double output_grad_norm = 0.0;

  double total_regret = 0.0;
  double mean_grad_norm_wbar = 0.0;
  double max_delta_norm = 0.0;    // includes the final Delta_{KT+1}
  double final_delta_norm = 0.0;
  double f_final = 0.0;
  double wall_time_seconds = 0.0;

  // Whether the stored trace holds every executed iteration in order.
  bool trace_complete() const;
};

// Equality of everything except wall time.
bool same_outcome(const RunResult& a, const RunResult& b);

// -D s / |s|, or zero when s = 0.
Vector comparator(const Vector& grad_sum, double D);

struct EpisodeTrace {
  std::vector<Vector> g;
  std::vector<Vector> delta;
  Vector u;
};

// sum_k sum_n <g_n, Delta_n - u^k>.  InputError on unequal episode lengths.
double shifting_regret(std::span<const EpisodeTrace> episodes);

// Componentwise mean.  InputError on empty input.
Vector episode_average(std::span<const Vector> ws);

// Index (0-based) into `episodes`.  Deterministic: argmin grad_norm_at_wbar,
// ties to the smallest k.  Stochastic: uniform draw from `rng`.
std::size_t select_output(std::span<const EpisodeRecord> episodes, OracleMode mode,
                          std::mt19937_64& rng);

// Generator used for output selection of a run seeded with `seed`.
std::mt19937_64 output_rng(std::uint64_t seed);

// Accumulates one episode's record from per-iteration observations.  Shared by
// the conversion loop and the plain gradient baselines.
class EpisodeAccumulator {
 public:
  struct Step {
    long long n = 0;
    const Vector* x_prev = nullptr;
    const Vector* delta = nullptr;
    const Vector* delta_prev = nullptr;  // null for n = 1
    const Vector* x = nullptr;
    const Vector* w = nullptr;
    const Vector* z_prev = nullptr;
    const Vector* g = nullptr;
    const Vector* h = nullptr;
    const Vector* grad_w = nullptr;       // exact grad F(w_n)
    const Vector* grad_z_prev = nullptr;  // exact grad F(z_{n-1}), may be null
    double f_prev = 0.0;
    double f_x = 0.0;
    double eta = 0.0;
  };

  EpisodeAccumulator(const Problem& problem, double D, long long k, long long T,
                     double eta_start);

  void add(const Step& s);
  EpisodeRecord finish();

 private:
  const Problem* problem_;
  double D_;
  long long T_;
  EpisodeRecord rec_;
  Vector w_sum_;
  Vector exact_grad_sum_;
  double eta_sum_ = 0.0;
  double last_eta_ = kNaN;
  long long count_ = 0;
};

// Runs the conversion loop with `learner` on `problem` for K T iterations:
//   h_1 = grad f(x_0; xi_0), Delta_1 = learner.init(h_1, D); for n = 1..KT
//   x_n = x_{n-1} + Delta_n, w_n = x_{n-1} + Delta_n / 2, z_n = x_n + Delta_n / 2,
//   g_n = grad f(w_n; xi_n), h_{n+1} = grad f(z_n; xi_n), Delta_{n+1} = learner step.
// xi_n = n.  Throws ContractViolation if the learner leaves the D-ball and
// ConfigError for deterministic mode with sigma > 0.
RunResult run(const Problem& problem, const NoiseModel& noise, const EngineConfig& cfg,
              OnlineLearner& learner);

// Fills run-level totals and the selected output from the episode records.
void finalize_run(const Problem& problem, RunResult& result);

}  // namespace o2nc
