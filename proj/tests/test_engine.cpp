#include "o2nc/engine.hpp"
#include "o2nc/odog.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace o2nc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

oracle::Vec to_std(const Vector& v) { return oracle::Vec(v.data(), v.data() + v.size()); }

double max_abs_diff(const Vector& a, const oracle::Vec& b) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a(i) - b[static_cast<std::size_t>(i)]));
  return m;
}

// Walks out of the ball on the third proposal.
class RogueLearner final : public OnlineLearner {
 public:
  LearnerInfo info() const override { return {"rogue"}; }
  Vector init(const Vector& h, double radius) override {
    radius_ = radius;
    return Vector::Zero(h.size());
  }
  void observe(const Vector&) override {}
  double current_eta() const override { return 0.0; }
  Vector propose(const Vector& h) override {
    ++calls_;
    return Vector::Constant(h.size(), calls_ >= 3 ? radius_ : 0.0);
  }
  void episode_boundary() override {}

 private:
  double radius_ = 0.0;
  int calls_ = 0;
};

EpisodeRecord with_norm(long long k, double norm) {
  EpisodeRecord e;
  e.k = k;
  e.grad_norm_at_wbar = norm;
  e.w_bar = Vector::Constant(1, static_cast<double>(k));
  return e;
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("comparator examples") {
    CHECK((comparator(vec({3, 4}), 1) - vec({-0.6, -0.8})).norm() <= 1e-15);
    CHECK(comparator(vec({0, 0}), 2) == vec({0, 0}));
    CHECK(comparator(vec({5}), 2) == vec({-2}));
  }

  TEST_CASE("comparator is optimal over the ball") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vector s = vec({0.3, -1.2, 2.0, 0.1});
    const double D = 0.7;
    const Vector c = comparator(s, D);
    CHECK(c.norm() <= D * (1 + 1e-15));
    for (int i = 0; i < 100; ++i) {
      Vector v(4);
      for (int j = 0; j < 4; ++j) v(j) = n(rng);
      v *= D * u(rng) / v.norm();
      CHECK(s.dot(c) <= s.dot(v) + 1e-15);
    }
  }

  TEST_CASE("shifting_regret examples") {
    std::vector<EpisodeTrace> a{{{vec({1}), vec({1})}, {vec({-1}), vec({-1})}, vec({-1})}};
    CHECK(shifting_regret(a) == 0.0);
    std::vector<EpisodeTrace> b{{{vec({1}), vec({1})}, {vec({0}), vec({0})}, vec({-1})}};
    CHECK(shifting_regret(b) == 2.0);
    std::vector<EpisodeTrace> c{{{vec({2})}, {vec({0})}, vec({-1})}, {{vec({-2})}, {vec({0})}, vec({1})}};
    CHECK(shifting_regret(c) == 4.0);
    std::vector<EpisodeTrace> bad{{{vec({2})}, {vec({0})}, vec({-1})},
                                  {{vec({1}), vec({1})}, {vec({0}), vec({0})}, vec({1})}};
    CHECK_THROWS_AS(shifting_regret(bad), InputError);
  }

  TEST_CASE("episode_average examples") {
    std::vector<Vector> a{vec({0}), vec({2})};
    CHECK(episode_average(a) == vec({1}));
    std::vector<Vector> b{vec({1, 1})};
    CHECK(episode_average(b) == vec({1, 1}));
    std::vector<Vector> c{vec({1, 0}), vec({0, 1}), vec({2, 2})};
    CHECK(episode_average(c) == vec({1, 1}));
    CHECK_THROWS_AS(episode_average(std::vector<Vector>{}), InputError);
  }

  TEST_CASE("select_output") {
    std::mt19937_64 rng(3);
    std::vector<EpisodeRecord> eps{with_norm(1, 0.5), with_norm(2, 0.2), with_norm(3, 0.9)};
    CHECK(select_output(eps, OracleMode::kDeterministic, rng) == 1);
    std::vector<EpisodeRecord> ties{with_norm(1, 0.4), with_norm(2, 0.1), with_norm(3, 0.1)};
    CHECK(select_output(ties, OracleMode::kDeterministic, rng) == 1);
    std::vector<EpisodeRecord> one{with_norm(1, 3.0)};
    CHECK(select_output(one, OracleMode::kDeterministic, rng) == 0);
    CHECK(select_output(one, OracleMode::kStochastic, rng) == 0);

    std::vector<EpisodeRecord> four{with_norm(1, 1), with_norm(2, 1), with_norm(3, 1), with_norm(4, 1)};
    auto r1 = output_rng(77), r2 = output_rng(77);
    for (int i = 0; i < 10; ++i) {
      CHECK(select_output(four, OracleMode::kStochastic, r1) ==
            select_output(four, OracleMode::kStochastic, r2));
    }
  }

  TEST_CASE("one-step hand simulation") {
    DiagonalQuadratic q(Vector::Ones(1), vec({2}));
    OdogLearner learner(StepSchedule::constant(0.1));
    EngineConfig cfg;
    cfg.M = cfg.K = cfg.T = 1;
    cfg.D = 1.0;
    const auto res = run(q, NoiseModel{}, cfg, learner);
    REQUIRE(res.iterations.size() == 1);
    const auto& r = res.iterations[0];
    CHECK(r.h == vec({2}));
    CHECK(r.delta == vec({-1}));
    CHECK(r.x == vec({1}));
    CHECK(r.w == vec({1.5}));
    CHECK(r.g == vec({1.5}));
    CHECK(r.z == vec({0.5}));
    REQUIRE(res.episodes.size() == 1);
    CHECK(res.episodes[0].w_bar == vec({1.5}));
    CHECK(res.output == vec({1.5}));
    CHECK(res.trace_complete());
  }

  TEST_CASE("constant-step run matches the reference loop") {
    auto p = make_problem("cosine-quadratic", {{"dim", 4}});
    const double D = 0.05, eta = 1.0 / (std::sqrt(3.0) * 2.0);
    const long long K = 20, T = 7;
    OdogLearner learner(StepSchedule::constant(eta));
    EngineConfig cfg{K * T + 3, K, T, D, OracleMode::kDeterministic};
    const auto res = run(*p, NoiseModel{}, cfg, learner);
    const auto ref = oracle::reference_run(
        [](const oracle::Vec& x) { return oracle::cosine_grad(x, 1, 1, 1); }, to_std(p->x0()), D, K,
        T, eta);
    REQUIRE(res.iterations.size() == ref.steps.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.steps.size(); ++i) {
      worst = std::max(worst, max_abs_diff(res.iterations[i].delta, ref.steps[i].delta));
      worst = std::max(worst, max_abs_diff(res.iterations[i].w, ref.steps[i].w));
      worst = std::max(worst, max_abs_diff(res.iterations[i].g, ref.steps[i].g));
      worst = std::max(worst, max_abs_diff(res.iterations[i].h, ref.steps[i].h));
    }
    CHECK(worst <= 1e-12);
    REQUIRE(res.episodes.size() == static_cast<std::size_t>(K));
    for (std::size_t k = 0; k < ref.episode_regret.size(); ++k) {
      CHECK(std::abs(res.episodes[k].regret - ref.episode_regret[k]) <=
            1e-12 + 1e-9 * std::abs(ref.episode_regret[k]));
      CHECK(max_abs_diff(res.episodes[k].w_bar, ref.w_bar[k]) <= 1e-12);
    }
  }

  TEST_CASE("adaptive run matches the reference loop") {
    auto p = make_problem("cosine-quadratic", {{"dim", 3}, {"x0", {2.0, -1.0, 0.5}}});
    const double D = 0.08, gamma = 1.1, alpha = 1e-4;
    const long long K = 9, T = 11;
    OdogLearner learner(StepSchedule::adaptive(gamma, alpha));
    EngineConfig cfg{K * T, K, T, D, OracleMode::kDeterministic};
    const auto res = run(*p, NoiseModel{}, cfg, learner);
    const auto ref = oracle::reference_run(
        [](const oracle::Vec& x) { return oracle::cosine_grad(x, 1, 1, 1); }, to_std(p->x0()), D, K,
        T, 0.0, gamma, alpha);
    double worst = 0.0, worst_eta = 0.0;
    for (std::size_t i = 0; i < ref.steps.size(); ++i) {
      worst = std::max(worst, max_abs_diff(res.iterations[i].delta, ref.steps[i].delta));
      worst_eta = std::max(worst_eta, std::abs(res.iterations[i].eta - ref.steps[i].eta) / ref.steps[i].eta);
    }
    CHECK(worst <= 1e-12);
    CHECK(worst_eta <= 1e-12);
    for (const auto& ep : res.episodes) {
      CHECK(ep.eta_start == gamma * D / std::sqrt(alpha));
      CHECK(ep.eta_nonincreasing);
    }
  }

  TEST_CASE("bookkeeping identities hold on every record") {
    auto p = make_problem("cosine-quadratic", nlohmann::json::object());
    const auto hp = theorem1_hyperparams(2.0, 1.0, 0.0, eval_f(*p, p->x0()) - p->f_star(), 1024);
    OdogLearner learner(hp.schedule);
    const auto res = run(*p, NoiseModel{}, engine_config_from_budget(1024, hp.T, hp.D, OracleMode::kDeterministic), learner);
    REQUIRE(res.trace_complete());
    for (std::size_t i = 0; i < res.iterations.size(); ++i) {
      const auto& r = res.iterations[i];
      CHECK((r.x - (r.x_prev + r.delta)).norm() == 0.0);
      CHECK((r.w - (r.x_prev + 0.5 * r.delta)).norm() == 0.0);
      CHECK((r.z - (r.x + 0.5 * r.delta)).norm() == 0.0);
      CHECK(r.delta.norm() <= hp.D * (1 + 1e-12));
      if (i > 0) {
        const auto& prev = res.iterations[i - 1];
        CHECK(((r.w - prev.z) - 0.5 * (r.delta - prev.delta)).norm() <= 1e-15);
      }
    }
    CHECK(static_cast<long long>(res.episodes.size()) == res.config.K);
    bool output_is_wbar = false;
    for (const auto& ep : res.episodes) output_is_wbar = output_is_wbar || ep.w_bar == res.output;
    CHECK(output_is_wbar);
  }

  TEST_CASE("determinism") {
    auto p = make_problem("cosine-quadratic", {{"dim", 5}});
    const NoiseModel nm{0.5, NoiseMode::kSharedSeed, 31};
    EngineConfig cfg{600, 40, 15, 0.02, OracleMode::kStochastic};
    OdogLearner a(StepSchedule::constant(0.1)), b(StepSchedule::constant(0.1));
    const auto r1 = run(*p, nm, cfg, a);
    const auto r2 = run(*p, nm, cfg, b);
    CHECK(same_outcome(r1, r2));
    OdogLearner c(StepSchedule::constant(0.1));
    const auto r3 = run(*p, NoiseModel{0.5, NoiseMode::kSharedSeed, 32}, cfg, c);
    CHECK_FALSE(same_outcome(r1, r3));
  }

  TEST_CASE("leaving the ball is a contract violation") {
    DiagonalQuadratic q(Vector::Ones(2), Vector::Ones(2));
    RogueLearner rogue;
    EngineConfig cfg{10, 10, 1, 0.5, OracleMode::kDeterministic};
    CHECK_THROWS_AS(run(q, NoiseModel{}, cfg, rogue), ContractViolation);
  }

  TEST_CASE("configuration errors") {
    DiagonalQuadratic q(Vector::Ones(1), Vector::Ones(1));
    OdogLearner l(StepSchedule::constant(0.1));
    CHECK_THROWS_AS(run(q, NoiseModel{}, EngineConfig{10, 3, 4, 1.0}, l), ConfigError);
    CHECK_THROWS_AS(run(q, NoiseModel{}, EngineConfig{10, 1, 1, 0.0}, l), ConfigError);
    CHECK_THROWS_AS(run(q, NoiseModel{1.0}, EngineConfig{10, 1, 1, 1.0}, l), ConfigError);
    const auto cfg = engine_config_from_budget(10, 3, 1.0, OracleMode::kDeterministic);
    CHECK(cfg.K == 3);
  }

  TEST_CASE("trace thinning keeps episode aggregates") {
    auto p = make_problem("cosine-quadratic", {{"dim", 2}});
    EngineConfig cfg{250, 25, 10, 0.05, OracleMode::kDeterministic, 100};
    OdogLearner a(StepSchedule::constant(0.2));
    const auto thin = run(*p, NoiseModel{}, cfg, a);
    CHECK(thin.trace_stride == 3);
    CHECK(thin.iterations.size() == 83);
    for (const auto& r : thin.iterations) CHECK(r.n % 3 == 0);
    CHECK_FALSE(thin.trace_complete());

    cfg.trace_limit = 100000;
    OdogLearner b(StepSchedule::constant(0.2));
    const auto full = run(*p, NoiseModel{}, cfg, b);
    CHECK(full.trace_complete());
    CHECK(full.episodes == thin.episodes);
  }

  TEST_CASE("frozen adaptive schedule reproduces a constant step") {
    auto p = make_problem("cosine-quadratic", {{"dim", 6}});
    const double D = 0.0625, eta = 0.27;
    EngineConfig cfg{512, 32, 16, D, OracleMode::kDeterministic};
    OdogLearner constant(StepSchedule::constant(eta));
    auto frozen = StepSchedule::adaptive(eta / D, 1.0);
    frozen.as_adaptive()->accumulate = false;
    OdogLearner adaptive(frozen);
    const auto a = run(*p, NoiseModel{}, cfg, constant);
    const auto b = run(*p, NoiseModel{}, cfg, adaptive);
    CHECK(a.iterations == b.iterations);
    CHECK(a.episodes == b.episodes);
  }

  TEST_CASE("more budget lowers the mean averaged-gradient norm") {
    auto p = make_problem("cosine-quadratic", nlohmann::json::object());
    const double gap = eval_f(*p, p->x0()) - p->f_star();
    auto mean_norm = [&](long long M) {
      const auto hp = theorem1_hyperparams(p->L1(), p->L2(), 0.0, gap, M);
      OdogLearner l(hp.schedule);
      return run(*p, NoiseModel{}, engine_config_from_budget(M, hp.T, hp.D, OracleMode::kDeterministic), l)
          .mean_grad_norm_wbar;
    };
    CHECK(mean_norm(1 << 10) < mean_norm(1 << 8));
  }
}
