#include "o2nc/odog.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace o2nc;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

OdogState scalar_state(double delta, double hint, double eta) {
  OdogState s;
  s.delta = vec({delta});
  s.hint = vec({hint});
  s.schedule = StepSchedule::constant(eta);
  return s;
}

}  // namespace

TEST_SUITE("odog") {
  TEST_CASE("project_ball") {
    CHECK(project_ball(vec({3, 4}), 10) == vec({3, 4}));
    CHECK((project_ball(vec({3, 4}), 1) - vec({0.6, 0.8})).norm() <= 1e-15);
    CHECK(project_ball(vec({0, 0}), 1) == vec({0, 0}));
    CHECK_THROWS_AS(project_ball(vec({1}), 0.0), InputError);
  }

  TEST_CASE("init_delta") {
    CHECK((init_delta(vec({3, 4}), 1) - vec({-0.6, -0.8})).norm() <= 1e-15);
    CHECK(init_delta(vec({0, 0}), 1) == vec({0, 0}));
    CHECK(init_delta(vec({2}), 0.5) == vec({-0.5}));
  }

  TEST_CASE("hint evaluates at the extrapolated point") {
    DiagonalQuadratic q(Vector::Ones(1), Vector::Zero(1));
    StochasticOracle exact(q, NoiseModel{});
    CHECK(hint(vec({1}), vec({0.5}), exact, 1) == vec({1.25}));
    DiagonalQuadratic q2(Vector::Ones(2), Vector::Zero(2));
    StochasticOracle exact2(q2, NoiseModel{});
    CHECK(hint(vec({1, -2}), vec({0, 0}), exact2, 3) == vec({1, -2}));
    CosineQuadratic cq(Vector::Ones(1), 1.0, 1.0, Vector::Zero(1));
    StochasticOracle exact3(cq, NoiseModel{});
    CHECK(std::abs(hint(vec({0}), vec({1}), exact3, 0)(0) - (0.5 - std::sin(0.5))) <= 1e-15);
  }

  TEST_CASE("odog_update examples") {
    // 0.5 - 0.1*2 - 0.1*(1 - 1.5) = 0.35
    auto s = odog_update(scalar_state(0.5, 1.5, 0.1), vec({1}), vec({2}), 1.0);
    CHECK(s.delta(0) == doctest::Approx(0.35).epsilon(1e-14));
    CHECK(s.hint == vec({2}));
    CHECK(s.last_error == vec({-0.5}));

    auto still = odog_update(scalar_state(0.3, 0.7, 0.4), vec({0.7}), vec({0}), 1.0);
    CHECK(still.delta == vec({0.3}));

    auto clipped = odog_update(scalar_state(0.0, 0.2, 1.0), vec({0.2}), vec({5}), 1.0);
    CHECK(clipped.delta == vec({-1}));
  }

  TEST_CASE("adaptive_eta examples") {
    auto s = StepSchedule::adaptive(1.0, 0.01);
    CHECK(adaptive_eta(s, 1.0) == doctest::Approx(10.0).epsilon(1e-14));
    auto s2 = StepSchedule::adaptive(1.0, 1e-12);
    s2.observe(4.0);
    CHECK(adaptive_eta(s2, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
    auto s3 = StepSchedule::adaptive(2.0, 1.0);
    s3.observe(1.0);
    s3.observe(2.0);
    CHECK(adaptive_eta(s3, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(adaptive_eta(StepSchedule::constant(0.1), 1.0), InputError);
  }

  TEST_CASE("adaptive schedule is nonincreasing and resets") {
    auto s = StepSchedule::adaptive(1.3, 1e-6);
    double prev = s.eta(0.2);
    for (double e : {0.0, 1e-3, 0.5, 0.0, 2.0}) {
      s.observe(e);
      CHECK(s.eta(0.2) <= prev);
      prev = s.eta(0.2);
    }
    CHECK(s.as_adaptive()->within_episode_index == 5);
    s.reset_episode();
    CHECK(s.eta(0.2) == 1.3 * 0.2 / std::sqrt(1e-6));
    CHECK(s.as_adaptive()->accumulator == 0.0);
  }

  TEST_CASE("learner reproduces odog_update") {
    OdogLearner learner(StepSchedule::constant(0.2));
    const Vector d1 = learner.init(vec({3, 4}), 1.0);
    CHECK((d1 - vec({-0.6, -0.8})).norm() <= 1e-15);
    OdogState s;
    s.delta = d1;
    s.hint = vec({3, 4});
    s.schedule = StepSchedule::constant(0.2);
    learner.observe(vec({2.5, 4.5}));
    const Vector d2 = learner.propose(vec({1, -1}));
    s = odog_update(s, vec({2.5, 4.5}), vec({1, -1}), 1.0);
    CHECK(d2 == s.delta);
    CHECK(learner.info().kind == "odog-const");
    CHECK(OdogLearner(StepSchedule::adaptive(1, 1)).info().kind == "odog-adaptive");
  }

  TEST_CASE("constant-step params at sigma = 0 give eta = 1/(sqrt(3) L1)") {
    for (double L1 : {0.5, 2.0, 7.0}) {
      const auto hp = theorem1_hyperparams(L1, 1.0, 0.0, 3.0, 4096);
      CHECK(hp.eta == doctest::Approx(1.0 / (std::sqrt(3.0) * L1)).epsilon(1e-15));
      CHECK(hp.eta <= 1.0 / (std::sqrt(3.0) * L1) * (1 + 1e-15));
    }
  }

  TEST_CASE("constant-step params match the formula oracle") {
    const auto hp = theorem1_hyperparams(1.0, 1.0, 0.0, 1.0, 1024);
    const double D = std::pow(2.0 / 15360.0, 3.0 / 7.0);
    CHECK(hp.D == doctest::Approx(D).epsilon(1e-14));
    const auto T = std::min<long long>(
        std::max<long long>(1, static_cast<long long>(std::ceil(std::cbrt(10.0 / D)))), 512);
    CHECK(hp.T == T);
    CHECK(hp.T == 8);
    CHECK(hp.K == 1024 / T);

    for (double sigma : {0.0, 0.01, 0.3, 1.0, 5.0}) {
      for (long long M : {16LL, 256LL, 4096LL, 1LL << 20}) {
        const auto want = oracle::theorem1(2.0, 1.0, sigma, 17.0, M);
        const auto got = theorem1_hyperparams(2.0, 1.0, sigma, 17.0, M);
        CAPTURE(sigma);
        CAPTURE(M);
        CHECK(got.D == doctest::Approx(want.D).epsilon(1e-13));
        CHECK(got.T == want.T);
        CHECK(got.K == want.K);
        CHECK(got.eta == doctest::Approx(want.eta).epsilon(1e-13));
        CHECK(got.T >= 1);
        CHECK(got.T <= std::max<long long>(1, M / 2));
        CHECK(got.K * got.T <= M);
      }
    }
  }

  TEST_CASE("constant-step params with L2 = 0 and tiny budgets") {
    const auto hp = theorem1_hyperparams(3.0, 0.0, 0.0, 2.0, 1000);
    CHECK(hp.T == 500);
    CHECK(hp.K == 2);
    CHECK(hp.D == doctest::Approx(std::sqrt(2.0 / (10.0 * 3.0 * 2.0))));
    const auto tiny = theorem1_hyperparams(1.0, 1.0, 1.0, 1.0, 2);
    CHECK(tiny.T == 1);
    CHECK(tiny.K == 2);
    CHECK_THROWS_AS(theorem1_hyperparams(0.0, 1.0, 0.0, 1.0, 100), ConfigError);
    CHECK_THROWS_AS(theorem1_hyperparams(1.0, 1.0, 0.0, 0.0, 100), ConfigError);
    CHECK_THROWS_AS(theorem1_hyperparams(1.0, 1.0, 0.0, 1.0, 1), ConfigError);
  }

  TEST_CASE("adaptive params constants and numeric example") {
    const double gamma = 1.0;
    const double c1 = 3.0 / (2.0 * gamma) + gamma;
    const double c2 = 12.0 / gamma + 8.0 * gamma + 1.0;
    CHECK(c1 == 2.5);
    CHECK(c2 == 21.0);

    const auto hp = theorem2_hyperparams(1.0, 1.0, 0.0, 1.0, 1024, gamma);
    const double D = std::pow(2.0 / 15360.0, 3.0 / 7.0);
    CHECK(hp.D == doctest::Approx(D).epsilon(1e-14));
    const auto T = static_cast<long long>(std::ceil(std::cbrt(16.0 * std::pow(c1, 1.5) / D)));
    CHECK(hp.T == std::min<long long>(T, 512));
    CHECK(hp.K == 1024 / hp.T);
    const auto* a = hp.schedule.as_adaptive();
    REQUIRE(a != nullptr);
    CHECK(a->gamma == 1.0);
    CHECK(a->alpha == doctest::Approx(1e-12 * D * D));
    CHECK(hp.eta == doctest::Approx(gamma * D / std::sqrt(a->alpha)));

    const auto noisy = theorem2_hyperparams(1.0, 1.0, 2.0, 1.0, 1 << 16, gamma, 0.5);
    const auto Tn = std::max(
        static_cast<long long>(std::ceil(std::pow(c2 * 2.0 / (noisy.D * noisy.D), 0.4))),
        static_cast<long long>(std::ceil(std::cbrt(16.0 * std::pow(c1, 1.5) / noisy.D))));
    CHECK(noisy.T == std::min<long long>(Tn, 1 << 15));
    CHECK(noisy.schedule.as_adaptive()->alpha == 0.5);
  }

  TEST_CASE("default gamma minimises C1") {
    const double g = default_gamma();
    auto c1 = [](double x) { return 3.0 / (2.0 * x) + x; };
    CHECK(c1(g) <= c1(g * 1.01));
    CHECK(c1(g) <= c1(g * 0.99));
    CHECK(default_alpha(2.0, 0.5) == doctest::Approx(1e-12));
  }
}
