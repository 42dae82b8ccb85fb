#pragma once

#include "o2nc/common.hpp"
#include "o2nc/problems.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace o2nc {

enum class NoiseMode {
  // Noise is a pure function of (seed, sample_id): both evaluations of one
  // iteration see the same perturbation.
  kSharedSeed,
  // Noise also depends on the query point, so every distinct evaluation draws
  // an independent perturbation.
  kFresh,
};

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(std::string_view text);

// Additive isotropic Gaussian noise eps ~ N(0, (sigma^2/d) I), so E|eps|^2 = sigma^2.
struct NoiseModel {
  double sigma = 0.0;
  NoiseMode mode = NoiseMode::kSharedSeed;
  std::uint64_t rng_seed = 0;

  bool operator==(const NoiseModel&) const = default;
};

// SplitMix64 as a UniformRandomBitGenerator.  Output i is a bijective mix of
// state + i * golden, which makes it usable as a counter-based stream.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t state) : state_(state) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// The perturbation added by the oracle for a given sample.  `point` only
// matters in fresh mode.
Vector noise_vector(const NoiseModel& nm, Eigen::Index dim, std::uint64_t sample_id,
                    const Vector& point);

// grad F(x) + eps(sample_id).  Reproducible: identical (x, sample_id, model)
// give identical output.  sigma == 0 returns the exact gradient.
Vector oracle_grad(const Problem& p, const NoiseModel& nm, const Vector& x,
                   std::uint64_t sample_id);

// Binds a problem and noise model into the first-order oracle used by learners.
class StochasticOracle {
 public:
  StochasticOracle(const Problem& problem, NoiseModel noise) : problem_(&problem), noise_(noise) {}

  Vector operator()(const Vector& x, std::uint64_t sample_id) const {
    return oracle_grad(*problem_, noise_, x, sample_id);
  }

  const Problem& problem() const { return *problem_; }
  const NoiseModel& noise() const { return noise_; }

 private:
  const Problem* problem_;
  NoiseModel noise_;
};

}  // namespace o2nc
