#include "o2nc/noise.hpp"

#include <bit>
#include <cmath>
#include <random>

namespace o2nc {

std::string to_string(NoiseMode mode) {
  return mode == NoiseMode::kFresh ? "fresh" : "shared-seed";
}

NoiseMode noise_mode_from_string(std::string_view text) {
  if (text == "shared-seed") return NoiseMode::kSharedSeed;
  if (text == "fresh") return NoiseMode::kFresh;
  throw ConfigError("unknown noise mode '" + std::string(text) +
                    "' (expected shared-seed or fresh)");
}

namespace {

std::uint64_t stream_key(const NoiseModel& nm, std::uint64_t sample_id, const Vector& point) {
  std::uint64_t key = SplitMix64::mix(nm.rng_seed ^ 0x6a09e667f3bcc909ULL);
  key = SplitMix64::mix(key ^ sample_id);
  if (nm.mode == NoiseMode::kFresh) {
    for (Eigen::Index i = 0; i < point.size(); ++i) {
      key = SplitMix64::mix(key ^ std::bit_cast<std::uint64_t>(point(i)));
    }
  }
  return key;
}

}  // namespace

Vector noise_vector(const NoiseModel& nm, Eigen::Index dim, std::uint64_t sample_id,
                    const Vector& point) {
  if (nm.sigma == 0.0) return Vector::Zero(dim);
  SplitMix64 stream(stream_key(nm, sample_id, point));
  std::normal_distribution<double> normal(0.0, nm.sigma / std::sqrt(static_cast<double>(dim)));
  Vector eps(dim);
  for (Eigen::Index i = 0; i < dim; ++i) eps(i) = normal(stream);
  return eps;
}

Vector oracle_grad(const Problem& p, const NoiseModel& nm, const Vector& x,
                   std::uint64_t sample_id) {
  if (!(nm.sigma >= 0.0) || !std::isfinite(nm.sigma)) throw InputError("sigma must be >= 0");
  Vector g = eval_grad(p, x);
  if (nm.sigma > 0.0) g += noise_vector(nm, p.dim(), sample_id, x);
  return g;
}

}  // namespace o2nc
