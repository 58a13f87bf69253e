#include "fracfk/sampling.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "fracfk/errors.hpp"

namespace fracfk {

namespace {

std::seed_seq make_seed_seq(std::uint64_t seed, std::uint64_t stream_id) {
  return std::seed_seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                       static_cast<std::uint32_t>(stream_id),
                       static_cast<std::uint32_t>(stream_id >> 32), 0x6a09e667u};
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw ConfigError("alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  auto seq = make_seed_seq(seed, stream_id);
  engine_.seed(seq);
}

double RngStream::uniform() {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(engine_() >> 11) + 0.5) * kScale;
}

double RngStream::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

int RngStream::sign() { return (engine_() >> 63) != 0 ? 1 : -1; }

void ParetoLaw::validate() const {
  if (!(index > 0.0) || !std::isfinite(index)) {
    throw ConfigError("Pareto index must be positive, got " + std::to_string(index));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw ConfigError("Pareto scale must be positive, got " + std::to_string(scale));
  }
}

double pareto_sample(const ParetoLaw& law, double u) {
  law.validate();
  if (!(u > 0.0 && u < 1.0)) {
    throw DomainError("pareto_sample requires u in (0, 1), got " + std::to_string(u));
  }
  return law.scale * (std::pow(u, -1.0 / law.index) - 1.0);
}

double pareto_cdf(const ParetoLaw& law, double x) {
  law.validate();
  if (x <= 0.0) return 0.0;
  return 1.0 - std::pow(1.0 + x / law.scale, -law.index);
}

double symmetric_jump(double alpha, RngStream& rng) {
  require_alpha(alpha);
  if (alpha == 2.0) return rng.normal();
  const double magnitude = std::pow(rng.uniform(), -1.0 / alpha) - 1.0;
  return rng.sign() * magnitude;
}

double waiting_time(double beta, double base_step, RngStream& rng) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ConfigError("beta must lie in (0, 1], got " + std::to_string(beta));
  }
  if (!(base_step > 0.0)) {
    throw ConfigError("base step must be positive, got " + std::to_string(base_step));
  }
  if (beta == 1.0) return base_step;
  // u^(-1/beta) - 1 underflows to 0 only for u within one ulp of 1.
  for (;;) {
    const double raw = std::pow(rng.uniform(), -1.0 / beta) - 1.0;
    if (raw > 0.0) return base_step * raw;
  }
}

double binomial_increment(std::uint64_t n, RngStream& rng) {
  if (n == 0) throw ConfigError("binomial_increment requires n >= 1");
  return rng.sign() / std::sqrt(static_cast<double>(n));
}

}  // namespace fracfk
