#pragma once

#include <cstdint>
#include <random>

namespace fracfk {

/// One independent pseudo-random stream per replica.
///
/// The engine is a 64-bit Mersenne twister seeded from the (seed, stream-id)
/// pair through std::seed_seq; both are fully specified by the standard, and
/// the uniform/normal transforms below are written out explicitly so a given
/// pair reproduces the same sequence on every conforming platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Standard normal (Box-Muller, second variate cached).
  double normal();
  /// +1 or -1 with equal probability.
  int sign();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Pareto law of the second kind: raw density index/(1+x)^(index+1), x >= 0,
/// multiplied by `scale`.
struct ParetoLaw {
  double index = 1.0;
  double scale = 1.0;

  void validate() const;
};

/// Inverse CDF of the Pareto law: scale * (u^(-1/index) - 1).
double pareto_sample(const ParetoLaw& law, double u);

/// F(x) = 1 - (1 + x/scale)^(-index) for x >= 0.
double pareto_cdf(const ParetoLaw& law, double x);

/// Symmetric heavy-tail increment with tail exponent alpha in (0, 2);
/// standard normal at alpha == 2.
double symmetric_jump(double alpha, RngStream& rng);

/// Pareto(beta) waiting time scaled by base_step; exactly base_step at beta == 1.
double waiting_time(double beta, double base_step, RngStream& rng);

/// +-1/sqrt(n), equiprobable.
double binomial_increment(std::uint64_t n, RngStream& rng);

}  // namespace fracfk
