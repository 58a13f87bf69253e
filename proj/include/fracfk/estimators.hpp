#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fracfk/paths.hpp"
#include "fracfk/potentials.hpp"

namespace fracfk {

enum class EnergyMethod { fk, gfk };
std::string to_string(EnergyMethod method);

/// sequential: partial sums merged in fixed chunk order (bit-reproducible).
/// unordered: merged as workers finish.
enum class MergeMode { sequential, unordered };

struct ExecutionPolicy {
  unsigned threads = 0;  // 0: FRACFK_THREADS, then hardware concurrency
  MergeMode merge = MergeMode::sequential;
};

unsigned resolve_threads(unsigned requested);

/// Replica-mean path weights Z(t) on a checkpoint grid, held in log space.
struct FunctionalSeries {
  std::vector<double> times;
  Eigen::VectorXd log_z;           // ln Z(t)
  Eigen::VectorXd rel_stderr;      // stderr(Z)/Z
  Eigen::MatrixXd rel_covariance;  // Cov(Z_i, Z_j) / (Z_i Z_j) of the replica means
  std::size_t n_rep = 0;
  EnergyMethod method = EnergyMethod::fk;
  double e0 = 0.0;
  std::size_t flagged = 0;  // replicas dropped for non-finite weights

  Eigen::VectorXd z_values() const { return log_z.array().exp(); }
  Eigen::VectorXd z_stderr() const { return z_values().cwiseProduct(rel_stderr); }

  /// Series from already-known values; covariance taken diagonal.
  static FunctionalSeries from_values(std::vector<double> times, const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& stderr, std::size_t n_rep,
                                      EnergyMethod method = EnergyMethod::fk, double e0 = 0.0);
};

struct EnergyEstimate {
  double value = 0.0;
  double stderr = 0.0;
  double t_min = 0.0;
  double t_max = 0.0;
  EnergyMethod method = EnergyMethod::fk;
};

/// Endpoint of one replica at the final checkpoint.
struct Endpoint {
  double position = 0.0;
  double log_weight = 0.0;
};

struct WeightedPoint {
  double position = 0.0;
  double weight = 0.0;
};

/// Converts log weights to weights relative to the largest one.
std::vector<WeightedPoint> to_weighted_points(std::span<const Endpoint> endpoints);

/// Histogram normalised so that sum(mass * width) == 1.
struct DensityHistogram {
  Eigen::VectorXd edges;
  Eigen::VectorXd mass;

  Eigen::Index bins() const { return mass.size(); }
  double width(Eigen::Index i) const { return edges[i + 1] - edges[i]; }
  double total() const;
};

/// Weighted endpoint histogram (psi up to normalisation) and its normalised square (rho).
struct DensityEstimate {
  DensityHistogram amplitude;
  DensityHistogram density;
};

/// Accumulates replica log-weights at each checkpoint; merge is associative
/// and commutative up to rounding.
class WeightAccumulator {
 public:
  explicit WeightAccumulator(Eigen::Index checkpoints = 0);

  void add(const Eigen::Ref<const Eigen::VectorXd>& log_weights);
  void merge(const WeightAccumulator& other);

  std::size_t count() const noexcept { return count_; }
  /// Series over `times` (must match the checkpoint count).
  FunctionalSeries finish(std::vector<double> times) const;

 private:
  void rescale(const Eigen::VectorXd& new_shift);

  std::size_t count_ = 0;
  Eigen::VectorXd shift_;
  Eigen::VectorXd sum_;
  Eigen::MatrixXd cross_;
};

/// Integral of V along the piecewise-constant path over [0, t].
double path_action(const Trajectory& traj, const PotentialSpec& v, double t);

/// path_action at each of the ascending `checkpoints` in one pass.
Eigen::VectorXd path_actions(const Trajectory& traj, const PotentialSpec& v,
                             std::span<const double> checkpoints);

/// Geometric grid of `count` points from horizon/4 to horizon.
std::vector<double> geometric_checkpoints(double horizon, std::size_t count = 8);

struct FunctionalRun {
  FunctionalSeries series;
  std::vector<Endpoint> endpoints;  // replica order; empty unless requested
  std::size_t trial_domain_failures = 0;
};

struct RunOptions {
  std::uint64_t seed = 1;
  ExecutionPolicy policy{};
  bool keep_endpoints = false;
};

/// Replica m draws from RngStream(seed, m). Checkpoints must be ascending and
/// within the horizon; t = 0 is prepended with Z(0) = 1.
FunctionalRun run_fk(const WalkConfig& config, const PotentialSpec& v,
                     std::span<const double> checkpoints, std::size_t n_rep,
                     const RunOptions& options = {});

/// Drifted replicas weighted by the perturbed potential.
FunctionalRun run_gfk(const WalkConfig& config, const PotentialSpec& v, const TrialFunction& trial,
                      std::span<const double> checkpoints, std::size_t n_rep,
                      const RunOptions& options = {});

inline FunctionalSeries fk_functional(const WalkConfig& config, const PotentialSpec& v,
                                      std::span<const double> checkpoints, std::size_t n_rep,
                                      const RunOptions& options = {}) {
  return run_fk(config, v, checkpoints, n_rep, options).series;
}

inline FunctionalSeries gfk_functional(const WalkConfig& config, const PotentialSpec& v,
                                       const TrialFunction& trial,
                                       std::span<const double> checkpoints, std::size_t n_rep,
                                       const RunOptions& options = {}) {
  return run_gfk(config, v, trial, checkpoints, n_rep, options).series;
}

/// Weighted least-squares slope of -ln Z(t) over [t_min, t_max]; for GFK the
/// trial energy is added back.
EnergyEstimate energy_from_decay(const FunctionalSeries& series, double t_min, double t_max);
/// Window [t_last/2, t_last].
EnergyEstimate energy_from_decay(const FunctionalSeries& series);

Eigen::VectorXd uniform_edges(double lo, double hi, Eigen::Index bins);

DensityEstimate density_estimate(std::span<const WeightedPoint> points,
                                 const Eigen::Ref<const Eigen::VectorXd>& edges);

/// sum A(x) w / sum w.
double observable_expectation(const std::function<double(double)>& observable,
                              std::span<const WeightedPoint> points);

/// Quantile of a histogram treated as piecewise-uniform, p in [0, 1].
double histogram_quantile(const DensityHistogram& hist, double p);
/// Mass with |x - median| > factor * IQR.
double tail_mass(const DensityHistogram& hist, double factor);
/// Largest single-bin mass (density times width).
double peak_bin_mass(const DensityHistogram& hist);

/// CSV `x_left,x_right,mass`, preceded by optional `# ` comment lines.
void write_density_csv(std::ostream& out, const DensityHistogram& hist,
                       const std::vector<std::string>& comments = {});

}  // namespace fracfk
