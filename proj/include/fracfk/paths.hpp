#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fracfk/potentials.hpp"
#include "fracfk/sampling.hpp"

namespace fracfk {

/// Space index alpha in (0, 2], time index beta in (0, 1].
struct FractionalIndices {
  double alpha = 2.0;
  double beta = 1.0;

  /// Scaling exponent of the propagator, x / t^kappa.
  double kappa() const noexcept { return beta / alpha; }
  bool is_brownian() const noexcept { return alpha == 2.0 && beta == 1.0; }
  void validate() const;
};

/// Whether the jump scale uses each realised waiting time or the fixed base step.
enum class JumpScaling { per_event, base_step };

/// Which generator drives replicas when the indices are (2, 1).
enum class BrownianGenerator { lattice, gaussian };

struct WalkConfig {
  FractionalIndices indices;
  double horizon = 1.0;
  std::uint64_t steps_per_unit = 100;
  int dimension = 1;
  Eigen::VectorXd start = Eigen::VectorXd::Zero(1);
  double diffusion = 0.5;
  JumpScaling jump_scaling = JumpScaling::per_event;
  BrownianGenerator brownian = BrownianGenerator::lattice;

  double base_step() const noexcept { return 1.0 / static_cast<double>(steps_per_unit); }
  void validate() const;
};

/// Event list of a piecewise-constant path: (time, position) pairs.
class Trajectory {
 public:
  Trajectory(const Eigen::Ref<const Eigen::VectorXd>& start, double terminal_time);

  void append(double time, const Eigen::Ref<const Eigen::VectorXd>& position);
  void reserve(std::size_t events);

  std::size_t size() const noexcept { return times_.size(); }
  int dimension() const noexcept { return dimension_; }
  double terminal_time() const noexcept { return terminal_time_; }
  double time(std::size_t i) const { return times_[i]; }
  const std::vector<double>& times() const noexcept { return times_; }
  Eigen::Map<const Eigen::VectorXd> position(std::size_t i) const {
    return Eigen::Map<const Eigen::VectorXd>(coords_.data() + i * dimension_, dimension_);
  }
  /// First coordinate of event i.
  double x(std::size_t i) const { return coords_[i * dimension_]; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<double> times_;
  std::vector<double> coords_;
  int dimension_;
  double terminal_time_;
};

/// Multiplier c with  n * (1 - E cos(k s X)) -> c |k|^alpha  for the increments
/// of symmetric_jump (Pareto tail P(|X|>x) ~ x^-alpha); c = 1/2 for the
/// Gaussian case. Jumps are divided by c^(1/alpha) so the walk's generator is
/// diffusion * (-laplacian)^(alpha/2) for every alpha.
double levy_jump_constant(double alpha);

/// Binomial lattice walk, Delta t = 1/n, n t events after the start.
Trajectory generate_brownian(const WalkConfig& config, RngStream& rng);

/// Continuous-time random walk with Pareto waiting times and heavy-tail jumps.
Trajectory generate_ctrw(const WalkConfig& config, RngStream& rng);

/// Walk with drift 2 D phi0'/phi0 added per event (Euler step over each waiting time).
Trajectory generate_drifted(const WalkConfig& config, const TrialFunction& trial, RngStream& rng);

/// Dispatches on the indices: lattice or Gaussian walk at (2, 1), CTRW otherwise.
Trajectory generate_walk(const WalkConfig& config, RngStream& rng);

/// Position of the last event with time <= s.
Eigen::VectorXd position_at(const Trajectory& traj, double s);

/// Uniform grid of `points` values of the first coordinate on [0, terminal_time].
Eigen::VectorXd sample_on_grid(const Trajectory& traj, std::size_t points);

/// CSV with header `t,x1[,x2,...]`, preceded by optional `# ` comment lines.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::string>& comments = {});
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace fracfk
