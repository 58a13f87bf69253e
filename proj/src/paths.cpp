#include "fracfk/paths.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "fracfk/errors.hpp"

namespace fracfk {

void FractionalIndices::validate() const {
  if (!(alpha > 0.0 && alpha <= 2.0)) {
    throw ConfigError("alpha must lie in (0, 2], got " + std::to_string(alpha));
  }
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ConfigError("beta must lie in (0, 1], got " + std::to_string(beta));
  }
}

void WalkConfig::validate() const {
  indices.validate();
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("t must be positive");
  if (steps_per_unit == 0) throw ConfigError("n must be a positive integer");
  if (static_cast<double>(steps_per_unit) * horizon < 1.0) throw ConfigError("n*t must be >= 1");
  if (dimension < 1) throw ConfigError("d must be >= 1");
  if (dimension > 1 && indices.alpha != 2.0) {
    throw RegimeError("d > 1 is only supported for alpha = 2");
  }
  if (start.size() != dimension) throw ConfigError("x0 must have d components");
  if (!start.allFinite()) throw ConfigError("x0 must be finite");
  if (!(diffusion > 0.0) || !std::isfinite(diffusion)) throw ConfigError("D must be positive");
}

Trajectory::Trajectory(const Eigen::Ref<const Eigen::VectorXd>& start, double terminal_time)
    : dimension_(static_cast<int>(start.size())), terminal_time_(terminal_time) {
  append(0.0, start);
}

void Trajectory::append(double time, const Eigen::Ref<const Eigen::VectorXd>& position) {
  times_.push_back(time);
  coords_.insert(coords_.end(), position.data(), position.data() + dimension_);
}

void Trajectory::reserve(std::size_t events) {
  times_.reserve(events);
  coords_.reserve(events * dimension_);
}

double levy_jump_constant(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw ConfigError("alpha must lie in (0, 2]");
  if (alpha == 2.0) return 0.5;
  if (alpha == 1.0) return 0.5 * std::numbers::pi;
  return std::tgamma(1.0 - alpha) * std::cos(0.5 * std::numbers::pi * alpha);
}

namespace {

std::uint64_t lattice_steps(const WalkConfig& config) {
  // Tolerate n*t landing a rounding error below an integer.
  return static_cast<std::uint64_t>(
      std::floor(static_cast<double>(config.steps_per_unit) * config.horizon + 1e-9));
}

// Shared event loop for CTRW and drifted CTRW; `drift` maps the current
// position to the velocity added over each waiting time.
template <class Drift>
Trajectory run_ctrw(const WalkConfig& config, RngStream& rng, Drift&& drift) {
  const double alpha = config.indices.alpha;
  const double beta = config.indices.beta;
  const double base = config.base_step();
  const double jump_norm = config.diffusion / levy_jump_constant(alpha);
  const double base_scale = std::pow(jump_norm * std::pow(base, beta), 1.0 / alpha);

  Trajectory traj(config.start, config.horizon);
  traj.reserve(lattice_steps(config) + 1);
  double position = config.start[0];
  double clock = 0.0;
  for (std::uint64_t k = 1;; ++k) {
    const double wait = waiting_time(beta, base, rng);
    // A fixed clock is advanced by counting so t = k/n exactly.
    const double next = beta == 1.0 ? static_cast<double>(k) * base : clock + wait;
    if (next > config.horizon) break;
    const double scale = config.jump_scaling == JumpScaling::per_event && beta != 1.0
                             ? std::pow(jump_norm * std::pow(wait, beta), 1.0 / alpha)
                             : base_scale;
    position += drift(position) * wait + scale * symmetric_jump(alpha, rng);
    clock = next;
    traj.append(clock, Eigen::Matrix<double, 1, 1>(position));
  }
  return traj;
}

void require_trial_ok(const TrialFunction& trial, double y) {
  const double phi = trial.phi(y);
  if (!(phi > 0.0) || !std::isfinite(phi)) {
    throw TrialDomainError("trial function non-positive at visited point x=" + std::to_string(y));
  }
}

Trajectory run_gaussian_drifted(const WalkConfig& config, const TrialFunction* trial,
                                RngStream& rng, bool lattice) {
  const std::uint64_t steps = lattice_steps(config);
  const double dt = config.base_step();
  const double two_d = 2.0 * config.diffusion;
  const double amplitude = std::sqrt(two_d);
  const int d = config.dimension;

  Trajectory traj(config.start, config.horizon);
  traj.reserve(steps + 1);
  Eigen::VectorXd y = config.start;
  if (trial) {
    for (int i = 0; i < d; ++i) require_trial_ok(*trial, y[i]);
  }
  for (std::uint64_t l = 1; l <= steps; ++l) {
    for (int i = 0; i < d; ++i) {
      double step = lattice ? amplitude * binomial_increment(config.steps_per_unit, rng)
                            : amplitude * std::sqrt(dt) * rng.normal();
      if (trial) step += two_d * trial->log_gradient(y[i]) * dt;
      y[i] += step;
    }
    if (trial) {
      for (int i = 0; i < d; ++i) require_trial_ok(*trial, y[i]);
    }
    traj.append(static_cast<double>(l) * dt, y);
  }
  return traj;
}

}  // namespace

Trajectory generate_brownian(const WalkConfig& config, RngStream& rng) {
  config.validate();
  if (!config.indices.is_brownian()) throw RegimeError("generate_brownian requires (alpha, beta) = (2, 1)");
  return run_gaussian_drifted(config, nullptr, rng, true);
}

Trajectory generate_ctrw(const WalkConfig& config, RngStream& rng) {
  config.validate();
  if (config.dimension != 1) throw RegimeError("generate_ctrw requires d = 1");
  return run_ctrw(config, rng, [](double) { return 0.0; });
}

Trajectory generate_drifted(const WalkConfig& config, const TrialFunction& trial, RngStream& rng) {
  config.validate();
  if (!trial.phi || !trial.log_gradient) throw ConfigError("trial function is incomplete");
  if (config.indices.is_brownian()) {
    return run_gaussian_drifted(config, &trial, rng,
                                config.brownian == BrownianGenerator::lattice);
  }
  if (config.dimension != 1) throw RegimeError("drifted CTRW requires d = 1");
  require_trial_ok(trial, config.start[0]);
  const double two_d = 2.0 * config.diffusion;
  return run_ctrw(config, rng, [&](double y) {
    require_trial_ok(trial, y);
    return two_d * trial.log_gradient(y);
  });
}

Trajectory generate_walk(const WalkConfig& config, RngStream& rng) {
  if (config.indices.is_brownian()) {
    if (config.brownian == BrownianGenerator::lattice) return generate_brownian(config, rng);
    config.validate();
    return run_gaussian_drifted(config, nullptr, rng, false);
  }
  return generate_ctrw(config, rng);
}

Eigen::VectorXd position_at(const Trajectory& traj, double s) {
  if (!(s >= 0.0 && s <= traj.terminal_time())) {
    throw DomainError("position_at: s=" + std::to_string(s) + " outside [0, terminal_time]");
  }
  const auto& times = traj.times();
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  const auto index = static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
  return traj.position(index);
}

Eigen::VectorXd sample_on_grid(const Trajectory& traj, std::size_t points) {
  if (points < 2) throw DomainError("grid needs at least two points");
  Eigen::VectorXd grid(static_cast<Eigen::Index>(points));
  const auto& times = traj.times();
  const double span = traj.terminal_time();
  std::size_t event = 0;
  for (std::size_t i = 0; i < points; ++i) {
    const double s = span * static_cast<double>(i) / static_cast<double>(points - 1);
    while (event + 1 < times.size() && times[event + 1] <= s) ++event;
    grid[static_cast<Eigen::Index>(i)] = traj.x(event);
  }
  return grid;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                          const std::vector<std::string>& comments) {
  for (const auto& line : comments) out << "# " << line << '\n';
  out << "# terminal_time=" << std::setprecision(17) << traj.terminal_time() << '\n';
  out << "t";
  for (int i = 1; i <= traj.dimension(); ++i) out << ",x" << i;
  out << '\n';
  out << std::setprecision(17);
  for (std::size_t e = 0; e < traj.size(); ++e) {
    out << traj.time(e);
    const auto p = traj.position(e);
    for (int i = 0; i < traj.dimension(); ++i) out << ',' << p[i];
    out << '\n';
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  int dimension = 0;
  std::vector<double> times;
  std::vector<double> coords;
  std::size_t line_no = 0;
  double terminal_time = std::numeric_limits<double>::quiet_NaN();
  const std::string terminal_key = "# terminal_time=";
  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind(terminal_key, 0) == 0) {
      terminal_time = std::stod(line.substr(terminal_key.size()));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    if (dimension == 0) {
      if (line.rfind("t,x1", 0) != 0) throw IoError("trajectory CSV: expected header `t,x1,...`");
      dimension = static_cast<int>(std::count(line.begin(), line.end(), ','));
      continue;
    }
    std::istringstream row(line);
    std::string cell;
    int column = 0;
    while (std::getline(row, cell, ',')) {
      double value = 0.0;
      try {
        value = std::stod(cell);
      } catch (const std::exception&) {
        throw IoError("trajectory CSV: bad number on line " + std::to_string(line_no));
      }
      (column == 0 ? times : coords).push_back(value);
      ++column;
    }
    if (column != dimension + 1) {
      throw IoError("trajectory CSV: wrong column count on line " + std::to_string(line_no));
    }
  }
  if (dimension == 0 || times.empty()) throw IoError("trajectory CSV: no events");
  if (times.front() != 0.0) throw IoError("trajectory CSV: first event must be at t=0");
  if (std::isnan(terminal_time)) terminal_time = times.back();
  if (terminal_time < times.back()) throw IoError("trajectory CSV: terminal_time precedes last event");
  Trajectory traj(Eigen::Map<const Eigen::VectorXd>(coords.data(), dimension), terminal_time);
  for (std::size_t e = 1; e < times.size(); ++e) {
    if (!(times[e] > times[e - 1])) throw IoError("trajectory CSV: times must strictly increase");
    traj.append(times[e], Eigen::Map<const Eigen::VectorXd>(coords.data() + e * dimension, dimension));
  }
  return traj;
}

}  // namespace fracfk
