#include "fracfk/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "fracfk/errors.hpp"

namespace fracfk {

std::string to_string(EnergyMethod method) { return method == EnergyMethod::fk ? "fk" : "gfk"; }

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FRACFK_THREADS")) {
    char* end = nullptr;
    const long value = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && value > 0) return static_cast<unsigned>(value);
    throw ConfigError("FRACFK_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

FunctionalSeries FunctionalSeries::from_values(std::vector<double> times, const Eigen::VectorXd& z,
                                               const Eigen::VectorXd& stderr, std::size_t n_rep,
                                               EnergyMethod method, double e0) {
  if (static_cast<Eigen::Index>(times.size()) != z.size() || z.size() != stderr.size()) {
    throw ConfigError("series: times, values and stderr differ in length");
  }
  if ((z.array() <= 0.0).any()) throw DomainError("series: Z must be positive");
  FunctionalSeries s;
  s.times = std::move(times);
  s.log_z = z.array().log();
  s.rel_stderr = stderr.cwiseQuotient(z);
  s.rel_covariance = s.rel_stderr.array().square().matrix().asDiagonal();
  s.n_rep = n_rep;
  s.method = method;
  s.e0 = e0;
  return s;
}

std::vector<WeightedPoint> to_weighted_points(std::span<const Endpoint> endpoints) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& e : endpoints) top = std::max(top, e.log_weight);
  std::vector<WeightedPoint> out;
  out.reserve(endpoints.size());
  for (const auto& e : endpoints) out.push_back({e.position, std::exp(e.log_weight - top)});
  return out;
}

double DensityHistogram::total() const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < bins(); ++i) sum += mass[i] * width(i);
  return sum;
}

// --- WeightAccumulator -------------------------------------------------------

WeightAccumulator::WeightAccumulator(Eigen::Index checkpoints)
    : shift_(Eigen::VectorXd::Constant(checkpoints, -std::numeric_limits<double>::infinity())),
      sum_(Eigen::VectorXd::Zero(checkpoints)),
      cross_(Eigen::MatrixXd::Zero(checkpoints, checkpoints)) {}

void WeightAccumulator::rescale(const Eigen::VectorXd& new_shift) {
  // Factors exp(old - new) <= 1; an empty accumulator (old = -inf) stays zero.
  Eigen::VectorXd factor(shift_.size());
  for (Eigen::Index k = 0; k < shift_.size(); ++k) {
    factor[k] = std::isinf(shift_[k]) ? 0.0 : std::exp(shift_[k] - new_shift[k]);
  }
  sum_ = sum_.cwiseProduct(factor);
  cross_ = factor.asDiagonal() * cross_ * factor.asDiagonal();
  shift_ = new_shift;
}

void WeightAccumulator::add(const Eigen::Ref<const Eigen::VectorXd>& log_weights) {
  if ((log_weights.array() > shift_.array()).any()) rescale(shift_.cwiseMax(log_weights));
  const Eigen::VectorXd w = (log_weights - shift_).array().exp();
  sum_ += w;
  cross_.noalias() += w * w.transpose();
  ++count_;
}

void WeightAccumulator::merge(const WeightAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const Eigen::VectorXd target = shift_.cwiseMax(other.shift_);
  rescale(target);
  WeightAccumulator scaled = other;
  scaled.rescale(target);
  sum_ += scaled.sum_;
  cross_ += scaled.cross_;
  count_ += other.count_;
}

FunctionalSeries WeightAccumulator::finish(std::vector<double> times) const {
  if (static_cast<Eigen::Index>(times.size()) != sum_.size()) {
    throw ConfigError("accumulator: checkpoint count mismatch");
  }
  if (count_ < 2) throw DegenerateEstimateError("fewer than two usable replicas");
  const double n = static_cast<double>(count_);
  const Eigen::VectorXd mean = sum_ / n;
  if ((mean.array() <= 0.0).any()) throw DegenerateEstimateError("all replica weights vanished");
  Eigen::MatrixXd cov = (cross_ - n * mean * mean.transpose()) / (n - 1.0);
  Eigen::MatrixXd rel = mean.cwiseInverse().asDiagonal() * cov * mean.cwiseInverse().asDiagonal();
  rel /= n;
  // Round-off can leave tiny negative variances when every weight is equal.
  for (Eigen::Index k = 0; k < rel.rows(); ++k) rel(k, k) = std::max(rel(k, k), 0.0);

  FunctionalSeries s;
  s.times = std::move(times);
  s.log_z = mean.array().log().matrix() + shift_;
  s.rel_covariance = rel;
  s.rel_stderr = rel.diagonal().cwiseSqrt();
  s.n_rep = count_;
  return s;
}

// --- path functionals --------------------------------------------------------

Eigen::VectorXd path_actions(const Trajectory& traj, const PotentialSpec& v,
                             std::span<const double> checkpoints) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(checkpoints.size()));
  const auto& times = traj.times();
  std::size_t event = 0;
  double potential = eval_potential(v, traj.position(0));
  double integral = 0.0;
  double previous = 0.0;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const double t = checkpoints[c];
    if (!(t >= previous && t >= 0.0)) throw DomainError("checkpoints must be ascending and >= 0");
    if (t > traj.terminal_time()) throw DomainError("checkpoint beyond the trajectory horizon");
    while (event + 1 < times.size() && times[event + 1] <= t) {
      integral += potential * (times[event + 1] - times[event]);
      ++event;
      potential = eval_potential(v, traj.position(event));
    }
    out[static_cast<Eigen::Index>(c)] = integral + potential * (t - times[event]);
    previous = t;
  }
  return out;
}

double path_action(const Trajectory& traj, const PotentialSpec& v, double t) {
  const double grid[1] = {t};
  return path_actions(traj, v, grid)[0];
}

std::vector<double> geometric_checkpoints(double horizon, std::size_t count) {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (count < 3) throw ConfigError("need at least three checkpoints");
  std::vector<double> grid(count);
  const double ratio = std::pow(4.0, 1.0 / static_cast<double>(count - 1));
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = horizon * std::pow(ratio, static_cast<double>(k)) / 4.0;
  }
  grid.back() = horizon;
  return grid;
}

namespace {

constexpr std::size_t kChunk = 64;

struct ChunkResult {
  WeightAccumulator acc;
  std::size_t flagged = 0;
  std::size_t trial_failures = 0;
};

// Runs `replica(m, acc_result)` for m in [0, n_rep) over a worker pool and
// merges chunk results per the policy.
template <class Replica>
ChunkResult run_replicas(std::size_t n_rep, Eigen::Index checkpoints,
                         const ExecutionPolicy& policy, Replica&& replica) {
  const std::size_t chunks = (n_rep + kChunk - 1) / kChunk;
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(policy.threads), chunks));
  std::vector<ChunkResult> partial;
  ChunkResult total{WeightAccumulator(checkpoints)};
  std::mutex merge_lock;
  if (policy.merge == MergeMode::sequential) {
    partial.assign(chunks, ChunkResult{WeightAccumulator(checkpoints)});
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;

  auto worker = [&] {
    try {
      for (std::size_t c = next++; c < chunks; c = next++) {
        ChunkResult local{WeightAccumulator(checkpoints)};
        const std::size_t end = std::min(n_rep, (c + 1) * kChunk);
        for (std::size_t m = c * kChunk; m < end; ++m) replica(m, local);
        if (policy.merge == MergeMode::sequential) {
          partial[c] = std::move(local);
        } else {
          std::lock_guard guard(merge_lock);
          total.acc.merge(local.acc);
          total.flagged += local.flagged;
          total.trial_failures += local.trial_failures;
        }
      }
    } catch (...) {
      std::lock_guard guard(merge_lock);
      if (!failure) failure = std::current_exception();
      next = chunks;
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  if (policy.merge == MergeMode::sequential) {
    for (const auto& p : partial) {
      total.acc.merge(p.acc);
      total.flagged += p.flagged;
      total.trial_failures += p.trial_failures;
    }
  }
  return total;
}

std::vector<double> with_origin(std::span<const double> checkpoints, const WalkConfig& config) {
  if (checkpoints.empty()) throw ConfigError("checkpoints must not be empty");
  std::vector<double> grid;
  grid.reserve(checkpoints.size() + 1);
  grid.push_back(0.0);
  for (double t : checkpoints) {
    if (!(t > grid.back())) throw ConfigError("checkpoints must be positive and strictly ascending");
    if (t > config.horizon * (1.0 + 1e-12)) throw ConfigError("checkpoint beyond the horizon t");
    grid.push_back(std::min(t, config.horizon));
  }
  return grid;
}

void check_flagged(const ChunkResult& result, std::size_t n_rep) {
  const double limit = 0.01 * static_cast<double>(n_rep);
  if (static_cast<double>(result.trial_failures) > limit) {
    throw TrialDomainError(std::to_string(result.trial_failures) + " of " + std::to_string(n_rep) +
                           " replicas left the trial function's domain");
  }
  if (static_cast<double>(result.flagged) > limit) {
    throw NumericalError(std::to_string(result.flagged) + " of " + std::to_string(n_rep) +
                         " replicas produced non-finite weights");
  }
}

template <class Generate>
FunctionalRun run_functional(const WalkConfig& config, const PotentialSpec& v,
                             std::span<const double> checkpoints, std::size_t n_rep,
                             const RunOptions& options, EnergyMethod method, double e0,
                             Generate&& generate) {
  config.validate();
  if (n_rep < 2) throw ConfigError("n_rep must be >= 2");
  const std::vector<double> grid = with_origin(checkpoints, config);
  const auto k = static_cast<Eigen::Index>(grid.size());

  FunctionalRun run;
  if (options.keep_endpoints) {
    run.endpoints.assign(n_rep, Endpoint{0.0, -std::numeric_limits<double>::infinity()});
  }
  auto replica = [&](std::size_t m, ChunkResult& out) {
    RngStream rng(options.seed, m);
    std::optional<Trajectory> traj;
    try {
      traj.emplace(generate(rng));
    } catch (const TrialDomainError&) {
      ++out.trial_failures;
      return;
    }
    Eigen::VectorXd log_w = -path_actions(*traj, v, grid);
    if (!log_w.allFinite()) {
      ++out.flagged;
      return;
    }
    out.acc.add(log_w);
    if (options.keep_endpoints) {
      run.endpoints[m] = Endpoint{traj->x(traj->size() - 1), log_w[k - 1]};
    }
  };
  ChunkResult result = run_replicas(n_rep, k, options.policy, replica);
  check_flagged(result, n_rep);
  run.series = result.acc.finish(grid);
  run.series.method = method;
  run.series.e0 = e0;
  run.series.flagged = result.flagged;
  run.trial_domain_failures = result.trial_failures;
  if (options.keep_endpoints) {
    std::erase_if(run.endpoints, [](const Endpoint& e) { return std::isinf(e.log_weight); });
  }
  return run;
}

}  // namespace

FunctionalRun run_fk(const WalkConfig& config, const PotentialSpec& v,
                     std::span<const double> checkpoints, std::size_t n_rep,
                     const RunOptions& options) {
  return run_functional(config, v, checkpoints, n_rep, options, EnergyMethod::fk, 0.0,
                        [&](RngStream& rng) { return generate_walk(config, rng); });
}

FunctionalRun run_gfk(const WalkConfig& config, const PotentialSpec& v, const TrialFunction& trial,
                      std::span<const double> checkpoints, std::size_t n_rep,
                      const RunOptions& options) {
  const PotentialSpec shifted = PotentialSpec::shifted(v, trial, config.diffusion);
  return run_functional(config, shifted, checkpoints, n_rep, options, EnergyMethod::gfk, trial.e0,
                        [&](RngStream& rng) { return generate_drifted(config, trial, rng); });
}

// --- energy ------------------------------------------------------------------

EnergyEstimate energy_from_decay(const FunctionalSeries& series, double t_min, double t_max) {
  if (!(t_min < t_max)) throw FitError("fit window requires t_min < t_max");
  if (!series.log_z.allFinite()) throw DomainError("series contains non-positive Z");
  const double tol = 1e-12 * std::max(1.0, std::abs(t_max));
  std::vector<Eigen::Index> rows;
  for (std::size_t k = 0; k < series.times.size(); ++k) {
    const double t = series.times[k];
    if (t >= t_min - tol && t <= t_max + tol) rows.push_back(static_cast<Eigen::Index>(k));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  if (m < 3) throw FitError("fewer than 3 checkpoints inside the fit window");

  Eigen::MatrixXd design(m, 2);
  Eigen::VectorXd y(m);
  Eigen::VectorXd var(m);
  Eigen::MatrixXd cov(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = series.times[static_cast<std::size_t>(rows[i])];
    y[i] = -series.log_z[rows[i]];
    for (Eigen::Index j = 0; j < m; ++j) cov(i, j) = series.rel_covariance(rows[i], rows[j]);
    var[i] = cov(i, i);
  }
  const bool weighted = (var.array() > 0.0).all();
  const Eigen::VectorXd w = weighted ? Eigen::VectorXd(var.cwiseInverse()) : Eigen::VectorXd::Ones(m);
  const Eigen::MatrixXd normal = design.transpose() * w.asDiagonal() * design;
  const Eigen::MatrixXd normal_inv = normal.inverse();
  // Row mapping observations to the fitted slope.
  const Eigen::RowVectorXd slope_row =
      normal_inv.row(1) * design.transpose() * w.asDiagonal();
  const double slope = slope_row * y;

  double variance = 0.0;
  if (cov.cwiseAbs().maxCoeff() > 0.0) {
    variance = slope_row * cov * slope_row.transpose();
  } else if (m > 2) {
    const Eigen::VectorXd residual = y - design * (normal_inv * design.transpose() * w.asDiagonal() * y);
    const double sigma2 = residual.cwiseProduct(w).dot(residual) / static_cast<double>(m - 2);
    variance = sigma2 * normal_inv(1, 1);
  }

  EnergyEstimate e;
  e.value = slope + (series.method == EnergyMethod::gfk ? series.e0 : 0.0);
  e.stderr = std::sqrt(std::max(variance, 0.0));
  e.t_min = t_min;
  e.t_max = t_max;
  e.method = series.method;
  return e;
}

EnergyEstimate energy_from_decay(const FunctionalSeries& series) {
  if (series.times.empty()) throw FitError("empty series");
  const double t = series.times.back();
  return energy_from_decay(series, 0.5 * t, t);
}

// --- densities -----------------------------------------------------------------

Eigen::VectorXd uniform_edges(double lo, double hi, Eigen::Index bins) {
  if (!(hi > lo) || bins < 1) throw ConfigError("histogram range must satisfy lo < hi and bins >= 1");
  return Eigen::VectorXd::LinSpaced(bins + 1, lo, hi);
}

DensityEstimate density_estimate(std::span<const WeightedPoint> points,
                                 const Eigen::Ref<const Eigen::VectorXd>& edges) {
  const Eigen::Index bins = edges.size() - 1;
  if (bins < 1) throw ConfigError("histogram needs at least two edges");
  for (Eigen::Index i = 0; i < bins; ++i) {
    if (!(edges[i + 1] > edges[i])) throw ConfigError("histogram edges must increase");
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
  bool any_weight = false;
  for (const auto& p : points) {
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight)) throw DomainError("weights must be finite and >= 0");
    any_weight = any_weight || p.weight > 0.0;
    if (!(p.position >= edges[0] && p.position < edges[bins])) continue;
    const auto* upper = std::upper_bound(edges.data(), edges.data() + bins + 1, p.position);
    counts[(upper - edges.data()) - 1] += p.weight;
  }
  if (!any_weight) throw DegenerateEstimateError("all endpoint weights are zero");
  const Eigen::VectorXd widths = edges.tail(bins) - edges.head(bins);
  const double in_range = counts.sum();
  if (!(in_range > 0.0)) throw DegenerateEstimateError("no endpoint weight inside the histogram range");

  DensityEstimate out;
  out.amplitude.edges = edges;
  out.amplitude.mass = counts.cwiseQuotient(widths) / in_range;
  const Eigen::VectorXd squared = out.amplitude.mass.array().square();
  out.density.edges = edges;
  out.density.mass = squared / squared.dot(widths);
  return out;
}

double observable_expectation(const std::function<double(double)>& observable,
                              std::span<const WeightedPoint> points) {
  double numerator = 0.0;
  double denominator = 0.0;
  for (const auto& p : points) {
    if (!(p.weight >= 0.0)) throw DomainError("weights must be >= 0");
    numerator += observable(p.position) * p.weight;
    denominator += p.weight;
  }
  if (!(denominator > 0.0)) throw DegenerateEstimateError("total weight is zero");
  return numerator / denominator;
}

double histogram_quantile(const DensityHistogram& hist, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level outside [0, 1]");
  const double target = p * hist.total();
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < hist.bins(); ++i) {
    const double bin_mass = hist.mass[i] * hist.width(i);
    if (cumulative + bin_mass >= target && bin_mass > 0.0) {
      return hist.edges[i] + hist.width(i) * (target - cumulative) / bin_mass;
    }
    cumulative += bin_mass;
  }
  return hist.edges[hist.bins()];
}

double tail_mass(const DensityHistogram& hist, double factor) {
  const double median = histogram_quantile(hist, 0.5);
  const double iqr = histogram_quantile(hist, 0.75) - histogram_quantile(hist, 0.25);
  const double lo = median - factor * iqr;
  const double hi = median + factor * iqr;
  double outside = 0.0;
  for (Eigen::Index i = 0; i < hist.bins(); ++i) {
    const double a = hist.edges[i];
    const double b = hist.edges[i + 1];
    const double covered = std::max(0.0, std::min(b, lo) - a) + std::max(0.0, b - std::max(a, hi));
    outside += hist.mass[i] * std::min(covered, b - a);
  }
  return outside / hist.total();
}

double peak_bin_mass(const DensityHistogram& hist) {
  double peak = 0.0;
  for (Eigen::Index i = 0; i < hist.bins(); ++i) peak = std::max(peak, hist.mass[i] * hist.width(i));
  return peak;
}

void write_density_csv(std::ostream& out, const DensityHistogram& hist,
                       const std::vector<std::string>& comments) {
  for (const auto& line : comments) out << "# " << line << '\n';
  out << "x_left,x_right,mass\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < hist.bins(); ++i) {
    out << hist.edges[i] << ',' << hist.edges[i + 1] << ',' << hist.mass[i] << '\n';
  }
}

}  // namespace fracfk
