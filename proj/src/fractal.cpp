#include "fracfk/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include "fracfk/errors.hpp"

namespace fracfk {

namespace {

// Sum of squared residuals of a least-squares line through profile[begin, begin+n).
double detrended_ssr(const Eigen::VectorXd& profile, Eigen::Index begin, Eigen::Index n) {
  const auto segment = profile.segment(begin, n);
  const Eigen::VectorXd index = Eigen::VectorXd::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  const double mean_i = index.mean();
  const double mean_y = segment.mean();
  const Eigen::VectorXd di = index.array() - mean_i;
  const Eigen::VectorXd dy = segment.array() - mean_y;
  const double slope = di.dot(dy) / di.squaredNorm();
  return (dy - slope * di).squaredNorm();
}

}  // namespace

double dfa_fluctuation(const Eigen::Ref<const Eigen::VectorXd>& series, Eigen::Index window) {
  if (window < 4) throw DomainError("DFA window must be >= 4");
  const Eigen::Index length = series.size();
  if (length < 2 * window) throw DomainError("DFA series shorter than two windows");

  Eigen::VectorXd profile(length);
  const double mean = series.mean();
  double running = 0.0;
  for (Eigen::Index i = 0; i < length; ++i) {
    running += series[i] - mean;
    profile[i] = running;
  }

  const Eigen::Index segments = length / window;
  double total = 0.0;
  for (Eigen::Index s = 0; s < segments; ++s) {
    total += detrended_ssr(profile, s * window, window);
    total += detrended_ssr(profile, length - (s + 1) * window, window);
  }
  return std::sqrt(total / static_cast<double>(2 * segments * window));
}

DfaResult hurst_exponent(const Eigen::Ref<const Eigen::VectorXd>& series,
                         const std::vector<Eigen::Index>& windows) {
  if (windows.size() < 4) throw FitError("DFA fit needs at least 4 window sizes");
  if (!std::is_sorted(windows.begin(), windows.end()) ||
      std::adjacent_find(windows.begin(), windows.end()) != windows.end()) {
    throw FitError("DFA window sizes must be strictly increasing");
  }
  if (std::log10(static_cast<double>(windows.back()) / static_cast<double>(windows.front())) < 1.5 - 1e-9) {
    throw FitError("DFA windows must span at least 1.5 decades");
  }
  DfaResult result;
  result.window_sizes = windows;
  const auto m = static_cast<Eigen::Index>(windows.size());
  result.fluctuations.resize(m);
  Eigen::VectorXd log_n(m);
  Eigen::VectorXd log_f(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double f = dfa_fluctuation(series, windows[static_cast<std::size_t>(i)]);
    if (!(f > 0.0) || !std::isfinite(f)) throw FitError("degenerate DFA fluctuation (F = 0)");
    result.fluctuations[i] = f;
    log_n[i] = std::log(static_cast<double>(windows[static_cast<std::size_t>(i)]));
    log_f[i] = std::log(f);
  }
  const Eigen::VectorXd dn = log_n.array() - log_n.mean();
  const Eigen::VectorXd df = log_f.array() - log_f.mean();
  result.hurst = dn.dot(df) / dn.squaredNorm();
  const double ss_res = (df - result.hurst * dn).squaredNorm();
  const double ss_tot = df.squaredNorm();
  result.fit_r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  result.dimension = 2.0 - result.hurst;
  return result;
}

std::vector<Eigen::Index> default_windows(Eigen::Index length, std::size_t count) {
  const double lo = 8.0;
  const double hi = static_cast<double>(length) / 8.0;
  if (hi < lo * std::pow(10.0, 1.5)) throw DomainError("series too short for default DFA windows");
  std::vector<Eigen::Index> windows;
  for (std::size_t k = 0; k < count; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(count - 1);
    windows.push_back(static_cast<Eigen::Index>(std::llround(lo * std::pow(hi / lo, f))));
  }
  windows.erase(std::unique(windows.begin(), windows.end()), windows.end());
  return windows;
}

Eigen::VectorXd grid_increments(const Trajectory& traj, std::size_t points) {
  const Eigen::VectorXd grid = sample_on_grid(traj, points + 1);
  return grid.tail(grid.size() - 1) - grid.head(grid.size() - 1);
}

void write_dfa_csv(std::ostream& out, const DfaResult& result,
                   const std::vector<std::string>& comments) {
  for (const auto& line : comments) out << "# " << line << '\n';
  out << "n,F\n" << std::setprecision(17);
  for (std::size_t i = 0; i < result.window_sizes.size(); ++i) {
    out << result.window_sizes[i] << ',' << result.fluctuations[static_cast<Eigen::Index>(i)] << '\n';
  }
}

}  // namespace fracfk
