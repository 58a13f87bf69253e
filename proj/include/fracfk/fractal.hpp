#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "fracfk/paths.hpp"

namespace fracfk {

struct DfaResult {
  std::vector<Eigen::Index> window_sizes;
  Eigen::VectorXd fluctuations;
  double hurst = 0.0;
  double dimension = 0.0;  // 2 - hurst
  double fit_r2 = 0.0;
};

/// First-order DFA fluctuation F(window): profile of the mean-removed series,
/// non-overlapping segments taken from both ends, linear trend removed per
/// segment, root-mean-square residual.
double dfa_fluctuation(const Eigen::Ref<const Eigen::VectorXd>& series, Eigen::Index window);

/// Slope of log F(n) against log n.
DfaResult hurst_exponent(const Eigen::Ref<const Eigen::VectorXd>& series,
                         const std::vector<Eigen::Index>& windows);

/// `count` geometric window sizes from 8 to length/8, duplicates removed.
std::vector<Eigen::Index> default_windows(Eigen::Index length, std::size_t count = 12);

/// Increments of the first coordinate sampled on a uniform grid of points+1 values.
Eigen::VectorXd grid_increments(const Trajectory& traj, std::size_t points);

/// CSV `n,F` rows.
void write_dfa_csv(std::ostream& out, const DfaResult& result,
                   const std::vector<std::string>& comments = {});

}  // namespace fracfk
