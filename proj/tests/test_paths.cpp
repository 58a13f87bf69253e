#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "fracfk/errors.hpp"
#include "fracfk/paths.hpp"
#include "oracles.hpp"

using namespace fracfk;

namespace {

WalkConfig config(double alpha, double beta, std::uint64_t n, double t) {
  WalkConfig c;
  c.indices = {alpha, beta};
  c.steps_per_unit = n;
  c.horizon = t;
  return c;
}

std::vector<double> terminal_positions(const WalkConfig& c, int replicas, std::uint64_t seed) {
  std::vector<double> x(replicas);
  for (int m = 0; m < replicas; ++m) {
    RngStream rng(seed, static_cast<std::uint64_t>(m));
    const auto traj = generate_walk(c, rng);
    x[m] = traj.x(traj.size() - 1);
  }
  return x;
}

std::pair<double, double> mean_var(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return {mean, var / static_cast<double>(x.size() - 1)};
}

}  // namespace

TEST_SUITE("paths") {
  TEST_CASE("lattice walk moments") {
    const auto x = terminal_positions(config(2, 1, 100, 1), 10000, 1);
    const auto [mean, var] = mean_var(x);
    CHECK(std::abs(mean) < 0.03);
    CHECK(var == doctest::Approx(2 * 0.5 * 1.0).epsilon(0.05));
  }

  TEST_CASE("lattice walk has nt events on the lattice") {
    auto c = config(2, 1, 4, 1);
    RngStream rng(2, 0);
    const auto traj = generate_brownian(c, rng);
    CHECK(traj.size() == 5);
    const double unit = 0.5 * std::sqrt(2 * c.diffusion);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const double k = traj.x(i) / unit;
      CHECK(k == doctest::Approx(std::round(k)).epsilon(1e-12));
      CHECK(traj.time(i) == doctest::Approx(0.25 * static_cast<double>(i)));
    }
  }

  TEST_CASE("lattice walk in d = 3") {
    auto c = config(2, 1, 50, 2);
    c.dimension = 3;
    c.start = Eigen::Vector3d(1, -1, 0.5);
    RngStream rng(3, 0);
    const auto traj = generate_brownian(c, rng);
    CHECK(traj.dimension() == 3);
    CHECK(traj.size() == 101);
    CHECK(traj.position(0).isApprox(Eigen::Vector3d(1, -1, 0.5)));
  }

  TEST_CASE("regime errors") {
    RngStream rng(1, 0);
    CHECK_THROWS_AS(generate_brownian(config(1.5, 1, 100, 1), rng), RegimeError);
    auto c = config(1.5, 1, 100, 1);
    c.dimension = 2;
    c.start = Eigen::Vector2d::Zero();
    CHECK_THROWS_AS(generate_ctrw(c, rng), RegimeError);
    CHECK_THROWS_AS(generate_walk(config(2.5, 1, 100, 1), rng), ConfigError);
    CHECK_THROWS_AS(generate_walk(config(1.5, 0.0, 100, 1), rng), ConfigError);
  }

  TEST_CASE("ctrw at (2, 1) has variance 2Dt") {
    std::vector<double> x(10000);
    for (int m = 0; m < 10000; ++m) {
      RngStream rng(4, static_cast<std::uint64_t>(m));
      const auto traj = generate_ctrw(config(2, 1, 100, 1), rng);
      x[m] = traj.x(traj.size() - 1);
    }
    CHECK(mean_var(x).second == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("ctrw at (1.5, 1) has a 1.5 power-law tail") {
    const auto x = terminal_positions(config(1.5, 1, 100, 1), 100000, 5);
    const double slope = oracle::survival_slope(x, {3, 5, 10, 20, 30, 50, 100});
    CHECK(slope == doctest::Approx(-1.5).epsilon(0.15 / 1.5));
  }

  TEST_CASE("ctrw at (1.5, 0.7) has fewer events than the fixed grid") {
    int fewer = 0;
    for (int m = 0; m < 1000; ++m) {
      RngStream rng(6, static_cast<std::uint64_t>(m));
      const auto traj = generate_ctrw(config(1.5, 0.7, 100, 1), rng);
      fewer += traj.size() - 1 < 100 ? 1 : 0;
    }
    CHECK(fewer == 1000);
  }

  TEST_CASE("ctrw event times increase and stay within the horizon") {
    RngStream rng(7, 0);
    const auto traj = generate_ctrw(config(1.2, 0.6, 100, 5), rng);
    for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj.time(i) > traj.time(i - 1));
    CHECK(traj.time(traj.size() - 1) <= 5.0);
    CHECK(traj.terminal_time() == 5.0);
  }

  TEST_CASE("Brownian self-similarity: X(4t)/2 matches X(t)") {
    auto c1 = config(2, 1, 100, 1);
    auto c4 = config(2, 1, 100, 4);
    c1.brownian = c4.brownian = BrownianGenerator::gaussian;
    const auto a = terminal_positions(c1, 100000, 20);
    auto b = terminal_positions(c4, 100000, 21);
    for (auto& v : b) v /= 2.0;
    CHECK(oracle::two_sample_ks(a, b) < 0.02);
  }

  TEST_CASE("base-step scaling is self-similar in x / t^kappa") {
    auto c1 = config(1.5, 0.7, 1000, 4.0);
    auto c2 = config(1.5, 0.7, 1000, 32.0);
    c1.jump_scaling = c2.jump_scaling = JumpScaling::base_step;
    auto a = terminal_positions(c1, 20000, 8);
    auto b = terminal_positions(c2, 20000, 9);
    const double k = c1.indices.kappa();
    for (auto& v : a) v /= std::pow(4.0, k);
    for (auto& v : b) v /= std::pow(32.0, k);
    CHECK(oracle::two_sample_ks(a, b) < 0.03);
  }

  TEST_CASE("per-event scaling drifts logarithmically in x / t^kappa") {
    // Jump = dt^kappa * S multiplies two tail-alpha variables, so the jump tail
    // carries a log factor and the scaled spread grows like (log N)^(1/alpha).
    const auto c1 = config(1.5, 0.7, 1000, 4.0);
    const auto c2 = config(1.5, 0.7, 1000, 32.0);
    auto a = terminal_positions(c1, 20000, 8);
    auto b = terminal_positions(c2, 20000, 9);
    const double k = c1.indices.kappa();
    for (auto& v : a) v = std::abs(v) / std::pow(4.0, k);
    for (auto& v : b) v = std::abs(v) / std::pow(32.0, k);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double ratio = b[b.size() / 2] / a[a.size() / 2];
    const double events1 = std::pow(4000.0, 0.7);
    const double events2 = std::pow(32000.0, 0.7);
    const double predicted = std::pow(std::log(events2) / std::log(events1), 1.0 / 1.5);
    MESSAGE("median ratio " << ratio << ", log-corrected prediction " << predicted);
    CHECK(ratio > 1.05);
    CHECK(ratio == doctest::Approx(predicted).epsilon(0.1));
  }

  TEST_CASE("base-step scaling switch changes the jump law") {
    auto c = config(1.5, 0.7, 100, 1);
    RngStream r1(10, 0), r2(10, 0);
    const auto per_event = generate_ctrw(c, r1);
    c.jump_scaling = JumpScaling::base_step;
    const auto base = generate_ctrw(c, r2);
    CHECK(per_event.times() == base.times());
    CHECK(per_event.x(1) != base.x(1));
  }

  TEST_CASE("drifted walk with exact trial has stationary law phi^2") {
    const auto trial = gaussian_trial(0.5, 0.5);
    auto c = config(2, 1, 100, 50);
    c.brownian = BrownianGenerator::gaussian;
    std::vector<double> x(10000);
    for (int m = 0; m < 10000; ++m) {
      RngStream rng(11, static_cast<std::uint64_t>(m));
      const auto traj = generate_drifted(c, trial, rng);
      x[m] = traj.x(traj.size() - 1);
    }
    // phi^2 = exp(-x^2): normal with variance 1/2.
    CHECK(oracle::ks_distance(x, [](double s) { return oracle::normal_cdf(s, 0.5); }) < 0.05);
  }

  TEST_CASE("drifted walk with constant trial equals the plain walk") {
    const auto trial = constant_trial(0.0);
    for (const auto& c : {config(1.5, 0.7, 100, 2), config(2, 1, 100, 2)}) {
      RngStream r1(12, 3), r2(12, 3);
      const auto plain = generate_walk(c, r1);
      const auto drifted = generate_drifted(c, trial, r2);
      CHECK(plain == drifted);
    }
  }

  TEST_CASE("drift vanishes at the origin on the first step") {
    const auto trial = gaussian_trial(0.5, 0.0);
    const auto c = config(1.5, 1, 100, 1);
    RngStream r1(13, 0), r2(13, 0);
    const auto plain = generate_ctrw(c, r1);
    const auto drifted = generate_drifted(c, trial, r2);
    CHECK(drifted.x(1) == plain.x(1));
    CHECK(drifted.x(2) != plain.x(2));
  }

  TEST_CASE("trial domain error on non-positive trial") {
    TrialFunction bad = constant_trial(0.0);
    bad.phi = [](double x) { return x > 0.05 ? -1.0 : 1.0; };
    auto c = config(1.5, 1, 100, 5);
    bool thrown = false;
    for (std::uint64_t s = 0; s < 20 && !thrown; ++s) {
      RngStream rng(14, s);
      try {
        generate_drifted(c, bad, rng);
      } catch (const TrialDomainError&) {
        thrown = true;
      }
    }
    CHECK(thrown);
  }

  TEST_CASE("position_at piecewise-constant convention") {
    Trajectory traj(Eigen::VectorXd::Zero(1), 1.0);
    traj.append(0.5, Eigen::VectorXd::Constant(1, 1.0));
    CHECK(position_at(traj, 0.0)[0] == 0.0);
    CHECK(position_at(traj, 0.49)[0] == 0.0);
    CHECK(position_at(traj, 0.5)[0] == 1.0);
    CHECK(position_at(traj, 1.0)[0] == 1.0);
    CHECK_THROWS_AS(position_at(traj, 1.01), DomainError);
    CHECK_THROWS_AS(position_at(traj, -0.01), DomainError);
  }

  TEST_CASE("sample_on_grid follows position_at") {
    RngStream rng(15, 0);
    const auto traj = generate_ctrw(config(1.5, 0.7, 100, 3), rng);
    const auto grid = sample_on_grid(traj, 301);
    for (int i = 0; i <= 300; ++i) {
      const double s = 3.0 * i / 300.0;
      CHECK(grid[i] == position_at(traj, s)[0]);
    }
  }

  TEST_CASE("trajectory CSV round trip") {
    RngStream rng(16, 0);
    const auto traj = generate_ctrw(config(1.5, 0.7, 100, 2), rng);
    std::stringstream io;
    write_trajectory_csv(io, traj, {"note: test"});
    const auto back = read_trajectory_csv(io);
    CHECK(back == traj);
  }

  TEST_CASE("trajectory CSV rejects malformed input") {
    std::stringstream no_header("0,0\n");
    CHECK_THROWS_AS(read_trajectory_csv(no_header), IoError);
    std::stringstream decreasing("t,x1\n0,0\n0.5,1\n0.4,2\n");
    CHECK_THROWS_AS(read_trajectory_csv(decreasing), IoError);
    std::stringstream ragged("t,x1\n0,0\n0.5\n");
    CHECK_THROWS_AS(read_trajectory_csv(ragged), IoError);
    std::stringstream late_start("t,x1\n0.1,0\n");
    CHECK_THROWS_AS(read_trajectory_csv(late_start), IoError);
  }
}
