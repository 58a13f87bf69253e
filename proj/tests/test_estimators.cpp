#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include "fracfk/errors.hpp"
#include "fracfk/estimators.hpp"
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

RunOptions seeded(std::uint64_t seed, bool endpoints = false, unsigned threads = 1) {
  RunOptions o;
  o.seed = seed;
  o.keep_endpoints = endpoints;
  o.policy.threads = threads;
  return o;
}

Trajectory single_event_path() {
  Trajectory traj(Eigen::VectorXd::Constant(1, 1.0), 1.0);
  return traj;
}

}  // namespace

TEST_SUITE("estimators") {
  TEST_CASE("path action of simple paths") {
    RngStream rng(1, 0);
    const auto traj = generate_ctrw(config(1.5, 0.7, 100, 3), rng);
    CHECK(path_action(traj, PotentialSpec::free(), 3.0) == 0.0);
    CHECK(path_action(traj, PotentialSpec::constant(0.7), 3.0) == doctest::Approx(2.1).epsilon(1e-12));
    CHECK(path_action(single_event_path(), PotentialSpec::harmonic(1.0), 1.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(path_action(traj, PotentialSpec::free(), 3.5), DomainError);
  }

  TEST_CASE("path action weights each event by its realised sojourn") {
    Trajectory traj(Eigen::VectorXd::Zero(1), 2.0);
    traj.append(0.5, Eigen::VectorXd::Constant(1, 1.0));
    traj.append(1.25, Eigen::VectorXd::Constant(1, 2.0));
    const auto v = PotentialSpec::harmonic(1.0);
    // 0 * 0.5 + 1 * 0.75 + 4 * 0.75
    CHECK(path_action(traj, v, 2.0) == doctest::Approx(3.75));
    CHECK(path_action(traj, v, 1.0) == doctest::Approx(0.5));
    const std::vector<double> grid{0.25, 1.0, 2.0};
    const auto actions = path_actions(traj, v, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(actions[i] == path_action(traj, v, grid[i]));
  }

  TEST_CASE("lattice path action is the left-point step sum") {
    RngStream rng(2, 0);
    const auto c = config(2, 1, 50, 1);
    const auto traj = generate_brownian(c, rng);
    const auto v = PotentialSpec::harmonic(0.5);
    double sum = 0.0;
    for (std::size_t l = 0; l + 1 < traj.size(); ++l) sum += 0.5 * traj.x(l) * traj.x(l) / 50.0;
    CHECK(path_action(traj, v, 1.0) == doctest::Approx(sum).epsilon(1e-12));
  }

  TEST_CASE("geometric checkpoints") {
    const auto cps = geometric_checkpoints(10.0, 8);
    REQUIRE(cps.size() == 8);
    CHECK(cps.front() == doctest::Approx(2.5));
    CHECK(cps.back() == 10.0);
    for (std::size_t i = 1; i < cps.size(); ++i) CHECK(cps[i] / cps[i - 1] == doctest::Approx(std::pow(4.0, 1.0 / 7)));
  }

  TEST_CASE("free potential gives Z = 1 exactly") {
    const auto cps = geometric_checkpoints(2.0);
    const auto s = fk_functional(config(1.5, 0.7, 100, 2), PotentialSpec::free(), cps, 200, seeded(3));
    CHECK(s.times.front() == 0.0);
    for (Eigen::Index k = 0; k < s.log_z.size(); ++k) {
      CHECK(s.log_z[k] == 0.0);
      CHECK(s.rel_stderr[k] == 0.0);
    }
    const auto e = energy_from_decay(s);
    CHECK(e.value == 0.0);
    CHECK(e.stderr == 0.0);
  }

  TEST_CASE("constant potential gives Z = exp(-ct)") {
    const auto cps = geometric_checkpoints(4.0);
    const auto s = fk_functional(config(1.5, 0.7, 100, 4), PotentialSpec::constant(0.3), cps, 100, seeded(4));
    for (std::size_t k = 0; k < s.times.size(); ++k) {
      CHECK(s.log_z[static_cast<Eigen::Index>(k)] == doctest::Approx(-0.3 * s.times[k]).epsilon(1e-12));
    }
    CHECK(energy_from_decay(s).value == doctest::Approx(0.3).epsilon(1e-12));
  }

  TEST_CASE("Z(0) = 1 and 0 < Z <= 1 for non-negative V") {
    const auto cps = geometric_checkpoints(3.0);
    const auto s = fk_functional(config(1.5, 1, 100, 3), PotentialSpec::harmonic(0.5), cps, 500, seeded(5));
    CHECK(s.log_z[0] == 0.0);
    for (Eigen::Index k = 1; k < s.log_z.size(); ++k) {
      CHECK(s.log_z[k] < 0.0);
      CHECK(s.log_z[k] <= s.log_z[k - 1]);
    }
  }

  TEST_CASE("standard oscillator energy over window [4, 10]") {
    const auto cps = geometric_checkpoints(10.0);
    const auto s = fk_functional(config(2, 1, 100, 10), PotentialSpec::harmonic(0.5), cps, 10000, seeded(6, false, 0));
    const auto e = energy_from_decay(s, 4.0, 10.0);
    CHECK(e.value == doctest::Approx(0.5).epsilon(0.04));
    CHECK(e.stderr > 0.0);
    CHECK(e.stderr < 0.02);
    // -ln Z(t)/t approaches the ground-state energy from above.
    const double late = -s.log_z[s.log_z.size() - 1] / s.times.back();
    const double early = -s.log_z[1] / s.times[1];
    CHECK(std::abs(late - 0.5) < std::abs(early - 0.5));
  }

  TEST_CASE("energy fit of an exact exponential") {
    const std::vector<double> t{2, 4, 6, 8};
    Eigen::VectorXd z(4);
    for (int i = 0; i < 4; ++i) z[i] = std::exp(-0.5 * t[static_cast<std::size_t>(i)]);
    const auto s = FunctionalSeries::from_values(t, z, Eigen::VectorXd::Zero(4), 100);
    const auto e = energy_from_decay(s, 2.0, 8.0);
    CHECK(e.value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(e.stderr == doctest::Approx(0.0).epsilon(1e-12));
  }

  TEST_CASE("energy slope is invariant to a constant factor in Z") {
    const std::vector<double> t{1, 2, 3, 4, 5};
    Eigen::VectorXd z(5), se(5);
    for (int i = 0; i < 5; ++i) {
      z[i] = std::exp(-0.7 * t[static_cast<std::size_t>(i)] + 0.01 * std::sin(3.0 * i));
      se[i] = 0.01 * z[i];
    }
    const auto a = energy_from_decay(FunctionalSeries::from_values(t, z, se, 100), 1, 5);
    const auto b = energy_from_decay(FunctionalSeries::from_values(t, 3.0 * z, 3.0 * se, 100), 1, 5);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-12));
    CHECK(a.stderr == doctest::Approx(b.stderr).epsilon(1e-12));
  }

  TEST_CASE("energy fit errors") {
    const std::vector<double> t{1, 2, 3};
    Eigen::VectorXd z = Eigen::VectorXd::Constant(3, 0.5);
    const auto s = FunctionalSeries::from_values(t, z, Eigen::VectorXd::Zero(3), 10);
    CHECK_THROWS_AS(energy_from_decay(s, 1.5, 3.0), FitError);
    CHECK_THROWS_AS(energy_from_decay(s, 3.0, 1.0), FitError);
    Eigen::VectorXd bad = z;
    bad[1] = 0.0;
    CHECK_THROWS_AS(FunctionalSeries::from_values(t, bad, Eigen::VectorXd::Zero(3), 10), DomainError);
  }

  TEST_CASE("stderr shrinks as 1/sqrt(n_rep)") {
    const auto cps = geometric_checkpoints(5.0);
    const auto c = config(2, 1, 100, 5);
    const auto v = PotentialSpec::harmonic(0.5);
    const auto a = energy_from_decay(fk_functional(c, v, cps, 2000, seeded(7, false, 0)));
    const auto b = energy_from_decay(fk_functional(c, v, cps, 8000, seeded(8, false, 0)));
    CHECK(b.stderr / a.stderr == doctest::Approx(0.5).epsilon(0.2));
  }

  TEST_CASE("GFK with the exact trial has zero variance") {
    const auto cps = geometric_checkpoints(10.0);
    const auto run = run_gfk(config(2, 1, 100, 10), PotentialSpec::harmonic(0.5), gaussian_trial(0.5, 0.5),
                             cps, 1000, seeded(9, true));
    for (Eigen::Index k = 0; k < run.series.log_z.size(); ++k) {
      CHECK(run.series.log_z[k] == 0.0);
      CHECK(run.series.rel_stderr[k] == 0.0);
    }
    for (const auto& p : run.endpoints) CHECK(p.log_weight == 0.0);
    const auto e = energy_from_decay(run.series);
    CHECK(e.value == 0.5);
    CHECK(e.stderr == 0.0);
  }

  TEST_CASE("GFK re-adds the trial energy") {
    const auto cps = geometric_checkpoints(10.0);
    const auto s = gfk_functional(config(2, 1, 100, 10), PotentialSpec::harmonic(0.5), gaussian_trial(0.5, 0.0),
                                  cps, 500, seeded(10));
    CHECK(energy_from_decay(s).value == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("GFK with a constant trial reproduces FK") {
    const auto cps = geometric_checkpoints(3.0);
    const auto c = config(1.5, 0.7, 100, 3);
    const auto v = PotentialSpec::harmonic(0.5);
    const auto fk = energy_from_decay(fk_functional(c, v, cps, 500, seeded(11)));
    const auto gfk = energy_from_decay(gfk_functional(c, v, constant_trial(0.0), cps, 500, seeded(11)));
    CHECK(gfk.value == doctest::Approx(fk.value).epsilon(1e-12));
    CHECK(gfk.method == EnergyMethod::gfk);
  }

  TEST_CASE("sequential merge is bit-reproducible across thread counts") {
    const auto cps = geometric_checkpoints(2.0);
    const auto c = config(1.5, 1, 100, 2);
    const auto v = PotentialSpec::harmonic(0.5);
    const auto a = fk_functional(c, v, cps, 1000, seeded(12, false, 1));
    const auto b = fk_functional(c, v, cps, 1000, seeded(12, false, 3));
    CHECK(a.log_z == b.log_z);
    CHECK(a.rel_covariance == b.rel_covariance);
    RunOptions unordered = seeded(12, false, 3);
    unordered.policy.merge = MergeMode::unordered;
    const auto u = fk_functional(c, v, cps, 1000, unordered);
    CHECK((u.log_z - a.log_z).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("accumulator merge matches sequential adds") {
    RngStream rng(13, 0);
    WeightAccumulator all(3), left(3), right(3);
    for (int i = 0; i < 50; ++i) {
      Eigen::Vector3d w(-rng.uniform() * 40, -rng.uniform() * 5, rng.uniform());
      all.add(w);
      (i < 20 ? left : right).add(w);
    }
    left.merge(right);
    const auto a = all.finish({0, 1, 2});
    const auto b = left.finish({0, 1, 2});
    CHECK(left.count() == 50);
    for (int k = 0; k < 3; ++k) {
      CHECK(a.log_z[k] == doctest::Approx(b.log_z[k]).epsilon(1e-12));
      CHECK(a.rel_stderr[k] == doctest::Approx(b.rel_stderr[k]).epsilon(1e-9));
    }
  }

  TEST_CASE("accumulator matches a direct mean and stderr") {
    std::vector<double> w{0.2, 0.5, 0.9, 0.4, 0.7};
    WeightAccumulator acc(1);
    for (double x : w) acc.add(Eigen::VectorXd::Constant(1, std::log(x)));
    const auto s = acc.finish({1.0});
    const double mean = 0.54;
    double var = 0.0;
    for (double x : w) var += (x - mean) * (x - mean);
    var /= 4.0;
    CHECK(std::exp(s.log_z[0]) == doctest::Approx(mean));
    CHECK(s.rel_stderr[0] == doctest::Approx(std::sqrt(var / 5.0) / mean));
  }

  TEST_CASE("degenerate and flagged runs") {
    WeightAccumulator one(1);
    one.add(Eigen::VectorXd::Zero(1));
    CHECK_THROWS_AS(one.finish({1.0}), DegenerateEstimateError);
    const auto cps = geometric_checkpoints(1.0);
    // -V t overflows to +inf at every replica.
    CHECK_THROWS_AS(fk_functional(config(2, 1, 10, 10), PotentialSpec::constant(-1e308), geometric_checkpoints(10.0),
                                  100, seeded(14)),
                    NumericalError);
    CHECK_THROWS_AS(fk_functional(config(2, 1, 10, 1), PotentialSpec::free(), cps, 1, seeded(14)), ConfigError);
    const std::vector<double> beyond{2.0};
    CHECK_THROWS_AS(fk_functional(config(2, 1, 10, 1), PotentialSpec::free(), beyond, 10, seeded(14)), ConfigError);
  }

  TEST_CASE("free endpoint histogram matches N(0, 2Dt)") {
    const std::vector<double> cps{1.0};
    auto c = config(2, 1, 100, 1);
    c.brownian = BrownianGenerator::gaussian;
    const auto run = run_fk(c, PotentialSpec::free(), cps, 100000, seeded(15, true, 0));
    const auto points = to_weighted_points(run.endpoints);
    const auto est = density_estimate(points, uniform_edges(-6, 6, 240));
    double cumulative = 0.0;
    double ks = 0.0;
    for (Eigen::Index i = 0; i < est.amplitude.bins(); ++i) {
      cumulative += est.amplitude.mass[i] * est.amplitude.width(i);
      ks = std::max(ks, std::abs(cumulative - oracle::normal_cdf(est.amplitude.edges[i + 1], 1.0)));
    }
    CHECK(ks < 0.02);
    CHECK(est.amplitude.total() == doctest::Approx(1.0));
    CHECK(est.density.total() == doctest::Approx(1.0));
  }

  TEST_CASE("oscillator endpoint histogram is symmetric within 3 sigma") {
    const std::vector<double> cps{4.0};
    // Gaussian increments: lattice points would sit on bin edges.
    auto c = config(2, 1, 100, 4);
    c.brownian = BrownianGenerator::gaussian;
    const auto run = run_fk(c, PotentialSpec::harmonic(0.5), cps, 20000, seeded(16, true, 0));
    const auto points = to_weighted_points(run.endpoints);
    const auto edges = uniform_edges(-3, 3, 30);
    const auto est = density_estimate(points, edges);
    // Per-bin spread from the weights themselves.
    std::vector<double> sw(30, 0.0), sw2(30, 0.0);
    double total = 0.0;
    for (const auto& p : points) {
      total += p.weight;
      if (p.position < -3 || p.position >= 3) continue;
      const auto b = static_cast<std::size_t>((p.position + 3) / 0.2);
      sw[std::min<std::size_t>(b, 29)] += p.weight;
      sw2[std::min<std::size_t>(b, 29)] += p.weight * p.weight;
    }
    for (int i = 0; i < 15; ++i) {
      const int j = 29 - i;
      const double sigma = std::sqrt(sw2[i] + sw2[j]) / total / 0.2;
      CHECK(std::abs(est.amplitude.mass[i] - est.amplitude.mass[j]) <= 3 * sigma * (total / [&] {
              double in = 0.0;
              for (double s : sw) in += s;
              return in;
            }()) + 1e-12);
    }
  }

  TEST_CASE("density is the normalised square of the amplitude") {
    const std::vector<WeightedPoint> pts{{-0.5, 1.0}, {0.5, 3.0}, {1.5, 0.0}, {9.0, 5.0}};
    const auto est = density_estimate(pts, uniform_edges(-1, 2, 3));
    CHECK(est.amplitude.mass[0] == doctest::Approx(0.25));
    CHECK(est.amplitude.mass[1] == doctest::Approx(0.75));
    CHECK(est.amplitude.mass[2] == 0.0);
    CHECK(est.density.mass[0] == doctest::Approx(0.1));
    CHECK(est.density.mass[1] == doctest::Approx(0.9));
  }

  TEST_CASE("density errors") {
    const std::vector<WeightedPoint> zero{{0.0, 0.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(density_estimate(zero, uniform_edges(-1, 1, 4)), DegenerateEstimateError);
    const std::vector<WeightedPoint> negative{{0.0, -1.0}};
    CHECK_THROWS_AS(density_estimate(negative, uniform_edges(-1, 1, 4)), DomainError);
    CHECK_THROWS_AS(uniform_edges(1, -1, 4), ConfigError);
  }

  TEST_CASE("observable expectation") {
    const std::vector<WeightedPoint> pts{{-1.0, 0.5}, {2.0, 1.5}, {0.0, 2.0}};
    CHECK(observable_expectation([](double) { return 1.0; }, pts) == doctest::Approx(1.0));
    CHECK(observable_expectation([](double x) { return x; }, pts) == doctest::Approx(2.5 / 4.0));
    const std::vector<WeightedPoint> zero{{1.0, 0.0}};
    CHECK_THROWS_AS(observable_expectation([](double x) { return x; }, zero), DegenerateEstimateError);
  }

  TEST_CASE("symmetric system has zero mean position") {
    const std::vector<double> cps{3.0};
    const auto run = run_fk(config(1.5, 1, 100, 3), PotentialSpec::harmonic(0.5), cps, 10000, seeded(17, true, 0));
    const auto pts = to_weighted_points(run.endpoints);
    const double mean = observable_expectation([](double x) { return x; }, pts);
    const double second = observable_expectation([](double x) { return x * x; }, pts);
    double sw = 0.0, sw2 = 0.0;
    for (const auto& p : pts) {
      sw += p.weight;
      sw2 += p.weight * p.weight;
    }
    const double stderr = std::sqrt(second * sw2) / sw;
    CHECK(std::abs(mean) <= 3 * stderr);
  }

  TEST_CASE("GFK stationary run gives <x^2> = 1/2") {
    const std::vector<double> cps{10.0};
    const auto run = run_gfk(config(2, 1, 100, 10), PotentialSpec::harmonic(0.5), gaussian_trial(0.5, 0.5), cps,
                             10000, seeded(18, true, 0));
    const auto pts = to_weighted_points(run.endpoints);
    CHECK(observable_expectation([](double x) { return x * x; }, pts) == doctest::Approx(0.5).epsilon(0.06));
  }

  TEST_CASE("histogram summaries") {
    DensityHistogram h;
    h.edges = uniform_edges(0, 10, 10);
    h.mass = Eigen::VectorXd::Constant(10, 0.1);
    CHECK(histogram_quantile(h, 0.5) == doctest::Approx(5.0));
    CHECK(histogram_quantile(h, 0.25) == doctest::Approx(2.5));
    CHECK(peak_bin_mass(h) == doctest::Approx(0.1));
    // median 5, IQR 5: nothing beyond 5 +- 0.5 * 5 except the outer quarter on each side.
    CHECK(tail_mass(h, 0.5) == doctest::Approx(0.5));
    CHECK(tail_mass(h, 4.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(histogram_quantile(h, 1.5), DomainError);
  }

  TEST_CASE("density CSV format") {
    DensityHistogram h;
    h.edges = uniform_edges(0, 1, 2);
    h.mass = Eigen::Vector2d(0.5, 1.5);
    std::ostringstream out;
    write_density_csv(out, h, {"note"});
    CHECK(out.str() == "# note\nx_left,x_right,mass\n0,0.5,0.5\n0.5,1,1.5\n");
  }

  TEST_CASE("thread count resolution") {
    CHECK(resolve_threads(5) == 5);
    ::setenv("FRACFK_THREADS", "3", 1);
    CHECK(resolve_threads(0) == 3);
    CHECK(resolve_threads(2) == 2);
    ::setenv("FRACFK_THREADS", "abc", 1);
    CHECK_THROWS_AS(resolve_threads(0), ConfigError);
    ::unsetenv("FRACFK_THREADS");
    CHECK(resolve_threads(0) >= 1);
  }
}
