#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <variant>

namespace fracfk {

/// Positive trial function phi0 together with its drift and curvature ratio.
///
/// For d > 1 the trial is taken in product form phi0(x) = prod_i phi(x_i), so
/// log_gradient applies per coordinate and curvature ratios add.
struct TrialFunction {
  std::function<double(double)> phi;
  std::function<double(double)> log_gradient;     // phi'/phi
  std::function<double(double)> curvature_ratio;  // phi''/phi
  double e0 = 0.0;
  std::string name;
};

/// phi0 = exp(-c x^2).
TrialFunction gaussian_trial(double c, double e0);

/// phi0 == 1; drift and curvature vanish, so GFK reduces to FK shifted by e0.
TrialFunction constant_trial(double e0);

enum class BumpShape { top_hat, gaussian };

struct FreePotential {};

/// q2 * |x|^gamma; gamma == 2 is the harmonic oscillator.
struct PowerLawPotential {
  double q2 = 0.5;
  double gamma = 2.0;
};

/// -(g/2) N_w(x) with N_w a unit-mass bump of half-width `width`.
struct DeltaWellPotential {
  double g = 1.0;
  double width = 0.01;
  BumpShape shape = BumpShape::top_hat;
};

struct ConstantPotential {
  double value = 0.0;
};

class PotentialSpec;

/// V(x) - e0 - D * (laplacian phi0)/phi0.
struct ShiftedPotential {
  std::shared_ptr<const PotentialSpec> base;
  TrialFunction trial;
  double diffusion = 0.5;
};

class PotentialSpec {
 public:
  using Variant = std::variant<FreePotential, PowerLawPotential, DeltaWellPotential,
                               ConstantPotential, ShiftedPotential>;

  PotentialSpec() = default;
  PotentialSpec(Variant v);  // NOLINT(google-explicit-constructor)

  static PotentialSpec free();
  static PotentialSpec power_law(double q2, double gamma);
  static PotentialSpec harmonic(double q2) { return power_law(q2, 2.0); }
  static PotentialSpec delta_well(double g, double width, BumpShape shape = BumpShape::top_hat);
  static PotentialSpec constant(double value);
  static PotentialSpec shifted(const PotentialSpec& base, TrialFunction trial,
                               double diffusion = 0.5);

  const Variant& variant() const noexcept { return v_; }
  /// Short tag: free, power_law, delta_well, constant, shifted.
  std::string kind() const;
  /// Human-readable description including parameters.
  std::string describe() const;

 private:
  Variant v_ = FreePotential{};
};

/// Unit-mass bump of half-width w.
double bump(double x, double width, BumpShape shape);

double eval_potential(const PotentialSpec& spec, double x);
double eval_potential(const PotentialSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x);

/// V(x) - e0 - diffusion * curvature_ratio(x). diffusion = 1/2 matches H = -laplacian/2 + V.
double perturbed_potential(const PotentialSpec& v, const TrialFunction& trial, double x,
                           double diffusion = 0.5);
double perturbed_potential(const PotentialSpec& v, const TrialFunction& trial,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double diffusion = 0.5);

}  // namespace fracfk
