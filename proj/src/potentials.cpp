#include "fracfk/potentials.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fracfk/errors.hpp"

namespace fracfk {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_finite(double x) {
  if (!std::isfinite(x)) throw DomainError("potential evaluated at a non-finite point");
}

}  // namespace

TrialFunction gaussian_trial(double c, double e0) {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw ConfigError("trial.c must be positive, got " + std::to_string(c));
  }
  TrialFunction t;
  t.phi = [c](double x) { return std::exp(-c * x * x); };
  t.log_gradient = [c](double x) { return -2.0 * c * x; };
  t.curvature_ratio = [c](double x) { return 4.0 * c * c * x * x - 2.0 * c; };
  t.e0 = e0;
  std::ostringstream name;
  name << "gaussian(c=" << c << ",e0=" << e0 << ")";
  t.name = name.str();
  return t;
}

TrialFunction constant_trial(double e0) {
  TrialFunction t;
  t.phi = [](double) { return 1.0; };
  t.log_gradient = [](double) { return 0.0; };
  t.curvature_ratio = [](double) { return 0.0; };
  t.e0 = e0;
  t.name = "constant(e0=" + std::to_string(e0) + ")";
  return t;
}

PotentialSpec::PotentialSpec(Variant v) : v_(std::move(v)) {}

PotentialSpec PotentialSpec::free() { return PotentialSpec(FreePotential{}); }

PotentialSpec PotentialSpec::power_law(double q2, double gamma) {
  if (!(q2 > 0.0)) throw ConfigError("potential.q2 must be positive");
  if (!(gamma > 0.0)) throw ConfigError("potential.gamma must be positive");
  return PotentialSpec(PowerLawPotential{q2, gamma});
}

PotentialSpec PotentialSpec::delta_well(double g, double width, BumpShape shape) {
  if (!(g > 0.0)) throw ConfigError("potential.g must be positive");
  if (!(width > 0.0)) throw ConfigError("potential.width must be positive");
  return PotentialSpec(DeltaWellPotential{g, width, shape});
}

PotentialSpec PotentialSpec::constant(double value) {
  if (!std::isfinite(value)) throw ConfigError("constant potential must be finite");
  return PotentialSpec(ConstantPotential{value});
}

PotentialSpec PotentialSpec::shifted(const PotentialSpec& base, TrialFunction trial,
                                     double diffusion) {
  if (!trial.phi || !trial.log_gradient || !trial.curvature_ratio) {
    throw ConfigError("trial function is incomplete");
  }
  return PotentialSpec(
      ShiftedPotential{std::make_shared<const PotentialSpec>(base), std::move(trial), diffusion});
}

std::string PotentialSpec::kind() const {
  return std::visit(overloaded{[](const FreePotential&) { return std::string("free"); },
                               [](const PowerLawPotential&) { return std::string("power_law"); },
                               [](const DeltaWellPotential&) { return std::string("delta_well"); },
                               [](const ConstantPotential&) { return std::string("constant"); },
                               [](const ShiftedPotential&) { return std::string("shifted"); }},
                    v_);
}

std::string PotentialSpec::describe() const {
  std::ostringstream out;
  out.precision(10);
  std::visit(overloaded{[&](const FreePotential&) { out << "free"; },
                        [&](const PowerLawPotential& p) {
                          out << "power_law(q2=" << p.q2 << ",gamma=" << p.gamma << ")";
                        },
                        [&](const DeltaWellPotential& p) {
                          out << "delta_well(g=" << p.g << ",width=" << p.width << ",shape="
                              << (p.shape == BumpShape::top_hat ? "top_hat" : "gaussian") << ")";
                        },
                        [&](const ConstantPotential& p) { out << "constant(" << p.value << ")"; },
                        [&](const ShiftedPotential& p) {
                          out << "shifted(" << p.base->describe() << "," << p.trial.name << ")";
                        }},
             v_);
  return out.str();
}

double bump(double x, double width, BumpShape shape) {
  if (shape == BumpShape::top_hat) {
    return std::abs(x) <= width ? 0.5 / width : 0.0;
  }
  // Gaussian with standard deviation width/2 so most of the mass sits in [-w, w].
  const double sigma = 0.5 * width;
  const double z = x / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

double eval_potential(const PotentialSpec& spec, double x) {
  require_finite(x);
  return std::visit(
      overloaded{[](const FreePotential&) { return 0.0; },
                 [x](const PowerLawPotential& p) {
                   return p.gamma == 2.0 ? p.q2 * x * x : p.q2 * std::pow(std::abs(x), p.gamma);
                 },
                 [x](const DeltaWellPotential& p) { return -0.5 * p.g * bump(x, p.width, p.shape); },
                 [](const ConstantPotential& p) { return p.value; },
                 [x](const ShiftedPotential& p) {
                   return perturbed_potential(*p.base, p.trial, x, p.diffusion);
                 }},
      spec.variant());
}

double eval_potential(const PotentialSpec& spec, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() == 1) return eval_potential(spec, x[0]);
  if (!x.allFinite()) throw DomainError("potential evaluated at a non-finite point");
  return std::visit(
      overloaded{[](const FreePotential&) { return 0.0; },
                 [&x](const PowerLawPotential& p) {
                   const double r2 = x.squaredNorm();
                   return p.gamma == 2.0 ? p.q2 * r2 : p.q2 * std::pow(r2, 0.5 * p.gamma);
                 },
                 [](const DeltaWellPotential&) -> double {
                   throw DomainError("delta_well potential is one-dimensional");
                 },
                 [](const ConstantPotential& p) { return p.value; },
                 [&x](const ShiftedPotential& p) {
                   return perturbed_potential(*p.base, p.trial, x, p.diffusion);
                 }},
      spec.variant());
}

double perturbed_potential(const PotentialSpec& v, const TrialFunction& trial, double x,
                           double diffusion) {
  return eval_potential(v, x) - trial.e0 - diffusion * trial.curvature_ratio(x);
}

double perturbed_potential(const PotentialSpec& v, const TrialFunction& trial,
                           const Eigen::Ref<const Eigen::VectorXd>& x, double diffusion) {
  double curvature = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) curvature += trial.curvature_ratio(x[i]);
  return eval_potential(v, x) - trial.e0 - diffusion * curvature;
}

}  // namespace fracfk
