#pragma once

// Closed-form reference values: fractional oscillator and delta-well energies,
// the Beta function they need, and the CTRW fractal dimension.

#include <cmath>
#include <numbers>
#include <string>

#include "fracfk/errors.hpp"

namespace fracfk {

/// H = D (-laplacian)^(alpha/2) + q^2 |x|^gamma, level n.
template <typename Scalar = double>
struct OscillatorParams {
  Scalar alpha = 2;
  Scalar gamma = 2;
  Scalar diffusion = Scalar(0.5);
  Scalar q = Scalar(1);
  unsigned level = 0;
  Scalar hbar = 1;

  void validate() const {
    if (!(alpha > 0 && alpha <= 2)) throw DomainError("oscillator: alpha must lie in (0, 2]");
    if (!(gamma > 0)) throw DomainError("oscillator: gamma must be positive");
    if (!(diffusion > 0)) throw DomainError("oscillator: D must be positive");
    if (!(q > 0)) throw DomainError("oscillator: q must be positive");
    if (!(hbar > 0)) throw DomainError("oscillator: hbar must be positive");
  }
};

/// H = D (-laplacian)^(alpha/2) - g delta(x). A delta_well potential with
/// parameter g_c has coupling g = g_c / 2.
template <typename Scalar = double>
struct DeltaParams {
  Scalar alpha = 2;
  Scalar g = 1;
  Scalar diffusion = Scalar(0.5);
  Scalar hbar = 1;

  void validate() const {
    if (!(alpha > 1 && alpha <= 2)) throw DomainError("delta well: alpha must lie in (1, 2]");
    if (!(g > 0)) throw DomainError("delta well: g must be positive");
    if (!(diffusion > 0)) throw DomainError("delta well: D must be positive");
    if (!(hbar > 0)) throw DomainError("delta well: hbar must be positive");
  }
};

/// B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b) through log-gamma.
template <typename Scalar>
Scalar beta_function(Scalar a, Scalar b) {
  if (!(a > 0) || !(b > 0)) throw DomainError("beta_function: arguments must be positive");
  using std::exp;
  using std::lgamma;
  return exp(lgamma(a) + lgamma(b) - lgamma(a + b));
}

template <typename Scalar>
Scalar fho_energy(const OscillatorParams<Scalar>& p) {
  p.validate();
  using std::pow;
  const Scalar exponent = p.alpha * p.gamma / (p.alpha + p.gamma);
  const Scalar base = std::numbers::pi_v<Scalar> * p.hbar * p.gamma *
                      pow(p.diffusion, 1 / p.alpha) * pow(p.q, 2 / p.gamma) /
                      (2 * beta_function<Scalar>(1 / p.gamma, 1 / p.alpha + 1));
  return pow(base, exponent) * pow(Scalar(p.level) + Scalar(0.5), exponent);
}

/// q that makes fho_energy equal `energy`, other parameters fixed.
template <typename Scalar>
Scalar oscillator_q_for_energy(Scalar energy, OscillatorParams<Scalar> p) {
  if (!(energy > 0)) throw DomainError("oscillator energy must be positive");
  p.q = 1;
  const Scalar unit = fho_energy(p);
  // E scales as q^(2 alpha / (alpha + gamma)).
  using std::pow;
  return pow(energy / unit, (p.alpha + p.gamma) / (2 * p.alpha));
}

/// Bound-state energy (negative).
template <typename Scalar>
Scalar delta_energy(const DeltaParams<Scalar>& p) {
  p.validate();
  using std::pow;
  using std::sin;
  const Scalar csc = 1 / sin(std::numbers::pi_v<Scalar> / p.alpha);
  const Scalar base = p.g * csc / (p.alpha * p.hbar * pow(p.diffusion, 1 / p.alpha));
  return -pow(base, p.alpha / (p.alpha - 1));
}

/// Coupling g with delta_energy == energy (< 0), other parameters fixed.
template <typename Scalar>
Scalar delta_coupling_for_energy(Scalar energy, DeltaParams<Scalar> p) {
  if (!(energy < 0)) throw DomainError("bound-state energy must be negative");
  p.g = 1;
  p.validate();
  using std::pow;
  using std::sin;
  const Scalar csc = 1 / sin(std::numbers::pi_v<Scalar> / p.alpha);
  return pow(-energy, (p.alpha - 1) / p.alpha) * p.alpha * p.hbar *
         pow(p.diffusion, 1 / p.alpha) / csc;
}

/// 1 + beta (1 - 1/alpha).
template <typename Scalar>
Scalar ctrw_fractal_dimension(Scalar alpha, Scalar beta) {
  if (!(alpha > 0 && alpha <= 2)) throw DomainError("fractal dimension: alpha must lie in (0, 2]");
  if (!(beta > 0 && beta <= 1)) throw DomainError("fractal dimension: beta must lie in (0, 1]");
  return 1 + beta * (1 - 1 / alpha);
}

}  // namespace fracfk
