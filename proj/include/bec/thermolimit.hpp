#pragma once

#include <string>

namespace bec {

/// Ideal Bose gas in ℝ^d at inverse temperature β with particle mass m.
struct BoseGas {
  double beta = 1.0;
  double mass = 1.0;
  int dimension = 3;

  void validate() const;
  double thermal_wavelength() const;  // √(2πβ/m)
};

/// p(α) = β⁻¹ λ_T^{−d} g_{d/2+1}(e^{βα}), α ≤ 0.
double bose_pressure(const BoseGas& gas, double alpha);
/// ρ(α) = p'(α) = λ_T^{−d} g_{d/2}(e^{βα}), α ≤ 0; α = 0 needs d ≥ 3.
double bose_density(const BoseGas& gas, double alpha);
/// ρ_c = ρ(0); d ≥ 3.
double critical_density(const BoseGas& gas);

/// Same quantities by adaptive radial quadrature.
double bose_pressure_quadrature(const BoseGas& gas, double alpha);
double bose_density_quadrature(const BoseGas& gas, double alpha);

/// ∫_{k_lo ≤ |k| < k_hi} dk/(2π)^d (e^{β(|k|²/2m − α)} − 1)⁻¹ by quadrature.
/// Needs |k|²/2m > α on the whole range (k_hi may be +∞).
double band_density(const BoseGas& gas, double k_lo, double k_hi, double alpha);

struct MeanFieldLimit {
  double pressure = 0.0;    // p^MF(μ)
  double alpha_star = 0.0;  // minimizer, ≤ 0
  double density = 0.0;     // (μ − α*)/2λ
  bool condensed = false;   // μ ≥ 2λρ_c
};

/// p^MF(μ) = inf_{α≤0} p(α) + (μ−α)²/4λ.
MeanFieldLimit mf_pressure(const BoseGas& gas, double mu, double lambda);

/// The variational objective p(α) + (μ−α)²/4λ.
double mf_objective(const BoseGas& gas, double mu, double lambda, double alpha);

/// β_c with ρ_c(β_c) = ρ, closed form (m/2π)(ζ(d/2)/ρ)^{2/d}.
double critical_beta(double rho, double mass, int dimension);
/// β_c by bracketed bisection on the defining equation.
double critical_beta_bisection(double rho, double mass, int dimension);

struct LimitQuantities {
  double alpha = 0.0;
  double pressure = 0.0;
  double density = 0.0;
  double pressure_quadrature = 0.0;
  double density_quadrature = 0.0;
  double critical_density = 0.0;  // +∞ for d ≤ 2
  MeanFieldLimit mean_field;
  std::string pressure_method;
  std::string density_method;

  double route_discrepancy() const;  // max relative series/quadrature gap
};

LimitQuantities limit_quantities(const BoseGas& gas, double alpha, double mu, double lambda);

}  // namespace bec
