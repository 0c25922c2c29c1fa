#include "bec/thermolimit.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "bec/error.hpp"
#include "bec/polylog.hpp"

namespace bec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_alpha(double alpha) {
  if (!(alpha <= 0.0)) throw DomainError("free-gas quantities need alpha <= 0");
}

// S_d/(2π)^d · (2m/β)^{d/2}: maps ∫dk/(2π)^d f(βε_k) to ∫_0^∞ t^{d−1} f(t²) dt.
double radial_prefactor(const BoseGas& gas) {
  const double d = gas.dimension;
  const double surface = 2.0 * std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0);
  return surface / std::pow(2.0 * std::numbers::pi, d) * std::pow(2.0 * gas.mass / gas.beta, d / 2.0);
}

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 61>;

struct Piece {
  double value = 0.0;
  double error = 0.0;  // absolute
};

template <class F>
Piece kronrod(const F& f, double a, double b) {
  double relative = 0.0, l1 = 0.0;
  const double v = Kronrod::integrate(f, a, b, 0, 0.0, &relative, &l1);
  return {v, relative * l1};
}

// Bisection until the error estimate is below `abs_tol`. Halving that no
// longer shrinks the estimate means the round-off floor is reached.
template <class F>
double refine(const F& f, double a, double b, const Piece& whole, double abs_tol, int depth) {
  if (whole.error <= abs_tol || depth == 0) return whole.value;
  const double mid = 0.5 * (a + b);
  const Piece left = kronrod(f, a, mid);
  const Piece right = kronrod(f, mid, b);
  if (left.error + right.error > 0.75 * whole.error) return left.value + right.value;
  return refine(f, a, mid, left, abs_tol, depth - 1) + refine(f, mid, b, right, abs_tol, depth - 1);
}

// The tail [a, ∞) goes to Boost's own mapping.
template <class F>
double adaptive(const F& f, double a, double b, double abs_tol, int depth) {
  if (std::isinf(b)) {
    double error = 0.0;
    return Kronrod::integrate(f, a, b, 15, 1e-13, &error);
  }
  return refine(f, a, b, kronrod(f, a, b), abs_tol, depth);
}

// Radial integrals use breakpoints graded geometrically towards t = 0, where
// the Bose factor is sharply peaked for small |βα|, and then 1, 2, 4, 6, ∞.
// The absolute tolerance is 1e-15 of a coarse first pass.
template <class F>
double radial(const F& f, double a, double b) {
  std::vector<double> cuts{a};
  for (int j = 40; j >= 1; --j) cuts.push_back(std::ldexp(1.0, -j));
  for (double c : {1.0, 2.0, 4.0, 6.0}) cuts.push_back(c);
  cuts.push_back(b);
  std::vector<std::pair<double, double>> pieces;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const double lo = std::max(cuts[i - 1], a);
    const double hi = std::min(cuts[i], b);
    if (hi > lo && (pieces.empty() || lo >= pieces.back().second)) pieces.emplace_back(lo, hi);
  }
  double coarse = 0.0;
  for (const auto& [lo, hi] : pieces) coarse += std::abs(adaptive(f, lo, hi, 0.0, 0));
  const double abs_tol = 1e-15 * coarse;
  double total = 0.0;
  for (const auto& [lo, hi] : pieces) total += adaptive(f, lo, hi, abs_tol, 30);
  return total;
}

// −ln(1 − e^{−x}) for x > 0 without cancellation at either end.
double log_bose(double x) { return x > std::numbers::ln2 ? -std::log1p(-std::exp(-x)) : -std::log(-std::expm1(-x)); }

}  // namespace

void BoseGas::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("mass must be positive");
  if (dimension < 1) throw DomainError("dimension must be >= 1");
}

double BoseGas::thermal_wavelength() const { return std::sqrt(2.0 * std::numbers::pi * beta / mass); }

double bose_pressure(const BoseGas& gas, double alpha) {
  gas.validate();
  require_alpha(alpha);
  const double d = gas.dimension;
  return special::bose_function_exp(d / 2.0 + 1.0, -gas.beta * alpha) /
         (gas.beta * std::pow(gas.thermal_wavelength(), d));
}

double bose_density(const BoseGas& gas, double alpha) {
  gas.validate();
  require_alpha(alpha);
  const double d = gas.dimension;
  if (alpha == 0.0 && gas.dimension <= 2) throw DomainError("free-gas density diverges at alpha = 0 for d <= 2");
  return special::bose_function_exp(d / 2.0, -gas.beta * alpha) / std::pow(gas.thermal_wavelength(), d);
}

double critical_density(const BoseGas& gas) {
  if (gas.dimension <= 2) throw DomainError("critical density is infinite for d <= 2");
  return bose_density(gas, 0.0);
}

double bose_pressure_quadrature(const BoseGas& gas, double alpha) {
  gas.validate();
  require_alpha(alpha);
  const double ba = gas.beta * alpha;
  const int d = gas.dimension;
  auto f = [ba, d](double t) {
    const double x = t * t - ba;
    if (x == 0.0) return 0.0;
    return std::pow(t, d - 1) * log_bose(x);
  };
  return radial_prefactor(gas) * radial(f, 0.0, kInf) / gas.beta;
}

double bose_density_quadrature(const BoseGas& gas, double alpha) {
  gas.validate();
  require_alpha(alpha);
  if (alpha == 0.0 && gas.dimension <= 2) throw DomainError("free-gas density diverges at alpha = 0 for d <= 2");
  return band_density(gas, 0.0, kInf, alpha);
}

double band_density(const BoseGas& gas, double k_lo, double k_hi, double alpha) {
  gas.validate();
  if (!(k_lo >= 0.0) || !(k_hi >= k_lo)) throw DomainError("band needs 0 <= k_lo <= k_hi");
  const double scale = std::sqrt(gas.beta / (2.0 * gas.mass));  // t = k·√(β/2m)
  const double t_lo = k_lo * scale;
  const double t_hi = std::isinf(k_hi) ? kInf : k_hi * scale;
  const double ba = gas.beta * alpha;
  if (!(t_lo * t_lo > ba) && !(ba <= 0.0)) throw DomainError("band integrand is singular: alpha above band energy");
  const int d = gas.dimension;
  if (ba == 0.0 && t_lo == 0.0 && d <= 2) throw DomainError("band density diverges at k = 0 for d <= 2");
  auto f = [ba, d](double t) {
    const double x = t * t - ba;
    if (x == 0.0) return d == 3 ? 1.0 : (d > 3 ? 0.0 : kInf);
    return std::pow(t, d - 1) / std::expm1(x);
  };
  if (t_hi <= t_lo) return 0.0;
  return radial_prefactor(gas) * radial(f, t_lo, t_hi);
}

double mf_objective(const BoseGas& gas, double mu, double lambda, double alpha) {
  return bose_pressure(gas, alpha) + (mu - alpha) * (mu - alpha) / (4.0 * lambda);
}

MeanFieldLimit mf_pressure(const BoseGas& gas, double mu, double lambda) {
  gas.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("mean-field pressure needs lambda > 0");
  if (!std::isfinite(mu)) throw DomainError("mu must be finite");
  MeanFieldLimit out;
  const double rho_c = gas.dimension >= 3 ? critical_density(gas) : kInf;
  if (mu >= 2.0 * lambda * rho_c) {
    out.condensed = true;
    out.alpha_star = 0.0;
  } else {
    // f(α) = ρ(α) − (μ−α)/2λ is increasing with f(0) > 0.
    auto f = [&](double a) { return bose_density(gas, a) - (mu - a) / (2.0 * lambda); };
    double hi = 0.0;
    double lo = -1.0 / gas.beta;
    while (f(lo) >= 0.0) {
      hi = lo;
      lo *= 2.0;
      if (lo < -1e300) throw TruncationError("alpha* bracket growth failed");
    }
    if (gas.dimension <= 2 && hi == 0.0) hi = -std::numeric_limits<double>::min();
    for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (f(mid) < 0.0 ? lo : hi) = mid;
    }
    out.alpha_star = 0.5 * (lo + hi);
  }
  out.pressure = mf_objective(gas, mu, lambda, out.alpha_star);
  out.density = (mu - out.alpha_star) / (2.0 * lambda);
  return out;
}

double critical_beta(double rho, double mass, int dimension) {
  if (!(rho > 0.0)) throw DomainError("critical beta needs rho > 0");
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  if (dimension <= 2) throw DomainError("no finite critical beta for d <= 2");
  const double d = dimension;
  return mass / (2.0 * std::numbers::pi) * std::pow(special::zeta(d / 2.0) / rho, 2.0 / d);
}

double critical_beta_bisection(double rho, double mass, int dimension) {
  if (!(rho > 0.0)) throw DomainError("critical beta needs rho > 0");
  if (dimension <= 2) throw DomainError("no finite critical beta for d <= 2");
  // ρ_c(β) decreases in β.
  auto f = [&](double b) { return critical_density(BoseGas{b, mass, dimension}) - rho; };
  double lo = 1.0, hi = 1.0;
  while (f(lo) < 0.0) lo /= 2.0;
  while (f(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double LimitQuantities::route_discrepancy() const {
  auto rel = [](double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
  };
  return std::max(rel(pressure, pressure_quadrature), rel(density, density_quadrature));
}

LimitQuantities limit_quantities(const BoseGas& gas, double alpha, double mu, double lambda) {
  LimitQuantities q;
  q.alpha = alpha;
  q.pressure = bose_pressure(gas, alpha);
  q.pressure_quadrature = bose_pressure_quadrature(gas, alpha);
  const double x = -gas.beta * alpha;
  q.pressure_method = x >= std::numbers::ln2 ? "series" : "expansion";
  if (alpha == 0.0 && gas.dimension <= 2) {
    q.density = q.density_quadrature = kInf;
    q.density_method = "divergent";
  } else {
    q.density = bose_density(gas, alpha);
    q.density_quadrature = bose_density_quadrature(gas, alpha);
    q.density_method = q.pressure_method;
  }
  q.critical_density = gas.dimension >= 3 ? critical_density(gas) : kInf;
  q.mean_field = mf_pressure(gas, mu, lambda);
  return q;
}

}  // namespace bec
