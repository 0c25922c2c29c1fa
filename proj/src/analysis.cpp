#include "bec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "bec/error.hpp"
#include "bec/parallel.hpp"

namespace bec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// N_max large enough that N > 0.9·N_max is many standard deviations above
// the expected particle number; certification still checks the tail.
int initial_n_max(double expected, double spread) {
  const double n = (expected + 9.0 * spread + 32.0) / 0.9;
  return static_cast<int>(std::min(n, 1e9));
}

double interacting_spread(double volume, double beta, double lambda) {
  return std::sqrt(volume / (2.0 * beta * lambda)) + 1.0;
}

struct Bracket {
  double lo;
  double hi;
};

// Bisection on an increasing function f(μ) − target with f(lo) < target ≤ f(hi).
template <class F>
double bisect_density(F density, Bracket b, double target, double residual) {
  double lo = b.lo, hi = b.hi;
  double best = hi, best_gap = std::abs(density(hi) - target);
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double r = density(mid);
    const double gap = std::abs(r - target);
    if (gap < best_gap) {
      best = mid;
      best_gap = gap;
    }
    if (gap <= residual * 1e-3) break;
    (r < target ? lo : hi) = mid;
  }
  return best;
}

StatePoint make_state(const BoxSpec& box, const ModelParams& params) {
  StatePoint s;
  s.box = box;
  s.params = params;
  s.shells = enumerate_shells(box);
  return s;
}

void finish_state(StatePoint& s) {
  s.density = s.moments.mean_n / s.volume();
}

EnsembleMoments certified_moments(const std::vector<EnergyLevel>& levels, const ModelParams& p, double volume,
                                  int& n_max, const SolveOptions& options) {
  while (true) {
    Truncation t;
    t.n_max = n_max;
    t.mu_cap = p.mu;
    PartitionEngine engine(levels, p.variant, p.lambda, p.beta, volume, t);
    const GrandSum gs = engine.grand_sum(p.mu);
    if (gs.tail_mass < options.tail_tolerance && engine.weights_adequate()) {
      MomentRequest req = options.request;
      req.tail_tolerance = options.tail_tolerance;
      return engine.moments(p.mu, req);
    }
    if (n_max > options.max_n_max / 2)
      throw SizingError("truncation not certified below N_max = " + std::to_string(options.max_n_max) +
                        " (tail mass " + sci(gs.tail_mass) + ")");
    n_max *= 2;
  }
}

// Closed-form free gas: f(μ) = Σ g/(e^{β(ε−μ)}−1) at μ < 0.
double free_mean(const std::vector<EnergyLevel>& levels, double beta, double mu) {
  double n = 0.0;
  for (const auto& l : levels) n += static_cast<double>(l.degeneracy) / std::expm1(beta * (l.energy - mu));
  return n;
}

// Solves the closed-form free density in the variable u = −μ on a log scale.
double solve_free_closed_form(const std::vector<EnergyLevel>& levels, double beta, double target) {
  auto f = [&](double u) { return free_mean(levels, beta, -u); };
  double u_hi = 1.0 / beta;
  while (f(u_hi) > target) {
    u_hi *= 2.0;
    if (u_hi > 1e12) throw TruncationError("free-gas chemical potential bracket growth failed");
  }
  double u_lo = u_hi;
  while (f(u_lo) <= target) {
    u_lo /= 2.0;
    if (u_lo < 1e-300) throw TruncationError("free-gas chemical potential bracket growth failed");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(u_lo * u_hi);
    if (mid <= u_lo || mid >= u_hi) break;
    (f(mid) > target ? u_lo : u_hi) = mid;
    if (u_hi / u_lo - 1.0 < 1e-15) break;
  }
  const double a = f(u_lo) - target, b = target - f(u_hi);
  return -(std::abs(a) < std::abs(b) ? u_lo : u_hi);
}

// Infinite-volume mean-field μ at density ρ: 2λρ + α with ρ(α) = min(ρ, ρ_c).
double limit_mu_for_density(const BoseGas& gas, double lambda, double rho) {
  if (gas.dimension >= 3 && rho >= critical_density(gas)) return 2.0 * lambda * rho;
  double lo = -1.0 / gas.beta, hi = 0.0;
  while (bose_density(gas, lo) > rho) lo *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::abs(lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    (bose_density(gas, mid) > rho ? hi : lo) = mid;
  }
  return 2.0 * lambda * rho + lo;
}

}  // namespace

int CutoffRule::lattice_cutoff(double side_length, double beta, double mass) const {
  if (!(beta_cutoff > 0.0)) throw DomainError("cutoff rule needs beta_cutoff > 0");
  const double k_cut = std::sqrt(2.0 * mass * beta_cutoff / beta);
  const int n = static_cast<int>(std::ceil(k_cut * side_length / (2.0 * std::numbers::pi)));
  return std::max(n, min_cutoff);
}

double StatePoint::band_density(double delta, BandMode mode) const {
  double sum = 0.0;
  for (auto i : band_indices(shells, delta, mode))
    sum += static_cast<double>(shells[i].degeneracy) * moments.shells[i].mean;
  return sum / volume();
}

double StatePoint::ground_density() const {
  for (std::size_t i = 0; i < shells.size(); ++i)
    if (shells[i].norm2 == 0) return moments.shells[i].mean / volume();
  return 0.0;
}

StatePoint evaluate_at_mu(const BoxSpec& box, const ModelParams& params, const SolveOptions& options) {
  params.validate();
  StatePoint s = make_state(box, params);
  const auto levels = s.levels();
  const double volume = s.volume();
  if (params.variant == Variant::Free && options.free_closed_form) {
    s.moments = free_ensemble(levels, params.beta, params.mu, volume, options.request);
  } else {
    double expected, spread;
    if (params.variant == Variant::Free) {
      const auto cf = free_ensemble(levels, params.beta, params.mu, volume);
      expected = cf.mean_n;
      spread = std::sqrt(cf.var_n);
    } else {
      const BoseGas gas{params.beta, box.mass, box.dimension};
      expected = std::max(mf_pressure(gas, params.mu, params.lambda).density, 0.0) * volume;
      spread = interacting_spread(volume, params.beta, params.lambda);
    }
    s.n_max = std::min(initial_n_max(expected, spread), options.max_n_max);
    s.moments = certified_moments(levels, params, volume, s.n_max, options);
  }
  finish_state(s);
  return s;
}

StatePoint solve_mu(const BoxSpec& box, Variant variant, double lambda, double beta, double rho,
                    const SolveOptions& options) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw DomainError("target density must be positive");
  ModelParams params{variant, variant == Variant::Free ? 0.0 : lambda, beta, 0.0};
  StatePoint s = make_state(box, params);
  const auto levels = s.levels();
  const double volume = s.volume();
  const double target = rho * volume;

  if (variant == Variant::Free) {
    const double mu_cf = solve_free_closed_form(levels, beta, target);
    if (options.free_closed_form) {
      s.params.mu = mu_cf;
      s.moments = free_ensemble(levels, beta, mu_cf, volume, options.request);
      finish_state(s);
      s.residual = std::abs(s.density - rho);
      if (s.residual > options.density_residual)
        throw TruncationError("free-gas density residual " + sci(s.residual) + " above tolerance");
      return s;
    }
  }

  double hi;
  double spread;
  if (variant == Variant::Free) {
    const double mu_cf = solve_free_closed_form(levels, beta, target);
    hi = 0.5 * mu_cf;
    const auto cf = free_ensemble(levels, beta, hi, volume);
    spread = std::sqrt(cf.var_n);
    s.n_max = initial_n_max(cf.mean_n, spread);
  } else {
    params.validate();
    hi = limit_mu_for_density(BoseGas{beta, box.mass, box.dimension}, lambda, rho) + 0.25 / beta;
    spread = interacting_spread(volume, beta, lambda);
    s.n_max = initial_n_max(target, spread);
  }

  s.n_max = std::min(s.n_max, options.max_n_max);
  for (int attempt = 0;; ++attempt) {
    if (attempt > 40) throw TruncationError("chemical potential bracket growth failed");
    Truncation t;
    t.n_max = s.n_max;
    t.mu_cap = hi;
    PartitionEngine engine(levels, variant, params.lambda, beta, volume, t);
    auto density = [&](double mu) { return engine.grand_sum(mu).mean_n; };
    const GrandSum top = engine.grand_sum(hi);
    if (top.mean_n < target) {
      if (top.tail_mass >= options.tail_tolerance) {
        // The truncation, not μ, limits the density.
        if (s.n_max > options.max_n_max / 2)
          throw SizingError("truncation not certified below N_max = " + std::to_string(options.max_n_max));
        s.n_max *= 2;
      } else if (variant == Variant::Free) {
        hi *= 0.5;
        const auto cf = free_ensemble(levels, beta, hi, volume);
        s.n_max = std::min(std::max(s.n_max, initial_n_max(cf.mean_n, std::sqrt(cf.var_n))), options.max_n_max);
      } else {
        hi += std::ldexp(0.5 / beta, attempt);
      }
      continue;
    }
    double lo = hi - 1.0 / beta;
    for (int i = 0; density(lo) >= target; ++i) {
      lo -= std::ldexp(1.0 / beta, i);
      if (i > 60) throw TruncationError("chemical potential bracket growth failed");
    }
    const double mu = bisect_density(density, {lo, hi}, target, options.density_residual * volume);
    const GrandSum gs = engine.grand_sum(mu);
    if (!(gs.tail_mass < options.tail_tolerance) || !engine.weights_adequate()) {
      if (s.n_max > options.max_n_max / 2)
        throw SizingError("truncation not certified below N_max = " + std::to_string(options.max_n_max));
      s.n_max *= 2;
      continue;
    }
    if (!(gs.var_n > 0.0)) throw TruncationError("particle-number variance vanished; density not invertible");
    s.params.mu = mu;
    MomentRequest req = options.request;
    req.tail_tolerance = options.tail_tolerance;
    s.moments = engine.moments(mu, req);
    break;
  }
  finish_state(s);
  s.residual = std::abs(s.density - rho);
  if (s.residual > options.density_residual)
    throw TruncationError("density residual " + sci(s.residual) + " above tolerance");
  return s;
}

double mean_field_log_z_recursion(std::span<const EnergyLevel> levels, double lambda, double beta, double mu,
                                  double volume, int n_max) {
  if (n_max < 0) throw DomainError("N_max must be >= 0");
  // ln C(j) for j = 1..N_max.
  std::vector<double> log_c(static_cast<std::size_t>(n_max) + 1, -kInf);
  for (int j = 1; j <= n_max; ++j) {
    double acc = -kInf;
    for (const auto& l : levels)
      acc = log_add(acc, std::log(static_cast<double>(l.degeneracy)) - j * beta * l.energy);
    log_c[j] = acc;
  }
  std::vector<double> log_q(static_cast<std::size_t>(n_max) + 1, -kInf);
  log_q[0] = 0.0;
  for (int n = 1; n <= n_max; ++n) {
    double top = -kInf;
    for (int j = 1; j <= n; ++j) top = std::max(top, log_c[j] + log_q[n - j]);
    long double sum = 0.0L;
    for (int j = 1; j <= n; ++j) sum += std::exp(static_cast<long double>(log_c[j] + log_q[n - j] - top));
    log_q[n] = top + static_cast<double>(std::log(sum)) - std::log(static_cast<double>(n));
  }
  double top = -kInf;
  std::vector<double> terms(log_q.size());
  for (int n = 0; n <= n_max; ++n) {
    terms[n] = log_q[n] - beta * (lambda * double(n) * n / volume - mu * n);
    top = std::max(top, terms[n]);
  }
  long double z = 0.0L;
  for (double t : terms) z += std::exp(static_cast<long double>(t - top));
  return top + static_cast<double>(std::log(z));
}

// ---------------------------------------------------------------------------

std::string to_string(Condensation c) {
  switch (c) {
    case Condensation::None:
      return "none";
    case Condensation::GroundState:
      return "ground-state";
    case Condensation::Generalized:
      return "generalized";
    case Condensation::NonExtensive:
      return "non-extensive";
  }
  return "unknown";
}

double fitted_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("exponent fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ScalingReport scaling_sweep(const SweepConfig& config) {
  if (config.side_lengths.size() < 2) throw DomainError("scaling sweep needs at least two volumes");
  for (std::size_t i = 1; i < config.side_lengths.size(); ++i)
    if (!(config.side_lengths[i] > config.side_lengths[i - 1])) throw DomainError("side lengths must increase");
  if (config.deltas.empty()) throw DomainError("scaling sweep needs at least one delta");
  for (double d : config.deltas)
    if (!(d > 0.0)) throw DomainError("band widths must be positive");

  ScalingReport report;
  report.config = config;
  report.rows.resize(config.side_lengths.size());
  SolveOptions solve = config.solve;
  solve.request.total_cross = true;
  parallel_for(config.side_lengths.size(), config.threads, [&](std::size_t i) {
    BoxSpec box;
    box.dimension = config.dimension;
    box.side_length = config.side_lengths[i];
    box.mass = config.mass;
    box.cutoff = config.cutoff.lattice_cutoff(box.side_length, config.beta, config.mass);
    const StatePoint s = solve_mu(box, config.variant, config.lambda, config.beta, config.rho, solve);
    SweepRow row;
    const double v = s.volume();
    row.side_length = box.side_length;
    row.volume = v;
    row.lattice_cutoff = box.cutoff;
    row.n_max = s.n_max;
    row.mu = s.params.mu;
    row.density = s.density;
    row.ground_density = s.ground_density();
    row.tail_mass = s.moments.tail_mass;
    for (std::size_t k = 0; k < s.shells.size(); ++k) {
      row.max_mode_density = std::max(row.max_mode_density, s.moments.shells[k].mean / v);
      row.square_sum += static_cast<double>(s.shells[k].degeneracy) * s.moments.shells[k].second;
      if (s.shells[k].norm2 == 0) row.total_cross_ground = s.moments.total_cross[k] / (v * v);
    }
    row.square_sum /= v * v;
    for (double d : config.deltas) row.band_density.push_back(s.band_density(d, config.band_mode));
    report.rows[i] = std::move(row);
  });

  const auto it = std::min_element(config.deltas.begin(), config.deltas.end());
  const std::size_t dmin = static_cast<std::size_t>(it - config.deltas.begin());
  report.delta_min = *it;
  const BoseGas gas{config.beta, config.mass, config.dimension};
  report.critical_density = config.dimension >= 3 ? critical_density(gas) : kInf;
  if (config.dimension >= 3) {
    const double k_edge = config.band_mode == BandMode::KNorm
                              ? report.delta_min
                              : std::sqrt(2.0 * config.mass * report.delta_min);
    report.normal_band_bound = band_density(gas, 0.0, k_edge, 0.0);
  } else {
    report.normal_band_bound = kInf;
  }

  std::vector<double> volumes, ground, excess;
  for (const auto& r : report.rows) {
    volumes.push_back(r.volume);
    ground.push_back(r.ground_density);
    excess.push_back(r.band_density[dmin] - report.normal_band_bound);
  }
  report.ground_exponent = fitted_exponent(volumes, ground);
  report.band_exponent = fitted_exponent(volumes, excess);
  report.band_excess_last = excess.back();
  report.ground_decreasing = true;
  for (std::size_t i = 1; i < ground.size(); ++i)
    if (!(ground[i] < ground[i - 1])) report.ground_decreasing = false;
  report.classification = classify(report);
  return report;
}

// Finite-volume stand-ins for the limit definitions:
//   ground-state   n₀ at the largest V above θ and its fitted exponent above the cut;
//   generalized    the band density at δ_min minus the largest normal-fluid share of
//                  that band stays above θ with exponent above the cut;
//   non-extensive  generalized, with n₀ strictly decreasing and exponent below the cut.
Condensation classify(const ScalingReport& report) {
  const auto& opt = report.config.classifier;
  if (report.rows.empty()) return Condensation::None;
  const double n0_last = report.rows.back().ground_density;
  const bool ground = n0_last > opt.density_floor && report.ground_exponent > opt.exponent_cut;
  if (ground) return Condensation::GroundState;
  const bool generalized = report.band_excess_last > opt.density_floor && std::isfinite(report.band_exponent) &&
                           report.band_exponent > opt.exponent_cut;
  if (!generalized) return Condensation::None;
  if (report.ground_decreasing && report.ground_exponent < opt.exponent_cut) return Condensation::NonExtensive;
  return Condensation::Generalized;
}

}  // namespace bec
