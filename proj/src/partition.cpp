#include "bec/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "bec/error.hpp"

namespace bec {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum(Real mantissa_sum, double log_scale) {
  if (!(mantissa_sum > 0)) return kNegInf;
  return static_cast<double>(std::log(mantissa_sum)) + log_scale;
}

// out[a] = Σ_n p[n]·b[a+n] for a = 0..b.size()−1.
RestrictedPartition correlate(const RestrictedPartition& b, const RestrictedPartition& p) {
  const auto& bv = b.mantissa();
  const auto& pv = p.mantissa();
  const std::size_t len = bv.size();
  std::vector<Real> out(len, 0.0L);
  for (std::size_t a = 0; a < len; ++a) {
    const std::size_t top = std::min(pv.size(), len - a);
    Real acc = 0.0L;
    for (std::size_t n = 0; n < top; ++n) acc += pv[n] * bv[a + n];
    out[a] = acc;
  }
  RestrictedPartition r(std::move(out), b.log_scale() + p.log_scale());
  r.renormalize();
  return r;
}

}  // namespace

std::string to_string(Variant v) {
  switch (v) {
    case Variant::Free:
      return "free";
    case Variant::MeanField:
      return "mean-field";
    case Variant::NonExtensive:
      return "non-extensive";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& name) {
  if (name == "free") return Variant::Free;
  if (name == "mean-field") return Variant::MeanField;
  if (name == "non-extensive") return Variant::NonExtensive;
  throw DomainError("unknown model variant '" + name + "'");
}

void ModelParams::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw DomainError("beta must be positive");
  if (!std::isfinite(mu)) throw DomainError("mu must be finite");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("lambda must be >= 0");
  if (variant == Variant::Free) {
    if (!(mu < 0.0)) throw DomainError("free gas requires mu < 0");
  } else if (!(lambda > 0.0)) {
    throw DomainError(to_string(variant) + " model requires lambda > 0");
  }
}

std::vector<EnergyLevel> levels_of(std::span<const ModeShell> shells) {
  std::vector<EnergyLevel> out;
  out.reserve(shells.size());
  for (const auto& s : shells) out.push_back({s.energy, s.degeneracy});
  return out;
}

// ---------------------------------------------------------------------------
// RestrictedPartition

RestrictedPartition::RestrictedPartition(std::vector<Real> mantissa, double log_scale)
    : q_(std::move(mantissa)), log_scale_(log_scale) {
  if (q_.empty()) q_.push_back(0.0L);
}

RestrictedPartition RestrictedPartition::from_log_values(std::span<const double> log_values) {
  double top = kNegInf;
  for (double v : log_values) top = std::max(top, v);
  std::vector<Real> q(log_values.size(), 0.0L);
  if (top == kNegInf) return RestrictedPartition(std::move(q), 0.0);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::exp(static_cast<Real>(log_values[i]) - static_cast<Real>(top));
  RestrictedPartition r(std::move(q), top);
  r.renormalize();
  return r;
}

double RestrictedPartition::log_value(std::size_t n) const {
  if (n >= q_.size() || !(q_[n] > 0)) return kNegInf;
  return static_cast<double>(std::log(q_[n])) + log_scale_;
}

double RestrictedPartition::value(std::size_t n) const {
  const double lv = log_value(n);
  return lv == kNegInf ? 0.0 : std::exp(lv);
}

void RestrictedPartition::renormalize() {
  Real top = 0.0L;
  for (Real v : q_) top = std::max(top, v);
  if (!(top > 0)) return;
  int e = 0;
  std::frexp(top, &e);
  if (e == 0) return;
  for (Real& v : q_) v = std::ldexp(v, -e);
  log_scale_ += e * std::numbers::ln2;
}

void RestrictedPartition::truncate(int max_degree) {
  if (max_degree < 0) max_degree = 0;
  if (static_cast<std::size_t>(max_degree) + 1 < q_.size()) q_.resize(static_cast<std::size_t>(max_degree) + 1);
}

RestrictedPartition convolve(const RestrictedPartition& p, const RestrictedPartition& q, int n_max) {
  const auto& a = p.mantissa();
  const auto& b = q.mantissa();
  const std::size_t len = std::min(a.size() + b.size() - 1, static_cast<std::size_t>(n_max) + 1);
  std::vector<Real> out(len, 0.0L);
  for (std::size_t i = 0; i < std::min(a.size(), len); ++i) {
    const Real ai = a[i];
    if (ai == 0) continue;
    const std::size_t top = std::min(b.size(), len - i);
    Real* dst = out.data() + i;
    for (std::size_t j = 0; j < top; ++j) dst[j] += ai * b[j];
  }
  RestrictedPartition r(std::move(out), p.log_scale() + q.log_scale());
  r.renormalize();
  return r;
}

ModeWeights mode_weights(double energy, const ModelParams& params, double volume, int n_cap) {
  if (n_cap < 1) throw DomainError("mode weight cap must be >= 1");
  if (!(volume > 0.0)) throw DomainError("volume must be positive");
  const double quad = params.variant == Variant::NonExtensive ? params.lambda / (2.0 * volume) : 0.0;
  std::vector<double> logs(static_cast<std::size_t>(n_cap) + 1);
  for (int n = 0; n <= n_cap; ++n) logs[n] = -params.beta * (energy * n + quad * double(n) * n);
  ModeWeights w;
  w.weights = RestrictedPartition::from_log_values(logs);
  const double top = *std::max_element(logs.begin(), logs.end());
  w.adequate = logs.back() - top <= std::log(1e-18);
  return w;
}

RestrictedPartition shell_power(const RestrictedPartition& weights, std::int64_t g, int n_max) {
  if (g < 0) throw DomainError("shell degeneracy must be >= 0");
  RestrictedPartition result;
  RestrictedPartition base = weights;
  base.truncate(n_max);
  while (g > 0) {
    if (g & 1) result = convolve(result, base, n_max);
    g >>= 1;
    if (g > 0) base = convolve(base, base, n_max);
  }
  return result;
}

double log_global_factor(const ModelParams& params, double volume, double n) {
  if (params.variant == Variant::Free) return params.beta * params.mu * n;
  return -params.beta * (params.lambda * n * n / volume - params.mu * n);
}

GrandSum grand_sum(const RestrictedPartition& q, const ModelParams& params, double volume) {
  const std::size_t len = q.size();
  std::vector<double> lw(len, kNegInf);
  double top = kNegInf;
  for (std::size_t n = 0; n < len; ++n) {
    const double lq = q.log_value(n);
    if (lq == kNegInf) continue;
    lw[n] = lq + log_global_factor(params, volume, static_cast<double>(n));
    top = std::max(top, lw[n]);
  }
  GrandSum out;
  if (top == kNegInf) throw DomainError("restricted partition has no weight");
  const std::size_t n_max = len - 1;
  Real z = 0, first = 0, tail = 0;
  std::vector<Real> w(len, 0.0L);
  for (std::size_t n = 0; n < len; ++n) {
    if (lw[n] == kNegInf) continue;
    w[n] = std::exp(static_cast<Real>(lw[n] - top));
    z += w[n];
    first += w[n] * static_cast<Real>(n);
    if (n >= 1 && 10 * n > 9 * n_max) tail += w[n];
  }
  const Real mean = first / z;
  Real second = 0;
  for (std::size_t n = 0; n < len; ++n) {
    const Real d = static_cast<Real>(n) - mean;
    second += w[n] * d * d;
  }
  out.log_z = top + static_cast<double>(std::log(z));
  out.pressure = out.log_z / (params.beta * volume);
  out.mean_n = static_cast<double>(mean);
  out.var_n = static_cast<double>(second / z);
  out.tail_mass = static_cast<double>(tail / z);
  return out;
}

// ---------------------------------------------------------------------------
// EnsembleMoments

double EnsembleMoments::cross(std::size_t j, std::size_t k) const {
  for (const auto& p : pairs) {
    if ((p.j == j && p.k == k) || (p.j == k && p.k == j)) return p.value;
  }
  throw DomainError("cross moment <N_j N_k> was not computed for shells " + std::to_string(j) + ", " +
                    std::to_string(k));
}

double EnsembleMoments::occupation_sum(std::span<const EnergyLevel> levels) const {
  double s = 0.0;
  for (std::size_t i = 0; i < levels.size() && i < shells.size(); ++i)
    s += static_cast<double>(levels[i].degeneracy) * shells[i].mean;
  return s;
}

// ---------------------------------------------------------------------------
// PartitionEngine

PartitionEngine::PartitionEngine(std::vector<EnergyLevel> levels, Variant variant, double lambda, double beta,
                                 double volume, Truncation truncation)
    : levels_(std::move(levels)),
      variant_(variant),
      lambda_(variant == Variant::Free ? 0.0 : lambda),
      beta_(beta),
      volume_(volume),
      trunc_(truncation) {
  if (!(beta_ > 0.0)) throw DomainError("beta must be positive");
  if (!(volume_ > 0.0)) throw DomainError("volume must be positive");
  if (variant_ != Variant::Free && !(lambda_ > 0.0)) throw DomainError("interacting variants require lambda > 0");
  if (trunc_.n_max < 0) throw DomainError("N_max must be >= 0");
  if (trunc_.mode_cap && *trunc_.mode_cap < 1) throw DomainError("mode cap must be >= 1");
  if (levels_.empty()) throw DomainError("engine needs at least one level");
  if (!trunc_.mode_cap && variant_ == Variant::Free) {
    double e_min = std::numeric_limits<double>::infinity();
    for (const auto& l : levels_) e_min = std::min(e_min, l.energy);
    if (!(trunc_.mu_cap < e_min))
      throw TruncationError("free-gas weights do not decay for mu >= lowest level energy");
  }

  factors_.reserve(levels_.size());
  for (const auto& level : levels_) {
    if (level.degeneracy < 1) throw DomainError("level degeneracy must be >= 1");
    Factor f;
    f.degeneracy = level.degeneracy;
    f.single = single_mode(level.energy);
    if (trunc_.mode_cap) {
      const auto& m = f.single.mantissa();
      Real top = 0;
      for (Real v : m) top = std::max(top, v);
      if (!(m.back() <= top * static_cast<Real>(trunc_.weight_floor))) adequate_ = false;
    }
    f.rest = trimmed_power(f.single, level.energy, level.degeneracy - 1);
    f.full = trimmed_power(f.single, level.energy, level.degeneracy);
    factors_.push_back(std::move(f));
  }
  checkpoint_stride_ = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(factors_.size())))));
  checkpoints_ = forward_checkpoints(factors_, &q_);
}

ModelParams PartitionEngine::params(double mu) const {
  ModelParams p;
  p.variant = variant_;
  p.lambda = lambda_;
  p.beta = beta_;
  p.mu = mu;
  return p;
}

double PartitionEngine::log_mode_weight(double energy, double n) const {
  const double quad = variant_ == Variant::NonExtensive ? lambda_ / (2.0 * volume_) : 0.0;
  return -beta_ * (energy * n + quad * n * n);
}

// Upper bound on ln[G(M+n)/G(M)] over M ≥ 0 for μ ≤ mu_cap.
double PartitionEngine::log_tilt(double n) const {
  if (variant_ == Variant::Free) return beta_ * trunc_.mu_cap * n;
  return beta_ * (trunc_.mu_cap * n - lambda_ * n * n / volume_);
}

RestrictedPartition PartitionEngine::single_mode(double energy) const {
  std::vector<double> logs;
  if (trunc_.mode_cap) {
    const int cap = std::min(*trunc_.mode_cap, std::max(trunc_.n_max, 0));
    for (int n = 0; n <= cap; ++n) logs.push_back(log_mode_weight(energy, n));
    return RestrictedPartition::from_log_values(logs);
  }
  const int cap = power_cap(energy, 1);
  for (int n = 0; n <= cap; ++n) logs.push_back(log_mode_weight(energy, n));
  return RestrictedPartition::from_log_values(logs);
}

// Smallest n past the peak of the tilted bound ψ(n) = ln C(g+n−1, n) − βεn
// − βλn²/(2Vg) + tilt(n) where ψ < ln(floor). The bound dominates the shell
// polynomial (Σn_i² ≥ n²/g), and ψ is concave, so everything beyond the cap
// is below the floor relative to the empty shell.
int PartitionEngine::power_cap(double energy, std::int64_t g) const {
  if (trunc_.mode_cap) {
    const std::int64_t cap = std::min<std::int64_t>(g * *trunc_.mode_cap, trunc_.n_max);
    return static_cast<int>(cap);
  }
  const double floor = std::log(trunc_.weight_floor);
  const double gd = static_cast<double>(g);
  const double self = variant_ == Variant::NonExtensive ? lambda_ / (2.0 * volume_ * gd) : 0.0;
  double prev = 0.0;
  for (int n = 1; n <= trunc_.n_max; ++n) {
    const double nd = n;
    const double psi = std::lgamma(gd + nd) - std::lgamma(nd + 1.0) - std::lgamma(gd) -
                       beta_ * (energy * nd + self * nd * nd) + log_tilt(nd);
    if (psi < prev && psi < floor) return n;
    prev = psi;
  }
  return trunc_.n_max;
}

RestrictedPartition PartitionEngine::trimmed_power(const RestrictedPartition& single, double energy,
                                                   std::int64_t g) const {
  if (g <= 0) return RestrictedPartition();
  return shell_power(single, g, power_cap(energy, g));
}

std::vector<RestrictedPartition> PartitionEngine::forward_checkpoints(std::span<const Factor> factors,
                                                                      RestrictedPartition* total) const {
  std::vector<RestrictedPartition> ckpt;
  RestrictedPartition cur;
  ckpt.push_back(cur);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    cur = convolve(cur, factors[i].full, trunc_.n_max);
    if ((i + 1) % checkpoint_stride_ == 0) ckpt.push_back(cur);
  }
  if (total) {
    *total = std::move(cur);
    // Pad to N_max so grand sums and terminals line up.
    if (total->size() < static_cast<std::size_t>(trunc_.n_max) + 1) {
      auto m = total->mantissa();
      m.resize(static_cast<std::size_t>(trunc_.n_max) + 1, 0.0L);
      *total = RestrictedPartition(std::move(m), total->log_scale());
    }
  }
  return ckpt;
}

int PartitionEngine::max_mode_cap() const {
  int cap = 0;
  for (const auto& f : factors_) cap = std::max(cap, f.single.max_degree());
  return cap;
}

GrandSum PartitionEngine::grand_sum(double mu) const {
  if (!trunc_.mode_cap && mu > trunc_.mu_cap + 1e-12 * std::max(1.0, std::abs(trunc_.mu_cap)))
    throw TruncationError("chemical potential exceeds the engine's certified mu_cap");
  return bec::grand_sum(q_, params(mu), volume_);
}

RestrictedPartition PartitionEngine::global_factor(double mu) const {
  const auto p = params(mu);
  std::vector<double> logs(static_cast<std::size_t>(trunc_.n_max) + 1);
  for (std::size_t n = 0; n < logs.size(); ++n) logs[n] = log_global_factor(p, volume_, static_cast<double>(n));
  return RestrictedPartition::from_log_values(logs);
}

// Forward products F_i (checkpointed) and backward sums
// B_i(a) = Σ_n P_i(n)·B_{i+1}(a+n) with B_{S+1} = terminal. The cavity of a
// single mode of shell i is H(n) = Σ_a (F_{i−1} * P_i^{g−1})(a)·B_{i+1}(a+n),
// i.e. the leave-one-out restricted partition paired with the shifted terminal.
PartitionEngine::CavitySums PartitionEngine::sweep(std::span<const Factor> factors,
                                                   const RestrictedPartition& terminal,
                                                   const std::vector<RestrictedPartition>* checkpoints) const {
  std::vector<RestrictedPartition> local;
  if (!checkpoints) {
    local = forward_checkpoints(factors, nullptr);
    checkpoints = &local;
  }
  const std::size_t count = factors.size();
  const std::size_t stride = checkpoint_stride_;
  const std::size_t n_max = static_cast<std::size_t>(trunc_.n_max);

  CavitySums out;
  out.log_sums.assign(count, {kNegInf, kNegInf, kNegInf});
  RestrictedPartition back = terminal;

  const std::size_t segments = (count + stride - 1) / stride;
  for (std::size_t seg = segments; seg-- > 0;) {
    const std::size_t start = seg * stride;
    const std::size_t end = std::min(count, start + stride);
    std::vector<RestrictedPartition> prefix;
    prefix.reserve(end - start);
    prefix.push_back((*checkpoints)[seg]);
    for (std::size_t i = start + 1; i < end; ++i)
      prefix.push_back(convolve(prefix.back(), factors[i - 1].full, trunc_.n_max));

    for (std::size_t i = end; i-- > start;) {
      const Factor& f = factors[i];
      const RestrictedPartition cavity = convolve(prefix[i - start], f.rest, trunc_.n_max);
      const auto& x = cavity.mantissa();
      const auto& b = back.mantissa();
      const auto& t = f.single.mantissa();
      Real s0 = 0, s1 = 0, s2 = 0;
      for (std::size_t n = 0; n < t.size() && n <= n_max; ++n) {
        if (t[n] == 0) continue;
        const std::size_t top = std::min(x.size(), b.size() - n);
        Real h = 0;
        for (std::size_t a = 0; a < top; ++a) h += x[a] * b[a + n];
        const Real w = t[n] * h;
        const Real nn = static_cast<Real>(n);
        s0 += w;
        s1 += nn * w;
        s2 += nn * nn * w;
      }
      const double scale = cavity.log_scale() + back.log_scale() + f.single.log_scale();
      out.log_sums[i] = {log_sum(s0, scale), log_sum(s1, scale), log_sum(s2, scale)};
      back = correlate(back, f.full);
    }
  }
  out.log_z = log_sum(back.mantissa()[0], back.log_scale());
  return out;
}

EnsembleMoments PartitionEngine::moments(double mu, const MomentRequest& request) const {
  for (const auto& [j, k] : request.pairs) {
    if (j >= factors_.size() || k >= factors_.size()) throw DomainError("cross moment shell index out of range");
    if (j == k) throw DomainError("cross moment with j == k requested; use the second moment <N_k^2>");
  }
  const GrandSum gs = grand_sum(mu);
  EnsembleMoments m;
  m.pressure = gs.pressure;
  m.log_z = gs.log_z;
  m.mean_n = gs.mean_n;
  m.var_n = gs.var_n;
  m.tail_mass = gs.tail_mass;
  m.valid = gs.tail_mass < request.tail_tolerance && adequate_;

  const RestrictedPartition terminal = global_factor(mu);
  const CavitySums main = sweep(factors_, terminal, &checkpoints_);
  m.shells.resize(factors_.size());
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const auto& ls = main.log_sums[i];
    m.shells[i].mean = ls[1] == kNegInf ? 0.0 : std::exp(ls[1] - ls[0]);
    m.shells[i].second = ls[2] == kNegInf ? 0.0 : std::exp(ls[2] - ls[0]);
  }

  if (request.total_cross) {
    auto tm = terminal.mantissa();
    for (std::size_t n = 0; n < tm.size(); ++n) tm[n] *= static_cast<Real>(n);
    RestrictedPartition weighted(std::move(tm), terminal.log_scale());
    weighted.renormalize();
    const CavitySums c = sweep(factors_, weighted, &checkpoints_);
    m.total_cross.resize(factors_.size());
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      const double l1 = c.log_sums[i][1];
      m.total_cross[i] = l1 == kNegInf ? 0.0 : std::exp(l1 - main.log_z);
    }
  }

  std::map<std::size_t, std::vector<std::size_t>> by_source;
  for (const auto& [j, k] : request.pairs) by_source[j].push_back(k);
  for (const auto& [j, targets] : by_source) {
    // Pull one mode of shell j into the terminal with an n-weight:
    // T(M) = Σ_n n·a_j(n)·G(M+n); the remaining g_j − 1 modes stay as a factor.
    std::vector<Factor> reduced;
    std::vector<std::ptrdiff_t> position(factors_.size(), -1);
    for (std::size_t i = 0; i < factors_.size(); ++i) {
      if (i != j) {
        position[i] = static_cast<std::ptrdiff_t>(reduced.size());
        reduced.push_back(factors_[i]);
        continue;
      }
      if (factors_[i].degeneracy < 2) continue;
      Factor f;
      f.degeneracy = factors_[i].degeneracy - 1;
      f.single = factors_[i].single;
      f.full = factors_[i].rest;
      f.rest = trimmed_power(f.single, levels_[i].energy, f.degeneracy - 1);
      position[i] = static_cast<std::ptrdiff_t>(reduced.size());
      reduced.push_back(std::move(f));
    }
    auto weights = factors_[j].single.mantissa();
    for (std::size_t n = 0; n < weights.size(); ++n) weights[n] *= static_cast<Real>(n);
    const RestrictedPartition source(std::move(weights), factors_[j].single.log_scale());
    const RestrictedPartition shifted = correlate(terminal, source);
    const CavitySums c = sweep(reduced, shifted, nullptr);
    for (std::size_t k : targets) {
      const double l1 = c.log_sums[static_cast<std::size_t>(position[k])][1];
      m.pairs.push_back({j, k, l1 == kNegInf ? 0.0 : std::exp(l1 - main.log_z)});
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

TruncationResult adaptive_truncation(std::span<const EnergyLevel> levels, const ModelParams& params, double volume,
                                     double tol, int start_n_max, int max_n_max) {
  params.validate();
  if (!(tol > 0.0 && tol <= 1e-6)) throw DomainError("truncation tolerance must lie in (0, 1e-6]");
  int n_max = std::max(start_n_max, 1);
  std::vector<EnergyLevel> lv(levels.begin(), levels.end());
  while (true) {
    Truncation t;
    t.n_max = n_max;
    t.mu_cap = params.mu;
    PartitionEngine engine(lv, params.variant, params.lambda, params.beta, volume, t);
    const GrandSum gs = engine.grand_sum(params.mu);
    if (gs.tail_mass < tol && engine.weights_adequate()) return {engine.max_mode_cap(), n_max, gs.tail_mass};
    if (n_max > max_n_max / 2)
      throw SizingError("truncation not certified below N_max = " + std::to_string(max_n_max));
    n_max *= 2;
  }
}

EnsembleMoments free_ensemble(std::span<const EnergyLevel> levels, double beta, double mu, double volume,
                              const MomentRequest& request) {
  EnsembleMoments m;
  double log_z = 0.0;
  m.shells.reserve(levels.size());
  for (const auto& l : levels) {
    const double x = beta * (l.energy - mu);
    if (!(x > 0.0)) throw DomainError("free gas requires mu below every level energy");
    const double g = static_cast<double>(l.degeneracy);
    log_z -= g * std::log(-std::expm1(-x));
    const double occ = 1.0 / std::expm1(x);
    m.shells.push_back({occ, occ * (2.0 * occ + 1.0)});
    m.mean_n += g * occ;
    m.var_n += g * occ * (occ + 1.0);
  }
  m.log_z = log_z;
  m.pressure = log_z / (beta * volume);
  m.tail_mass = 0.0;
  m.valid = true;
  m.total_cross.reserve(levels.size());
  for (const auto& s : m.shells) m.total_cross.push_back(m.mean_n * s.mean + s.mean * (s.mean + 1.0));
  for (const auto& [j, k] : request.pairs) {
    if (j == k) throw DomainError("cross moment with j == k requested; use the second moment <N_k^2>");
    m.pairs.push_back({j, k, m.shells.at(j).mean * m.shells.at(k).mean});
  }
  return m;
}

}  // namespace bec
