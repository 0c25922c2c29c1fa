#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "bec/analysis.hpp"
#include "bec/error.hpp"
#include "bec/parallel.hpp"

namespace bec {

namespace {

const StatePoint& state_of(const AuditContext& ctx) {
  if (ctx.state == nullptr) throw DomainError("audit context without a state point");
  return *ctx.state;
}

std::string with_instance(const std::string& key, const std::string& instance) {
  return key.empty() ? instance : key + "," + instance;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

InequalityAudit skipped(std::string id, std::string key, std::string reason) {
  InequalityAudit a;
  a.id = std::move(id);
  a.key = std::move(key);
  a.status = AuditStatus::Skipped;
  a.reason = std::move(reason);
  return a;
}

void require_interacting(const StatePoint& s, const char* id) {
  if (s.params.variant != Variant::NonExtensive)
    throw DomainError(std::string(id) + " audit is stated for the non-extensive model");
}

}  // namespace

std::string to_string(AuditStatus s) {
  switch (s) {
    case AuditStatus::Pass:
      return "pass";
    case AuditStatus::Fail:
      return "fail";
    case AuditStatus::Skipped:
      return "skipped";
  }
  return "unknown";
}

bool audit_passes(double lhs, double rhs, double margin) {
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return margin >= -1e-9 * scale;
}

InequalityAudit make_audit(std::string id, std::string key, double lhs, double rhs, double margin) {
  InequalityAudit a;
  a.id = std::move(id);
  a.key = std::move(key);
  a.lhs = lhs;
  a.rhs = rhs;
  a.margin = margin;
  const bool finite = std::isfinite(lhs) && std::isfinite(rhs) && std::isfinite(margin);
  a.status = finite && audit_passes(lhs, rhs, margin) ? AuditStatus::Pass : AuditStatus::Fail;
  if (!finite) a.reason = "non-finite value";
  return a;
}

InequalityAudit audit_og(const AuditContext& ctx, double t, double alpha) {
  const StatePoint& s = state_of(ctx);
  const std::string key = with_instance(ctx.key, "t=" + fmt(t) + ",alpha=" + fmt(alpha));
  const double shift = t + alpha;
  double e_min = std::numeric_limits<double>::infinity();
  for (const auto& sh : s.shells) e_min = std::min(e_min, sh.energy);
  if (!(shift < e_min)) return skipped("og", key, "trial chemical potential not below the spectrum");

  const double beta = s.params.beta, mu = s.params.mu, v = s.volume();
  const double lambda = s.params.effective_lambda();
  double log_term = 0.0, linear = 0.0, first = 0.0, squares = 0.0, fluct = 0.0;
  for (const auto& sh : s.shells) {
    const double g = static_cast<double>(sh.degeneracy);
    const double x = beta * (sh.energy - shift);
    const double rho = 1.0 / std::expm1(x);
    log_term += g * std::log(-std::expm1(-x));
    linear += g * (mu - shift) * rho;
    first += g * rho;
    squares += g * rho * rho;
    fluct += g * rho * (2.0 * rho + 1.0);
  }
  double c_v = 0.0;
  switch (s.params.variant) {
    case Variant::NonExtensive:
      c_v = 1.5 * lambda / v * fluct;
      break;
    case Variant::MeanField:
      c_v = lambda / v * fluct;
      break;
    case Variant::Free:
      break;
  }
  const double rhs = -log_term / (beta * v) + linear / v - lambda / (v * v) * (first * first - squares) - c_v / v;
  const double lhs = s.moments.pressure;
  return make_audit("og", key, lhs, rhs, lhs - rhs);
}

InequalityAudit audit_in1(const AuditContext& ctx, std::size_t k) {
  const StatePoint& s = state_of(ctx);
  require_interacting(s, "in1");
  const std::string key = with_instance(ctx.key, "k=" + std::to_string(k));
  if (s.moments.total_cross.size() <= k) throw DomainError("in1 needs <N N_k>");
  const double beta = s.params.beta, mu = s.params.mu, lambda = s.params.lambda, v = s.volume();
  const double w = s.moments.shells[k].mean;
  const double lhs = beta * (-s.shells[k].energy * w + mu * w - 2.0 * lambda / v * s.moments.total_cross[k] -
                             lambda / v * s.moments.shells[k].second + 1.5 * lambda / v * w);
  const double rhs = w < 1e-300 ? 0.0 : w * std::log(w / (w + 1.0));
  return make_audit("in1", key, lhs, rhs, lhs - rhs);
}

InequalityAudit audit_in2(const AuditContext& ctx, std::size_t j, std::size_t k) {
  const StatePoint& s = state_of(ctx);
  require_interacting(s, "in2");
  const std::string key = with_instance(ctx.key, "j=" + std::to_string(j) + ",k=" + std::to_string(k));
  if (s.moments.total_cross.size() <= k) throw DomainError("in2 needs <N N_k>");
  const double mu = s.params.mu, lambda = s.params.lambda, v = s.volume();
  const double w = s.moments.shells[k].mean;
  const double lhs = mu * w - 2.0 * lambda / v * s.moments.total_cross[k];
  const double rhs = s.shells[j].energy * w + 4.0 * lambda / v * s.moments.cross(j, k) + 1.5 * lambda / v * w;
  const double margin = ctx.flip_in2 ? lhs - rhs : rhs - lhs;
  return make_audit("in2", key, lhs, rhs, margin);
}

InequalityAudit audit_in3(const AuditContext& ctx, std::size_t j, std::size_t k) {
  const StatePoint& s = state_of(ctx);
  require_interacting(s, "in3");
  const std::string key = with_instance(ctx.key, "j=" + std::to_string(j) + ",k=" + std::to_string(k));
  const double beta = s.params.beta, lambda = s.params.lambda, v = s.volume();
  const double w = s.moments.shells[k].mean;
  const double lhs = beta * (s.shells[k].energy - s.shells[j].energy - 3.0 * lambda / v) * w -
                     beta * 4.0 * lambda / v * s.moments.cross(j, k);
  const double rhs = w < 1e-300 ? 0.0 : w * std::log1p(1.0 / w);
  return make_audit("in3", key, lhs, rhs, rhs - lhs);
}

InequalityAudit audit_lemma4(const AuditContext& ctx, double delta, std::size_t j, std::size_t k) {
  const StatePoint& s = state_of(ctx);
  require_interacting(s, "lemma4");
  const std::string key =
      with_instance(ctx.key, "delta=" + fmt(delta) + ",j=" + std::to_string(j) + ",k=" + std::to_string(k));
  if (!(s.shells[j].k_norm <= 0.5 * delta)) throw DomainError("lemma4 needs |j| <= delta/2");
  if (!(s.shells[k].k_norm >= delta)) throw DomainError("lemma4 needs |k| >= delta");
  const double beta = s.params.beta, lambda = s.params.lambda, v = s.volume(), m = s.box.mass;
  const double shift = delta * delta / (8.0 * m) + 3.0 * lambda / v;
  const double c_k = beta * (s.shells[k].energy - shift);
  const double c_delta = beta * (delta * delta / (2.0 * m) - shift);
  if (!(c_delta > 0.0)) return skipped("lemma4", key, "band edge below the interaction shift");
  const double lhs = s.moments.shells[k].mean;
  const double rhs =
      1.0 / std::expm1(c_k) + beta * 4.0 * lambda / v * s.moments.cross(j, k) / (-std::expm1(-c_delta));
  return make_audit("lemma4", key, lhs, rhs, rhs - lhs);
}

InequalityAudit audit_jensen(const AuditContext& ctx, double p_mf_finite) {
  const StatePoint& s = state_of(ctx);
  require_interacting(s, "jensen");
  const double v = s.volume();
  double sq = 0.0;
  for (std::size_t k = 0; k < s.shells.size(); ++k)
    sq += static_cast<double>(s.shells[k].degeneracy) * s.moments.shells[k].second;
  const double lhs = s.params.lambda / (2.0 * v * v) * sq;
  const double rhs = p_mf_finite - s.moments.pressure;
  return make_audit("jensen", ctx.key, lhs, rhs, std::min(lhs, rhs - lhs));
}

InequalityAudit audit_pres_order(const AuditContext& ctx, double p_mf_finite) {
  const StatePoint& s = state_of(ctx);
  const double lhs = s.moments.pressure;
  return make_audit("pres-order", ctx.key, lhs, p_mf_finite, p_mf_finite - lhs);
}

InequalityAudit audit_pres_identity(const AuditContext& ctx, double p_mf_finite, double log_square_exponential) {
  const StatePoint& s = state_of(ctx);
  const double lhs = p_mf_finite - s.moments.pressure;
  const double rhs = log_square_exponential / (s.params.beta * s.volume());
  return make_audit("pres-identity", ctx.key, lhs, rhs, -std::abs(lhs - rhs));
}

DecaySeries decay_series(const std::vector<double>& volume, const std::vector<double>& value) {
  if (volume.size() != value.size() || volume.size() < 2) throw DomainError("decay series needs matching data");
  DecaySeries d;
  d.volume = volume;
  d.value = value;
  d.strictly_decreasing = true;
  for (std::size_t i = 1; i < value.size(); ++i)
    if (!(value[i] < value[i - 1])) d.strictly_decreasing = false;
  d.exponent = fitted_exponent(volume, value);
  return d;
}

std::vector<InequalityAudit> audit_lemma5(const std::vector<const StatePoint*>& states, std::size_t j,
                                          const std::string& key) {
  if (states.size() < 3) throw DomainError("lemma5 needs at least three volumes");
  std::vector<double> volume, cross, squares;
  for (const StatePoint* s : states) {
    const double v = s->volume();
    if (!volume.empty() && !(v > volume.back())) throw DomainError("lemma5 volumes must increase");
    if (s->moments.total_cross.size() <= j) throw DomainError("lemma5 needs <N N_j>");
    volume.push_back(v);
    cross.push_back(s->moments.total_cross[j] / (v * v));
    double sq = 0.0;
    for (std::size_t k = 0; k < s->shells.size(); ++k)
      sq += static_cast<double>(s->shells[k].degeneracy) * s->moments.shells[k].second;
    squares.push_back(sq / (v * v));
  }
  std::vector<InequalityAudit> out;
  auto add = [&](const char* what, const std::vector<double>& y) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < y.size(); ++i) margin = std::min(margin, y[i - 1] - y[i]);
    InequalityAudit a = make_audit("lemma5", with_instance(key, what), y.front(), y.back(), margin);
    // Strict decrease is required; the relative slack does not apply.
    if (!(margin > 0.0)) {
      a.status = AuditStatus::Fail;
      a.reason = "not strictly decreasing";
    }
    out.push_back(std::move(a));
  };
  add("cross_j", cross);
  add("square_sum", squares);
  return out;
}

std::size_t AuditReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(audits.begin(), audits.end(), [](const auto& a) { return a.status == AuditStatus::Fail; }));
}

std::size_t AuditReport::skipped() const {
  return static_cast<std::size_t>(
      std::count_if(audits.begin(), audits.end(), [](const auto& a) { return a.status == AuditStatus::Skipped; }));
}

namespace {

struct GridPoint {
  double lambda, beta, mu, side_length;
};

struct GridResult {
  StatePoint state;
  std::vector<InequalityAudit> audits;
};

// ln Z_MF − ln Z_NE on the same mode set, both through the DP.
double log_square_exponential(const StatePoint& s, int& n_max, const SolveOptions& options) {
  const auto levels = s.levels();
  while (true) {
    Truncation t;
    t.n_max = n_max;
    t.mu_cap = s.params.mu;
    PartitionEngine mf(levels, Variant::MeanField, s.params.lambda, s.params.beta, s.volume(), t);
    const GrandSum gs = mf.grand_sum(s.params.mu);
    if (gs.tail_mass < options.tail_tolerance && mf.weights_adequate()) return gs.log_z - s.moments.log_z;
    if (n_max > options.max_n_max / 2) throw SizingError("mean-field truncation not certified");
    n_max *= 2;
  }
}

GridResult audit_point(const GridPoint& p, const AuditGridConfig& config) {
  BoxSpec box;
  box.dimension = config.dimension;
  box.side_length = p.side_length;
  box.mass = config.mass;
  box.cutoff = config.cutoff.lattice_cutoff(p.side_length, p.beta, config.mass);

  SolveOptions solve = config.solve;
  solve.request.total_cross = true;
  const auto shells = enumerate_shells(box);
  const std::size_t j = config.lemma_j;
  if (j >= shells.size()) throw DomainError("lemma shell index out of range");
  solve.request.pairs.clear();
  for (std::size_t k = 0; k < shells.size(); ++k)
    if (k != j) solve.request.pairs.emplace_back(j, k);

  GridResult r;
  r.state = evaluate_at_mu(box, ModelParams{Variant::NonExtensive, p.lambda, p.beta, p.mu}, solve);
  const StatePoint& s = r.state;
  AuditContext ctx{&s,
                   "lambda=" + fmt(p.lambda) + ",beta=" + fmt(p.beta) + ",mu=" + fmt(p.mu) + ",L=" + fmt(p.side_length),
                   config.flip_in2};

  for (double t : config.og_shifts)
    for (double a : config.og_alphas) r.audits.push_back(audit_og(ctx, t, a));
  for (std::size_t k = 0; k < s.shells.size(); ++k) r.audits.push_back(audit_in1(ctx, k));
  for (std::size_t k = 0; k < s.shells.size(); ++k) {
    if (k == j) continue;
    r.audits.push_back(audit_in2(ctx, j, k));
    r.audits.push_back(audit_in3(ctx, j, k));
  }
  for (double delta : config.lemma4_deltas) {
    if (!(s.shells[j].k_norm <= 0.5 * delta)) continue;
    for (std::size_t k = 0; k < s.shells.size(); ++k)
      if (k != j && s.shells[k].k_norm >= delta) r.audits.push_back(audit_lemma4(ctx, delta, j, k));
  }

  int n_max = std::max(s.n_max, 16);
  const double lse = log_square_exponential(s, n_max, config.solve);
  const double p_mf = mean_field_log_z_recursion(s.levels(), p.lambda, p.beta, p.mu, s.volume(), n_max) /
                      (p.beta * s.volume());
  r.audits.push_back(audit_jensen(ctx, p_mf));
  r.audits.push_back(audit_pres_order(ctx, p_mf));
  r.audits.push_back(audit_pres_identity(ctx, p_mf, lse));
  return r;
}

}  // namespace

AuditReport run_audit_grid(const AuditGridConfig& config) {
  if (config.side_lengths.empty()) throw DomainError("audit grid needs side lengths");
  std::vector<GridPoint> points;
  for (double lambda : config.lambdas)
    for (double beta : config.betas)
      for (double mu : config.mus)
        for (double l : config.side_lengths) points.push_back({lambda, beta, mu, l});

  std::vector<GridResult> results(points.size());
  parallel_for(points.size(), config.threads, [&](std::size_t i) { results[i] = audit_point(points[i], config); });

  AuditReport report;
  report.state_points = points.size();
  const std::size_t per = config.side_lengths.size();
  for (std::size_t base = 0; base < points.size(); base += per) {
    std::vector<const StatePoint*> chain;
    for (std::size_t i = base; i < base + per; ++i) {
      for (auto& a : results[i].audits) report.audits.push_back(std::move(a));
      chain.push_back(&results[i].state);
    }
    if (per >= 3) {
      const GridPoint& p = points[base];
      const std::string key = "lambda=" + fmt(p.lambda) + ",beta=" + fmt(p.beta) + ",mu=" + fmt(p.mu);
      for (auto& a : audit_lemma5(chain, config.lemma_j, key)) report.audits.push_back(std::move(a));
    }
  }
  return report;
}

}  // namespace bec
