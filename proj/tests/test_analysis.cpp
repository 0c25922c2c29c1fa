#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <random>

#include "bec/analysis.hpp"
#include "bec/error.hpp"

using namespace bec;

namespace {

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// d = 1, L = 2π, m = 1/2, cutoff 1: levels ε = 0 (g = 1) and ε = 1 (g = 2).
BoxSpec two_level_box() {
  BoxSpec b;
  b.dimension = 1;
  b.side_length = 2.0 * std::numbers::pi;
  b.mass = 0.5;
  b.cutoff = 1;
  return b;
}

BoxSpec box3(double l, int cutoff) {
  BoxSpec b;
  b.dimension = 3;
  b.side_length = l;
  b.cutoff = cutoff;
  return b;
}

double free_two_level_mean(double beta, double mu) {
  return 1.0 / std::expm1(-beta * mu) + 2.0 / std::expm1(beta * (1.0 - mu));
}

StatePoint audited_state(const BoxSpec& box, ModelParams p) {
  SolveOptions o;
  o.request.total_cross = true;
  const auto shells = enumerate_shells(box);
  for (std::size_t k = 1; k < shells.size(); ++k) o.request.pairs.emplace_back(0, k);
  return evaluate_at_mu(box, p, o);
}

const char* fixture_path = BEC_FIXTURE_DIR "/solve_mu_fixture.json";

}  // namespace

TEST_CASE("lattice cutoff rule") {
  CutoffRule r;
  // √(2·36)·5/2π = 6.75…
  CHECK(r.lattice_cutoff(5.0, 1.0, 1.0) == 7);
  CHECK(r.lattice_cutoff(0.1, 1.0, 1.0) == 2);
  // Fixed physical cutoff: n_max scales with L.
  CHECK(r.lattice_cutoff(16.0, 0.603773, 1.0) == 28);
  r.beta_cutoff = 0.0;
  CHECK_THROWS_AS(r.lattice_cutoff(5.0, 1.0, 1.0), DomainError);
}

TEST_CASE("free-gas chemical potential matches the inverted closed form") {
  const double beta = 1.3;
  for (double mu0 : {-2.0, -0.3, -0.01, -1e-4}) {
    const double rho = free_two_level_mean(beta, mu0) / (2.0 * std::numbers::pi);
    // Near μ = 0 the geometric ground-mode tail needs N_max ≫ 2^16; closed form only.
    for (bool closed : {true, false}) {
      if (!closed && mu0 > -1e-3) continue;
      SolveOptions o;
      o.free_closed_form = closed;
      const auto s = solve_mu(two_level_box(), Variant::Free, 0.0, beta, rho, o);
      CHECK(s.residual <= 1e-9);
      CHECK(std::abs(s.params.mu - mu0) <= 1e-9 * std::max(1.0, std::abs(mu0)) + 1e-12);
    }
  }
  // Single ground mode only: ρV = 1/(e^{−βμ} − 1) ⇒ μ = −β⁻¹ ln(1 + 1/ρV).
  BoxSpec b = box3(1.0, 1);
  b.dimension = 1;
  b.side_length = 0.01;  // excited levels at ε ≈ 2·10⁵ are empty
  const double rho = 3.0 / b.volume();
  const auto s = solve_mu(b, Variant::Free, 0.0, 1.0, rho);
  CHECK(s.params.mu == doctest::Approx(-std::log(1.0 + 1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("solve_mu inverts evaluate_at_mu for the interacting variants") {
  std::mt19937 rng(4242);
  std::uniform_real_distribution<double> mu_dist(-1.0, 1.5), beta_dist(0.3, 3.0), lambda_dist(0.1, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const Variant v = trial % 2 == 0 ? Variant::NonExtensive : Variant::MeanField;
    const ModelParams p{v, lambda_dist(rng), beta_dist(rng), mu_dist(rng)};
    const BoxSpec box = box3(2.0 + trial % 3, 3);
    const auto fwd = evaluate_at_mu(box, p);
    const auto inv = solve_mu(box, v, p.lambda, p.beta, fwd.density);
    CAPTURE(trial);
    CHECK(inv.residual <= 1e-9);
    // dμ/dρ = V/(β Var N) converts the density residual into a μ tolerance.
    const double slope = box.volume() / (p.beta * fwd.moments.var_n);
    CHECK(std::abs(inv.params.mu - p.mu) <= 2e-9 * slope + 1e-10);
    CHECK(inv.moments.tail_mass < 1e-12);
  }
}

TEST_CASE("solve_mu validation") {
  CHECK_THROWS_AS(solve_mu(box3(3.0, 2), Variant::NonExtensive, 0.5, 1.0, -1.0), DomainError);
  CHECK_THROWS_AS(solve_mu(box3(3.0, 2), Variant::NonExtensive, -0.5, 1.0, 1.0), DomainError);
  SolveOptions o;
  o.max_n_max = 64;
  CHECK_THROWS_AS(solve_mu(box3(6.0, 3), Variant::NonExtensive, 0.5, 1.0, 2.0, o), SizingError);
}

TEST_CASE("solve_mu regression fixture") {
  const double beta = 2.0 * critical_beta(1.0, 1.0, 3);
  const auto s = solve_mu(box3(4.0, 6), Variant::NonExtensive, 0.5, beta, 1.0);
  if (std::getenv("BEC_FREEZE_FIXTURE")) {
    nlohmann::json j;
    j["box"] = {{"dimension", 3}, {"side_length", 4.0}, {"cutoff", 6}, {"mass", 1.0}};
    j["model"] = {{"variant", "non-extensive"}, {"lambda", 0.5}, {"beta", beta}, {"rho", 1.0}};
    j["mu"] = s.params.mu;
    j["pressure"] = s.moments.pressure;
    j["ground_density"] = s.ground_density();
    std::ofstream(fixture_path) << j.dump(2) << "\n";
  }
  std::ifstream in(fixture_path);
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  CHECK(s.params.mu == doctest::Approx(j.at("mu").get<double>()).epsilon(1e-9));
  CHECK(s.moments.pressure == doctest::Approx(j.at("pressure").get<double>()).epsilon(1e-9));
  CHECK(s.ground_density() == doctest::Approx(j.at("ground_density").get<double>()).epsilon(1e-8));
}

TEST_CASE("band and ground densities") {
  const auto s = evaluate_at_mu(box3(4.0, 3), {Variant::NonExtensive, 0.5, 1.0, 0.8});
  CHECK(s.ground_density() == doctest::Approx(s.moments.shells[0].mean / 64.0));
  // A band past the cutoff holds every particle.
  CHECK(s.band_density(1e3, BandMode::KNorm) == doctest::Approx(s.density).epsilon(1e-12));
  // A vanishing band keeps k = 0 only.
  CHECK(s.band_density(1e-9, BandMode::KNorm) == doctest::Approx(s.ground_density()));
  CHECK(s.band_density(2.0, BandMode::KNorm) >= s.band_density(1.0, BandMode::KNorm));
}

TEST_CASE("mean-field recursion: free closed form and the DP") {
  // λ = 0: ln Z = −Σ g ln(1 − e^{β(μ−ε)}).
  const std::vector<EnergyLevel> levels{{0.0, 1}, {0.4, 6}, {0.8, 12}, {1.2, 8}};
  const double beta = 1.7, mu = -0.2;
  double exact = 0.0;
  for (const auto& l : levels) exact -= static_cast<double>(l.degeneracy) * std::log(-std::expm1(beta * (mu - l.energy)));
  CHECK(rel_close(mean_field_log_z_recursion(levels, 0.0, beta, mu, 5.0, 400), exact, 1e-12));

  std::mt19937 rng(99);
  std::uniform_real_distribution<double> mu_dist(-0.5, 1.0), lambda_dist(0.1, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    const double lambda = lambda_dist(rng), m = mu_dist(rng), v = 4.0;
    Truncation t;
    t.n_max = 200;
    t.mu_cap = m;
    PartitionEngine engine(levels, Variant::MeanField, lambda, beta, v, t);
    const auto gs = engine.grand_sum(m);
    REQUIRE(gs.tail_mass < 1e-12);
    CHECK(rel_close(mean_field_log_z_recursion(levels, lambda, beta, m, v, 200), gs.log_z, 1e-11));
  }
  CHECK_THROWS_AS(mean_field_log_z_recursion(levels, 0.1, 1.0, 0.0, 1.0, -1), DomainError);
}

TEST_CASE("fitted exponent") {
  const std::vector<double> x{1, 2, 4, 8};
  std::vector<double> y;
  for (double xi : x) y.push_back(3.0 * std::pow(xi, -0.7));
  CHECK(fitted_exponent(x, y) == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(std::isnan(fitted_exponent(x, {1, 0, 1, 1})));
  CHECK_THROWS_AS(fitted_exponent({1}, {1}), DomainError);
}

TEST_CASE("classifier rules on synthetic reports") {
  ScalingReport r;
  r.rows.resize(3);
  auto set = [&](double n0_last, double g_exp, bool decr, double excess, double b_exp) {
    r.rows.back().ground_density = n0_last;
    r.ground_exponent = g_exp;
    r.ground_decreasing = decr;
    r.band_excess_last = excess;
    r.band_exponent = b_exp;
    return classify(r);
  };
  CHECK(set(0.7, -0.04, true, 0.6, -0.04) == Condensation::GroundState);
  CHECK(set(0.2, -0.30, true, 0.5, -0.13) == Condensation::NonExtensive);
  CHECK(set(0.2, -0.30, false, 0.5, -0.13) == Condensation::Generalized);
  CHECK(set(5e-4, -1.0, true, -0.3, std::nan("")) == Condensation::None);
  CHECK(set(5e-4, -1.0, true, 0.5, -0.5) == Condensation::None);
  CHECK(to_string(Condensation::NonExtensive) == "non-extensive");
}

TEST_CASE("scaling sweep validation") {
  SweepConfig c;
  c.side_lengths = {4};
  CHECK_THROWS_AS(scaling_sweep(c), DomainError);
  c.side_lengths = {4, 3};
  CHECK_THROWS_AS(scaling_sweep(c), DomainError);
  c.side_lengths = {3, 4};
  c.deltas = {};
  CHECK_THROWS_AS(scaling_sweep(c), DomainError);
}

TEST_CASE("small sweep rows are consistent and thread-independent") {
  SweepConfig c;
  c.side_lengths = {2, 3, 4};
  c.beta = 1.0;
  c.cutoff.beta_cutoff = 20.0;
  c.deltas = {1.0, 2.0};
  const auto a = scaling_sweep(c);
  c.threads = 3;
  const auto b = scaling_sweep(c);
  REQUIRE(a.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.rows[i].mu == b.rows[i].mu);
    CHECK(a.rows[i].density == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.rows[i].band_density[1] >= a.rows[i].band_density[0]);
    CHECK(a.rows[i].max_mode_density >= a.rows[i].ground_density);
    CHECK(a.rows[i].tail_mass < 1e-12);
  }
  CHECK(a.delta_min == 1.0);
}

TEST_CASE("audit pass rule") {
  CHECK(audit_passes(1.0, 1.0, 0.0));
  CHECK(audit_passes(1e6, 1e6, -1e-4));
  CHECK_FALSE(audit_passes(1e6, 1e6, -1e-2));
  CHECK_FALSE(audit_passes(0.0, 0.0, -2e-9));
  CHECK(make_audit("x", "k", 0, 0, std::nan("")).status == AuditStatus::Fail);
}

TEST_CASE("Gibbs bound is an equality for the free gas at its own chemical potential") {
  const auto s = evaluate_at_mu(box3(3.0, 3), {Variant::Free, 0.0, 1.2, -0.3});
  AuditContext ctx{&s, "free"};
  const auto eq = audit_og(ctx, 0.0, -0.3);
  CHECK(eq.status == AuditStatus::Pass);
  CHECK(std::abs(eq.margin) < 1e-12);
  CHECK(audit_og(ctx, -0.1, -0.4).margin > 0.0);
  CHECK(audit_og(ctx, 0.1, -0.05).status == AuditStatus::Skipped);
}

TEST_CASE("property: every audit holds on random small state points") {
  std::mt19937 rng(31337);
  std::uniform_real_distribution<double> mu_dist(-1.0, 1.5), beta_dist(0.4, 3.0), lambda_dist(0.05, 1.0),
      side_dist(1.5, 5.0);
  std::uniform_int_distribution<int> dim_dist(1, 3);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    BoxSpec box;
    box.dimension = dim_dist(rng);
    box.side_length = side_dist(rng);
    const ModelParams p{Variant::NonExtensive, lambda_dist(rng), beta_dist(rng), mu_dist(rng)};
    box.cutoff = CutoffRule{}.lattice_cutoff(box.side_length, p.beta, box.mass);
    if (box.mode_count() > 20000) box.cutoff = 4;
    const auto s = audited_state(box, p);
    AuditContext ctx{&s, "trial=" + std::to_string(trial)};
    std::vector<InequalityAudit> out;
    for (double a : {-0.01, -0.5}) out.push_back(audit_og(ctx, -0.1, a));
    for (std::size_t k = 0; k < s.shells.size(); ++k) out.push_back(audit_in1(ctx, k));
    for (std::size_t k = 1; k < s.shells.size(); ++k) {
      out.push_back(audit_in2(ctx, 0, k));
      out.push_back(audit_in3(ctx, 0, k));
      for (double d : {0.5, 1.0, 2.0})
        if (s.shells[k].k_norm >= d) out.push_back(audit_lemma4(ctx, d, 0, k));
    }
    int n_max = s.n_max;
    const double p_mf =
        mean_field_log_z_recursion(s.levels(), p.lambda, p.beta, p.mu, s.volume(), 2 * n_max) / (p.beta * s.volume());
    out.push_back(audit_jensen(ctx, p_mf));
    out.push_back(audit_pres_order(ctx, p_mf));
    for (const auto& a : out) {
      CAPTURE(a.id);
      CAPTURE(a.key);
      CHECK(a.status != AuditStatus::Fail);
      ++checked;
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("flipped in2 fails and vacuous lemma4 is skipped") {
  const auto s = audited_state(box3(3.0, 3), {Variant::NonExtensive, 0.5, 1.0, 0.8});
  AuditContext ctx{&s, "s", true};
  CHECK(audit_in2(ctx, 0, 1).status == AuditStatus::Fail);
  ctx.flip_in2 = false;
  CHECK(audit_in2(ctx, 0, 1).status == AuditStatus::Pass);
  // 3δ²/8 < 3λ/V at δ = 0.2, V = 27.
  REQUIRE(s.shells[1].k_norm >= 0.2);
  const auto skip = audit_lemma4(ctx, 0.2, 0, 1);
  CHECK(skip.status == AuditStatus::Skipped);
  CHECK_THROWS_AS(audit_lemma4(ctx, 100.0, 0, 1), DomainError);
  const auto free_state = evaluate_at_mu(box3(3.0, 2), {Variant::Free, 0.0, 1.0, -0.5});
  AuditContext fctx{&free_state, "f"};
  CHECK_THROWS_AS(audit_in1(fctx, 0), DomainError);
}

TEST_CASE("lemma5 series") {
  std::vector<StatePoint> states;
  for (double l : {3.0, 4.0, 6.0}) states.push_back(audited_state(box3(l, 4), {Variant::NonExtensive, 0.5, 1.0, 0.2}));
  std::vector<const StatePoint*> ptrs{&states[0], &states[1], &states[2]};
  const auto a = audit_lemma5(ptrs, 0, "chain");
  REQUIRE(a.size() == 2);
  for (const auto& x : a) CHECK(x.status == AuditStatus::Pass);
  std::vector<const StatePoint*> rev{&states[2], &states[1], &states[0]};
  CHECK_THROWS_AS(audit_lemma5(rev, 0, "rev"), DomainError);
  std::vector<const StatePoint*> flat{&states[0], &states[1]};
  CHECK_THROWS_AS(audit_lemma5(flat, 0, "short"), DomainError);
  const auto d = decay_series({1, 2, 3}, {3, 2, 2});
  CHECK_FALSE(d.strictly_decreasing);
}

TEST_CASE("default audit grid passes") {
  AuditGridConfig c;
  const auto r = run_audit_grid(c);
  CHECK(r.state_points == 54);
  CHECK(r.failures() == 0);
  CHECK(r.skipped() > 0);
  c.flip_in2 = true;
  c.lambdas = {0.5};
  c.betas = {1.0};
  c.mus = {0.8};
  CHECK(run_audit_grid(c).failures() > 0);
}
