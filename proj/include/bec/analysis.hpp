#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bec/modes.hpp"
#include "bec/partition.hpp"
#include "bec/thermolimit.hpp"

namespace bec {

/// Cutoff n_max(L) = ceil(k_cut·L/2π) with k_cut = √(2m·ε_cut) and
/// β·ε_cut = beta_cutoff, so the physical cutoff stays fixed as L grows.
struct CutoffRule {
  double beta_cutoff = 36.0;
  int min_cutoff = 2;

  int lattice_cutoff(double side_length, double beta, double mass) const;
};

struct SolveOptions {
  double tail_tolerance = 1e-12;
  double density_residual = 1e-9;
  int max_n_max = 1 << 16;
  /// Free gas through its exact factorized form instead of the DP.
  bool free_closed_form = true;
  MomentRequest request;
};

struct StatePoint {
  BoxSpec box;
  ModelParams params;  // μ resolved
  std::vector<ModeShell> shells;
  EnsembleMoments moments;
  int n_max = 0;  // 0 for the closed-form free gas
  double density = 0.0;
  double residual = 0.0;

  double volume() const { return box.volume(); }
  std::vector<EnergyLevel> levels() const { return levels_of(shells); }
  /// (1/V) Σ_{shells in band} g⟨N_k⟩.
  double band_density(double delta, BandMode mode) const;
  /// ⟨N_0⟩/V.
  double ground_density() const;
};

/// Exact moments at a fixed chemical potential with N_max doubled until the
/// tail mass is below tolerance.
StatePoint evaluate_at_mu(const BoxSpec& box, const ModelParams& params, const SolveOptions& options = {});

/// μ_Λ with ⟨N⟩/V = ρ by bracketed bisection.
StatePoint solve_mu(const BoxSpec& box, Variant variant, double lambda, double beta, double rho,
                    const SolveOptions& options = {});

/// ln Z of the finite-volume mean-field gas by the canonical recursion
/// Q(N) = N⁻¹ Σ_j C(j) Q(N−j), C(j) = Σ_k e^{−jβε_k}, independent of the DP.
double mean_field_log_z_recursion(std::span<const EnergyLevel> levels, double lambda, double beta, double mu,
                                  double volume, int n_max);

// ---------------------------------------------------------------------------
// Scaling sweep and classification

enum class Condensation { None, GroundState, Generalized, NonExtensive };
std::string to_string(Condensation c);

struct ClassifierOptions {
  double density_floor = 1e-3;      // θ
  double exponent_cut = -0.2;
};

struct SweepConfig {
  std::vector<double> side_lengths{4, 6, 8, 12, 16};
  double rho = 1.0;
  double beta = 1.0;
  double lambda = 0.5;
  double mass = 1.0;
  int dimension = 3;
  Variant variant = Variant::NonExtensive;
  std::vector<double> deltas{1.0};
  BandMode band_mode = BandMode::KNorm;
  CutoffRule cutoff;
  ClassifierOptions classifier;
  SolveOptions solve;
  int threads = 1;
};

struct SweepRow {
  double side_length = 0.0;
  double volume = 0.0;
  int lattice_cutoff = 0;
  int n_max = 0;
  double mu = 0.0;
  double density = 0.0;
  double ground_density = 0.0;       // n₀(V)
  double max_mode_density = 0.0;     // max_k ⟨N_k⟩/V
  std::vector<double> band_density;  // per δ
  double total_cross_ground = 0.0;   // V⁻²⟨N N_0⟩
  double square_sum = 0.0;           // V⁻² Σ_k ⟨N_k²⟩
  double tail_mass = 0.0;
};

struct ScalingReport {
  SweepConfig config;
  std::vector<SweepRow> rows;
  double delta_min = 0.0;
  double ground_exponent = 0.0;    // fitted d ln n₀ / d ln V
  double band_exponent = 0.0;      // fitted exponent of the band excess at δ_min
  double band_excess_last = 0.0;   // ρ_band(δ_min) − normal-fluid band bound, largest V
  double normal_band_bound = 0.0;  // ∫_{|k|<δ_min} (e^{βε}−1)⁻¹ (k-norm band) or ε < δ_min
  bool ground_decreasing = false;
  double critical_density = 0.0;   // ρ_c(β), +∞ for d ≤ 2
  Condensation classification = Condensation::None;
};

/// Least-squares slope of ln y against ln x (all y > 0 required).
double fitted_exponent(const std::vector<double>& x, const std::vector<double>& y);

ScalingReport scaling_sweep(const SweepConfig& config);

/// Applies the declared finite-volume rules to an assembled report.
Condensation classify(const ScalingReport& report);

// ---------------------------------------------------------------------------
// Inequality audits

enum class AuditStatus { Pass, Fail, Skipped };
std::string to_string(AuditStatus s);

struct InequalityAudit {
  std::string id;
  std::string key;  // state point and instance
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // ≥ 0 when the inequality holds
  AuditStatus status = AuditStatus::Pass;
  std::string reason;
};

/// margin ≥ −1e-9·max(1, |lhs|, |rhs|).
bool audit_passes(double lhs, double rhs, double margin);
InequalityAudit make_audit(std::string id, std::string key, double lhs, double rhs, double margin);

struct AuditContext {
  const StatePoint* state = nullptr;
  std::string key;
  /// Flip the direction of in2 (exercises the failure path).
  bool flip_in2 = false;
};

/// Gibbs–Bogoliubov bound with constant trial t and α: p̃_Λ ≥ RHS.
InequalityAudit audit_og(const AuditContext& ctx, double t, double alpha);
/// Correlation inequality with X = a_k for shell k.
InequalityAudit audit_in1(const AuditContext& ctx, std::size_t k);
/// Double-commutator bound with X = a_j N_k^{1/2}; needs ⟨N N_k⟩ and ⟨N_j N_k⟩.
InequalityAudit audit_in2(const AuditContext& ctx, std::size_t j, std::size_t k);
InequalityAudit audit_in3(const AuditContext& ctx, std::size_t j, std::size_t k);
/// Occupation bound for |k| ≥ δ with |j| ≤ δ/2.
InequalityAudit audit_lemma4(const AuditContext& ctx, double delta, std::size_t j, std::size_t k);
/// 0 ≤ (λ/2V²)Σ_k⟨N_k²⟩ ≤ p^MF_Λ − p̃_Λ; p^MF_Λ from the canonical recursion.
InequalityAudit audit_jensen(const AuditContext& ctx, double p_mf_finite);
/// p̃_Λ ≤ p^MF_Λ.
InequalityAudit audit_pres_order(const AuditContext& ctx, double p_mf_finite);
/// p^MF_Λ − p̃_Λ = (βV)⁻¹ ln⟨exp((βλ/2V)ΣN_k²)⟩ with the right side from a
/// separate reweighted DP.
InequalityAudit audit_pres_identity(const AuditContext& ctx, double p_mf_finite, double log_square_exponential);

struct DecaySeries {
  std::vector<double> volume;
  std::vector<double> value;
  double exponent = 0.0;
  bool strictly_decreasing = false;
};
DecaySeries decay_series(const std::vector<double>& volume, const std::vector<double>& value);

/// V⁻²⟨N N_j⟩ and V⁻²Σ_k⟨N_k²⟩ along a volume sequence (≥ 3 states).
std::vector<InequalityAudit> audit_lemma5(const std::vector<const StatePoint*>& states, std::size_t j,
                                          const std::string& key);

struct AuditGridConfig {
  std::vector<double> lambdas{0.25, 0.5};
  std::vector<double> betas{0.5, 1.0, 2.0};
  std::vector<double> mus{-0.5, 0.2, 0.8};
  std::vector<double> side_lengths{3, 4, 6};
  double mass = 1.0;
  int dimension = 3;
  CutoffRule cutoff;
  std::vector<double> og_alphas{-0.01, -0.1, -1.0};
  std::vector<double> og_shifts{0.0, -0.05};
  std::vector<double> lemma4_deltas{0.3, 1.0, 2.0, 3.0};
  std::size_t lemma_j = 0;
  bool flip_in2 = false;
  SolveOptions solve;
  int threads = 1;
};

struct AuditReport {
  std::vector<InequalityAudit> audits;
  std::size_t state_points = 0;
  std::size_t failures() const;
  std::size_t skipped() const;
};

/// Every audit over the grid of (λ, β, μ, L) state points.
AuditReport run_audit_grid(const AuditGridConfig& config);

}  // namespace bec
