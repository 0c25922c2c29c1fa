#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bec/modes.hpp"

namespace bec {

// Extended precision keeps the scaled coefficient vectors well inside the
// representable range: Boltzmann factors of a few thousand particles span
// thousands of e-folds.
using Real = long double;

enum class Variant { Free, MeanField, NonExtensive };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct ModelParams {
  Variant variant = Variant::NonExtensive;
  double lambda = 0.0;
  double beta = 1.0;
  double mu = 0.0;

  /// λ as seen by the Hamiltonian (zero for the free gas).
  double effective_lambda() const { return variant == Variant::Free ? 0.0 : lambda; }
  void validate() const;
};

/// Single-particle level ε with g degenerate modes.
struct EnergyLevel {
  double energy = 0.0;
  std::int64_t degeneracy = 1;
};

std::vector<EnergyLevel> levels_of(std::span<const ModeShell> shells);

/// Coefficients Q(N) = q[N]·exp(log_scale). After renormalize() the largest
/// mantissa lies in [1/2, 1); rescaling is by powers of two, so it is exact.
class RestrictedPartition {
 public:
  RestrictedPartition() = default;
  RestrictedPartition(std::vector<Real> mantissa, double log_scale);

  static RestrictedPartition from_log_values(std::span<const double> log_values);

  std::size_t size() const { return q_.size(); }
  int max_degree() const { return static_cast<int>(q_.size()) - 1; }
  const std::vector<Real>& mantissa() const { return q_; }
  double log_scale() const { return log_scale_; }

  /// ln Q(N); −∞ for an exact zero or N beyond the stored range.
  double log_value(std::size_t n) const;
  /// Q(N) as a double (may overflow or underflow for extreme scales).
  double value(std::size_t n) const;

  void renormalize();
  void truncate(int max_degree);

 private:
  std::vector<Real> q_{1.0L};
  double log_scale_ = 0.0;
};

/// Truncated product of two coefficient polynomials (degree ≤ n_max).
RestrictedPartition convolve(const RestrictedPartition& p, const RestrictedPartition& q, int n_max);

struct ModeWeights {
  RestrictedPartition weights;
  /// a(n_cap)/max a ≤ 1e-18.
  bool adequate = false;
};

/// a(n) = exp(−β(εn + λn²/2V)) for NonExtensive, exp(−βεn) otherwise; n = 0..n_cap.
ModeWeights mode_weights(double energy, const ModelParams& params, double volume, int n_cap);

/// g-fold self-convolution by repeated squaring, truncated at n_max.
RestrictedPartition shell_power(const RestrictedPartition& weights, std::int64_t g, int n_max);

struct GrandSum {
  double log_z = 0.0;
  double pressure = 0.0;
  double tail_mass = 0.0;  // share of Z from N > 0.9·N_max
  double mean_n = 0.0;
  double var_n = 0.0;
};

/// ln G(N): −β(λN²/V − μN) for the interacting variants, βμN for the free gas.
double log_global_factor(const ModelParams& params, double volume, double n);

GrandSum grand_sum(const RestrictedPartition& q, const ModelParams& params, double volume);

struct Truncation {
  int n_max = 64;
  /// Mode and shell polynomials are trimmed so they stay adequate for every
  /// chemical potential up to this value.
  double mu_cap = 0.0;
  /// Fixed per-mode occupation cap without trimming (toy systems).
  std::optional<int> mode_cap;
  double weight_floor = 1e-18;
};

struct ShellMoments {
  double mean = 0.0;    // ⟨N_k⟩ for one mode of the shell
  double second = 0.0;  // ⟨N_k²⟩
};

struct PairMoment {
  std::size_t j = 0;
  std::size_t k = 0;
  double value = 0.0;  // ⟨N_j N_k⟩ for two distinct modes in shells j and k
};

struct MomentRequest {
  bool total_cross = false;                                // ⟨N N_k⟩ for every shell
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // shell index pairs, j ≠ k
  double tail_tolerance = 1e-12;
};

struct EnsembleMoments {
  double pressure = 0.0;
  double log_z = 0.0;
  double mean_n = 0.0;
  double var_n = 0.0;
  double tail_mass = 0.0;
  bool valid = true;
  std::vector<ShellMoments> shells;
  std::vector<double> total_cross;
  std::vector<PairMoment> pairs;

  /// ⟨N_j N_k⟩ for a computed pair (either order); throws if absent.
  double cross(std::size_t j, std::size_t k) const;
  /// Σ_k g_k ⟨N_k⟩ over the given shells.
  double occupation_sum(std::span<const EnergyLevel> levels) const;
};

/// Exact finite-volume ensemble for a fixed mode set. Q(N) is independent of
/// μ, so one engine serves every chemical potential up to `mu_cap`.
class PartitionEngine {
 public:
  PartitionEngine(std::vector<EnergyLevel> levels, Variant variant, double lambda, double beta,
                  double volume, Truncation truncation);

  const RestrictedPartition& restricted() const { return q_; }
  const std::vector<EnergyLevel>& levels() const { return levels_; }
  const Truncation& truncation() const { return trunc_; }
  ModelParams params(double mu) const;
  double volume() const { return volume_; }
  /// Largest per-mode occupation kept by any shell.
  int max_mode_cap() const;
  bool weights_adequate() const { return adequate_; }

  GrandSum grand_sum(double mu) const;
  EnsembleMoments moments(double mu, const MomentRequest& request = {}) const;

 private:
  struct Factor {
    RestrictedPartition single;  // one mode
    RestrictedPartition rest;    // g − 1 modes
    RestrictedPartition full;    // g modes
    std::int64_t degeneracy = 1;
  };
  struct CavitySums {
    double log_z = 0.0;
    std::vector<std::array<double, 3>> log_sums;  // ln Σ_n n^p a(n) H(n), p = 0, 1, 2
  };

  double log_mode_weight(double energy, double n) const;
  double log_tilt(double n) const;
  RestrictedPartition single_mode(double energy) const;
  RestrictedPartition trimmed_power(const RestrictedPartition& single, double energy, std::int64_t g) const;
  int power_cap(double energy, std::int64_t g) const;

  CavitySums sweep(std::span<const Factor> factors, const RestrictedPartition& terminal,
                   const std::vector<RestrictedPartition>* checkpoints) const;
  std::vector<RestrictedPartition> forward_checkpoints(std::span<const Factor> factors, RestrictedPartition* total) const;
  RestrictedPartition global_factor(double mu) const;

  std::vector<EnergyLevel> levels_;
  Variant variant_;
  double lambda_;
  double beta_;
  double volume_;
  Truncation trunc_;
  std::vector<Factor> factors_;
  std::vector<RestrictedPartition> checkpoints_;
  RestrictedPartition q_;
  bool adequate_ = true;
  std::size_t checkpoint_stride_ = 1;
};

struct TruncationResult {
  int n_cap = 0;
  int n_max = 0;
  double tail_mass = 0.0;
};

/// Doubles N_max (per-mode caps follow from the weight floor) until the tail
/// mass is below `tol`. Throws SizingError past `max_n_max`.
TruncationResult adaptive_truncation(std::span<const EnergyLevel> levels, const ModelParams& params,
                                     double volume, double tol, int start_n_max = 16,
                                     int max_n_max = 1 << 16);

/// Exact grand-canonical free gas over the mode set (closed form, no truncation).
EnsembleMoments free_ensemble(std::span<const EnergyLevel> levels, double beta, double mu, double volume,
                              const MomentRequest& request = {});

}  // namespace bec
