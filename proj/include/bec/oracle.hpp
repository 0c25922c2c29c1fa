#pragma once

#include <cstdint>
#include <vector>

#include "bec/partition.hpp"

namespace bec::oracle {

/// Explicit list of single modes small enough to enumerate every occupation
/// configuration n⃗ ∈ {0..n_cap}^modes.
struct ToySystem {
  std::vector<double> energies;
  int n_cap = 3;
  ModelParams params;
  double volume = 1.0;

  std::int64_t configuration_count() const;  // saturating
  void validate() const;
};

inline constexpr std::size_t kMaxModes = 8;
inline constexpr std::int64_t kMaxConfigurations = 10'000'000;

struct ExactResult {
  double log_z = 0.0;
  double pressure = 0.0;
  double mean_n = 0.0;
  double second_n = 0.0;           // ⟨N²⟩
  std::vector<double> mean;        // ⟨N_k⟩
  std::vector<double> second;      // ⟨N_k²⟩
  std::vector<double> total_cross; // ⟨N N_k⟩
  std::vector<std::vector<double>> cross;  // ⟨N_j N_k⟩, diagonal holds ⟨N_k²⟩
  /// ln ⟨exp((βλ/2V) Σ_k N_k²)⟩.
  double log_square_exponential = 0.0;
  /// max_k P(n_k = n_cap).
  double cap_probability = 0.0;

  double var_n() const { return second_n - mean_n * mean_n; }
};

/// H(n⃗) = Σ ε_k n_k + (λ/V)(N² + ½Σ n_k²) − μN for the non-extensive model,
/// without the ½Σ n_k² term for the mean-field one, and with λ = 0 for the
/// free gas.
double energy(const ToySystem& sys, const std::vector<int>& occupation);

ExactResult enumerate_exact(const ToySystem& sys);

}  // namespace bec::oracle
