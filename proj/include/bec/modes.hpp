#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bec {

/// Periodic cubic box [−L/2, L/2]^d with dual lattice (2π/L)ℤ^d cut off at
/// Chebyshev norm `cutoff` on the integer vectors.
struct BoxSpec {
  int dimension = 3;
  double side_length = 1.0;
  double mass = 1.0;
  int cutoff = 1;
  std::int64_t max_modes = 50'000'000;

  double volume() const;
  double wavenumber_unit() const;  // 2π/L
  std::int64_t mode_count() const;  // (2·cutoff+1)^d, saturating
  /// Condensation needs d ≥ 3; smaller dimensions are allowed for testing.
  bool below_condensation_dimension() const { return dimension < 3; }
  void validate() const;
};

/// All lattice modes with the same |n|², hence the same kinetic energy.
struct ModeShell {
  std::int64_t norm2 = 0;
  double energy = 0.0;
  double k_norm = 0.0;
  std::int64_t degeneracy = 0;
  std::vector<int> representative;  // lexicographically smallest n with |n|² = norm2
};

enum class BandMode { KNorm, Energy };

std::vector<ModeShell> enumerate_shells(const BoxSpec& box);

/// Shells with |k| < δ (KNorm) or ε < δ (Energy). The k = 0 shell is always kept.
std::vector<ModeShell> band_shells(std::span<const ModeShell> shells, double delta, BandMode mode);

/// Indices into `shells` selected by the same rule as band_shells.
std::vector<std::size_t> band_indices(std::span<const ModeShell> shells, double delta, BandMode mode);

std::string to_string(BandMode mode);
BandMode band_mode_from_string(const std::string& name);

}  // namespace bec
