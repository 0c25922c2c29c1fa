#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bec/oracle.hpp"
#include "bec/partition.hpp"

namespace bec::oracle {

/// Toy system written as degenerate levels; expands to single modes for enumeration.
struct ToyCase {
  std::string name;
  std::vector<EnergyLevel> levels;
  int n_cap = 3;
  ModelParams params;
  double volume = 1.0;

  ToySystem expand() const;
};

inline constexpr double kCapStress = 1e-6;

struct Comparison {
  double max_rel_deviation = 0.0;
  std::string worst_quantity;
  std::int64_t configurations = 0;
  /// max_k P(n_k = n_cap) from the enumeration.
  double cap_probability = 0.0;
  /// cap_probability above kCapStress: both routes agree, but on a system the
  /// cap visibly truncates.
  bool cap_stressed = false;
};

/// ln Z, ⟨N⟩, ⟨N²⟩ and every per-mode, total-cross and pair moment from the DP
/// (with the same per-mode cap) against exhaustive enumeration.
Comparison compare_with_partition(const ToyCase& toy);

/// Twelve systems over all three variants with ≤ 4 shells and caps ≤ 6, then a
/// single-mode free toy and a cap-stressed toy.
std::vector<ToyCase> default_toy_suite();

}  // namespace bec::oracle
