#include "bec/modes.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "bec/error.hpp"

namespace bec {

double BoxSpec::volume() const { return std::pow(side_length, dimension); }

double BoxSpec::wavenumber_unit() const { return 2.0 * std::numbers::pi / side_length; }

std::int64_t BoxSpec::mode_count() const {
  const std::int64_t side = 2 * static_cast<std::int64_t>(cutoff) + 1;
  std::int64_t count = 1;
  for (int i = 0; i < dimension; ++i) {
    if (count > std::numeric_limits<std::int64_t>::max() / side) return std::numeric_limits<std::int64_t>::max();
    count *= side;
  }
  return count;
}

void BoxSpec::validate() const {
  if (dimension < 1) throw DomainError("box dimension must be >= 1");
  if (!(side_length > 0.0) || !std::isfinite(side_length)) throw DomainError("box side length must be positive");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError("particle mass must be positive");
  if (cutoff < 1) throw DomainError("mode cutoff must be >= 1");
}

namespace {

// counts[d][s]: number of n ∈ [−c, c]^d with |n|² = s.
std::vector<std::vector<std::int64_t>> norm_counts(int dimension, int cutoff) {
  const std::size_t one_max = static_cast<std::size_t>(cutoff) * cutoff;
  std::vector<std::vector<std::int64_t>> counts(dimension + 1);
  counts[0] = {1};
  std::vector<std::int64_t> single(one_max + 1, 0);
  for (int n = -cutoff; n <= cutoff; ++n) single[static_cast<std::size_t>(n * n)] += 1;
  for (int d = 1; d <= dimension; ++d) {
    const auto& prev = counts[d - 1];
    std::vector<std::int64_t> next(prev.size() + one_max, 0);
    for (std::size_t a = 0; a < prev.size(); ++a) {
      if (prev[a] == 0) continue;
      for (std::size_t b = 0; b <= one_max; ++b) {
        if (single[b] != 0) next[a + b] += prev[a] * single[b];
      }
    }
    counts[d] = std::move(next);
  }
  return counts;
}

}  // namespace

std::vector<ModeShell> enumerate_shells(const BoxSpec& box) {
  box.validate();
  const std::int64_t modes = box.mode_count();
  if (modes > box.max_modes) {
    throw SizingError("mode count " + std::to_string(modes) + " exceeds configured maximum " +
                      std::to_string(box.max_modes));
  }
  const int d = box.dimension;
  const int c = box.cutoff;
  const auto counts = norm_counts(d, c);
  const double unit = box.wavenumber_unit();
  const double energy_unit = unit * unit / (2.0 * box.mass);

  std::vector<ModeShell> shells;
  const auto& total = counts[d];
  for (std::size_t s = 0; s < total.size(); ++s) {
    if (total[s] == 0) continue;
    ModeShell shell;
    shell.norm2 = static_cast<std::int64_t>(s);
    shell.energy = energy_unit * static_cast<double>(s);
    shell.k_norm = unit * std::sqrt(static_cast<double>(s));
    shell.degeneracy = total[s];
    // Greedy lexicographic descent: smallest leading component whose
    // remainder is still representable by the remaining dimensions.
    shell.representative.resize(d);
    std::int64_t rest = shell.norm2;
    for (int i = 0; i < d; ++i) {
      const auto& tail = counts[d - i - 1];
      for (int n = -c; n <= c; ++n) {
        const std::int64_t r = rest - static_cast<std::int64_t>(n) * n;
        if (r >= 0 && static_cast<std::size_t>(r) < tail.size() && tail[r] > 0) {
          shell.representative[i] = n;
          rest = r;
          break;
        }
      }
    }
    shells.push_back(std::move(shell));
  }
  return shells;
}

std::vector<std::size_t> band_indices(std::span<const ModeShell> shells, double delta, BandMode mode) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < shells.size(); ++i) {
    const auto& s = shells[i];
    const double key = mode == BandMode::KNorm ? s.k_norm : s.energy;
    if (s.norm2 == 0 || key < delta) out.push_back(i);
  }
  return out;
}

std::vector<ModeShell> band_shells(std::span<const ModeShell> shells, double delta, BandMode mode) {
  std::vector<ModeShell> out;
  for (auto i : band_indices(shells, delta, mode)) out.push_back(shells[i]);
  return out;
}

std::string to_string(BandMode mode) { return mode == BandMode::KNorm ? "k_norm" : "energy"; }

BandMode band_mode_from_string(const std::string& name) {
  if (name == "k_norm") return BandMode::KNorm;
  if (name == "energy") return BandMode::Energy;
  throw DomainError("unknown band mode '" + name + "'");
}

}  // namespace bec
