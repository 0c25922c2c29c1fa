#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "bec/error.hpp"
#include "bec/modes.hpp"

using bec::BoxSpec;

namespace {

// Brute-force lattice count keyed by |n|².
std::map<std::int64_t, std::int64_t> brute_counts(int d, int c) {
  std::map<std::int64_t, std::int64_t> out;
  std::vector<int> n(d, -c);
  while (true) {
    std::int64_t s = 0;
    for (int v : n) s += v * v;
    out[s] += 1;
    int i = d - 1;
    while (i >= 0 && n[i] == c) n[i--] = -c;
    if (i < 0) break;
    ++n[i];
  }
  return out;
}

}  // namespace

TEST_CASE("three-dimensional unit cube of modes") {
  BoxSpec box;
  box.dimension = 3;
  box.cutoff = 1;
  const auto shells = bec::enumerate_shells(box);
  REQUIRE(shells.size() == 4);
  const std::int64_t g[] = {1, 6, 12, 8};
  std::int64_t total = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(shells[i].norm2 == static_cast<std::int64_t>(i));
    CHECK(shells[i].degeneracy == g[i]);
    total += shells[i].degeneracy;
  }
  CHECK(total == 27);
  CHECK(shells[0].energy == 0.0);
  CHECK(shells[1].representative == std::vector<int>{-1, 0, 0});
}

TEST_CASE("shell s=4 at cutoff 2 holds the six axis vectors") {
  BoxSpec box;
  box.cutoff = 2;
  for (const auto& s : bec::enumerate_shells(box)) {
    if (s.norm2 == 4) {
      CHECK(s.degeneracy == 6);
      CHECK(s.representative == std::vector<int>{-2, 0, 0});
    }
  }
}

TEST_CASE("four-dimensional count") {
  BoxSpec box;
  box.dimension = 4;
  std::int64_t total = 0;
  for (const auto& s : bec::enumerate_shells(box)) total += s.degeneracy;
  CHECK(total == 81);
  CHECK(box.mode_count() == 81);
}

TEST_CASE("degeneracies match brute-force counting") {
  for (int d = 1; d <= 4; ++d) {
    for (int c = 1; c <= 4; ++c) {
      BoxSpec box;
      box.dimension = d;
      box.cutoff = c;
      box.side_length = 3.0;
      const auto ref = brute_counts(d, c);
      const auto shells = bec::enumerate_shells(box);
      REQUIRE(shells.size() == ref.size());
      std::int64_t total = 0;
      double prev = -1.0;
      for (const auto& s : shells) {
        CHECK(s.degeneracy == ref.at(s.norm2));
        CHECK(s.energy > prev);
        prev = s.energy;
        std::int64_t rep = 0;
        for (int v : s.representative) rep += v * v;
        CHECK(rep == s.norm2);
        total += s.degeneracy;
      }
      CHECK(total == box.mode_count());
    }
  }
}

TEST_CASE("energy scale") {
  BoxSpec box;
  box.side_length = 2.0;
  box.mass = 0.5;
  const auto shells = bec::enumerate_shells(box);
  const double unit = std::numbers::pi;  // 2π/L
  CHECK(shells[2].energy == doctest::Approx(unit * unit * 2.0).epsilon(1e-14));
  CHECK(shells[2].k_norm == doctest::Approx(unit * std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("band selection") {
  BoxSpec box;
  box.side_length = 2.0 * std::numbers::pi;
  box.cutoff = 2;
  const auto shells = bec::enumerate_shells(box);
  auto band = bec::band_shells(shells, 1.5, bec::BandMode::KNorm);
  REQUIRE(band.size() == 3);
  CHECK(band[2].norm2 == 2);
  CHECK(bec::band_shells(shells, 0.5, bec::BandMode::KNorm).size() == 1);
  CHECK(bec::band_shells(shells, std::numeric_limits<double>::infinity(), bec::BandMode::Energy).size() ==
        shells.size());
  // ε = s/2 here.
  CHECK(bec::band_shells(shells, 1.2, bec::BandMode::Energy).size() == 3);
}

TEST_CASE("invalid boxes and sizing") {
  BoxSpec box;
  box.cutoff = 0;
  CHECK_THROWS_AS(bec::enumerate_shells(box), bec::DomainError);
  box.cutoff = 10;
  box.max_modes = 1000;
  CHECK_THROWS_AS(bec::enumerate_shells(box), bec::SizingError);
  box.dimension = 2;
  box.max_modes = 1000;
  CHECK(box.below_condensation_dimension());
  CHECK_NOTHROW(bec::enumerate_shells(box));
}
