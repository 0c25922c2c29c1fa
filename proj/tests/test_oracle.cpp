#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>

#include "bec/error.hpp"
#include "bec/oracle.hpp"

using namespace bec;
using oracle::ToySystem;

namespace {

ToySystem fixture_system() {
  ToySystem s;
  s.energies = {0.0, 1.0, 1.0};
  s.n_cap = 5;
  s.params = {Variant::NonExtensive, 0.2, 1.0, 0.1};  // βλ/V = 0.2, βμ = 0.1
  s.volume = 1.0;
  return s;
}

const char* fixture_path = BEC_FIXTURE_DIR "/oracle_fixture.json";

}  // namespace

TEST_CASE("single free mode approaches the geometric series") {
  ToySystem s;
  s.energies = {0.0};
  s.n_cap = 60;
  s.params = {Variant::Free, 0.0, 1.0, -std::log(2.0)};
  const auto r = oracle::enumerate_exact(s);
  CHECK(std::exp(r.log_z) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(r.mean_n == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("symmetric modes have equal occupations") {
  ToySystem s;
  s.energies = {0.3, 0.3};
  s.n_cap = 6;
  s.params = {Variant::NonExtensive, 0.7, 1.4, 0.5};
  s.volume = 2.0;
  const auto r = oracle::enumerate_exact(s);
  CHECK(r.mean[0] == r.mean[1]);
  CHECK(r.second[0] == r.second[1]);
}

TEST_CASE("hand-enumerated two-mode system") {
  // cap 1: configurations 00, 01, 10, 11.
  ToySystem s;
  s.energies = {0.2, 0.5};
  s.n_cap = 1;
  s.params = {Variant::NonExtensive, 0.4, 1.0, 0.3};
  s.volume = 2.0;
  const double w01 = std::exp(-(0.5 + 0.2 * 1 + 0.1 - 0.3));
  const double w10 = std::exp(-(0.2 + 0.2 * 1 + 0.1 - 0.3));
  const double w11 = std::exp(-(0.7 + 0.2 * 4 + 0.2 - 0.6));
  const double z = 1 + w01 + w10 + w11;
  const auto r = oracle::enumerate_exact(s);
  CHECK(r.log_z == doctest::Approx(std::log(z)).epsilon(1e-15));
  CHECK(r.mean[0] == doctest::Approx((w10 + w11) / z).epsilon(1e-15));
  CHECK(r.cross[0][1] == doctest::Approx(w11 / z).epsilon(1e-15));
  CHECK(r.total_cross[0] == doctest::Approx((w10 + 2 * w11) / z).epsilon(1e-15));
  const double boosted = (1 + w01 * std::exp(0.1) + w10 * std::exp(0.1) + w11 * std::exp(0.2)) / z;
  CHECK(r.log_square_exponential == doctest::Approx(std::log(boosted)).epsilon(1e-15));
}

TEST_CASE("permuting equal-energy modes leaves aggregates unchanged") {
  ToySystem a;
  a.energies = {0.0, 0.4, 0.9, 0.4};
  a.n_cap = 4;
  a.params = {Variant::NonExtensive, 0.5, 1.1, 0.2};
  a.volume = 1.5;
  ToySystem b = a;
  b.energies = {0.4, 0.0, 0.4, 0.9};
  const auto ra = oracle::enumerate_exact(a);
  const auto rb = oracle::enumerate_exact(b);
  CHECK(ra.log_z == doctest::Approx(rb.log_z).epsilon(1e-14));
  CHECK(ra.mean_n == doctest::Approx(rb.mean_n).epsilon(1e-14));
  CHECK(ra.second_n == doctest::Approx(rb.second_n).epsilon(1e-14));
  CHECK(ra.mean[1] == doctest::Approx(rb.mean[0]).epsilon(1e-14));
  CHECK(ra.mean[2] == doctest::Approx(rb.mean[3]).epsilon(1e-14));
}

TEST_CASE("mean occupation increases strictly with mu") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> e(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    ToySystem s;
    s.energies = {e(rng), e(rng), e(rng)};
    s.n_cap = 4;
    s.params = {static_cast<Variant>(trial % 3), 0.3 + e(rng), 0.5 + e(rng), -1.0};
    double prev = -1.0;
    for (int i = 0; i < 10; ++i) {
      s.params.mu = -1.0 + 0.25 * i;
      const double n = oracle::enumerate_exact(s).mean_n;
      CHECK(n > prev);
      prev = n;
    }
  }
}

TEST_CASE("lambda = 0 non-extensive reproduces the free gas") {
  ToySystem s;
  s.energies = {0.1, 0.2, 0.7};
  s.n_cap = 5;
  s.params = {Variant::NonExtensive, 0.0, 1.3, -0.2};
  const auto ne = oracle::enumerate_exact(s);
  s.params.variant = Variant::Free;
  const auto fr = oracle::enumerate_exact(s);
  CHECK(ne.log_z == fr.log_z);
  CHECK(ne.mean == fr.mean);
  CHECK(ne.cross == fr.cross);
}

TEST_CASE("budget and validation") {
  ToySystem s;
  s.energies.assign(8, 0.1);
  s.n_cap = 7;  // 8^8 > 1e7
  CHECK_THROWS_AS(oracle::enumerate_exact(s), SizingError);
  s.energies.assign(9, 0.1);
  s.n_cap = 1;
  CHECK_THROWS_AS(oracle::enumerate_exact(s), DomainError);
  s.energies.assign(8, 0.1);
  s.n_cap = 6;  // 7^8 ≈ 5.8e6
  CHECK(s.configuration_count() == 5764801);
  s.n_cap = 0;
  CHECK_THROWS_AS(oracle::enumerate_exact(s), DomainError);
}

TEST_CASE("regression fixture") {
  const auto r = oracle::enumerate_exact(fixture_system());
  if (std::getenv("BEC_FREEZE_FIXTURE")) {
    nlohmann::json j;
    j["system"] = {{"energies", {0.0, 1.0, 1.0}}, {"n_cap", 5}, {"variant", "non-extensive"},
                   {"lambda", 0.2}, {"beta", 1.0}, {"mu", 0.1}, {"volume", 1.0}};
    j["log_z"] = r.log_z;
    j["mean_0"] = r.mean[0];
    j["mean_n"] = r.mean_n;
    std::ofstream(fixture_path) << j.dump(2) << "\n";
  }
  std::ifstream in(fixture_path);
  REQUIRE(in.good());
  const auto j = nlohmann::json::parse(in);
  CHECK(r.log_z == doctest::Approx(j.at("log_z").get<double>()).epsilon(1e-13));
  CHECK(r.mean[0] == doctest::Approx(j.at("mean_0").get<double>()).epsilon(1e-13));
  CHECK(r.mean_n == doctest::Approx(j.at("mean_n").get<double>()).epsilon(1e-13));
}
