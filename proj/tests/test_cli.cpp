#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(BEC_FIXTURE_DIR) / "configs";
const fs::path kWork = fs::path(BEC_WORK_DIR) / "cli_work";

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "nonext-bec");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = bec::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string out_dir(const std::string& name) { return (kWork / name).string(); }

}  // namespace

TEST_CASE("fnv1a reference values") {
  CHECK(bec::cli::fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(bec::cli::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}

TEST_CASE("config errors exit with 2") {
  const auto no_version = write_config("no_version.json", R"({"box": {"side_length": 4, "cutoff": 2}})");
  CHECK(run({"modes", "--config", no_version.string(), "--out", out_dir("e")}).code == 2);
  const auto unknown = write_config("unknown.json", R"({"version": 1, "box": {"side_length": 4, "cutoff": 2, "colour": 1}})");
  const auto r = run({"modes", "--config", unknown.string(), "--out", out_dir("e")});
  CHECK(r.code == 2);
  CHECK(r.err.find("config.box.colour") != std::string::npos);
  const auto top = write_config("top.json", R"({"version": 1, "box": {"side_length": 4, "cutoff": 2}, "extra": 0})");
  CHECK(run({"modes", "--config", top.string(), "--out", out_dir("e")}).code == 2);
  const auto wrong_version = write_config("v2.json", R"({"version": 2})");
  CHECK(run({"oracle-check", "--config", wrong_version.string(), "--out", out_dir("e")}).code == 2);
  const auto bad_variant = write_config(
      "variant.json",
      R"({"version": 1, "box": {"side_lengths": [2, 3]}, "model": {"variant": "ideal", "lambda": 0.5, "beta": 1}, "mus": [0]})");
  CHECK(run({"pressure", "--config", bad_variant.string(), "--out", out_dir("e")}).code == 2);
  const auto bad_range = write_config(
      "range.json", R"({"version": 1, "box": {"side_lengths": [3, 2]}, "model": {"lambda": 0.5, "beta": 1}, "mus": [0]})");
  CHECK(run({"pressure", "--config", bad_range.string(), "--out", out_dir("e")}).code == 2);
  const auto free_positive_mu = write_config(
      "free_mu.json",
      R"({"version": 1, "box": {"side_lengths": [2, 3]}, "model": {"variant": "free", "beta": 1}, "mus": [0.1]})");
  CHECK(run({"pressure", "--config", free_positive_mu.string(), "--out", out_dir("e")}).code == 2);
  CHECK(run({"pressure", "--out", out_dir("e")}).code == 2);
  CHECK(run({"modes", "--config", (kWork / "missing.json").string()}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
}

TEST_CASE("seedless is a bare flag") {
  const auto cfg = (kConfigs / "modes.json").string();
  CHECK(run({"modes", "--config", cfg, "--out", out_dir("seed"), "--seedless"}).code == 0);
  CHECK(run({"modes", "--config", cfg, "--out", out_dir("seed"), "--seedless=1"}).code == 2);
  CHECK(run({"modes", "--config", cfg, "--out", out_dir("seed"), "--threads", "0"}).code == 2);
}

TEST_CASE("resource and certification failures") {
  const auto tiny = write_config("tiny.json", R"({"version": 1, "box": {"side_lengths": [4, 6]},
      "model": {"lambda": 0.5, "beta": 1}, "mus": [1.0], "tolerances": {"max_n_max": 16}})");
  CHECK(run({"pressure", "--config", tiny.string(), "--out", out_dir("tiny")}).code == 5);
  // At ρ = 0.9 the bisection cannot land on the density exactly.
  const auto residual = write_config("residual.json", R"({"version": 1, "box": {"side_lengths": [2, 3, 4]}, "rho": 0.9,
      "cutoff": {"beta_cutoff": 16}, "model": {"lambda": 0.5, "beta": 1}, "tolerances": {"density_residual": 1e-300}})");
  CHECK(run({"sweep", "--config", residual.string(), "--out", out_dir("residual")}).code == 3);
}

TEST_CASE("modes table") {
  REQUIRE(run({"modes", "--config", (kConfigs / "modes.json").string(), "--out", out_dir("modes")}).code == 0);
  const auto j = nlohmann::json::parse(slurp(kWork / "modes" / "modes.json"));
  CHECK(j.at("modes").get<long>() == 343);
  CHECK(j.at("schema_version").get<int>() == bec::cli::kSchemaVersion);
  CHECK(j.at("config_hash").get<std::string>().size() == 16);
  CHECK(j.contains("tool_version"));
  const auto csv = slurp(kWork / "modes" / "modes.csv");
  CHECK(csv.rfind("norm2,k_norm,energy,degeneracy,representative\n", 0) == 0);
}

TEST_CASE("free-gas pressure run cross-checks the closed form") {
  REQUIRE(run({"pressure", "--config", (kConfigs / "pressure_free.json").string(), "--out", out_dir("pf")}).code == 0);
  std::istringstream csv(slurp(kWork / "pf" / "pressure.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "L,V,mu,pressure_finite,pressure_mf_finite,pressure_mf_limit,alpha_star,tail_mass");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("alpha_star hits zero beyond the mean-field boundary") {
  // β = 1, λ = 0.5: 2λρ_c ≈ 0.166.
  REQUIRE(run({"pressure", "--config", (kConfigs / "pressure_small.json").string(), "--out", out_dir("ps")}).code == 0);
  std::istringstream csv(slurp(kWork / "ps" / "pressure.csv"));
  std::string line;
  std::getline(csv, line);
  while (std::getline(csv, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    const double mu = std::stod(cells[2]), alpha = std::stod(cells[6]);
    if (mu > 0.2) {
      CHECK(alpha == 0.0);
    } else {
      CHECK(alpha < 0.0);
    }
  }
}

TEST_CASE("audit exit codes and skipped rows") {
  const auto ok = run({"audit", "--config", (kConfigs / "audit_small.json").string(), "--out", out_dir("audit")});
  CHECK(ok.code == 0);
  const auto csv = slurp(kWork / "audit" / "audit.csv");
  CHECK(csv.find(",fail,") == std::string::npos);
  const auto flipped = run({"audit", "--config", (kConfigs / "audit_flip_in2.json").string(), "--out", out_dir("flip")});
  CHECK(flipped.code == 4);
  const auto j = nlohmann::json::parse(slurp(kWork / "flip" / "audit.json"));
  CHECK(j.at("failures").get<int>() > 0);
  CHECK(j.at("by_id").at("in2").at("fail").get<int>() > 0);
}

TEST_CASE("vacuous lemma4 instances are reported as skipped") {
  const auto cfg = write_config("skip.json", R"({"version": 1,
      "grid": {"lambdas": [0.5], "betas": [1.0], "mus": [0.5], "side_lengths": [2, 3, 4]},
      "cutoff": {"beta_cutoff": 16}, "lemma4_deltas": [0.3]})");
  REQUIRE(run({"audit", "--config", cfg.string(), "--out", out_dir("skip")}).code == 0);
  const auto csv = slurp(kWork / "skip" / "audit.csv");
  CHECK(csv.find("lemma4,") != std::string::npos);
  CHECK(csv.find(",skipped,") != std::string::npos);
}

TEST_CASE("oracle check default suite") {
  REQUIRE(run({"oracle-check", "--out", out_dir("oracle")}).code == 0);
  const auto j = nlohmann::json::parse(slurp(kWork / "oracle" / "oracle.json"));
  CHECK(j.at("max_rel_deviation").get<double>() < 1e-10);
  CHECK(j.at("cap_stressed").get<int>() >= 1);
  const auto csv = slurp(kWork / "oracle" / "oracle.csv");
  CHECK(csv.find("free-single-mode") != std::string::npos);
  const auto too_big = write_config("big.json", R"({"version": 1, "toys": [{"levels": [{"energy": 0, "degeneracy": 8}],
      "n_cap": 7, "variant": "free", "beta": 1, "mu": -1}]})");
  CHECK(run({"oracle-check", "--config", too_big.string(), "--out", out_dir("big")}).code == 5);
}

TEST_CASE("limits and sweep summaries") {
  REQUIRE(run({"limits", "--config", (kConfigs / "limits.json").string(), "--out", out_dir("limits")}).code == 0);
  const auto l = nlohmann::json::parse(slurp(kWork / "limits" / "limits.json"));
  CHECK(l.at("max_route_discrepancy").get<double>() < 1e-10);
  CHECK(fs::exists(kWork / "limits" / "mean_field.csv"));
  REQUIRE(run({"sweep", "--config", (kConfigs / "sweep_small.json").string(), "--out", out_dir("sweep")}).code == 0);
  const auto s = nlohmann::json::parse(slurp(kWork / "sweep" / "sweep.json"));
  CHECK(s.contains("classification"));
  CHECK(s.contains("ground_exponent"));
  CHECK(s.contains("config_hash"));
}
