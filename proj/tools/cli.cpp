#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <set>
#include <sstream>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "bec/analysis.hpp"
#include "bec/error.hpp"
#include "bec/modes.hpp"
#include "bec/oracle_suite.hpp"
#include "bec/parallel.hpp"
#include "bec/partition.hpp"
#include "bec/thermolimit.hpp"

#ifndef BEC_TOOL_VERSION
#define BEC_TOOL_VERSION "0.0.0"
#endif

namespace bec::cli {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class AuditFailure : public Error {
 public:
  explicit AuditFailure(const std::string& what) : Error(ErrorKind::Audit, what) {}
};

std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = std::make_shared<spdlog::logger>("nonext-bec", std::make_shared<spdlog::sinks::stderr_sink_mt>());
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("NONEXT_BEC_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept an explicit "off".
    if (level != spdlog::level::off || std::string(env) == "off")
      logger->set_level(level);
    else
      logger->warn("ignoring NONEXT_BEC_LOG={}", env);
  }
  return logger;
}

spdlog::logger& log() {
  static const auto logger = make_logger();
  return *logger;
}

// ---------------------------------------------------------------------------
// Config access with unknown-key rejection.

const json& empty_object() {
  static const json e = json::object();
  return e;
}

class Section {
 public:
  Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_ + " must be a JSON object");
  }

  bool has(const std::string& key) const { return j_->contains(key); }

  template <class T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key " + where(key));
    return read<T>(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? read<T>(key) : fallback;
  }

  void mark(const std::string& key) { used_.insert(key); }

  Section child(const std::string& key) {
    used_.insert(key);
    return Section(has(key) ? j_->at(key) : empty_object(), where(key));
  }

  void finish() const {
    for (const auto& item : j_->items())
      if (!used_.count(item.key())) throw ConfigError("unknown key " + where(item.key()));
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

 private:
  template <class T>
  T read(const std::string& key) {
    used_.insert(key);
    const json& v = j_->at(key);
    if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::vector<double>>) {
      auto check = [&](const json& x) {
        if (!x.is_number()) throw ConfigError(where(key) + " must be numeric");
      };
      if constexpr (std::is_same_v<T, double>) {
        check(v);
      } else {
        if (!v.is_array()) throw ConfigError(where(key) + " must be an array");
        for (const auto& x : v) check(x);
      }
    }
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    }
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where(key) + " must be a boolean");
    }
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    }
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

void require_range(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

double positive(Section& s, const std::string& key, std::optional<double> fallback = {}) {
  const double v = fallback ? s.get<double>(key, *fallback) : s.require<double>(key);
  require_range(std::isfinite(v) && v > 0.0, s.where(key) + " must be positive and finite");
  return v;
}

std::vector<double> finite_list(Section& s, const std::string& key, std::optional<std::vector<double>> fallback = {}) {
  auto v = fallback ? s.get<std::vector<double>>(key, *fallback) : s.require<std::vector<double>>(key);
  require_range(!v.empty(), s.where(key) + " must not be empty");
  for (double x : v) require_range(std::isfinite(x), s.where(key) + " entries must be finite");
  return v;
}

std::vector<double> increasing_positive(Section& s, const std::string& key,
                                        std::optional<std::vector<double>> fallback = {}) {
  auto v = finite_list(s, key, fallback);
  for (std::size_t i = 0; i < v.size(); ++i) {
    require_range(v[i] > 0.0, s.where(key) + " entries must be positive");
    if (i > 0) require_range(v[i] > v[i - 1], s.where(key) + " must be strictly increasing");
  }
  return v;
}

int dimension_of(Section& s) {
  const int d = s.get<int>("dimension", 3);
  require_range(d >= 1 && d <= 3, s.where("dimension") + " must be 1, 2 or 3");
  return d;
}

Variant variant_of(Section& s) {
  const auto name = s.get<std::string>("variant", "non-extensive");
  try {
    return variant_from_string(name);
  } catch (const std::exception&) {
    throw ConfigError(s.where("variant") + " must be free, mean-field or non-extensive");
  }
}

CutoffRule cutoff_of(Section& parent) {
  Section s = parent.child("cutoff");
  CutoffRule r;
  r.beta_cutoff = positive(s, "beta_cutoff", r.beta_cutoff);
  r.min_cutoff = s.get<int>("min_cutoff", r.min_cutoff);
  require_range(r.min_cutoff >= 1 && r.min_cutoff <= 4096, s.where("min_cutoff") + " must be in [1, 4096]");
  s.finish();
  return r;
}

SolveOptions tolerances_of(Section& parent) {
  Section s = parent.child("tolerances");
  SolveOptions o;
  o.tail_tolerance = positive(s, "tail", o.tail_tolerance);
  require_range(o.tail_tolerance <= 1e-6, s.where("tail") + " must be <= 1e-6");
  o.density_residual = positive(s, "density_residual", o.density_residual);
  o.max_n_max = s.get<int>("max_n_max", o.max_n_max);
  require_range(o.max_n_max >= 16 && o.max_n_max <= (1 << 24), s.where("max_n_max") + " must be in [16, 2^24]");
  s.finish();
  return o;
}

struct Loaded {
  json doc;
  std::string hash;
};

Loaded load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  Loaded l;
  try {
    l.doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  if (!l.doc.is_object()) throw ConfigError("config must be a JSON object");
  if (!l.doc.contains("version")) throw ConfigError("config is missing the mandatory version field");
  if (!l.doc["version"].is_number_integer() || l.doc["version"].get<int>() != kSchemaVersion)
    throw ConfigError("unsupported config version (expected " + std::to_string(kSchemaVersion) + ")");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(l.doc.dump())));
  l.hash = buf;
  return l;
}

// ---------------------------------------------------------------------------
// Output

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { add(std::move(header)); }
  void add(std::vector<std::string> row) {
    if (row.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) text_ += (i ? "," : "") + csv_field(row[i]);
    text_ += "\n";
  }
  const std::string& text() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Output {
  fs::path dir;
  std::ostream* out;

  void write(const std::string& name, const std::string& text) const {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
    const fs::path p = dir / name;
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + p.string());
    f << text;
    if (!f) throw ConfigError("failed writing " + p.string());
    *out << "wrote " << p.string() << "\n";
  }
};

ordered_json summary_header(const std::string& command, const Loaded& cfg) {
  ordered_json j;
  j["command"] = command;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = BEC_TOOL_VERSION;
  j["config_hash"] = cfg.hash;
  return j;
}

struct Context {
  Loaded cfg;
  Output output;
  int threads = 1;
  bool threads_from_flag = false;
};

int resolve_threads(Section& root, const Context& ctx) {
  const int from_config = root.get<int>("threads", 1);
  require_range(from_config >= 1 && from_config <= 256, root.where("threads") + " must be in [1, 256]");
  return ctx.threads_from_flag ? ctx.threads : from_config;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_modes(Context& ctx) {
  Section root(ctx.cfg.doc, "config");
  root.require<int>("version");
  Section b = root.child("box");
  BoxSpec box;
  box.dimension = dimension_of(b);
  box.side_length = positive(b, "side_length");
  box.mass = positive(b, "mass", 1.0);
  box.cutoff = b.require<int>("cutoff");
  b.finish();
  root.finish();
  box.validate();
  const auto shells = enumerate_shells(box);
  Csv csv({"norm2", "k_norm", "energy", "degeneracy", "representative"});
  for (const auto& s : shells) {
    std::string rep;
    for (std::size_t i = 0; i < s.representative.size(); ++i)
      rep += (i ? " " : "") + std::to_string(s.representative[i]);
    csv.add({std::to_string(s.norm2), num(s.k_norm), num(s.energy), std::to_string(s.degeneracy), rep});
  }
  auto j = summary_header("modes", ctx.cfg);
  j["shells"] = shells.size();
  j["modes"] = box.mode_count();
  j["volume"] = box.volume();
  ctx.output.write("modes.csv", csv.text());
  ctx.output.write("modes.json", j.dump(2) + "\n");
  return 0;
}

int cmd_limits(Context& ctx) {
  Section root(ctx.cfg.doc, "config");
  root.require<int>("version");
  Section g = root.child("gas");
  BoseGas gas;
  gas.beta = positive(g, "beta");
  gas.mass = positive(g, "mass", 1.0);
  gas.dimension = dimension_of(g);
  g.finish();
  const auto alphas = finite_list(root, "alphas", std::vector<double>{-1.0, -0.1, 0.0});
  for (double a : alphas) require_range(a <= 0.0, root.where("alphas") + " entries must be <= 0");
  Section m = root.child("mean_field");
  const bool with_mf = root.has("mean_field");
  double lambda = 0.0;
  std::vector<double> mus;
  if (with_mf) {
    lambda = positive(m, "lambda");
    mus = finite_list(m, "mus");
  }
  m.finish();
  const bool with_rho = root.has("rho");
  const double rho = with_rho ? positive(root, "rho") : 0.0;
  const int threads = resolve_threads(root, ctx);
  root.finish();

  Csv csv({"alpha", "pressure_series", "pressure_quadrature", "density_series", "density_quadrature",
           "route_discrepancy", "method"});
  std::vector<LimitQuantities> rows(alphas.size());
  parallel_for(alphas.size(), threads, [&](std::size_t i) {
    LimitQuantities q;
    q.alpha = alphas[i];
    q.pressure = bose_pressure(gas, q.alpha);
    q.pressure_quadrature = bose_pressure_quadrature(gas, q.alpha);
    q.pressure_method = -gas.beta * q.alpha >= std::log(2.0) ? "series" : "expansion";
    if (q.alpha == 0.0 && gas.dimension <= 2) {
      q.density = q.density_quadrature = INFINITY;
      q.density_method = "divergent";
    } else {
      q.density = bose_density(gas, q.alpha);
      q.density_quadrature = bose_density_quadrature(gas, q.alpha);
      q.density_method = q.pressure_method;
    }
    rows[i] = q;
  });
  for (const auto& q : rows)
    csv.add({num(q.alpha), num(q.pressure), num(q.pressure_quadrature), num(q.density), num(q.density_quadrature),
             num(q.route_discrepancy()), q.density_method});
  ctx.output.write("limits.csv", csv.text());

  auto j = summary_header("limits", ctx.cfg);
  j["critical_density"] = gas.dimension >= 3 ? number_or_null(critical_density(gas)) : json(nullptr);
  double worst = 0.0;
  for (const auto& q : rows)
    if (std::isfinite(q.route_discrepancy())) worst = std::max(worst, q.route_discrepancy());
  j["max_route_discrepancy"] = worst;
  if (with_rho && gas.dimension >= 3) {
    j["critical_beta"] = critical_beta(rho, gas.mass, gas.dimension);
    j["critical_beta_bisection"] = critical_beta_bisection(rho, gas.mass, gas.dimension);
  }
  if (with_mf) {
    Csv mf({"mu", "pressure_mf", "alpha_star", "density", "condensed"});
    for (double mu : mus) {
      const auto r = mf_pressure(gas, mu, lambda);
      mf.add({num(mu), num(r.pressure), num(r.alpha_star), num(r.density), r.condensed ? "true" : "false"});
    }
    ctx.output.write("mean_field.csv", mf.text());
  }
  ctx.output.write("limits.json", j.dump(2) + "\n");
  return 0;
}

struct ModelBlock {
  Variant variant;
  double lambda;
  double beta;
};

ModelBlock model_of(Section& root, double rho_for_beta, int dimension, double mass) {
  Section m = root.child("model");
  ModelBlock b;
  b.variant = variant_of(m);
  b.lambda = b.variant == Variant::Free ? m.get<double>("lambda", 0.0) : positive(m, "lambda");
  require_range(b.lambda >= 0.0, m.where("lambda") + " must be >= 0");
  const bool direct = m.has("beta"), relative = m.has("beta_over_critical");
  require_range(direct != relative, m.where("beta") + " or beta_over_critical (exactly one) is required");
  if (direct) {
    b.beta = positive(m, "beta");
  } else {
    require_range(rho_for_beta > 0.0 && dimension >= 3, m.where("beta_over_critical") + " needs rho and d = 3");
    b.beta = positive(m, "beta_over_critical") * critical_beta(rho_for_beta, mass, dimension);
  }
  m.finish();
  return b;
}

int cmd_pressure(Context& ctx) {
  Section root(ctx.cfg.doc, "config");
  root.require<int>("version");
  Section b = root.child("box");
  const int dimension = dimension_of(b);
  const double mass = positive(b, "mass", 1.0);
  const auto sides = increasing_positive(b, "side_lengths");
  b.finish();
  const CutoffRule cutoff = cutoff_of(root);
  const ModelBlock model = model_of(root, 0.0, dimension, mass);
  const auto mus = finite_list(root, "mus");
  if (model.variant == Variant::Free)
    for (double mu : mus) require_range(mu < 0.0, root.where("mus") + " must be < 0 for the free gas");
  SolveOptions solve = tolerances_of(root);
  solve.free_closed_form = false;
  const int threads = resolve_threads(root, ctx);
  root.finish();

  const BoseGas gas{model.beta, mass, dimension};
  struct Row {
    double l, v, mu, p, p_mf, p_lim, alpha, tail;
  };
  std::vector<Row> rows(mus.size() * sides.size());
  parallel_for(rows.size(), threads, [&](std::size_t i) {
    const double mu = mus[i / sides.size()];
    BoxSpec box;
    box.dimension = dimension;
    box.mass = mass;
    box.side_length = sides[i % sides.size()];
    box.cutoff = cutoff.lattice_cutoff(box.side_length, model.beta, mass);
    const ModelParams params{model.variant, model.lambda, model.beta, mu};
    const StatePoint s = evaluate_at_mu(box, params, solve);
    Row r{box.side_length, s.volume(), mu, s.moments.pressure, 0, 0, 0, s.moments.tail_mass};
    if (model.variant == Variant::Free) {
      const double closed = free_ensemble(s.levels(), model.beta, mu, s.volume()).pressure;
      if (std::abs(closed - r.p) > 1e-10 * std::max(std::abs(closed), 1e-300))
        throw TruncationError("free-gas DP pressure " + num(r.p) + " disagrees with the closed form " + num(closed));
      r.p_mf = r.p;
      r.p_lim = bose_pressure(gas, mu);
      r.alpha = mu;
    } else {
      ModelParams mf = params;
      mf.variant = Variant::MeanField;
      r.p_mf = evaluate_at_mu(box, mf, solve).moments.pressure;
      const auto lim = mf_pressure(gas, mu, model.lambda);
      r.p_lim = lim.pressure;
      r.alpha = lim.alpha_star;
    }
    log().info("pressure mu={} L={} done", mu, box.side_length);
    rows[i] = r;
  });

  Csv csv({"L", "V", "mu", "pressure_finite", "pressure_mf_finite", "pressure_mf_limit", "alpha_star", "tail_mass"});
  for (const auto& r : rows)
    csv.add({num(r.l), num(r.v), num(r.mu), num(r.p), num(r.p_mf), num(r.p_lim), num(r.alpha), num(r.tail)});
  auto j = summary_header("pressure", ctx.cfg);
  j["variant"] = to_string(model.variant);
  j["beta"] = model.beta;
  j["lambda"] = model.lambda;
  j["rows"] = rows.size();
  ordered_json gaps = ordered_json::array();
  for (std::size_t a = 0; a < mus.size(); ++a) {
    ordered_json g;
    g["mu"] = mus[a];
    std::vector<double> gap;
    bool monotone = true;
    for (std::size_t k = 0; k < sides.size(); ++k) {
      const auto& r = rows[a * sides.size() + k];
      gap.push_back(std::abs(r.p - r.p_lim));
      if (k > 0 && !(gap[k] < gap[k - 1])) monotone = false;
    }
    g["gap_to_limit"] = gap;
    g["gap_strictly_decreasing"] = monotone;
    g["final_relative_gap"] = gap.back() / std::abs(rows[a * sides.size() + sides.size() - 1].p_lim);
    gaps.push_back(g);
  }
  j["convergence"] = gaps;
  ctx.output.write("pressure.csv", csv.text());
  ctx.output.write("pressure.json", j.dump(2) + "\n");
  return 0;
}

int cmd_sweep(Context& ctx) {
  Section root(ctx.cfg.doc, "config");
  root.require<int>("version");
  SweepConfig c;
  Section b = root.child("box");
  c.dimension = dimension_of(b);
  c.mass = positive(b, "mass", 1.0);
  c.side_lengths = increasing_positive(b, "side_lengths", c.side_lengths);
  require_range(c.side_lengths.size() >= 2, b.where("side_lengths") + " needs at least two volumes");
  b.finish();
  c.cutoff = cutoff_of(root);
  c.rho = positive(root, "rho", c.rho);
  const ModelBlock model = model_of(root, c.rho, c.dimension, c.mass);
  c.variant = model.variant;
  c.lambda = model.lambda;
  c.beta = model.beta;
  c.deltas = increasing_positive(root, "deltas", c.deltas);
  const auto band = root.get<std::string>("band_mode", "k_norm");
  try {
    c.band_mode = band_mode_from_string(band);
  } catch (const std::exception&) {
    throw ConfigError(root.where("band_mode") + " must be k_norm or energy");
  }
  Section cl = root.child("classifier");
  c.classifier.density_floor = positive(cl, "density_floor", c.classifier.density_floor);
  c.classifier.exponent_cut = cl.get<double>("exponent_cut", c.classifier.exponent_cut);
  require_range(std::isfinite(c.classifier.exponent_cut) && c.classifier.exponent_cut < 0.0,
                cl.where("exponent_cut") + " must be negative");
  cl.finish();
  c.solve = tolerances_of(root);
  c.threads = resolve_threads(root, ctx);
  root.finish();

  const ScalingReport r = scaling_sweep(c);
  std::vector<std::string> header{"L", "V", "lattice_cutoff", "n_max", "mu", "density", "ground_density",
                                  "max_mode_density"};
  for (double d : c.deltas) header.push_back("band_density_" + num(d));
  for (const char* h : {"total_cross_ground", "square_sum", "tail_mass"}) header.emplace_back(h);
  Csv csv(header);
  for (const auto& row : r.rows) {
    std::vector<std::string> cells{num(row.side_length), num(row.volume), std::to_string(row.lattice_cutoff),
                                   std::to_string(row.n_max), num(row.mu), num(row.density),
                                   num(row.ground_density), num(row.max_mode_density)};
    for (double x : row.band_density) cells.push_back(num(x));
    cells.push_back(num(row.total_cross_ground));
    cells.push_back(num(row.square_sum));
    cells.push_back(num(row.tail_mass));
    csv.add(std::move(cells));
  }
  auto j = summary_header("sweep", ctx.cfg);
  j["variant"] = to_string(c.variant);
  j["beta"] = c.beta;
  j["lambda"] = c.lambda;
  j["rho"] = c.rho;
  j["classification"] = to_string(r.classification);
  j["ground_exponent"] = number_or_null(r.ground_exponent);
  j["band_exponent"] = number_or_null(r.band_exponent);
  j["band_excess_last"] = r.band_excess_last;
  j["normal_band_bound"] = number_or_null(r.normal_band_bound);
  j["delta_min"] = r.delta_min;
  j["ground_decreasing"] = r.ground_decreasing;
  j["critical_density"] = number_or_null(r.critical_density);
  ctx.output.write("sweep.csv", csv.text());
  ctx.output.write("sweep.json", j.dump(2) + "\n");
  return 0;
}

int cmd_audit(Context& ctx) {
  Section root(ctx.cfg.doc, "config");
  root.require<int>("version");
  AuditGridConfig c;
  Section g = root.child("grid");
  c.lambdas = increasing_positive(g, "lambdas", c.lambdas);
  c.betas = increasing_positive(g, "betas", c.betas);
  c.mus = finite_list(g, "mus", c.mus);
  c.side_lengths = increasing_positive(g, "side_lengths", c.side_lengths);
  g.finish();
  Section b = root.child("box");
  c.dimension = dimension_of(b);
  c.mass = positive(b, "mass", 1.0);
  b.finish();
  c.cutoff = cutoff_of(root);
  Section og = root.child("og");
  c.og_alphas = finite_list(og, "alphas", c.og_alphas);
  c.og_shifts = finite_list(og, "shifts", c.og_shifts);
  og.finish();
  c.lemma4_deltas = increasing_positive(root, "lemma4_deltas", c.lemma4_deltas);
  const int j_index = root.get<int>("lemma_j", 0);
  require_range(j_index >= 0, root.where("lemma_j") + " must be >= 0");
  c.lemma_j = static_cast<std::size_t>(j_index);
  Section hooks = root.child("test_hooks");
  c.flip_in2 = hooks.get<bool>("flip_in2", false);
  hooks.finish();
  c.solve = tolerances_of(root);
  c.threads = resolve_threads(root, ctx);
  root.finish();

  const AuditReport r = run_audit_grid(c);
  Csv csv({"id", "key", "lhs", "rhs", "margin", "pass", "reason"});
  for (const auto& a : r.audits)
    csv.add({a.id, a.key, num(a.lhs), num(a.rhs), num(a.margin), to_string(a.status), a.reason});
  auto j = summary_header("audit", ctx.cfg);
  j["state_points"] = r.state_points;
  j["audits"] = r.audits.size();
  j["failures"] = r.failures();
  j["skipped"] = r.skipped();
  ordered_json by_id = ordered_json::object();
  for (const auto& a : r.audits) {
    auto& e = by_id[a.id];
    if (e.is_null()) e = {{"pass", 0}, {"fail", 0}, {"skipped", 0}};
    e[to_string(a.status)] = e[to_string(a.status)].get<int>() + 1;
  }
  j["by_id"] = by_id;
  if (c.flip_in2) j["test_hooks"] = {{"flip_in2", true}};
  ctx.output.write("audit.csv", csv.text());
  ctx.output.write("audit.json", j.dump(2) + "\n");
  if (r.failures() > 0) throw AuditFailure(std::to_string(r.failures()) + " audit instance(s) failed");
  return 0;
}

int cmd_oracle_check(Context& ctx) {
  std::vector<oracle::ToyCase> toys;
  Section root(ctx.cfg.doc, "config");
  root.require<int>("version");
  if (root.has("toys")) {
    const json& list = ctx.cfg.doc.at("toys");
    root.mark("toys");
    if (!list.is_array() || list.empty()) throw ConfigError("config.toys must be a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section t(list[i], "config.toys[" + std::to_string(i) + "]");
      oracle::ToyCase toy;
      toy.name = t.get<std::string>("name", "toy-" + std::to_string(i));
      const json& levels = list[i].contains("levels") ? list[i].at("levels") : json();
      t.mark("levels");
      if (!levels.is_array() || levels.empty()) throw ConfigError(t.where("levels") + " must be a non-empty array");
      for (std::size_t k = 0; k < levels.size(); ++k) {
        Section l(levels[k], t.where("levels") + "[" + std::to_string(k) + "]");
        const double e = l.require<double>("energy");
        require_range(std::isfinite(e), l.where("energy") + " must be finite");
        const int g = l.get<int>("degeneracy", 1);
        require_range(g >= 1, l.where("degeneracy") + " must be >= 1");
        l.finish();
        toy.levels.push_back({e, g});
      }
      toy.n_cap = t.require<int>("n_cap");
      toy.params.variant = variant_of(t);
      toy.params.lambda = t.get<double>("lambda", 0.0);
      toy.params.beta = positive(t, "beta");
      toy.params.mu = t.require<double>("mu");
      toy.volume = positive(t, "volume", 1.0);
      t.finish();
      toys.push_back(std::move(toy));
    }
  } else {
    toys = oracle::default_toy_suite();
  }
  const int threads = resolve_threads(root, ctx);
  root.finish();

  std::vector<oracle::Comparison> results(toys.size());
  parallel_for(toys.size(), threads, [&](std::size_t i) { results[i] = oracle::compare_with_partition(toys[i]); });
  Csv csv({"name", "variant", "modes", "n_cap", "configurations", "max_rel_deviation", "worst_quantity",
           "cap_probability", "cap_stressed"});
  double worst = 0.0;
  std::size_t stressed = 0;
  for (std::size_t i = 0; i < toys.size(); ++i) {
    const auto& t = toys[i];
    const auto& r = results[i];
    std::int64_t modes = 0;
    for (const auto& l : t.levels) modes += l.degeneracy;
    csv.add({t.name, to_string(t.params.variant), std::to_string(modes), std::to_string(t.n_cap),
             std::to_string(r.configurations), num(r.max_rel_deviation), r.worst_quantity, num(r.cap_probability),
             r.cap_stressed ? "true" : "false"});
    worst = std::max(worst, r.max_rel_deviation);
    if (r.cap_stressed) {
      ++stressed;
      log().info("toy {} sits at its cap with probability {:.3g}", t.name, r.cap_probability);
    }
  }
  auto j = summary_header("oracle-check", ctx.cfg);
  j["toys"] = toys.size();
  j["max_rel_deviation"] = worst;
  j["tolerance"] = 1e-10;
  j["cap_stressed"] = stressed;
  ctx.output.write("oracle.csv", csv.text());
  ctx.output.write("oracle.json", j.dump(2) + "\n");
  if (!(worst <= 1e-10)) throw AuditFailure("oracle deviation " + num(worst) + " above 1e-10");
  return 0;
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact finite-volume ensembles of the non-extensive Bose gas", "nonext-bec"};
  app.set_version_flag("--version", BEC_TOOL_VERSION);
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  bool seedless = false;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (overrides the config)")->check(CLI::Range(1, 256));
  app.add_flag("--seedless", seedless, "accepted for compatibility; no RNG is used")->disable_flag_override();
  app.fallthrough();

  using Handler = int (*)(Context&);
  const std::vector<std::tuple<std::string, std::string, Handler>> commands{
      {"pressure", "finite-volume pressure against the mean-field limit", cmd_pressure},
      {"sweep", "density-constrained scaling sweep with classification", cmd_sweep},
      {"audit", "inequality audits over a grid of state points", cmd_audit},
      {"oracle-check", "DP against exhaustive enumeration on toy systems", cmd_oracle_check},
      {"limits", "infinite-volume Bose functions by two routes", cmd_limits},
      {"modes", "shell table of a box", cmd_modes},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, handler] : commands) subs.push_back(app.add_subcommand(name, help));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Config);
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const auto& [name, help, handler] = commands[i];
      Context ctx;
      if (config_path.empty()) {
        if (name != "oracle-check") throw ConfigError(name + " needs --config");
        ctx.cfg.doc = json{{"version", kSchemaVersion}};
        ctx.cfg.hash = "default";
      } else {
        ctx.cfg = load_config(config_path);
      }
      ctx.output = Output{fs::path(out_dir), &out};
      ctx.threads = threads;
      ctx.threads_from_flag = threads > 0;
      log().info("running {} with config hash {}", name, ctx.cfg.hash);
      return handler(ctx);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return static_cast<int>(ErrorKind::Resource);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace bec::cli
