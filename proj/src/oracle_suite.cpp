#include "bec/oracle_suite.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bec::oracle {

ToySystem ToyCase::expand() const {
  ToySystem s;
  for (const auto& l : levels)
    for (std::int64_t i = 0; i < l.degeneracy; ++i) s.energies.push_back(l.energy);
  s.n_cap = n_cap;
  s.params = params;
  s.volume = volume;
  return s;
}

Comparison compare_with_partition(const ToyCase& toy) {
  const ToySystem sys = toy.expand();
  sys.validate();
  Comparison c;
  c.configurations = sys.configuration_count();
  const ExactResult exact = enumerate_exact(sys);
  c.cap_probability = exact.cap_probability;
  c.cap_stressed = exact.cap_probability > kCapStress;

  Truncation t;
  t.mode_cap = toy.n_cap;
  t.n_max = static_cast<int>(sys.energies.size()) * toy.n_cap;
  const PartitionEngine engine(toy.levels, toy.params.variant, toy.params.lambda, toy.params.beta, toy.volume, t);
  MomentRequest req;
  req.total_cross = true;
  for (std::size_t j = 0; j < toy.levels.size(); ++j)
    for (std::size_t k = j + 1; k < toy.levels.size(); ++k) req.pairs.emplace_back(j, k);
  const EnsembleMoments m = engine.moments(toy.params.mu, req);

  auto track = [&](const std::string& what, double dp, double ex) {
    const double scale = std::max({std::abs(dp), std::abs(ex), std::numeric_limits<double>::min()});
    const double dev = std::isfinite(dp) ? std::abs(dp - ex) / scale : std::numeric_limits<double>::infinity();
    if (dev > c.max_rel_deviation || c.worst_quantity.empty()) {
      c.max_rel_deviation = std::max(c.max_rel_deviation, dev);
      c.worst_quantity = what;
    }
  };
  track("log_z", m.log_z, exact.log_z);
  track("mean_n", m.mean_n, exact.mean_n);
  track("second_n", m.var_n + m.mean_n * m.mean_n, exact.second_n);

  std::vector<std::size_t> first_mode;
  std::size_t first = 0;
  for (const auto& l : toy.levels) {
    first_mode.push_back(first);
    first += static_cast<std::size_t>(l.degeneracy);
  }
  for (std::size_t i = 0; i < toy.levels.size(); ++i) {
    const std::size_t a = first_mode[i];
    const std::string s = "[" + std::to_string(i) + "]";
    track("mean" + s, m.shells[i].mean, exact.mean[a]);
    track("second" + s, m.shells[i].second, exact.second[a]);
    track("total_cross" + s, m.total_cross[i], exact.total_cross[a]);
    for (std::size_t k = i + 1; k < toy.levels.size(); ++k)
      track("cross[" + std::to_string(i) + "," + std::to_string(k) + "]", m.cross(i, k), exact.cross[a][first_mode[k]]);
  }
  return c;
}

std::vector<ToyCase> default_toy_suite() {
  using V = Variant;
  std::vector<ToyCase> s;
  auto add = [&](std::string name, std::vector<EnergyLevel> levels, int cap, V v, double lambda, double beta,
                 double mu, double volume) {
    s.push_back({std::move(name), std::move(levels), cap, ModelParams{v, lambda, beta, mu}, volume});
  };
  add("ne-two-level", {{0.0, 1}, {1.0, 2}}, 5, V::NonExtensive, 0.2, 1.0, 0.1, 1.0);
  add("ne-four-shell", {{0.0, 1}, {0.5, 2}, {1.0, 2}, {1.5, 1}}, 4, V::NonExtensive, 0.5, 1.5, 0.6, 2.0);
  add("ne-cold", {{0.0, 1}, {0.3, 3}}, 6, V::NonExtensive, 1.0, 2.5, 1.2, 3.0);
  add("ne-hot", {{0.0, 1}, {0.2, 2}, {0.9, 2}}, 4, V::NonExtensive, 0.1, 0.3, -0.5, 1.0);
  add("mf-two-level", {{0.0, 1}, {1.0, 2}}, 5, V::MeanField, 0.2, 1.0, 0.1, 1.0);
  add("mf-four-shell", {{0.0, 1}, {0.4, 2}, {0.8, 2}, {1.6, 1}}, 4, V::MeanField, 0.7, 1.2, 0.9, 2.5);
  add("mf-cold", {{0.0, 2}, {0.25, 2}}, 6, V::MeanField, 1.5, 3.0, 1.8, 4.0);
  add("mf-hot", {{0.0, 1}, {0.5, 3}}, 4, V::MeanField, 0.05, 0.4, -0.8, 0.5);
  add("free-three-shell", {{0.0, 1}, {0.6, 2}, {1.1, 2}}, 5, V::Free, 0.0, 1.0, -0.3, 1.0);
  add("free-four-shell", {{0.0, 1}, {0.2, 1}, {0.4, 2}, {0.7, 2}}, 4, V::Free, 0.0, 2.0, -0.05, 1.5);
  add("free-degenerate", {{0.1, 4}}, 5, V::Free, 0.0, 0.7, -1.0, 1.0);
  add("ne-degenerate", {{0.0, 1}, {0.5, 4}}, 3, V::NonExtensive, 0.3, 0.8, 0.4, 1.0);
  add("free-single-mode", {{0.0, 1}}, 6, V::Free, 0.0, 1.0, -2.0, 1.0);
  add("ne-cap-stressed", {{0.0, 1}, {0.1, 2}}, 2, V::NonExtensive, 0.01, 1.0, 0.5, 10.0);
  return s;
}

}  // namespace bec::oracle
