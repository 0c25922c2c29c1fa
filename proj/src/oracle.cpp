#include "bec/oracle.hpp"

#include <cmath>
#include <limits>

#include "bec/error.hpp"

namespace bec::oracle {

namespace {

// Neumaier compensated sum.
class Accumulator {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Advances the odometer; false once every configuration has been visited.
bool next(std::vector<int>& n, int cap) {
  for (std::size_t i = n.size(); i-- > 0;) {
    if (n[i] < cap) {
      ++n[i];
      return true;
    }
    n[i] = 0;
  }
  return false;
}

}  // namespace

std::int64_t ToySystem::configuration_count() const {
  std::int64_t count = 1;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (count > kMaxConfigurations) return std::numeric_limits<std::int64_t>::max();
    count *= static_cast<std::int64_t>(n_cap) + 1;
  }
  return count;
}

void ToySystem::validate() const {
  if (energies.empty()) throw DomainError("toy system needs at least one mode");
  if (energies.size() > kMaxModes) throw DomainError("toy system is limited to 8 modes");
  if (n_cap < 1) throw DomainError("toy occupation cap must be >= 1");
  if (!(volume > 0.0)) throw DomainError("volume must be positive");
  if (!(params.beta > 0.0)) throw DomainError("beta must be positive");
  if (!(params.lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (configuration_count() > kMaxConfigurations)
    throw SizingError("toy system exceeds the enumeration budget of 1e7 configurations");
}

double energy(const ToySystem& sys, const std::vector<int>& occupation) {
  const double lambda = sys.params.effective_lambda();
  double kinetic = 0.0;
  double total = 0.0;
  double squares = 0.0;
  for (std::size_t k = 0; k < occupation.size(); ++k) {
    const double n = occupation[k];
    kinetic += sys.energies[k] * n;
    total += n;
    squares += n * n;
  }
  double h = kinetic + lambda / sys.volume * total * total - sys.params.mu * total;
  if (sys.params.variant == Variant::NonExtensive) h += lambda / (2.0 * sys.volume) * squares;
  return h;
}

ExactResult enumerate_exact(const ToySystem& sys) {
  sys.validate();
  const std::size_t m = sys.energies.size();
  const double beta = sys.params.beta;
  const double boost = beta * sys.params.effective_lambda() / (2.0 * sys.volume);

  std::vector<int> n(m, 0);
  double shift = -std::numeric_limits<double>::infinity();
  do {
    shift = std::max(shift, -beta * energy(sys, n));
  } while (next(n, sys.n_cap));

  Accumulator z, first_n, second_n;
  std::vector<Accumulator> first(m), total_cross(m), at_cap(m);
  std::vector<std::vector<Accumulator>> pair(m, std::vector<Accumulator>(m));
  // exp((βλ/2V)Σn²) can be large; it is summed with its own shift.
  double boost_shift = -std::numeric_limits<double>::infinity();
  std::fill(n.begin(), n.end(), 0);
  do {
    double sq = 0.0;
    for (int v : n) sq += double(v) * v;
    boost_shift = std::max(boost_shift, -beta * energy(sys, n) + boost * sq);
  } while (next(n, sys.n_cap));
  Accumulator boosted;

  std::fill(n.begin(), n.end(), 0);
  do {
    const double log_w = -beta * energy(sys, n);
    const double w = std::exp(log_w - shift);
    double total = 0.0;
    double sq = 0.0;
    for (int v : n) {
      total += v;
      sq += double(v) * v;
    }
    z.add(w);
    first_n.add(w * total);
    second_n.add(w * total * total);
    for (std::size_t j = 0; j < m; ++j) {
      if (n[j] == 0) continue;
      if (n[j] == sys.n_cap) at_cap[j].add(w);
      first[j].add(w * n[j]);
      total_cross[j].add(w * total * n[j]);
      for (std::size_t k = 0; k < m; ++k) pair[j][k].add(w * n[j] * n[k]);
    }
    boosted.add(std::exp(log_w + boost * sq - boost_shift));
  } while (next(n, sys.n_cap));

  ExactResult r;
  const double zv = z.value();
  r.log_z = shift + std::log(zv);
  r.pressure = r.log_z / (beta * sys.volume);
  r.mean_n = first_n.value() / zv;
  r.second_n = second_n.value() / zv;
  r.mean.resize(m);
  r.second.resize(m);
  r.total_cross.resize(m);
  r.cross.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    r.mean[j] = first[j].value() / zv;
    r.total_cross[j] = total_cross[j].value() / zv;
    for (std::size_t k = 0; k < m; ++k) r.cross[j][k] = pair[j][k].value() / zv;
    r.second[j] = r.cross[j][j];
  }
  for (std::size_t j = 0; j < m; ++j) r.cap_probability = std::max(r.cap_probability, at_cap[j].value() / zv);
  r.log_square_exponential = boost_shift + std::log(boosted.value()) - r.log_z;
  return r;
}

}  // namespace bec::oracle
