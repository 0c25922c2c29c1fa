#include "bec/polylog.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "bec/error.hpp"

namespace bec::special {

namespace {

// B_2, B_4, ..., B_30.
constexpr std::array<double, 15> kBernoulli = {
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
    8553103.0 / 6.0,
    -23749461029.0 / 870.0,
    8615841276005.0 / 14322.0,
};

// Euler–Maclaurin with head length N = 16; valid for s ≥ 0, s ≠ 1.
double zeta_em(double s) {
  constexpr int n = 16;
  long double sum = 0.0L;
  for (int k = 1; k < n; ++k) sum += std::pow(static_cast<long double>(k), -static_cast<long double>(s));
  const long double nn = n;
  const long double ns = std::pow(nn, -static_cast<long double>(s));
  sum += nn * ns / (s - 1.0L) + ns / 2.0L;
  // term_j = B_2j/(2j)! · s(s+1)…(s+2j−2) · N^{−s−2j+1}
  long double rising = s;          // s(s+1)…(s+2j−2)
  long double factorial = 2.0L;    // (2j)!
  long double power = ns / nn;     // N^{−s−2j+1}
  for (std::size_t j = 1; j <= kBernoulli.size(); ++j) {
    const long double term = kBernoulli[j - 1] / factorial * rising * power;
    sum += term;
    if (std::abs(term) < 1e-21L * std::abs(sum)) break;
    const long double a = s + 2.0L * j - 1.0L;
    rising *= a * (a + 1.0L);
    factorial *= (2.0L * j + 1.0L) * (2.0L * j + 2.0L);
    power /= nn * nn;
  }
  return static_cast<double>(sum);
}

double harmonic(int n) {
  double h = 0.0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return h;
}

// Direct series, for z ≤ 1/2.
double series(double s, double z) {
  long double sum = 0.0L;
  long double zl = 1.0L;
  for (int l = 1; l < 200; ++l) {
    zl *= z;
    const long double term = zl * std::pow(static_cast<long double>(l), -static_cast<long double>(s));
    sum += term;
    if (term < 1e-21L * sum) break;
  }
  return static_cast<double>(sum);
}

// Expansion about z = 1 in x = −ln z (converges for x < 2π):
//   g_s(e^{−x}) = Γ(1−s)x^{s−1} + Σ_k ζ(s−k)(−x)^k/k!,
// with the k = s−1 term replaced by (−x)^{s−1}/(s−1)!·(H_{s−1} − ln x) for integer s.
double near_one(double s, double x) {
  const double rs = std::round(s);
  const bool integer = std::abs(s - rs) < 1e-14 && rs >= 1.0;
  const int n = static_cast<int>(rs);
  long double sum = 0.0L;
  if (!integer) sum += std::tgamma(1.0 - s) * std::pow(x, s - 1.0);
  long double xk = 1.0L;  // (−x)^k/k!
  int small = 0;
  for (int k = 0; k < 80; ++k) {
    long double term;
    if (integer && k == n - 1) {
      term = xk * (harmonic(n - 1) - std::log(static_cast<long double>(x)));
    } else {
      term = zeta(s - k) * xk;
    }
    sum += term;
    small = std::abs(term) < 1e-19L * std::abs(sum) ? small + 1 : 0;
    if (small >= 2 && k > n) break;
    xk *= -static_cast<long double>(x) / (k + 1);
  }
  return static_cast<double>(sum);
}

}  // namespace

double zeta(double s) {
  if (s == 1.0) throw DomainError("zeta has a pole at s = 1");
  if (s == 0.0) return -0.5;
  if (s > 0.0) return zeta_em(s);
  // Reflection: ζ(s) = 2^s π^{s−1} sin(πs/2) Γ(1−s) ζ(1−s).
  const double half = s / 2.0;
  if (half == std::round(half)) return 0.0;  // trivial zeros
  return std::pow(2.0, s) * std::pow(std::numbers::pi, s - 1.0) * std::sin(std::numbers::pi * half) *
         std::tgamma(1.0 - s) * zeta_em(1.0 - s);
}

double bose_function_exp(double s, double x) {
  if (!(x >= 0.0)) throw DomainError("bose function needs z <= 1");
  if (x == 0.0) {
    if (!(s > 1.0)) throw DomainError("bose function diverges at z = 1 for s <= 1");
    return zeta(s);
  }
  if (s == 1.0) return -std::log(-std::expm1(-x));
  if (x >= std::numbers::ln2) return series(s, std::exp(-x));
  return near_one(s, x);
}

double bose_function(double s, double z) {
  if (!(z >= 0.0 && z <= 1.0)) throw DomainError("bose function needs 0 <= z <= 1");
  if (z == 0.0) return 0.0;
  if (z <= 0.5) return series(s, z);
  return bose_function_exp(s, -std::log(z));
}

}  // namespace bec::special
