#pragma once

namespace bec::special {

/// Riemann zeta for real s ≠ 1.
double zeta(double s);

/// Bose function g_s(z) = Σ_{l≥1} z^l / l^s for 0 ≤ z ≤ 1; at z = 1 it
/// requires s > 1 and equals ζ(s).
double bose_function(double s, double z);

/// g_s(e^{−x}) for x ≥ 0, accurate also when x is tiny.
double bose_function_exp(double s, double x);

}  // namespace bec::special
