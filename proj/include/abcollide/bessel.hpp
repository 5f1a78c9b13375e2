#pragma once

#include <vector>

namespace abc {

/// Bessel function of the first kind, power series in extended precision.
/// Intended for order nu >= 0 and moderate arguments (zeros of low modes).
double bessel_j(double nu, double x);

/// First n positive zeros of J_nu, found by sign scanning and bisection to
/// 1e-12 absolute.
std::vector<double> bessel_zeros(double nu, int n);

}  // namespace abc
