#include "abcollide/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace abc {

double bessel_j(double nu, double x) {
  if (nu < 0.0) throw std::invalid_argument("bessel_j: nu must be non-negative");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  const long double half = 0.5L * static_cast<long double>(x);
  long double term = std::exp(static_cast<long double>(nu) * std::log(half) -
                              std::lgamma(static_cast<long double>(nu) + 1.0L));
  long double sum = term;
  const long double h2 = half * half;
  for (int k = 1; k < 400; ++k) {
    term *= -h2 / (static_cast<long double>(k) * (static_cast<long double>(nu) + k));
    sum += term;
    if (std::abs(term) < 1e-22L * (1.0L + std::abs(sum)) && k > 4) break;
  }
  return static_cast<double>(sum);
}

std::vector<double> bessel_zeros(double nu, int n) {
  std::vector<double> zeros;
  zeros.reserve(static_cast<std::size_t>(n));
  double x = std::max(nu, 0.5);
  double f = bessel_j(nu, x);
  const double step = 0.05;
  while (static_cast<int>(zeros.size()) < n) {
    const double x2 = x + step;
    const double f2 = bessel_j(nu, x2);
    if ((f <= 0.0 && f2 > 0.0) || (f >= 0.0 && f2 < 0.0)) {
      double a = x, b = x2, fa = f;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = bessel_j(nu, m);
        if ((fa <= 0.0 && fm > 0.0) || (fa >= 0.0 && fm < 0.0)) {
          b = m;
        } else {
          a = m;
          fa = fm;
        }
        if (b - a < 1e-13) break;
      }
      zeros.push_back(0.5 * (a + b));
    }
    x = x2;
    f = f2;
    if (x > 1000.0) throw std::runtime_error("bessel_zeros: scan ran away");
  }
  return zeros;
}

}  // namespace abc
