#pragma once

#include <complex>

#include "abcollide/geometry.hpp"

namespace abc {

/// Single-pole Aharonov-Bohm vector potential
/// rho * (-(x2-b2), x1-b1) / |x-b|^2. Throws at the pole.
Vec2 vector_potential(const Vec2& b, double rho, const Vec2& x);

/// Multi-pole potential: sum of vector_potential over the poles at their
/// eps-scaled positions. In the collapsed case eps = 0 this is the single
/// potential at the origin with the total circulation.
Vec2 multi_potential(const PoleConfig& config, const Vec2& x);

/// Polar angle of x about b, valued in [0, 2*pi). Throws at b.
double theta_about(const Vec2& b, const Vec2& x);

/// theta_{b,alpha}(x) = theta_b(R_{b,alpha} x), valued in [0, 2*pi), smooth
/// off the cut ray {b + r(cos alpha, -sin alpha) : r >= 0}. Its gradient is
/// the unit-circulation potential about b. Throws on the cut (within
/// kAngleTol of it) and at b.
double theta_pole(const Vec2& b, double alpha, const Vec2& x);

/// Gauge phase Theta_eps = sum_j rho_j * theta_{a_eps^j, pi - alpha_j}, whose
/// branch cuts lie on the crack rays Gamma_eps^j and whose gradient equals
/// multi_potential. For eps = 0 all terms have poles at the origin and the
/// angular identity
///   Theta_0(d cos t, d sin t) = rho*t - 2*pi*f(t) + pi*rho - sum_j rho_j alpha_j
/// holds. Throws on Gamma_eps.
double theta_total(const PoleConfig& config, double eps, const Vec2& x);

/// e^{i * theta_total}; convenience for gauge factors.
std::complex<double> gauge_factor(const PoleConfig& config, double eps, const Vec2& x);

/// Lambda = pi/2 - sum_j rho_j alpha_j, the phase constant of the K-real
/// normalization at total circulation 1/2.
double kreal_lambda(const PoleConfig& config);

}  // namespace abc
