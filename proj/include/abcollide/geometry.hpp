#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

namespace abc {

using Vec2 = std::array<double, 2>;

inline Vec2 operator+(const Vec2& a, const Vec2& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Vec2 operator-(const Vec2& a, const Vec2& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Vec2 operator*(double s, const Vec2& a) { return {s * a[0], s * a[1]}; }
inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double cross(const Vec2& a, const Vec2& b) { return a[0] * b[1] - a[1] * b[0]; }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kAngleTol = 1e-12;

/// Reduce an angle to (-pi, pi].
double wrap_pm_pi(double t);
/// Reduce an angle to [0, 2*pi).
double wrap_2pi(double t);

/// One Aharonov-Bohm pole: direction angle alpha, radius r (pole sits at
/// eps*r*(cos alpha, sin alpha)), circulation rho (non-integer).
struct Pole {
  double r = 1.0;
  double alpha = 0.0;
  double rho = 0.5;
};

/// Collision geometry: k poles moving toward the origin with scale eps.
/// Total circulation must lie in (0,1); pole directions pairwise distinct
/// modulo pi.
struct PoleConfig {
  std::vector<Pole> poles;
  double eps = 1.0;

  std::size_t k() const { return poles.size(); }
  double total_rho() const;
  bool half_integer() const { return std::abs(total_rho() - 0.5) < 1e-12; }
  /// Pole position eps * a_j.
  Vec2 pole_position(std::size_t j) const;
  /// Unit direction a_j / r_j.
  Vec2 direction(std::size_t j) const;
  /// Crack normal nu_j = (-sin alpha_j, cos alpha_j).
  Vec2 normal(std::size_t j) const;

  /// Throws std::invalid_argument on violated invariants (integer rho_j,
  /// total rho outside (0,1), coincident directions mod pi, r_j outside (0,1)).
  void validate() const;
};

/// Simple polygon (counter-clockwise) strictly containing the origin and
/// star-shaped with respect to it.
struct DomainSpec {
  std::vector<Vec2> polygon;

  void validate() const;
  /// Radial support R(theta): distance from 0 to the boundary along the ray
  /// with direction angle theta.
  double support(double theta) const;
  bool contains(const Vec2& x) const;
  double signed_area() const;
};

/// The asymmetric rectangle used for validation runs; low eigenvalues of the
/// limit problem are generically simple on it.
DomainSpec default_rectangle();
/// Regular n-gon approximation of the disk of radius `radius`.
DomainSpec regular_polygon(int n, double radius);

/// Crack polyline for one pole: the ray {t*a_j : t <= eps} clipped to the
/// domain. Stored as the boundary hit point, the origin, and the tip.
struct CrackRay {
  double alpha = 0.0;       // direction angle of a_j
  double rho = 0.0;         // circulation of the pole owning this crack
  double t_boundary = 0.0;  // parameter (< 0) of the boundary intersection
  double tip_radius = 0.0;  // |eps * a_j|; 0 when eps = 0
  Vec2 boundary_point{};    // t_boundary * a_j
  Vec2 tip{};               // eps * a_j
  Vec2 nu{};                // (-sin alpha, cos alpha)
};

struct CrackSet {
  std::vector<CrackRay> rays;
  double eps = 0.0;
};

/// The angular step f(t) = sum_j rho_j * [t >= alpha_j + pi] on [0, 2*pi),
/// with each threshold alpha_j + pi reduced to (0, 2*pi]. For alpha_j = pi
/// the threshold is 2*pi and the indicator is empty.
double step_function(const PoleConfig& config, double t);

/// Jump thresholds of f, reduced to (0, 2*pi], one per pole (same order).
std::vector<double> step_thresholds(const PoleConfig& config);

/// (b_j, d_j) = (cos(2*pi*rho_j), sin(2*pi*rho_j)); the matrix
/// [[b,-d],[d,b]] rotates by 2*pi*rho_j.
std::pair<double, double> jump_coeffs(double rho_j);

/// Clip each pole ray against the domain polygon. Throws when a crack tip
/// touches the boundary.
CrackSet crack_polylines(const PoleConfig& config, const DomainSpec& domain, double eps);

}  // namespace abc
