#include "abcollide/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace abc {

double wrap_pm_pi(double t) {
  double w = std::remainder(t, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

double wrap_2pi(double t) {
  double w = std::fmod(t, 2.0 * kPi);
  if (w < 0.0) w += 2.0 * kPi;
  // fmod can return 2*pi itself after the correction when t is a tiny
  // negative number.
  if (w >= 2.0 * kPi) w -= 2.0 * kPi;
  return w;
}

double PoleConfig::total_rho() const {
  double s = 0.0;
  for (const auto& p : poles) s += p.rho;
  return s;
}

Vec2 PoleConfig::pole_position(std::size_t j) const {
  const Pole& p = poles.at(j);
  return {eps * p.r * std::cos(p.alpha), eps * p.r * std::sin(p.alpha)};
}

Vec2 PoleConfig::direction(std::size_t j) const {
  const Pole& p = poles.at(j);
  return {std::cos(p.alpha), std::sin(p.alpha)};
}

Vec2 PoleConfig::normal(std::size_t j) const {
  const Pole& p = poles.at(j);
  return {-std::sin(p.alpha), std::cos(p.alpha)};
}

void PoleConfig::validate() const {
  if (poles.empty()) throw std::invalid_argument("PoleConfig: no poles");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("PoleConfig: eps outside [0,1]");
  for (std::size_t j = 0; j < poles.size(); ++j) {
    const Pole& p = poles[j];
    if (!(p.r > 0.0 && p.r < 1.0))
      throw std::invalid_argument("PoleConfig: pole radius r_" + std::to_string(j) +
                                  " must lie in (0,1)");
    if (std::abs(p.rho - std::round(p.rho)) < 1e-12)
      throw std::invalid_argument("PoleConfig: integer circulation rho_" + std::to_string(j));
    if (p.alpha <= -kPi || p.alpha > kPi + kAngleTol)
      throw std::invalid_argument("PoleConfig: alpha_" + std::to_string(j) +
                                  " not reduced to (-pi, pi]");
  }
  const double rho = total_rho();
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("PoleConfig: total circulation must lie in (0,1)");
  for (std::size_t j = 0; j < poles.size(); ++j) {
    for (std::size_t l = j + 1; l < poles.size(); ++l) {
      const double d = std::abs(wrap_pm_pi(poles[j].alpha - poles[l].alpha));
      if (d < kAngleTol || std::abs(d - kPi) < kAngleTol)
        throw std::invalid_argument("PoleConfig: poles " + std::to_string(j) + " and " +
                                    std::to_string(l) + " are collinear through the origin");
    }
  }
}

double DomainSpec::signed_area() const {
  double a = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * a;
}

bool DomainSpec::contains(const Vec2& x) const {
  // Winding by ray casting; boundary points are not guaranteed either way.
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& pi = polygon[i];
    const Vec2& pj = polygon[j];
    if (((pi[1] > x[1]) != (pj[1] > x[1])) &&
        (x[0] < (pj[0] - pi[0]) * (x[1] - pi[1]) / (pj[1] - pi[1]) + pi[0]))
      inside = !inside;
  }
  return inside;
}

double DomainSpec::support(double theta) const {
  const Vec2 d{std::cos(theta), std::sin(theta)};
  double best = -1.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = polygon[i];
    const Vec2& b = polygon[(i + 1) % n];
    const Vec2 e = b - a;
    const double den = cross(d, e);
    if (std::abs(den) < 1e-300) continue;
    // 0 + t*d = a + s*e
    const double t = cross(a, e) / den;
    const double s = cross(a, d) / den;
    if (t > 0.0 && s >= -1e-12 && s <= 1.0 + 1e-12) {
      if (best < 0.0 || t < best) best = t;
    }
  }
  if (best <= 0.0) throw std::runtime_error("DomainSpec::support: ray misses boundary");
  return best;
}

void DomainSpec::validate() const {
  if (polygon.size() < 3) throw std::invalid_argument("DomainSpec: fewer than 3 vertices");
  if (signed_area() <= 0.0)
    throw std::invalid_argument("DomainSpec: polygon must be counter-clockwise");
  if (!contains({0.0, 0.0}))
    throw std::invalid_argument("DomainSpec: origin not strictly interior");
  // Star-shapedness about 0: the segment from 0 to each vertex and each edge
  // midpoint must be the first boundary hit of its ray.
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 mid = 0.5 * (polygon[i] + polygon[(i + 1) % n]);
    for (const Vec2& q : {polygon[i], mid}) {
      const double r = norm(q);
      if (r < 1e-12) throw std::invalid_argument("DomainSpec: vertex at origin");
      const double sup = support(std::atan2(q[1], q[0]));
      if (sup < r * (1.0 - 1e-9))
        throw std::invalid_argument("DomainSpec: polygon not star-shaped about the origin");
    }
  }
}

DomainSpec default_rectangle() {
  return DomainSpec{{{-1.2, -0.9}, {1.0, -0.9}, {1.0, 1.1}, {-1.2, 1.1}}};
}

DomainSpec regular_polygon(int n, double radius) {
  DomainSpec d;
  d.polygon.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * i / n;
    d.polygon.push_back({radius * std::cos(t), radius * std::sin(t)});
  }
  return d;
}

double step_function(const PoleConfig& config, double t) {
  double f = 0.0;
  for (const auto& p : config.poles) {
    double thr = p.alpha + kPi;  // in (0, 2*pi]
    if (t >= thr) f += p.rho;
  }
  return f;
}

std::vector<double> step_thresholds(const PoleConfig& config) {
  std::vector<double> thr;
  thr.reserve(config.poles.size());
  for (const auto& p : config.poles) thr.push_back(p.alpha + kPi);
  return thr;
}

std::pair<double, double> jump_coeffs(double rho_j) {
  return {std::cos(2.0 * kPi * rho_j), std::sin(2.0 * kPi * rho_j)};
}

CrackSet crack_polylines(const PoleConfig& config, const DomainSpec& domain, double eps) {
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("crack_polylines: eps outside [0,1]");
  CrackSet cs;
  cs.eps = eps;
  cs.rays.reserve(config.k());
  for (std::size_t j = 0; j < config.k(); ++j) {
    const Pole& p = config.poles[j];
    CrackRay ray;
    ray.alpha = p.alpha;
    ray.rho = p.rho;
    ray.nu = config.normal(j);
    ray.tip_radius = eps * p.r;
    const Vec2 dir = config.direction(j);
    ray.tip = {eps * p.r * dir[0], eps * p.r * dir[1]};
    const double r_back = domain.support(wrap_pm_pi(p.alpha + kPi));
    ray.t_boundary = -r_back;
    ray.boundary_point = {-r_back * dir[0], -r_back * dir[1]};
    const double r_front = domain.support(p.alpha);
    if (eps > 0.0 && ray.tip_radius >= r_front * (1.0 - 1e-9))
      throw std::invalid_argument("crack_polylines: crack tip touches the boundary");
    cs.rays.push_back(ray);
  }
  return cs;
}

}  // namespace abc
