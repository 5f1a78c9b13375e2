#include "abcollide/gauge.hpp"

#include <cmath>
#include <stdexcept>

namespace abc {

Vec2 vector_potential(const Vec2& b, double rho, const Vec2& x) {
  const double dx = x[0] - b[0];
  const double dy = x[1] - b[1];
  const double r2 = dx * dx + dy * dy;
  if (r2 == 0.0) throw std::domain_error("vector_potential: evaluation at the pole");
  return {-rho * dy / r2, rho * dx / r2};
}

Vec2 multi_potential(const PoleConfig& config, const Vec2& x) {
  if (config.eps == 0.0) return vector_potential({0.0, 0.0}, config.total_rho(), x);
  Vec2 a{0.0, 0.0};
  for (std::size_t j = 0; j < config.k(); ++j)
    a = a + vector_potential(config.pole_position(j), config.poles[j].rho, x);
  return a;
}

double theta_about(const Vec2& b, const Vec2& x) {
  const double dx = x[0] - b[0];
  const double dy = x[1] - b[1];
  if (dx == 0.0 && dy == 0.0) throw std::domain_error("theta_about: evaluation at the pole");
  return wrap_2pi(std::atan2(dy, dx));
}

double theta_pole(const Vec2& b, double alpha, const Vec2& x) {
  const double dx = x[0] - b[0];
  const double dy = x[1] - b[1];
  if (dx == 0.0 && dy == 0.0) throw std::domain_error("theta_pole: evaluation at the pole");
  const double t = std::atan2(dy, dx);  // in (-pi, pi]
  // Cut ray direction is -alpha; reject evaluation on it.
  if (std::abs(wrap_pm_pi(t + alpha)) < kAngleTol)
    throw std::domain_error("theta_pole: evaluation on the branch cut");
  return wrap_2pi(t + alpha);
}

double theta_total(const PoleConfig& config, double eps, const Vec2& x) {
  double theta = 0.0;
  if (eps == 0.0) {
    for (const auto& p : config.poles) theta += p.rho * theta_pole({0.0, 0.0}, kPi - p.alpha, x);
  } else {
    for (std::size_t j = 0; j < config.k(); ++j) {
      const Pole& p = config.poles[j];
      Vec2 pos{eps * p.r * std::cos(p.alpha), eps * p.r * std::sin(p.alpha)};
      theta += p.rho * theta_pole(pos, kPi - p.alpha, x);
    }
  }
  return theta;
}

std::complex<double> gauge_factor(const PoleConfig& config, double eps, const Vec2& x) {
  return std::polar(1.0, theta_total(config, eps, x));
}

double kreal_lambda(const PoleConfig& config) {
  double s = 0.0;
  for (const auto& p : config.poles) s += p.rho * p.alpha;
  return 0.5 * kPi - s;
}

}  // namespace abc
