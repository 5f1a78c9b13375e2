#include "abcollide/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "abcollide/fem.hpp"

namespace abc {

double AngularProfile::order() const {
  if (half_integer()) return m + 0.5;
  return std::abs(m + rho());
}

double AngularProfile::gamma_period() const {
  if (half_integer()) return 4.0 * kPi / (2 * m + 1);
  return 2.0 * kPi / std::abs(m + rho());
}

double AngularProfile::f_of(double t, bool from_below) const {
  double f = step_function(config, t);
  if (from_below) {
    for (const auto& p : config.poles) {
      if (std::abs(t - (p.alpha + kPi)) < kAngleTol) f -= p.rho;
    }
  }
  return f;
}

std::pair<double, double> AngularProfile::value_polar(double r, double t, bool from_below) const {
  const double f = f_of(t, from_below);
  const double mu = order();
  const double rp = std::pow(r, mu);
  if (half_integer()) {
    const double ang = (m + 0.5) * (gamma + t);
    const double amp = beta * rp * std::cos(ang);
    return {amp * std::cos(2.0 * kPi * f), amp * std::sin(2.0 * kPi * f)};
  }
  const double phase = 2.0 * kPi * f + (m + rho()) * (gamma - t);
  return {beta * rp * std::cos(phase), beta * rp * std::sin(phase)};
}

std::pair<double, double> AngularProfile::value(const Vec2& x) const {
  const double r = norm(x);
  if (r == 0.0) return {0.0, 0.0};
  return value_polar(r, wrap_2pi(std::atan2(x[1], x[0])));
}

std::pair<Vec2, Vec2> AngularProfile::gradient(const Vec2& x) const {
  const double r = norm(x);
  if (r == 0.0) throw std::domain_error("AngularProfile::gradient at the origin");
  const double t = wrap_2pi(std::atan2(x[1], x[0]));
  const Vec2 er{std::cos(t), std::sin(t)};
  const Vec2 et{-std::sin(t), std::cos(t)};
  const double mu = order();
  const double f = f_of(t);
  if (half_integer()) {
    const double rp = std::pow(r, mu - 1.0);
    const double c = std::cos((m + 0.5) * (gamma + t));
    const double s = std::sin((m + 0.5) * (gamma + t));
    const double cf = std::cos(2.0 * kPi * f);
    const double sf = std::sin(2.0 * kPi * f);
    const double dr = beta * mu * rp * c;
    const double dt = -beta * rp * (m + 0.5) * s;
    return {dr * cf * er + dt * cf * et, dr * sf * er + dt * sf * et};
  }
  // F = Phi + i Psi = beta r^mu e^{i phase}; dF/dr = mu F / r,
  // (1/r) dF/dt = -i (m+rho) F / r.
  const double phase = 2.0 * kPi * f + (m + rho()) * (gamma - t);
  const double rp = std::pow(r, mu - 1.0);
  const double c = std::cos(phase), s = std::sin(phase);
  const double k = m + rho();
  // radial: mu * beta r^{mu-1} (c + i s); angular: -i k beta r^{mu-1}(c+is)
  //   = beta r^{mu-1} (k s - i k c)
  const Vec2 gv = beta * mu * rp * c * er + beta * k * s * rp * et;
  const Vec2 gw = beta * mu * rp * s * er - beta * k * c * rp * et;
  return {gv, gw};
}

std::pair<double, double> AngularProfile::normal_derivative(std::size_t j, double r) const {
  const Pole& p = config.poles.at(j);
  const double t = wrap_2pi(p.alpha);
  const double mu = order();
  const double rp = beta * std::pow(r, mu - 1.0);
  const double f = f_of(t);
  if (half_integer()) {
    const double s = std::sin((m + 0.5) * (gamma + t));
    const double dt = -rp * (m + 0.5) * s;
    return {dt * std::cos(2.0 * kPi * f), dt * std::sin(2.0 * kPi * f)};
  }
  const double k = m + rho();
  const double phase = 2.0 * kPi * f + k * (gamma - t);
  return {rp * k * std::sin(phase), -rp * k * std::cos(phase)};
}

PairSampler mesh_sampler(const CrackMesh& mesh, const Eigen::VectorXd& pair_coef) {
  return [&mesh, &pair_coef](const Vec2& x) -> std::pair<double, double> {
    auto loc = mesh.locate(x);
    if (!loc) throw std::runtime_error("mesh_sampler: point outside the mesh");
    const auto& tr = mesh.tri[static_cast<std::size_t>(loc->first)];
    double v = 0.0, w = 0.0;
    for (int i = 0; i < 3; ++i) {
      v += loc->second[static_cast<std::size_t>(i)] * pair_coef[2 * tr[static_cast<std::size_t>(i)]];
      w += loc->second[static_cast<std::size_t>(i)] * pair_coef[2 * tr[static_cast<std::size_t>(i)] + 1];
    }
    return {v, w};
  };
}

namespace {

struct AngularSamples {
  std::vector<double> angles;
  std::vector<double> weights;  // approximate arc measure per node
};

AngularSamples angular_nodes(const PoleConfig& config, int per_arc) {
  // Arcs between consecutive crack-line branch angles; Chebyshev-like nodes
  // keep clear of the discontinuities at the arc ends.
  std::vector<double> cuts;
  for (const auto& p : config.poles) {
    cuts.push_back(wrap_2pi(p.alpha));
    cuts.push_back(wrap_2pi(p.alpha + kPi));
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             cuts.end());
  AngularSamples out;
  const std::size_t na = cuts.size();
  for (std::size_t a = 0; a < na; ++a) {
    const double t0 = cuts[a];
    const double t1 = (a + 1 < na) ? cuts[a + 1] : cuts[0] + 2.0 * kPi;
    const double len = t1 - t0;
    for (int i = 0; i < per_arc; ++i) {
      const double u = 0.5 * (1.0 - std::cos(kPi * (i + 0.5) / per_arc));  // in (0,1)
      out.angles.push_back(t0 + len * u);
      out.weights.push_back(len / per_arc);
    }
  }
  return out;
}

}  // namespace

VanishingOrderFit fit_vanishing_order(const PairSampler& field, const PoleConfig& config,
                                      const FitOptions& opt) {
  VanishingOrderFit fit;
  const AngularSamples nodes = angular_nodes(config, opt.samples_per_arc);
  for (int i = 0; i < opt.n_radii; ++i) {
    const double delta = opt.delta0 * std::pow(2.0, -i);
    if (delta < opt.min_delta && static_cast<int>(fit.radii.size()) >= 3) break;
    double s2 = 0.0, wsum = 0.0;
    for (std::size_t a = 0; a < nodes.angles.size(); ++a) {
      const Vec2 x{delta * std::cos(nodes.angles[a]), delta * std::sin(nodes.angles[a])};
      const auto [v, w] = field(x);
      s2 += nodes.weights[a] * (v * v + w * w);
      wsum += nodes.weights[a];
    }
    fit.radii.push_back(delta);
    fit.amplitudes.push_back(std::sqrt(s2 / wsum));
  }
  if (fit.radii.size() < 3) throw std::runtime_error("fit_vanishing_order: too few usable radii");

  const double rho = config.total_rho();
  const bool half = config.half_integer();
  double best = 1e300, second = 1e300;
  int best_m = opt.m_lo;
  for (int m = half ? std::max(0, opt.m_lo) : opt.m_lo; m <= opt.m_hi; ++m) {
    const double mu = half ? m + 0.5 : std::abs(m + rho);
    // Fixed-slope fit: residual of log A - mu log delta about its mean.
    double mean = 0.0;
    for (std::size_t i = 0; i < fit.radii.size(); ++i)
      mean += std::log(std::max(fit.amplitudes[i], 1e-300)) - mu * std::log(fit.radii[i]);
    mean /= static_cast<double>(fit.radii.size());
    double r2 = 0.0;
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
      const double e = std::log(std::max(fit.amplitudes[i], 1e-300)) - mu * std::log(fit.radii[i]) - mean;
      r2 += e * e;
    }
    const double res = std::sqrt(r2 / static_cast<double>(fit.radii.size()));
    if (res < best) {
      second = best;
      best = res;
      best_m = m;
    } else if (res < second) {
      second = res;
    }
  }
  fit.m = best_m;
  fit.residual = best;
  fit.runner_up = second;
  fit.ambiguous = (second < 1.1 * best);
  return fit;
}

ProfileFit fit_profile(const PairSampler& field, const PoleConfig& config, int m,
                       const FitOptions& opt) {
  const double rho = config.total_rho();
  const bool half = config.half_integer();
  if (half && m < 0) throw std::invalid_argument("fit_profile: m must be non-negative for rho = 1/2");
  const double mu = half ? m + 0.5 : std::abs(m + rho);
  double delta = opt.delta0 * std::pow(2.0, -(opt.n_radii - 1));
  if (opt.min_delta > 0.0)
    while (delta < opt.min_delta) delta *= 2.0;

  const AngularSamples nodes = angular_nodes(config, opt.samples_per_arc);
  const double scale = std::pow(delta, -mu);

  double A = 0.0, B = 0.0;
  double n00 = 0.0, n01 = 0.0, n11 = 0.0, b0 = 0.0, b1 = 0.0;
  std::vector<double> vs(nodes.angles.size()), ws(nodes.angles.size());
  PoleConfig cfg = config;
  for (std::size_t a = 0; a < nodes.angles.size(); ++a) {
    const double t = nodes.angles[a];
    const Vec2 x{delta * std::cos(t), delta * std::sin(t)};
    const auto [v, w] = field(x);
    vs[a] = v * scale;
    ws[a] = w * scale;
    const double f = step_function(cfg, t);
    if (!half) {
      const double pc = std::cos(2.0 * kPi * f - (m + rho) * t);
      const double ps = std::sin(2.0 * kPi * f - (m + rho) * t);
      // v = A pc - B ps ; w = A ps + B pc  (normal matrix is diagonal)
      b0 += vs[a] * pc + ws[a] * ps;
      b1 += -vs[a] * ps + ws[a] * pc;
      n00 += 1.0;
    } else {
      const double cf = std::cos(2.0 * kPi * f);
      const double sf = std::sin(2.0 * kPi * f);
      const double bracket = vs[a] * cf + ws[a] * sf;  // K-real projection
      const double C = std::cos((m + 0.5) * t);
      const double S = std::sin((m + 0.5) * t);
      // bracket = A C - B S
      n00 += C * C;
      n01 += -C * S;
      n11 += S * S;
      b0 += bracket * C;
      b1 += -bracket * S;
    }
  }
  if (!half) {
    A = b0 / n00;
    B = b1 / n00;
  } else {
    const double det = n00 * n11 - n01 * n01;
    if (std::abs(det) < 1e-14) throw std::runtime_error("fit_profile: singular normal equations");
    A = (n11 * b0 - n01 * b1) / det;
    B = (-n01 * b0 + n00 * b1) / det;
  }

  ProfileFit out;
  out.profile.config = config;
  out.profile.m = m;
  out.profile.beta = std::hypot(A, B);
  if (out.profile.beta <= 0.0) throw std::runtime_error("fit_profile: zero amplitude");
  double c = std::atan2(B, A);
  const double denom = half ? (m + 0.5) : (m + rho);
  double gamma = c / denom;
  const double period = out.profile.gamma_period();
  gamma -= period * std::floor(gamma / period);
  out.profile.gamma = gamma;

  // Joint residual of both traces against the fitted profile.
  double r2 = 0.0, a2 = 0.0;
  for (std::size_t a = 0; a < nodes.angles.size(); ++a) {
    const auto [pv, pw] = out.profile.value_polar(1.0, nodes.angles[a]);
    r2 += (vs[a] - pv) * (vs[a] - pv) + (ws[a] - pw) * (ws[a] - pw);
    a2 += pv * pv + pw * pw;
  }
  out.residual = std::sqrt(r2 / std::max(a2, 1e-300));
  if (out.residual > 0.05)
    throw std::runtime_error("fit_profile: residual " + std::to_string(out.residual) +
                             " exceeds 5% of the amplitude");
  return out;
}

}  // namespace abc
