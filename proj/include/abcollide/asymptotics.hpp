#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

#include "abcollide/geometry.hpp"
#include "abcollide/mesh.hpp"

namespace abc {

/// The local structure of the limit eigenfunction at the collision point:
/// vanishing order |m + rho| with integer m, amplitude beta > 0 and phase
/// gamma, together with the step function data. Defines the homogeneous
/// profiles (Phi_0, Psi_0).
struct AngularProfile {
  PoleConfig config;  // eps ignored; carries angles and circulations for f
  int m = 0;
  double beta = 1.0;
  double gamma = 0.0;

  double rho() const { return config.total_rho(); }
  bool half_integer() const { return config.half_integer(); }
  /// Homogeneity degree |m + rho| (= m + 1/2 in the half-integer case).
  double order() const;
  /// Period of the canonical gamma range.
  double gamma_period() const;

  /// f evaluated with its right-continuous convention; from_below takes the
  /// left limit instead (the x.nu > 0 side of a crack ray).
  double f_of(double t, bool from_below = false) const;

  /// (Phi_0, Psi_0) at x (polar evaluation; see value_polar for side control).
  std::pair<double, double> value(const Vec2& x) const;
  std::pair<double, double> value_polar(double r, double t, bool from_below = false) const;
  /// Gradients off the crack rays (also valid one-sidedly on them).
  std::pair<Vec2, Vec2> gradient(const Vec2& x) const;
  /// (grad Phi_0 . nu_j, grad Psi_0 . nu_j) on the segment S_1^j at radius r.
  std::pair<double, double> normal_derivative(std::size_t j, double r) const;
};

/// Point sampler of a pair field (v, w).
using PairSampler = std::function<std::pair<double, double>(const Vec2&)>;

/// Sampler backed by P1 interpolation of pair coefficients on a crack mesh.
PairSampler mesh_sampler(const CrackMesh& mesh, const Eigen::VectorXd& pair_coef);

struct FitOptions {
  double delta0 = 0.25;       // largest circle radius
  int n_radii = 6;            // geometric ladder delta0 * 2^-i
  double min_delta = 0.0;     // smallest usable radius (mesh resolution floor)
  int m_lo = -3;
  int m_hi = 3;
  int samples_per_arc = 24;   // Chebyshev-like nodes per inter-crack arc
};

struct VanishingOrderFit {
  int m = 0;
  double residual = 0.0;
  double runner_up = 0.0;     // second-best residual
  bool ambiguous = false;     // runner-up within 10% of the best
  std::vector<double> radii;
  std::vector<double> amplitudes;
};

/// Select the integer m whose order |m+rho| best matches the log-log decay
/// of the circle-averaged amplitude.
VanishingOrderFit fit_vanishing_order(const PairSampler& field, const PoleConfig& config,
                                      const FitOptions& opt);

struct ProfileFit {
  AngularProfile profile;
  double residual = 0.0;      // joint trace misfit relative to beta
};

/// Least-squares fit of (beta, gamma) from the rescaled angular traces at the
/// smallest reliable radius. For rho = 1/2 the input must be K-real
/// normalized. Throws when the residual exceeds 5% of the amplitude.
ProfileFit fit_profile(const PairSampler& field, const PoleConfig& config, int m,
                       const FitOptions& opt);

}  // namespace abc
