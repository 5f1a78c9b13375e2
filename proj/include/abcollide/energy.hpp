#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "abcollide/asymptotics.hpp"
#include "abcollide/eigensolve.hpp"
#include "abcollide/fem.hpp"
#include "abcollide/mesh.hpp"

namespace abc {

/// Radial cutoff: 1 on D_1, 0 outside D_2, |eta'| <= 1.5.
double eta_cutoff(double r);

struct LineQuadOptions {
  int gauss_points = 4;
  int graded_subdivisions = 14;  // geometric refinement toward the singular end
  double ratio = 0.55;
};

/// Core 1-D functional on a single segment [0, r_end]:
///   (b-1) * int [dnu_v * tr_v + dnu_w * tr_w]
///   - d  * int [dnu_v * tr_w - dnu_w * tr_v],
/// with the integrand graded toward the r = 0 endpoint.
double line_energy_functional(double b, double d, const std::function<Vec2(double)>& dnu_vw,
                              const std::function<Vec2(double)>& trace_vw, double r_end,
                              const LineQuadOptions& opt = {});

/// Normal-derivative data on the tip segments, one evaluator per crack.
using SegmentData = std::vector<std::function<Vec2(double)>>;

/// (grad v0 . nu, grad w0 . nu) along each tip segment, from patch-recovered
/// gradients of the pair field given on the Gamma_0 overlay of the same
/// layer, evaluated on the plus side.
SegmentData dnu_from_pair(const CrackMesh& zero_overlay, const Eigen::VectorXd& pair_coef,
                          const CrackSet& eps_cracks);

/// Analytic normal-derivative data of the homogeneous profiles on S_1^j.
SegmentData dnu_from_profile(const AngularProfile& profile);

/// Assemble the functional L as a vector on the full pair dof space of
/// `mesh`: L(phi, psi) = l . coef, with entries on the plus-side trace dofs
/// of the tip segments.
Eigen::VectorXd assemble_L_vector(const CrackMesh& mesh, const SegmentData& dnu,
                                  const LineQuadOptions& opt = {});

/// L applied to the pair coefficients themselves (e.g. L_eps(v0, w0)).
double L_value(const CrackMesh& mesh, const SegmentData& dnu, const Eigen::VectorXd& pair_coef,
               const LineQuadOptions& opt = {});

struct InteriorSolution {
  Eigen::VectorXd coef;   // (V_eps, W_eps) pair coefficients on the eps overlay
  double energy = 0.0;    // E_eps = J_eps(V,W)
  double grad_sq = 0.0;   // |grad (V,W)|^2
  double L_sol = 0.0;     // L_eps(V, W)
  double L_v0 = 0.0;      // L_eps(v0, w0)
  double residual = 0.0;  // relative linear-system residual
};

/// Minimize J_eps over the affine space (v0, w0) + constrained fields, using
/// the localized lift eta_eps * (v0, w0).
InteriorSolution solve_interior(const CrackMesh& eps_mesh, const CrackForms& eps_forms,
                                const CrackMesh& zero_mesh, const Eigen::VectorXd& v0w0,
                                double eps, const LineQuadOptions& opt = {});

struct EeSupCheck {
  double energy_direct = 0.0;     // from solve_interior
  double energy_equiv = 0.0;      // right side of the sup identity
  double identity_residual = 0.0; // relative mismatch
  double sup_value = 0.0;
  int samples_total = 0;
  int samples_below = 0;          // sampled quotients not exceeding the sup
};

/// Evaluate the equivalent characterization of E_eps (quadratic sup identity)
/// and sample random constrained directions against the optimal one.
EeSupCheck check_Ee_sup(const CrackMesh& eps_mesh, const CrackForms& eps_forms,
                        const CrackMesh& zero_mesh, const Eigen::VectorXd& v0w0, double eps,
                        const InteriorSolution& sol, int n_samples = 100,
                        std::uint64_t seed = 7u);

struct ExteriorSolution {
  std::vector<double> radii;      // truncation radii
  std::vector<double> energies;   // E(R)
  std::vector<double> grad_sqs;   // |grad (V~, W~)|^2 on D_R
  double energy = 0.0;            // extrapolated E
  double grad_sq = 0.0;           // extrapolated gradient energy
  double extrapolation_rate = 0.0;
  bool converged = true;          // relative change from mid to large R below 1%
  double L_profile = 0.0;         // L(Phi_0, Psi_0)
  // Finest-truncation field for blow-up comparisons:
  std::shared_ptr<const GeomLayer> layer;
  std::shared_ptr<CrackMesh> mesh;
  Eigen::VectorXd coef;
};

/// Solve the exterior minimization on D_R cut along Gamma_1, Dirichlet at
/// |x| = R, for R over `radii` (ascending), then Richardson-extrapolate.
ExteriorSolution solve_exterior(const AngularProfile& profile, const std::vector<double>& radii,
                                double h, double grade, const LineQuadOptions& opt = {});

/// L(Phi_0, Psi_0) by direct graded quadrature of the analytic traces.
double L_of_profile(const AngularProfile& profile, const LineQuadOptions& opt = {});

/// 2 eps^{2|m+rho|} (E + L).
double predicted_shift(double E, double L_val, double order, double eps);

struct HardyReport {
  double lhs = 0.0;       // int (phi^2+psi^2)/|x|^2
  double energy = 0.0;    // int |grad phi|^2 + |grad psi|^2
  double constant = 0.0;  // max(rho^-2, (1-rho)^-2)
  bool ok = false;
};

/// Check the annulus Hardy inequality for a constrained pair field.
HardyReport hardy_check(const CrackMesh& annulus_mesh, const CrackForms& forms,
                        const Eigen::VectorXd& pair_coef, double total_rho, double slack = 0.02);

/// Ladder row of the convergence experiment.
struct EnergyRow {
  double eps = 0.0;
  double lambda_eps = 0.0;
  double lambda_0 = 0.0;
  double delta_lambda = 0.0;
  double E_eps = 0.0;
  double L_eps_v0 = 0.0;
  double grad_sq = 0.0;       // |(V_eps, W_eps)|^2
  double predicted_2EL = 0.0; // 2 (E_eps + L_eps(v0,w0))
  double predicted_limit = 0.0;  // 2 eps^{2|m+rho|} (E + L(Phi0,Psi0))
};

struct EnergyReport {
  std::vector<EnergyRow> rows;
  double E_limit = 0.0;
  double L_limit = 0.0;
  double order = 0.0;   // |m+rho|
  int m = 0;
  double beta = 0.0;
  double gamma = 0.0;
  double slope = 0.0;          // fitted log-log slope of |delta lambda| vs eps
  double slope_stderr = 0.0;
  std::vector<double> trunc_radii;
  std::vector<double> trunc_energies;
  bool trunc_converged = true;
};

}  // namespace abc
