#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "abcollide/asymptotics.hpp"
#include "abcollide/bessel.hpp"
#include "abcollide/energy.hpp"

namespace abc {

struct ExperimentConfig {
  DomainSpec domain = default_rectangle();
  PoleConfig poles;
  std::vector<double> eps_ladder = {0.2, 0.141, 0.1, 0.0707, 0.05};
  std::vector<double> mesh_ladder = {0.1, 0.0707, 0.05};
  double grade = 3.0;
  int n0 = 1;
  double tol_eigen = 1e-9;
  double trunc = 32.0;         // largest exterior truncation radius (ladder R/4, R/2, R)
  double h_exterior = 0.08;
  std::uint64_t seed = 20240614;
  int threads = 1;
  std::string kind = "converge";

  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& c);
/// FNV-1a over the canonical JSON dump.
std::string config_hash(const ExperimentConfig& c);

/// One (eps, h) solve on a shared geometric layer: both the Gamma_eps and
/// the Gamma_0 problems, the interior energy minimization, and the gauged
/// eigenfunction distance.
struct LadderPoint {
  double eps = 0.0;
  double h = 0.0;
  double lambda_eps = 0.0;
  double lambda_0 = 0.0;
  double E_eps = 0.0;
  double L_v0 = 0.0;
  double grad_sq_VW = 0.0;       // |grad (V_eps, W_eps)|^2
  double grad_diff_sq = 0.0;     // |grad (v_eps - v_0, w_eps - w_0)|^2
  double sup_identity_residual = 0.0;
  double interior_residual = 0.0;
};
LadderPoint solve_ladder_point(const ExperimentConfig& cfg, double eps, double h);

/// Limit-problem eigenpair plus fitted profile on the finest mesh.
struct LimitAnalysis {
  double lambda_0 = 0.0;
  AngularProfile profile;
  double fit_residual = 0.0;
  double order_residual = 0.0;
  bool order_ambiguous = false;
  double kreal_residual = 0.0;   // 0 unless rho = 1/2
};
LimitAnalysis analyze_limit(const ExperimentConfig& cfg, double feature_eps);

struct ConvergenceTable {
  std::vector<EnergyRow> rows;     // one per eps (mesh-extrapolated eigenvalues)
  std::vector<LadderPoint> raw;    // every (eps, h) sample
  LimitAnalysis limit;
  ExteriorSolution exterior;
  double slope = 0.0;
  double slope_stderr = 0.0;
  double observed_mesh_order = 0.0;
};
ConvergenceTable run_convergence(const ExperimentConfig& cfg);

struct SignReport {
  int variant = 1;                 // 1 = attractive, 2 = repulsive
  double pole_angle = 0.0;         // angle chosen from the extracted (m, gamma)
  int m = 0;
  double gamma = 0.0;
  double E_limit = 0.0;
  double L_limit = 0.0;
  std::vector<double> eps;
  std::vector<double> delta_lambda;
  bool signs_consistent = false;   // every ladder entry matches the predicted sign
  bool L_negligible = false;       // |L| < 1e-3 |E|
};
SignReport run_sign_experiment(int variant, const ExperimentConfig& cfg);

struct BlowupReport {
  std::vector<double> eps;
  std::vector<double> discrepancy;     // relative H1 distance on D_2
  std::vector<double> rate_quantity;   // eps^{-2|m+rho|} |grad (v_eps-v0, w_eps-w0)|^2
  double exterior_grad_sq = 0.0;
  LimitAnalysis limit;
};
BlowupReport run_blowup_compare(const ExperimentConfig& cfg);

/// Magnetic vs crack spectra on one configuration (doubling pattern check).
struct GaugeAgreement {
  std::vector<double> magnetic;      // mesh-extrapolated
  std::vector<double> crack;         // mesh-extrapolated, doubled list
  double max_rel_mismatch = 0.0;
  double max_pair_split = 0.0;       // within-pair relative split of the crack list
};
GaugeAgreement run_gauge_check(const ExperimentConfig& cfg, double eps, int n_magnetic);

/// First n positive zeros of J_nu (re-exported oracle).
inline std::vector<double> bessel_oracle(double nu, int n) { return bessel_zeros(nu, n); }

/// Least-squares slope of log|y| vs log x with standard error.
struct SlopeFit {
  double slope = 0.0;
  double stderr_ = 0.0;
  double intercept = 0.0;
};
SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Deterministic report emission: a CSV per table and one JSON summary.
struct ReportFiles {
  std::string csv_path;
  std::string json_path;
};
ReportFiles emit_report(const std::string& out_dir, const std::string& name,
                        const ExperimentConfig& cfg, const std::vector<std::string>& columns,
                        const std::vector<std::vector<double>>& rows,
                        const nlohmann::json& summary);

nlohmann::json convergence_to_json(const ConvergenceTable& t);
nlohmann::json sign_to_json(const SignReport& r);
nlohmann::json blowup_to_json(const BlowupReport& r);

}  // namespace abc
