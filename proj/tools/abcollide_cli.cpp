// Command-line driver: eigenvalue solves, energy extraction, convergence and
// sign experiments for Aharonov-Bohm operators with colliding poles.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "abcollide/harness.hpp"

namespace {

abc::ExperimentConfig load_config(const std::string& path, double tol_override, double trunc_override,
                                  std::uint64_t seed_override, int threads) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  nlohmann::json j;
  in >> j;
  abc::ExperimentConfig cfg = abc::parse_config(j);
  if (tol_override > 0.0) cfg.tol_eigen = tol_override;
  if (trunc_override > 0.0) cfg.trunc = trunc_override;
  if (seed_override != 0) cfg.seed = seed_override;
  if (threads > 0) cfg.threads = threads;
  return cfg;
}

void print_kv(const std::string& k, double v) { std::printf("%-24s %.12g\n", k.c_str(), v); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aharonov-Bohm colliding-pole laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  double tol_eigen = -1.0;
  double trunc = -1.0;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--tol-eigen", tol_eigen, "eigensolver residual tolerance");
  app.add_option("--trunc", trunc, "largest exterior truncation radius");
  app.add_option("--seed", seed, "PRNG seed for deterministic starts");
  app.add_option("--threads", threads, "ladder parallelism");

  auto* cmd_solve = app.add_subcommand("solve", "both formulations at the largest ladder eps");
  auto* cmd_limit = app.add_subcommand("limit", "limit problem and angular profile");
  auto* cmd_energy = app.add_subcommand("energy", "interior energies along the eps ladder");
  auto* cmd_exterior = app.add_subcommand("exterior", "exterior minimization and E");
  auto* cmd_converge = app.add_subcommand("converge", "eigenvalue-variation convergence study");
  auto* cmd_sign = app.add_subcommand("sign", "sign experiments at total circulation 1/2");
  int sign_case = 0;
  cmd_sign->add_option("--case", sign_case, "1 = attractive, 2 = repulsive, 0 = both");
  auto* cmd_blowup = app.add_subcommand("blowup", "scaled eigenfunction comparison");
  auto* cmd_oracle = app.add_subcommand("oracle", "Bessel zero oracle");
  double oracle_nu = 0.5;
  int oracle_count = 5;
  cmd_oracle->add_option("--nu", oracle_nu, "Bessel order");
  cmd_oracle->add_option("--count", oracle_count, "number of zeros");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_oracle->parsed()) {
      for (double z : abc::bessel_oracle(oracle_nu, oracle_count)) std::printf("%.12f\n", z);
      return 0;
    }
    abc::ExperimentConfig cfg = load_config(config_path, tol_eigen, trunc, seed, threads);

    if (cmd_solve->parsed()) {
      const double eps = cfg.eps_ladder.front();
      const abc::GaugeAgreement ga = abc::run_gauge_check(cfg, eps, 6);
      std::printf("# magnetic vs crack spectra at eps = %.6g (mesh-extrapolated)\n", eps);
      for (std::size_t i = 0; i < ga.magnetic.size(); ++i)
        std::printf("lambda_%zu  magnetic %.10g   crack pair  %.10g %.10g\n", i + 1, ga.magnetic[i],
                    ga.crack[2 * i], ga.crack[2 * i + 1]);
      print_kv("max_rel_mismatch", ga.max_rel_mismatch);
      print_kv("max_pair_split", ga.max_pair_split);
      nlohmann::json summary;
      summary["magnetic"] = ga.magnetic;
      summary["crack"] = ga.crack;
      summary["max_rel_mismatch"] = ga.max_rel_mismatch;
      summary["max_pair_split"] = ga.max_pair_split;
      abc::emit_report(out_dir, "solve", cfg, {"index", "magnetic", "crack_lo", "crack_hi"}, [&] {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < ga.magnetic.size(); ++i)
          rows.push_back({static_cast<double>(i + 1), ga.magnetic[i], ga.crack[2 * i], ga.crack[2 * i + 1]});
        return rows;
      }(), summary);
    } else if (cmd_limit->parsed()) {
      const abc::LimitAnalysis la = abc::analyze_limit(cfg, cfg.eps_ladder.back());
      print_kv("lambda_0", la.lambda_0);
      print_kv("m", la.profile.m);
      print_kv("beta", la.profile.beta);
      print_kv("gamma", la.profile.gamma);
      print_kv("order", la.profile.order());
      print_kv("fit_residual", la.fit_residual);
      nlohmann::json summary;
      summary["lambda_0"] = la.lambda_0;
      summary["m"] = la.profile.m;
      summary["beta"] = la.profile.beta;
      summary["gamma"] = la.profile.gamma;
      summary["order"] = la.profile.order();
      summary["fit_residual"] = la.fit_residual;
      summary["kreal_residual"] = la.kreal_residual;
      abc::emit_report(out_dir, "limit", cfg, {"lambda_0", "m", "beta", "gamma", "order"},
                       {{la.lambda_0, static_cast<double>(la.profile.m), la.profile.beta,
                         la.profile.gamma, la.profile.order()}},
                       summary);
    } else if (cmd_energy->parsed()) {
      std::vector<std::vector<double>> rows;
      for (double eps : cfg.eps_ladder) {
        const abc::LadderPoint p = abc::solve_ladder_point(cfg, eps, cfg.mesh_ladder.back());
        rows.push_back({eps, p.E_eps, p.L_v0, p.grad_sq_VW, p.sup_identity_residual});
        std::printf("eps %.6g  E_eps %.10g  L_eps(v0,w0) %.10g  |grad|^2 %.10g\n", eps, p.E_eps,
                    p.L_v0, p.grad_sq_VW);
      }
      nlohmann::json summary;
      summary["rows"] = rows.size();
      abc::emit_report(out_dir, "energy", cfg,
                       {"epsilon", "E_eps", "L_eps", "grad_sq", "sup_identity_residual"}, rows,
                       summary);
    } else if (cmd_exterior->parsed()) {
      const abc::LimitAnalysis la = abc::analyze_limit(cfg, cfg.eps_ladder.back());
      const std::vector<double> radii{cfg.trunc / 4.0, cfg.trunc / 2.0, cfg.trunc};
      const abc::ExteriorSolution ext = abc::solve_exterior(la.profile, radii, cfg.h_exterior, cfg.grade);
      for (std::size_t i = 0; i < ext.radii.size(); ++i)
        std::printf("R %.6g  E(R) %.10g\n", ext.radii[i], ext.energies[i]);
      print_kv("E", ext.energy);
      print_kv("L(Phi0,Psi0)", ext.L_profile);
      print_kv("extrapolation_rate", ext.extrapolation_rate);
      nlohmann::json summary;
      summary["E"] = ext.energy;
      summary["L"] = ext.L_profile;
      summary["rate"] = ext.extrapolation_rate;
      summary["converged"] = ext.converged;
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < ext.radii.size(); ++i)
        rows.push_back({ext.radii[i], ext.energies[i], ext.grad_sqs[i]});
      abc::emit_report(out_dir, "exterior", cfg, {"R", "E_R", "grad_sq"}, rows, summary);
    } else if (cmd_converge->parsed()) {
      const abc::ConvergenceTable t = abc::run_convergence(cfg);
      std::printf("# m=%d beta=%.6g gamma=%.6g order=%.6g E=%.8g L=%.8g\n", t.limit.profile.m,
                  t.limit.profile.beta, t.limit.profile.gamma, t.limit.profile.order(),
                  t.exterior.energy, t.exterior.L_profile);
      std::vector<std::vector<double>> rows;
      for (const auto& r : t.rows) {
        const double ratio = r.delta_lambda / r.predicted_2EL;
        rows.push_back({r.eps, r.lambda_eps, r.delta_lambda, r.E_eps, r.L_eps_v0,
                        r.predicted_limit, ratio});
        std::printf("eps %.6g  dl %.8g  2(E+L) %.8g  predicted %.8g  ratio %.4f\n", r.eps,
                    r.delta_lambda, r.predicted_2EL, r.predicted_limit, ratio);
      }
      std::printf("slope %.4f +- %.4f (target %.4f)\n", t.slope, t.slope_stderr,
                  2.0 * t.limit.profile.order());
      abc::emit_report(out_dir, "converge", cfg,
                       {"epsilon", "lambda_eps", "delta_lambda", "E_eps", "L_eps", "predicted",
                        "ratio"},
                       rows, abc::convergence_to_json(t));
    } else if (cmd_sign->parsed()) {
      std::vector<int> cases = sign_case == 0 ? std::vector<int>{1, 2} : std::vector<int>{sign_case};
      for (int c : cases) {
        const abc::SignReport r = abc::run_sign_experiment(c, cfg);
        std::printf("case %d: pole angle %.8g, m=%d, E=%.8g, L=%.3g, signs %s\n", c, r.pole_angle,
                    r.m, r.E_limit, r.L_limit, r.signs_consistent ? "consistent" : "INCONSISTENT");
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < r.eps.size(); ++i)
          rows.push_back({r.eps[i], r.delta_lambda[i]});
        abc::emit_report(out_dir, "sign_case" + std::to_string(c), cfg, {"epsilon", "delta_lambda"},
                         rows, abc::sign_to_json(r));
      }
    } else if (cmd_blowup->parsed()) {
      const abc::BlowupReport r = abc::run_blowup_compare(cfg);
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < r.eps.size(); ++i) {
        rows.push_back({r.eps[i], r.discrepancy[i], r.rate_quantity[i]});
        std::printf("eps %.6g  discrepancy %.6g  rate %.8g (exterior %.8g)\n", r.eps[i],
                    r.discrepancy[i], r.rate_quantity[i], r.exterior_grad_sq);
      }
      abc::emit_report(out_dir, "blowup", cfg, {"epsilon", "discrepancy", "rate_quantity"}, rows,
                       abc::blowup_to_json(r));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
