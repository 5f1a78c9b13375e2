#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "abcollide/harness.hpp"

using namespace abc;

TEST_CASE("bessel oracle half-integer zeros are multiples of pi") {
  const auto zeros = bessel_oracle(0.5, 5);
  for (int n = 0; n < 5; ++n) CHECK(zeros[n] == doctest::Approx((n + 1) * kPi).epsilon(1e-11));
}

TEST_CASE("bessel oracle first zero of J_1") {
  const auto zeros = bessel_oracle(1.0, 1);
  CHECK(zeros[0] == doctest::Approx(3.8317059702).epsilon(1e-9));
}

TEST_CASE("bessel zeros increase and interlace with the next order") {
  const auto z0 = bessel_oracle(0.3, 5);
  const auto z1 = bessel_oracle(1.3, 5);
  for (int i = 0; i + 1 < 5; ++i) {
    CHECK(z0[i] < z0[i + 1]);
    CHECK(z0[i] < z1[i]);
    CHECK(z1[i] < z0[i + 1]);
  }
}

TEST_CASE("bessel function special values") {
  CHECK(bessel_j(0.0, 0.0) == 1.0);
  CHECK(bessel_j(0.5, kPi) == doctest::Approx(0.0).epsilon(1e-14));
  // J_{1/2}(x) = sqrt(2/(pi x)) sin x
  for (double x : {0.5, 1.5, 4.0, 9.0}) {
    CHECK(bessel_j(0.5, x) == doctest::Approx(std::sqrt(2.0 / (kPi * x)) * std::sin(x)).epsilon(1e-12));
  }
}

TEST_CASE("slope fit on synthetic power data") {
  std::vector<double> x, y;
  for (double e : {0.2, 0.141, 0.1, 0.0707, 0.05}) {
    x.push_back(e);
    y.push_back(3.0 * std::pow(e, 0.8));
  }
  const SlopeFit f = fit_loglog_slope(x, y);
  CHECK(f.slope == doctest::Approx(0.8).epsilon(1e-10));
  CHECK(f.stderr_ < 1e-10);
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("config round trip and hash stability") {
  ExperimentConfig cfg;
  cfg.poles.poles = {{0.5, 0.4, 0.2}, {0.45, -1.3, 0.2}};
  cfg.validate();
  const nlohmann::json j = config_to_json(cfg);
  const ExperimentConfig back = parse_config(j);
  CHECK(back.poles.poles.size() == 2);
  CHECK(back.poles.poles[1].alpha == cfg.poles.poles[1].alpha);
  CHECK(config_hash(back) == config_hash(cfg));

  ExperimentConfig other = cfg;
  other.poles.poles[0].rho = 0.21;
  CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config validation rejects bad ladders") {
  ExperimentConfig cfg;
  cfg.poles.poles = {{0.5, 0.4, 0.2}};
  cfg.eps_ladder = {0.1, 0.2};
  CHECK_THROWS(cfg.validate());
  cfg.eps_ladder = {0.2, 0.1};
  cfg.mesh_ladder = {};
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("emit_report writes deterministic byte-identical files") {
  ExperimentConfig cfg;
  cfg.poles.poles = {{0.5, 0.4, 0.2}};
  const std::string dir = (std::filesystem::temp_directory_path() / "abc_report_test").string();
  std::filesystem::remove_all(dir);
  nlohmann::json summary;
  summary["note"] = "deterministic";
  const std::vector<std::string> cols{"epsilon", "lambda_eps", "delta_lambda", "E_eps",
                                      "L_eps",   "predicted",  "ratio"};
  const std::vector<std::vector<double>> rows{{0.2, 5.1, 0.01, 1e-3, -2e-4, 0.011, 0.9090909}};
  const ReportFiles f1 = emit_report(dir, "conv", cfg, cols, rows, summary);
  std::stringstream s1, s2;
  s1 << std::ifstream(f1.csv_path).rdbuf() << std::ifstream(f1.json_path).rdbuf();
  const ReportFiles f2 = emit_report(dir, "conv", cfg, cols, rows, summary);
  s2 << std::ifstream(f2.csv_path).rdbuf() << std::ifstream(f2.json_path).rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(s1.str().find("epsilon,lambda_eps,delta_lambda,E_eps,L_eps,predicted,ratio") !=
        std::string::npos);
  CHECK(s1.str().find("config_hash") != std::string::npos);

  // Empty result set: header-only CSV plus a summary with zero criteria.
  const ReportFiles f3 = emit_report(dir, "empty", cfg, cols, {}, nlohmann::json::object());
  std::stringstream s3;
  s3 << std::ifstream(f3.csv_path).rdbuf();
  CHECK(s3.str() == "epsilon,lambda_eps,delta_lambda,E_eps,L_eps,predicted,ratio\n");
}

TEST_CASE("ladder point: eigenvalues converge and identities hold") {
  ExperimentConfig cfg;
  cfg.poles.poles = {{0.5, 0.4, 0.2}, {0.45, -1.3, 0.2}};
  cfg.mesh_ladder = {0.14};
  cfg.validate();
  const LadderPoint p = solve_ladder_point(cfg, 0.2, 0.14);
  CHECK(p.lambda_0 > 0.0);
  CHECK(p.lambda_eps > 0.0);
  CHECK(std::abs(p.lambda_eps - p.lambda_0) < 0.2 * p.lambda_0);
  CHECK(p.interior_residual < 1e-9);
  CHECK(p.sup_identity_residual < 1e-7);
  CHECK(p.E_eps < 0.5);  // small coupling energy at eps = 0.2
}

TEST_CASE("limit analysis on the asymmetric rectangle, two poles of 0.2") {
  ExperimentConfig cfg;
  cfg.poles.poles = {{0.5, 0.4, 0.2}, {0.45, -1.3, 0.2}};
  cfg.mesh_ladder = {0.1, 0.0707};
  cfg.validate();
  const LimitAnalysis la = analyze_limit(cfg, 0.05);
  CHECK(la.lambda_0 > 0.0);
  CHECK(la.profile.m == 0);  // first eigenfunction vanishes at the lowest order 0.4
  CHECK(la.profile.order() == doctest::Approx(0.4));
  CHECK(la.profile.beta > 0.0);
  CHECK(la.fit_residual < 0.05);
  CHECK(!la.order_ambiguous);
}

TEST_CASE("mesh extrapolation helper is exposed through gauge agreement") {
  // Small smoke run: one random-ish pole pair at a fixed eps; the doubled
  // crack spectrum must track the magnetic one.
  ExperimentConfig cfg;
  cfg.poles.poles = {{0.5, 0.9, 0.27}, {0.4, -0.7, 0.31}};
  cfg.mesh_ladder = {0.16, 0.12};
  cfg.validate();
  const GaugeAgreement ga = run_gauge_check(cfg, 0.35, 2);
  REQUIRE(ga.magnetic.size() == 2);
  CHECK(ga.max_pair_split < 1e-6);
  CHECK(ga.max_rel_mismatch < 0.05);
}
