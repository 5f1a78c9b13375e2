#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "abcollide/asymptotics.hpp"
#include "abcollide/bessel.hpp"
#include "abcollide/eigensolve.hpp"
#include "abcollide/fem.hpp"

using namespace abc;

namespace {

AngularProfile sample_profile(bool half) {
  AngularProfile p;
  if (half) {
    p.config.poles = {{0.5, 0.4, 0.25}, {0.45, -1.3, 0.25}};
    p.m = 1;
  } else {
    p.config.poles = {{0.5, 0.4, 0.2}, {0.45, -1.3, 0.2}};
    p.m = 0;
  }
  p.beta = 2.0;
  p.gamma = 0.7;
  return p;
}

}  // namespace

TEST_CASE("euler identity for the non-half-integer profile") {
  const AngularProfile p = sample_profile(false);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(0.05, 1.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  for (int i = 0; i < 200; ++i) {
    const double r = uni(rng);
    const double t = ang(rng);
    const auto [phi, psi] = p.value_polar(r, t);
    const double f = p.f_of(t);
    const std::complex<double> expected =
        p.beta * std::pow(r, p.order()) *
        std::exp(std::complex<double>(0.0, 2.0 * kPi * f + (p.m + p.rho()) * (p.gamma - t)));
    CHECK(phi == doctest::Approx(expected.real()).epsilon(1e-12));
    CHECK(psi == doctest::Approx(expected.imag()).epsilon(1e-12));
  }
}

TEST_CASE("profiles are homogeneous of degree |m+rho|") {
  for (bool half : {false, true}) {
    const AngularProfile p = sample_profile(half);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
      const Vec2 x{uni(rng), uni(rng)};
      if (norm(x) < 0.05) continue;
      const auto [v1, w1] = p.value(x);
      const auto [v2, w2] = p.value({2.0 * x[0], 2.0 * x[1]});
      const double s = std::pow(2.0, p.order());
      CHECK(v2 == doctest::Approx(s * v1).epsilon(1e-12));
      CHECK(w2 == doctest::Approx(s * w1).epsilon(1e-12));
    }
  }
}

TEST_CASE("pointwise growth bound") {
  const AngularProfile p = sample_profile(false);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uni(0.01, 2.0);
  std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
  for (int i = 0; i < 500; ++i) {
    const double r = uni(rng);
    const double t = ang(rng);
    const auto [phi, psi] = p.value_polar(r, t);
    const double bound = p.beta * std::pow(r, p.order()) * (1.0 + 1e-12);
    CHECK(std::abs(phi) <= bound);
    CHECK(std::abs(psi) <= bound);
  }
}

TEST_CASE("half-integer sector profile") {
  // rho = 1/2, m = 0, gamma = 0, single pole: on the arc before the
  // threshold f = 0, so Phi = beta r^{1/2} cos(t/2) and Psi = 0.
  AngularProfile p;
  p.config.poles = {{0.5, 0.4, 0.5}};
  p.m = 0;
  p.beta = 1.3;
  p.gamma = 0.0;
  const double thr = 0.4 + kPi;
  for (double t : {0.1, 0.8, 2.0, thr - 1e-3}) {
    const auto [phi, psi] = p.value_polar(0.7, t);
    CHECK(phi == doctest::Approx(1.3 * std::sqrt(0.7) * std::cos(0.5 * t)).epsilon(1e-12));
    CHECK(psi == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches finite differences") {
  for (bool half : {false, true}) {
    const AngularProfile p = sample_profile(half);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    int tested = 0;
    while (tested < 100) {
      const Vec2 x{uni(rng), uni(rng)};
      const double r = norm(x);
      if (r < 0.2) continue;
      // keep away from the f discontinuities
      bool near_cut = false;
      const double t = wrap_2pi(std::atan2(x[1], x[0]));
      for (const auto& pl : p.config.poles)
        if (std::abs(wrap_pm_pi(t - (pl.alpha + kPi))) < 0.05) near_cut = true;
      if (near_cut) continue;
      ++tested;
      const auto [gv, gw] = p.gradient(x);
      const double h = 1e-7;
      const auto [vxp, wxp] = p.value({x[0] + h, x[1]});
      const auto [vxm, wxm] = p.value({x[0] - h, x[1]});
      const auto [vyp, wyp] = p.value({x[0], x[1] + h});
      const auto [vym, wym] = p.value({x[0], x[1] - h});
      CHECK(gv[0] == doctest::Approx((vxp - vxm) / (2 * h)).epsilon(1e-5));
      CHECK(gv[1] == doctest::Approx((vyp - vym) / (2 * h)).epsilon(1e-5));
      CHECK(gw[0] == doctest::Approx((wxp - wxm) / (2 * h)).epsilon(1e-5));
      CHECK(gw[1] == doctest::Approx((wyp - wym) / (2 * h)).epsilon(1e-5));
    }
  }
}

TEST_CASE("jump closure of the profiles across the crack rays") {
  for (bool half : {false, true}) {
    const AngularProfile p = sample_profile(half);
    for (std::size_t j = 0; j < p.config.k(); ++j) {
      const auto [b, d] = jump_coeffs(p.config.poles[j].rho);
      const double thr = wrap_2pi(p.config.poles[j].alpha + kPi);
      for (double r : {0.3, 0.9}) {
        // plus side: angles below the threshold (x.nu > 0 there)
        const auto [vp, wp] = p.value_polar(r, thr, true);
        const auto [vm, wm] = p.value_polar(r, thr, false);
        CHECK(vm == doctest::Approx(b * vp - d * wp).epsilon(1e-12));
        CHECK(wm == doctest::Approx(d * vp + b * wp).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("synthetic profile fit recovers m, beta, gamma") {
  for (bool half : {false, true}) {
    const AngularProfile p = sample_profile(half);
    const PairSampler field = [&](const Vec2& x) { return p.value(x); };
    FitOptions opt;
    opt.delta0 = 0.4;
    if (half) opt.m_lo = 0;
    const VanishingOrderFit vo = fit_vanishing_order(field, p.config, opt);
    CHECK(vo.m == p.m);
    CHECK(!vo.ambiguous);
    const ProfileFit pf = fit_profile(field, p.config, vo.m, opt);
    CHECK(pf.profile.beta == doctest::Approx(p.beta).epsilon(1e-6));
    CHECK(pf.profile.gamma == doctest::Approx(p.gamma).epsilon(1e-6));
    CHECK(pf.residual < 1e-8);
  }
}

TEST_CASE("fit is invariant under phase rotation up to the gamma shift") {
  const AngularProfile p = sample_profile(false);
  const double tau = 0.9;
  const PairSampler rotated = [&](const Vec2& x) {
    const auto [v, w] = p.value(x);
    return std::pair<double, double>{std::cos(tau) * v - std::sin(tau) * w,
                                     std::sin(tau) * v + std::cos(tau) * w};
  };
  FitOptions opt;
  opt.delta0 = 0.4;
  const VanishingOrderFit vo = fit_vanishing_order(rotated, p.config, opt);
  CHECK(vo.m == p.m);
  const ProfileFit pf = fit_profile(rotated, p.config, vo.m, opt);
  CHECK(pf.profile.beta == doctest::Approx(p.beta).epsilon(1e-6));
  // gamma shifts by tau/(m+rho) modulo the period
  const double period = p.gamma_period();
  const double expected = p.gamma + tau / (p.m + p.rho());
  const double wrapped = expected - period * std::floor(expected / period);
  CHECK(pf.profile.gamma == doctest::Approx(wrapped).epsilon(1e-6));
}

TEST_CASE("disk eigenfunction fits the Bessel asymptotics") {
  // rho = 0.3, pole at the center: the first eigenfunction vanishes at order
  // 0.3 (m = 0) and beta matches the small-argument Bessel coefficient of the
  // normalized eigenfunction.
  DomainSpec disk = regular_polygon(128, 1.0);
  PoleConfig c;
  c.poles = {{0.5, 0.0, 0.3}};
  const CrackSet cs0 = crack_polylines(c, disk, 0.0);
  const CrackMesh mesh = generate(disk, cs0, 0.04, 3.0);
  const CrackForms cf = assemble_crack(mesh);
  SolveOptions sopt;
  sopt.nev = 4;
  const SpectralResult res = solve_lowest(cf, mesh, sopt);
  const PairEigenfunction pair = normalize_pair(res, cf, 1);

  FitOptions opt;
  opt.delta0 = 0.4;
  opt.min_delta = 0.01;
  const PairSampler field = mesh_sampler(mesh, pair.coef);
  const VanishingOrderFit vo = fit_vanishing_order(field, c, opt);
  CHECK(vo.m == 0);
  const ProfileFit pf = fit_profile(field, c, 0, opt);

  // Oracle: u = N J_0.3(j r) with 2 pi N^2 int_0^1 J^2 r dr = 1;
  // beta = N (j/2)^0.3 / Gamma(1.3).
  const double j1 = bessel_zeros(0.3, 1)[0];
  double quad = 0.0;
  const int nq = 4000;
  for (int i = 0; i < nq; ++i) {
    const double r = (i + 0.5) / nq;
    const double val = bessel_j(0.3, j1 * r);
    quad += val * val * r / nq;
  }
  const double N = 1.0 / std::sqrt(2.0 * kPi * quad);
  const double beta_ref = N * std::pow(j1 / 2.0, 0.3) / std::tgamma(1.3);
  CHECK(pf.profile.beta == doctest::Approx(beta_ref).epsilon(0.02));
}

TEST_CASE("interpolated profile has decaying interior laplace residual") {
  // Phi_0, Psi_0 solve the eps = 0 crack problem with zero right-hand side;
  // the discrete interior residual of their interpolant decays under
  // refinement.
  const AngularProfile p = sample_profile(false);
  DomainSpec rect = default_rectangle();
  const CrackSet cs0 = crack_polylines(p.config, rect, 0.0);
  double prev = -1.0;
  for (double h : {0.2, 0.1, 0.05}) {
    const CrackMesh mesh = generate(rect, cs0, h, 3.0);
    const CrackForms cf = assemble_crack(mesh, false);
    Eigen::VectorXd coef(2 * mesh.n_dofs());
    const auto sides = [&]() {
      std::vector<int> s(mesh.n_dofs(), 0);
      for (const auto& e : mesh.cracks)
        for (std::size_t i = 0; i < e.back.radii.size(); ++i) {
          if (e.back.radii[i] == 0.0) continue;
          s[e.back.plus_dofs[i]] = 1;
          s[e.back.minus_dofs[i]] = -1;
        }
      return s;
    }();
    for (int d = 0; d < mesh.n_dofs(); ++d) {
      const Vec2& x = mesh.xy[d];
      const double r = norm(x);
      if (r == 0.0) {
        coef[2 * d] = coef[2 * d + 1] = 0.0;
        continue;
      }
      double t = wrap_2pi(std::atan2(x[1], x[0]));
      bool below = sides[d] > 0;
      const auto [v, w] = p.value_polar(r, t, below && sides[d] != 0);
      coef[2 * d] = v;
      coef[2 * d + 1] = w;
    }
    // Weak residual rows on an annulus away from the origin singularity and
    // the boundary; the interpolation consistency error there is O(h).
    const Eigen::VectorXd r_full = cf.K_full * coef;
    const Eigen::VectorXd r_red = cf.red.restrict_rhs(r_full);
    double resid = 0.0;
    for (std::size_t m = 0; m < cf.red.master_dofs.size(); ++m) {
      const int dof = cf.red.master_dofs[m];
      const double r = norm(mesh.xy[dof]);
      if (mesh.dirichlet[dof] || r < 0.25 || r > 0.75) continue;
      resid += r_red[2 * m] * r_red[2 * m] + r_red[2 * m + 1] * r_red[2 * m + 1];
    }
    resid = std::sqrt(resid);
    if (prev > 0.0) CHECK(resid < 0.8 * prev);
    prev = resid;
  }
}
