#include "abcollide/energy.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

namespace abc {

double eta_cutoff(double r) {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double u = r - 1.0;
  return 1.0 - u * u * (3.0 - 2.0 * u);
}

namespace {

const double kGauss4Pts[4] = {0.069431844202973712, 0.33000947820757187, 0.66999052179242813,
                              0.93056815579702629};
const double kGauss4Wts[4] = {0.17392742256872693, 0.32607257743127307, 0.32607257743127307,
                              0.17392742256872693};

/// Integrate f over [0, r_end] with the cubic substitution r = r_end * s^3
/// (clusters nodes at the singular endpoint) and composite Gauss panels.
template <typename F>
double graded_integral(const F& f, double r_end, const LineQuadOptions& opt) {
  if (r_end <= 0.0) return 0.0;
  const int n = std::max(2, opt.graded_subdivisions);
  double total = 0.0;
  for (int p = 0; p < n; ++p) {
    const double s0 = static_cast<double>(p) / n;
    const double s1 = static_cast<double>(p + 1) / n;
    for (int q = 0; q < 4; ++q) {
      const double s = s0 + (s1 - s0) * kGauss4Pts[q];
      const double r = r_end * s * s * s;
      const double jac = 3.0 * r_end * s * s;
      total += kGauss4Wts[q] * (s1 - s0) * jac * f(r);
    }
  }
  return total;
}

}  // namespace

double line_energy_functional(double b, double d, const std::function<Vec2(double)>& dnu_vw,
                              const std::function<Vec2(double)>& trace_vw, double r_end,
                              const LineQuadOptions& opt) {
  return graded_integral(
      [&](double r) {
        const Vec2 dn = dnu_vw(r);
        const Vec2 tr = trace_vw(r);
        return (b - 1.0) * (dn[0] * tr[0] + dn[1] * tr[1]) - d * (dn[0] * tr[1] - dn[1] * tr[0]);
      },
      r_end, opt);
}

SegmentData dnu_from_pair(const CrackMesh& zero_overlay, const Eigen::VectorXd& pair_coef,
                          const CrackSet& eps_cracks) {
  const GeomLayer& layer = *zero_overlay.layer;
  const int n = zero_overlay.n_dofs();
  Eigen::VectorXd v(n), w(n);
  for (int dd = 0; dd < n; ++dd) {
    v[dd] = pair_coef[2 * dd];
    w[dd] = pair_coef[2 * dd + 1];
  }
  P1Space sp = build_space(zero_overlay);
  const std::vector<Vec2> gv = recover_gradient(sp, v);
  const std::vector<Vec2> gw = recover_gradient(sp, w);

  SegmentData out;
  for (const auto& ray : eps_cracks.rays) {
    auto radii = std::make_shared<std::vector<double>>();
    auto dv = std::make_shared<std::vector<double>>();
    auto dw = std::make_shared<std::vector<double>>();
    if (ray.tip_radius > 0.0) {
      const int q = layer.spoke_of_angle(ray.alpha);
      if (q < 0) throw std::invalid_argument("dnu_from_pair: crack spoke missing");
      // radius 0: the origin dof of the sector containing the tip direction
      int origin_dof = 0;
      if (!zero_overlay.origin_dofs.empty())
        origin_dof = zero_overlay.origin_dofs[static_cast<std::size_t>(
            zero_overlay.sector_of(wrap_2pi(ray.alpha)))];
      radii->push_back(0.0);
      dv->push_back(dot(gv[static_cast<std::size_t>(origin_dof)], ray.nu));
      dw->push_back(dot(gw[static_cast<std::size_t>(origin_dof)], ray.nu));
      for (int i = 1; i <= layer.rings(); ++i) {
        const double r = layer.node_radius(q, i);
        if (r > ray.tip_radius * (1.0 + 1e-12)) break;
        const int dof = layer.node_id(q, i);  // never duplicated in the Gamma_0 overlay
        radii->push_back(r);
        dv->push_back(dot(gv[static_cast<std::size_t>(dof)], ray.nu));
        dw->push_back(dot(gw[static_cast<std::size_t>(dof)], ray.nu));
      }
    }
    out.push_back([radii, dv, dw](double r) -> Vec2 {
      if (radii->empty()) return {0.0, 0.0};
      auto it = std::upper_bound(radii->begin(), radii->end(), r);
      if (it == radii->begin()) return {dv->front(), dw->front()};
      if (it == radii->end()) return {dv->back(), dw->back()};
      const std::size_t i = static_cast<std::size_t>(it - radii->begin());
      const double t = (r - (*radii)[i - 1]) / ((*radii)[i] - (*radii)[i - 1]);
      return {(1.0 - t) * (*dv)[i - 1] + t * (*dv)[i], (1.0 - t) * (*dw)[i - 1] + t * (*dw)[i]};
    });
  }
  return out;
}

SegmentData dnu_from_profile(const AngularProfile& profile) {
  SegmentData out;
  for (std::size_t j = 0; j < profile.config.k(); ++j) {
    out.push_back([profile, j](double r) -> Vec2 {
      if (r <= 0.0) r = 1e-300;
      const auto [dv, dw] = profile.normal_derivative(j, r);
      return {dv, dw};
    });
  }
  return out;
}

Eigen::VectorXd assemble_L_vector(const CrackMesh& mesh, const SegmentData& dnu,
                                  const LineQuadOptions& opt) {
  Eigen::VectorXd l = Eigen::VectorXd::Zero(2 * mesh.n_dofs());
  for (std::size_t j = 0; j < mesh.cracks.size(); ++j) {
    const CrackOverlayEntry& e = mesh.cracks[j];
    if (e.tip_radius <= 0.0) continue;
    const auto [b, d] = jump_coeffs(e.rho);
    const auto& radii = e.front.radii;
    const auto& dofs = e.front.plus_dofs;
    const auto& dn = dnu.at(j);
    const int n = std::max(2, opt.graded_subdivisions);
    for (int p = 0; p < n; ++p) {
      const double s0 = static_cast<double>(p) / n;
      const double s1 = static_cast<double>(p + 1) / n;
      for (int q = 0; q < 4; ++q) {
        const double s = s0 + (s1 - s0) * kGauss4Pts[q];
        const double r = e.tip_radius * s * s * s;
        const double wq = kGauss4Wts[q] * (s1 - s0) * 3.0 * e.tip_radius * s * s;
        const Vec2 dvw = dn(r);
        const double cv = (b - 1.0) * dvw[0] + d * dvw[1];
        const double cw = (b - 1.0) * dvw[1] - d * dvw[0];
        // Hat functions along the segment.
        auto it = std::upper_bound(radii.begin(), radii.end(), r);
        std::size_t hi = static_cast<std::size_t>(it - radii.begin());
        if (hi == 0) hi = 1;
        if (hi >= radii.size()) hi = radii.size() - 1;
        const std::size_t lo = hi - 1;
        const double t = (r - radii[lo]) / (radii[hi] - radii[lo]);
        l[2 * dofs[lo]] += wq * cv * (1.0 - t);
        l[2 * dofs[lo] + 1] += wq * cw * (1.0 - t);
        l[2 * dofs[hi]] += wq * cv * t;
        l[2 * dofs[hi] + 1] += wq * cw * t;
      }
    }
  }
  return l;
}

double L_value(const CrackMesh& mesh, const SegmentData& dnu, const Eigen::VectorXd& pair_coef,
               const LineQuadOptions& opt) {
  return assemble_L_vector(mesh, dnu, opt).dot(pair_coef);
}

namespace {

Eigen::VectorXd lift_vector(const CrackMesh& eps_mesh, const CrackMesh& zero_mesh,
                            const Eigen::VectorXd& v0w0, double eps) {
  const std::vector<int> map = overlay_map(zero_mesh, eps_mesh);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * eps_mesh.n_dofs());
  for (int d = 0; d < eps_mesh.n_dofs(); ++d) {
    const double r = norm(eps_mesh.xy[static_cast<std::size_t>(d)]);
    const double et = eta_cutoff(r / eps);
    if (et == 0.0) continue;
    g[2 * d] = et * v0w0[2 * map[static_cast<std::size_t>(d)]];
    g[2 * d + 1] = et * v0w0[2 * map[static_cast<std::size_t>(d)] + 1];
  }
  return g;
}

}  // namespace

InteriorSolution solve_interior(const CrackMesh& eps_mesh, const CrackForms& eps_forms,
                                const CrackMesh& zero_mesh, const Eigen::VectorXd& v0w0,
                                double eps, const LineQuadOptions& opt) {
  CrackSet active;
  active.eps = eps;
  for (const auto& e : eps_mesh.cracks) {
    CrackRay ray;
    ray.alpha = e.alpha;
    ray.rho = e.rho;
    ray.nu = e.nu;
    ray.tip_radius = e.tip_radius;
    active.rays.push_back(ray);
  }
  const SegmentData dnu = dnu_from_pair(zero_mesh, v0w0, active);
  const Eigen::VectorXd l = assemble_L_vector(eps_mesh, dnu, opt);
  const Eigen::VectorXd g = lift_vector(eps_mesh, zero_mesh, v0w0, eps);

  const Eigen::VectorXd rhs = eps_forms.red.restrict_rhs(l - eps_forms.K_full * g);
  Eigen::SimplicialLDLT<SpMat> ldlt(eps_forms.K);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve_interior: indefinite reduced system (constraint assembly bug)");
  const Eigen::VectorXd x = ldlt.solve(rhs);

  InteriorSolution out;
  out.coef = eps_forms.red.expand(x) + g;
  out.grad_sq = out.coef.dot(eps_forms.K_full * out.coef);
  out.L_sol = l.dot(out.coef);
  out.energy = 0.5 * out.grad_sq - out.L_sol;
  out.L_v0 = l.dot(lift_vector(eps_mesh, zero_mesh, v0w0, 1e300));  // eta == 1 everywhere
  const double rn = (eps_forms.K * x - rhs).norm();
  out.residual = rn / std::max(rhs.norm(), 1e-300);
  return out;
}

EeSupCheck check_Ee_sup(const CrackMesh& eps_mesh, const CrackForms& eps_forms,
                        const CrackMesh& zero_mesh, const Eigen::VectorXd& v0w0, double eps,
                        const InteriorSolution& sol, int n_samples, std::uint64_t seed) {
  CrackSet active;
  active.eps = eps;
  for (const auto& e : eps_mesh.cracks) {
    CrackRay ray;
    ray.alpha = e.alpha;
    ray.rho = e.rho;
    ray.nu = e.nu;
    ray.tip_radius = e.tip_radius;
    active.rays.push_back(ray);
  }
  const SegmentData dnu = dnu_from_pair(zero_mesh, v0w0, active);
  const Eigen::VectorXd l = assemble_L_vector(eps_mesh, dnu, {});
  const Eigen::VectorXd g = lift_vector(eps_mesh, zero_mesh, v0w0, eps);

  const Eigen::VectorXd a_red = eps_forms.red.restrict_rhs(eps_forms.K_full * g - l);
  Eigen::SimplicialLDLT<SpMat> ldlt(eps_forms.K);
  const Eigen::VectorXd y_opt = ldlt.solve(a_red);
  const double sup_val = a_red.dot(y_opt);

  EeSupCheck out;
  out.sup_value = sup_val;
  out.energy_direct = sol.energy;
  out.energy_equiv = 0.5 * g.dot(eps_forms.K_full * g) - l.dot(g) - 0.5 * sup_val;
  out.identity_residual = std::abs(out.energy_equiv - out.energy_direct) /
                          std::max({std::abs(out.energy_direct), std::abs(out.energy_equiv), 1e-300});

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  out.samples_total = n_samples;
  for (int s = 0; s < n_samples; ++s) {
    Eigen::VectorXd y(eps_forms.K.rows());
    for (int i = 0; i < y.size(); ++i) y[i] = uni(rng);
    const double num = a_red.dot(y);
    const double den = y.dot(eps_forms.K * y);
    if (den <= 0.0) continue;
    if (num * num / den <= sup_val * (1.0 + 1e-9) + 1e-300) ++out.samples_below;
  }
  return out;
}

double L_of_profile(const AngularProfile& profile, const LineQuadOptions& opt) {
  double total = 0.0;
  for (std::size_t j = 0; j < profile.config.k(); ++j) {
    const Pole& p = profile.config.poles[j];
    const auto [b, d] = jump_coeffs(p.rho);
    const double alpha = p.alpha;
    total += line_energy_functional(
        b, d, [&](double r) { const auto [dv, dw] = profile.normal_derivative(j, r); return Vec2{dv, dw}; },
        [&](double r) {
          const auto [pv, pw] = profile.value_polar(r, wrap_2pi(alpha));
          return Vec2{pv, pw};
        },
        p.r, opt);
  }
  return total;
}

ExteriorSolution solve_exterior(const AngularProfile& profile, const std::vector<double>& radii,
                                double h, double grade, const LineQuadOptions& opt) {
  if (radii.size() < 2) throw std::invalid_argument("solve_exterior: need at least two radii");
  ExteriorSolution out;
  out.radii = radii;
  const PoleConfig& config = profile.config;

  CrackSet cracks;
  cracks.eps = 1.0;
  for (std::size_t j = 0; j < config.k(); ++j) {
    CrackRay ray;
    ray.alpha = config.poles[j].alpha;
    ray.rho = config.poles[j].rho;
    ray.nu = config.normal(j);
    ray.tip_radius = config.poles[j].r;
    ray.tip = {config.poles[j].r * std::cos(ray.alpha), config.poles[j].r * std::sin(ray.alpha)};
    cracks.rays.push_back(ray);
  }
  const SegmentData dnu = dnu_from_profile(profile);

  for (double R : radii) {
    auto layer = std::make_shared<const GeomLayer>(build_exterior_layer(R, cracks, h, grade));
    auto mesh = std::make_shared<CrackMesh>(apply_cracks(layer, cracks));
    const CrackForms forms = assemble_crack(*mesh, true);

    // Side-aware nodal lift eta * (Phi_0, Psi_0).
    Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * mesh->n_dofs());
    std::vector<char> assigned(static_cast<std::size_t>(mesh->n_dofs()), 0);
    for (const auto& e : mesh->cracks) {
      for (const CrackBranch* br : {&e.back, &e.front}) {
        const bool back = (br == &e.back);
        for (std::size_t i = 0; i < br->radii.size(); ++i) {
          const double r = br->radii[i];
          const double et = eta_cutoff(r);
          const auto set = [&](int dof, bool from_below) {
            if (assigned[static_cast<std::size_t>(dof)]) return;
            assigned[static_cast<std::size_t>(dof)] = 1;
            if (r == 0.0 || et == 0.0) return;  // zero value
            const auto [pv, pw] = profile.value_polar(r, br->angle, from_below);
            g[2 * dof] = et * pv;
            g[2 * dof + 1] = et * pw;
          };
          // plus side of a back branch sits just below its threshold angle
          set(br->plus_dofs[i], back);
          set(br->minus_dofs[i], !back);
        }
      }
    }
    for (int d = 0; d < mesh->n_dofs(); ++d) {
      if (assigned[static_cast<std::size_t>(d)]) continue;
      const Vec2& x = mesh->xy[static_cast<std::size_t>(d)];
      const double r = norm(x);
      const double et = eta_cutoff(r);
      if (et == 0.0 || r == 0.0) continue;
      const auto [pv, pw] = profile.value(x);
      g[2 * d] = et * pv;
      g[2 * d + 1] = et * pw;
    }

    const Eigen::VectorXd l = assemble_L_vector(*mesh, dnu, opt);
    const Eigen::VectorXd rhs = forms.red.restrict_rhs(l - forms.K_full * g);
    Eigen::SimplicialLDLT<SpMat> ldlt(forms.K);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("solve_exterior: factorization failed");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    Eigen::VectorXd sol = forms.red.expand(x) + g;
    const double grad_sq = sol.dot(forms.K_full * sol);
    const double lv = l.dot(sol);
    out.energies.push_back(0.5 * grad_sq - lv);
    out.grad_sqs.push_back(grad_sq);
    if (R == radii.back()) {
      out.layer = layer;
      out.mesh = mesh;
      out.coef = std::move(sol);
    }
  }

  // Richardson extrapolation assuming an algebraic tail E(R) = E + c R^-q.
  const std::size_t n = out.energies.size();
  const double e1 = out.energies[n - 3 < n ? (n >= 3 ? n - 3 : 0) : 0];
  const double e2 = out.energies[n - 2];
  const double e3 = out.energies[n - 1];
  out.L_profile = L_of_profile(profile, opt);
  if (n >= 3 && (e1 - e2) * (e2 - e3) > 0.0 && std::abs(e1 - e2) > std::abs(e2 - e3)) {
    const double ratio = (e1 - e2) / (e2 - e3);
    const double q = std::log(ratio) / std::log(out.radii[n - 2] / out.radii[n - 3]);
    const double factor = std::pow(out.radii[n - 1] / out.radii[n - 2], q);
    out.extrapolation_rate = q;
    out.energy = e3 + (e3 - e2) / (factor - 1.0);
    const double g2 = out.grad_sqs[n - 2], g3 = out.grad_sqs[n - 1];
    out.grad_sq = g3 + (g3 - g2) / (factor - 1.0);
  } else {
    out.energy = e3;
    out.grad_sq = out.grad_sqs[n - 1];
    out.extrapolation_rate = 0.0;
  }
  out.converged = std::abs(e3 - e2) <= 0.01 * std::max(std::abs(e3), 1e-300);
  return out;
}

double predicted_shift(double E, double L_val, double order, double eps) {
  return 2.0 * std::pow(eps, 2.0 * order) * (E + L_val);
}

HardyReport hardy_check(const CrackMesh& annulus_mesh, const CrackForms& forms,
                        const Eigen::VectorXd& pair_coef, double total_rho, double slack) {
  const int n = annulus_mesh.n_dofs();
  Eigen::VectorXd v(n), w(n);
  for (int d = 0; d < n; ++d) {
    v[d] = pair_coef[2 * d];
    w[d] = pair_coef[2 * d + 1];
  }
  P1Space sp = build_space(annulus_mesh);
  const auto inv_r2 = [](const Vec2& x) { return 1.0 / std::max(dot(x, x), 1e-300); };
  HardyReport rep;
  rep.lhs = weighted_l2_sq(sp, v, inv_r2) + weighted_l2_sq(sp, w, inv_r2);
  rep.energy = pair_coef.dot(forms.K_full * pair_coef);
  rep.constant = std::max(1.0 / (total_rho * total_rho), 1.0 / ((1.0 - total_rho) * (1.0 - total_rho)));
  rep.ok = rep.lhs <= rep.constant * rep.energy * (1.0 + slack);
  return rep;
}

}  // namespace abc
