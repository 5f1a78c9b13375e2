#include "abcollide/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace abc {

const QuadRule& tri_rule_deg4() {
  static const QuadRule rule = [] {
    QuadRule r;
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    r.pts = {{1 - 2 * a1, a1, a1}, {a1, 1 - 2 * a1, a1}, {a1, a1, 1 - 2 * a1},
             {1 - 2 * a2, a2, a2}, {a2, 1 - 2 * a2, a2}, {a2, a2, 1 - 2 * a2}};
    r.w = {w1, w1, w1, w2, w2, w2};
    return r;
  }();
  return rule;
}

const QuadRule& tri_rule_pole16() {
  static const QuadRule rule = [] {
    // Duffy map (u,v) -> lambda = (1-u, u(1-v), uv) collapses the square onto
    // the triangle with the singular vertex first; substituting u = s^2
    // clusters points there. 4x4 Gauss-Legendre on the square.
    const double gp[4] = {0.069431844202974, 0.330009478207572, 0.669990521792428,
                          0.930568155797026};
    const double gw[4] = {0.173927422568727, 0.326072577431273, 0.326072577431273,
                          0.173927422568727};
    QuadRule r;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        const double s = gp[i], v = gp[j];
        const double u = s * s;
        // Jacobian of the Duffy map is u; of the substitution is 2s.
        const double w = gw[i] * gw[j] * u * 2.0 * s;
        r.pts.push_back({1.0 - u, u * (1.0 - v), u * v});
        r.w.push_back(w);
      }
    }
    // The plain Duffy weights integrate to the unit-square measure 1/? ensure
    // normalization: sum of w equals the triangle measure in barycentric
    // convention (1). Rescale to be safe against roundoff drift.
    double sum = 0.0;
    for (double w : r.w) sum += w;
    for (double& w : r.w) w /= sum;
    return r;
  }();
  return rule;
}

P1Space build_space(const CrackMesh& mesh) {
  P1Space sp;
  sp.mesh = &mesh;
  const std::size_t nt = mesh.tri.size();
  sp.area.resize(nt);
  sp.grad.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tr = mesh.tri[t];
    const Vec2& a = mesh.xy[static_cast<std::size_t>(tr[0])];
    const Vec2& b = mesh.xy[static_cast<std::size_t>(tr[1])];
    const Vec2& c = mesh.xy[static_cast<std::size_t>(tr[2])];
    const double det = cross(b - a, c - a);
    if (det <= 0.0) throw std::runtime_error("build_space: inverted triangle");
    sp.area[t] = 0.5 * det;
    sp.grad[t][0] = {(b[1] - c[1]) / det, (c[0] - b[0]) / det};
    sp.grad[t][1] = {(c[1] - a[1]) / det, (a[0] - c[0]) / det};
    sp.grad[t][2] = {(a[1] - b[1]) / det, (b[0] - a[0]) / det};
  }
  return sp;
}

SpMat scalar_stiffness(const P1Space& sp) {
  const CrackMesh& mesh = *sp.mesh;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.tri.size() * 9);
  for (std::size_t t = 0; t < mesh.tri.size(); ++t) {
    const auto& tr = mesh.tri[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tr[static_cast<std::size_t>(i)], tr[static_cast<std::size_t>(j)],
                           sp.area[t] * dot(sp.grad[t][static_cast<std::size_t>(i)],
                                            sp.grad[t][static_cast<std::size_t>(j)]));
  }
  SpMat K(mesh.n_dofs(), mesh.n_dofs());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

SpMat scalar_mass(const P1Space& sp) {
  const CrackMesh& mesh = *sp.mesh;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.tri.size() * 9);
  for (std::size_t t = 0; t < mesh.tri.size(); ++t) {
    const auto& tr = mesh.tri[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        trips.emplace_back(tr[static_cast<std::size_t>(i)], tr[static_cast<std::size_t>(j)],
                           sp.area[t] * (i == j ? 1.0 / 6.0 : 1.0 / 12.0));
  }
  SpMat M(mesh.n_dofs(), mesh.n_dofs());
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

double weighted_l2_sq(const P1Space& sp, const Eigen::VectorXd& coef,
                      const std::function<double(const Vec2&)>& weight) {
  const CrackMesh& mesh = *sp.mesh;
  const QuadRule& rule = tri_rule_deg4();
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.tri.size(); ++t) {
    const auto& tr = mesh.tri[t];
    const Vec2& a = mesh.xy[static_cast<std::size_t>(tr[0])];
    const Vec2& b = mesh.xy[static_cast<std::size_t>(tr[1])];
    const Vec2& c = mesh.xy[static_cast<std::size_t>(tr[2])];
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.pts.size(); ++q) {
      const auto& l = rule.pts[q];
      const Vec2 x = l[0] * a + l[1] * b + l[2] * c;
      const double val = l[0] * coef[tr[0]] + l[1] * coef[tr[1]] + l[2] * coef[tr[2]];
      acc += rule.w[q] * weight(x) * val * val;
    }
    total += acc * sp.area[t];
  }
  return total;
}

SpMat pair_expand(const SpMat& scalar, int n_dofs) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(scalar.nonZeros()) * 2);
  for (int k = 0; k < scalar.outerSize(); ++k) {
    for (SpMat::InnerIterator it(scalar, k); it; ++it) {
      trips.emplace_back(2 * static_cast<int>(it.row()), 2 * static_cast<int>(it.col()), it.value());
      trips.emplace_back(2 * static_cast<int>(it.row()) + 1, 2 * static_cast<int>(it.col()) + 1,
                         it.value());
    }
  }
  SpMat P(2 * n_dofs, 2 * n_dofs);
  P.setFromTriplets(trips.begin(), trips.end());
  return P;
}

PairReduction build_pair_reduction(const CrackMesh& mesh, bool clamp_outer) {
  const int n = mesh.n_dofs();
  // role: 0 = master, 1 = slave, 2 = clamped
  std::vector<int> role(static_cast<std::size_t>(n), 0);
  std::vector<int> master(static_cast<std::size_t>(n), -1);
  std::vector<std::array<double, 4>> rot(static_cast<std::size_t>(n), {1, 0, 0, 1});

  auto bind = [&](int slave, int mast, const std::array<double, 4>& R) {
    if (role[static_cast<std::size_t>(slave)] == 1)
      throw std::runtime_error("build_pair_reduction: constraint cycle");
    role[static_cast<std::size_t>(slave)] = 1;
    master[static_cast<std::size_t>(slave)] = mast;
    rot[static_cast<std::size_t>(slave)] = R;
  };

  for (const auto& e : mesh.cracks) {
    const double w = 2.0 * kPi * e.rho;
    const std::array<double, 4> R{std::cos(w), -std::sin(w), std::sin(w), std::cos(w)};
    for (const CrackBranch* br : {&e.back, &e.front}) {
      for (std::size_t i = 0; i < br->radii.size(); ++i) {
        if (br->radii[i] == 0.0) continue;                      // origin handled by sectors
        if (br->plus_dofs[i] == br->minus_dofs[i]) continue;    // shared tip node
        bind(br->minus_dofs[i], br->plus_dofs[i], R);
      }
    }
  }
  if (mesh.origin_clamped) {
    for (int d : mesh.origin_dofs) role[static_cast<std::size_t>(d)] = 2;
  } else {
    for (std::size_t s = 1; s < mesh.origin_dofs.size(); ++s)
      bind(mesh.origin_dofs[s], mesh.origin_dofs[0], mesh.sector_rotation[s]);
  }

  if (clamp_outer) {
    for (int d = 0; d < n; ++d)
      if (mesh.dirichlet[static_cast<std::size_t>(d)]) role[static_cast<std::size_t>(d)] = 2;
  }
  // A slave whose master is clamped is itself zero.
  for (int d = 0; d < n; ++d) {
    if (role[static_cast<std::size_t>(d)] == 1 && clamp_outer &&
        mesh.dirichlet[static_cast<std::size_t>(master[static_cast<std::size_t>(d)])])
      role[static_cast<std::size_t>(d)] = 2;
  }

  PairReduction red;
  red.n_dofs = n;
  std::vector<int> col_of(static_cast<std::size_t>(n), -1);
  for (int d = 0; d < n; ++d) {
    if (role[static_cast<std::size_t>(d)] == 0) {
      col_of[static_cast<std::size_t>(d)] = static_cast<int>(red.master_dofs.size());
      red.master_dofs.push_back(d);
    }
  }
  std::vector<Eigen::Triplet<double>> trips;
  for (int d = 0; d < n; ++d) {
    if (role[static_cast<std::size_t>(d)] == 0) {
      const int c = col_of[static_cast<std::size_t>(d)];
      trips.emplace_back(2 * d, 2 * c, 1.0);
      trips.emplace_back(2 * d + 1, 2 * c + 1, 1.0);
    } else if (role[static_cast<std::size_t>(d)] == 1) {
      const int m = master[static_cast<std::size_t>(d)];
      if (role[static_cast<std::size_t>(m)] != 0)
        throw std::runtime_error("build_pair_reduction: slave chained to non-master");
      const int c = col_of[static_cast<std::size_t>(m)];
      const auto& R = rot[static_cast<std::size_t>(d)];
      trips.emplace_back(2 * d, 2 * c, R[0]);
      trips.emplace_back(2 * d, 2 * c + 1, R[1]);
      trips.emplace_back(2 * d + 1, 2 * c, R[2]);
      trips.emplace_back(2 * d + 1, 2 * c + 1, R[3]);
    }
  }
  red.T = SpMat(2 * n, 2 * static_cast<int>(red.master_dofs.size()));
  red.T.setFromTriplets(trips.begin(), trips.end());
  return red;
}

ScalarReduction build_scalar_reduction(const GeomLayer& layer, const std::vector<int>& extra_clamped) {
  ScalarReduction red;
  red.n_nodes = static_cast<int>(layer.nodes.size());
  red.index_of.assign(static_cast<std::size_t>(red.n_nodes), -1);
  std::vector<bool> clamped(static_cast<std::size_t>(red.n_nodes), false);
  for (int g = 0; g < red.n_nodes; ++g)
    if (layer.on_outer_boundary(g)) clamped[static_cast<std::size_t>(g)] = true;
  for (int g : extra_clamped) clamped[static_cast<std::size_t>(g)] = true;
  for (int g = 0; g < red.n_nodes; ++g) {
    if (!clamped[static_cast<std::size_t>(g)]) {
      red.index_of[static_cast<std::size_t>(g)] = static_cast<int>(red.free_nodes.size());
      red.free_nodes.push_back(g);
    }
  }
  return red;
}

double eval_p1(const CrackMesh& mesh, const Eigen::VectorXd& coef, int tri,
               const std::array<double, 3>& bary) {
  const auto& tr = mesh.tri[static_cast<std::size_t>(tri)];
  return bary[0] * coef[tr[0]] + bary[1] * coef[tr[1]] + bary[2] * coef[tr[2]];
}

Vec2 grad_p1(const P1Space& sp, const Eigen::VectorXd& coef, int tri) {
  const auto& tr = sp.mesh->tri[static_cast<std::size_t>(tri)];
  Vec2 g{0.0, 0.0};
  for (int i = 0; i < 3; ++i)
    g = g + coef[tr[static_cast<std::size_t>(i)]] * sp.grad[static_cast<std::size_t>(tri)][static_cast<std::size_t>(i)];
  return g;
}

std::vector<Vec2> recover_gradient(const P1Space& sp, const Eigen::VectorXd& coef) {
  const CrackMesh& mesh = *sp.mesh;
  std::vector<Vec2> g(static_cast<std::size_t>(mesh.n_dofs()), Vec2{0.0, 0.0});
  std::vector<double> wsum(static_cast<std::size_t>(mesh.n_dofs()), 0.0);
  for (std::size_t t = 0; t < mesh.tri.size(); ++t) {
    const Vec2 gt = grad_p1(sp, coef, static_cast<int>(t));
    for (int v : mesh.tri[t]) {
      g[static_cast<std::size_t>(v)] = g[static_cast<std::size_t>(v)] + sp.area[t] * gt;
      wsum[static_cast<std::size_t>(v)] += sp.area[t];
    }
  }
  for (std::size_t d = 0; d < g.size(); ++d)
    if (wsum[d] > 0.0) g[d] = (1.0 / wsum[d]) * g[d];
  return g;
}

}  // namespace abc
