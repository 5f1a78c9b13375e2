#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <functional>
#include <vector>

#include "abcollide/geometry.hpp"
#include "abcollide/mesh.hpp"

namespace abc {

using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<std::complex<double>>;

/// Triangle quadrature in barycentric coordinates; weights sum to 1.
struct QuadRule {
  std::vector<std::array<double, 3>> pts;
  std::vector<double> w;
};

/// Degree-4 rule (6 points, Dunavant).
const QuadRule& tri_rule_deg4();
/// 16-point rule graded toward vertex 0; radially substituted Duffy
/// transform, for elements adjacent to a potential pole.
const QuadRule& tri_rule_pole16();

/// Per-triangle P1 data on a CrackMesh.
struct P1Space {
  const CrackMesh* mesh = nullptr;
  std::vector<double> area;
  std::vector<std::array<Vec2, 3>> grad;  // gradients of the three hat functions
};
P1Space build_space(const CrackMesh& mesh);

/// Scalar P1 Laplace stiffness and mass on the dof mesh (no boundary
/// conditions applied).
SpMat scalar_stiffness(const P1Space& sp);
SpMat scalar_mass(const P1Space& sp);

/// sum_T int_T (coef-field)^2 * weight(x) dx with the given quadrature degree.
double weighted_l2_sq(const P1Space& sp, const Eigen::VectorXd& coef,
                      const std::function<double(const Vec2&)>& weight);

/// Pair-field (v,w) layout: mesh dof d carries components (2d, 2d+1).
/// Expand a scalar matrix to the pair layout (block-diagonal over the two
/// fields).
SpMat pair_expand(const SpMat& scalar, int n_dofs);

/// Master/slave elimination of the crack jump constraints:
///   (v,w)_minus = Rot(2*pi*rho_j) (v,w)_plus   along each crack,
///   (v,w)_sector_s = R_s (v,w)_sector_0        around the origin,
/// plus optional homogeneous Dirichlet on the outer boundary. The reduction
/// matrix T maps reduced pair coefficients to full pair coefficients.
struct PairReduction {
  SpMat T;                       // (2*n_dofs) x (2*n_free_masters)
  std::vector<int> master_dofs;  // mesh dof per reduced pair (column pair /2)
  int n_dofs = 0;

  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const { return T * reduced; }
  Eigen::VectorXd restrict_rhs(const Eigen::VectorXd& full) const { return T.transpose() * full; }
};
PairReduction build_pair_reduction(const CrackMesh& mesh, bool clamp_outer);

/// Free-node extraction for the magnetic (complex scalar) problem on the
/// geometric nodes of the layer.
struct ScalarReduction {
  std::vector<int> free_nodes;        // geometric node ids kept
  std::vector<int> index_of;          // geometric node -> free index, -1 if clamped
  int n_nodes = 0;
};
ScalarReduction build_scalar_reduction(const GeomLayer& layer, const std::vector<int>& extra_clamped);

/// Piecewise-linear evaluation of a scalar dof field at a located point.
double eval_p1(const CrackMesh& mesh, const Eigen::VectorXd& coef, int tri,
               const std::array<double, 3>& bary);
/// Constant gradient of a scalar dof field on a triangle.
Vec2 grad_p1(const P1Space& sp, const Eigen::VectorXd& coef, int tri);

/// Area-weighted patch average of P1 gradients at every dof (one-sided along
/// cracks by construction of the dof incidence).
std::vector<Vec2> recover_gradient(const P1Space& sp, const Eigen::VectorXd& coef);

}  // namespace abc
