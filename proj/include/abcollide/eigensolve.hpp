#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>

#include "abcollide/fem.hpp"
#include "abcollide/gauge.hpp"

namespace abc {

/// Crack formulation, reduced by the jump constraints (and outer Dirichlet
/// when clamped). Full-space pair coefficients are T * reduced.
struct CrackForms {
  const CrackMesh* mesh = nullptr;
  SpMat K;  // reduced stiffness, SPD when clamped
  SpMat M;  // reduced mass
  PairReduction red;
  SpMat K_full;  // pair-expanded scalar forms on all dofs (pre-reduction)
  SpMat M_full;
};
CrackForms assemble_crack(const CrackMesh& mesh, bool clamp_outer = true);

/// Magnetic formulation on the geometric nodes of the mesh's layer
/// (duplication ignored). Dirichlet rows eliminated; by default the
/// eigenfunction is clamped to zero at the poles as well, which keeps the
/// |A|^2 term integrable on pole-adjacent elements.
struct MagneticForms {
  SpMatC K;  // reduced Hermitian stiffness
  SpMatC M;  // reduced mass (real values)
  ScalarReduction red;
  std::vector<int> pole_nodes;  // geometric node per pole (or the origin at eps = 0)
};
MagneticForms assemble_magnetic(const CrackMesh& mesh, const PoleConfig& config, double eps,
                                bool pole_dirichlet = true);
/// k = 0 diagnostic: plain Dirichlet Laplacian on the layer.
MagneticForms assemble_laplace(const CrackMesh& mesh);

struct SolveOptions {
  int nev = 6;
  double tol = 1e-9;       // residual |Kx - lambda Mx| <= tol * |Kx|
  int max_iter = 400;
  std::uint64_t seed = 20240614;
};

/// Spectral data in either formulation. Vectors are stored on the full dof
/// set (crack: 2*n_dofs pair coefficients; magnetic: complex values per
/// geometric node), unit mass norm, Dirichlet entries exactly zero.
struct SpectralResult {
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  Eigen::MatrixXd vectors;                 // crack formulation
  Eigen::MatrixXcd vectors_c;              // magnetic formulation
  std::string formulation;                 // "crack" | "magnetic"
  int iterations = 0;
};

SpectralResult solve_lowest(const CrackForms& forms, const CrackMesh& mesh, const SolveOptions& opt);
SpectralResult solve_lowest(const MagneticForms& forms, const CrackMesh& mesh, const SolveOptions& opt);

/// One normalized crack eigenfunction pair (v,w).
struct PairEigenfunction {
  const CrackMesh* mesh = nullptr;
  double lambda = 0.0;
  Eigen::VectorXd coef;  // 2*n_dofs
};

/// Relative gap used to decide whether the doubled crack eigenvalue is
/// simple in the magnetic sense.
constexpr double kSimpleGapTol = 1e-3;

/// Select the 2-dimensional crack eigenspace for magnetic index n0 (1-based)
/// and normalize against the reference pair:
///   mass norm 1,  int(w v0_ref - v w0_ref) = 0,  int(v v0_ref + w w0_ref) > 0.
/// Throws when the eigenspace dimension is not 2 (the eigenvalue is not
/// simple in the magnetic sense).
PairEigenfunction normalize_pair(const SpectralResult& result, const CrackForms& forms, int n0,
                                 const Eigen::VectorXd& ref_coef);

/// Self-referencing variant: picks the deterministic representative with the
/// solver's first basis vector as reference.
PairEigenfunction normalize_pair(const SpectralResult& result, const CrackForms& forms, int n0);

/// K-real normalization at eps = 0 and total circulation 1/2: rotates the
/// pair so that e^{-i(t/2 + Lambda)} u is real-valued (least squares over
/// sample circles), with a deterministic global sign. Returns the rotated
/// pair and the relative L2 residual of the imaginary part.
struct KRealResult {
  PairEigenfunction pair;
  double residual = 0.0;
};
KRealResult kreal_normalize(const PairEigenfunction& pair, const PoleConfig& config);

}  // namespace abc
