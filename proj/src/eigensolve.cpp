#include "abcollide/eigensolve.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace abc {

namespace {

using Cplx = std::complex<double>;

std::vector<int> locate_pole_nodes(const GeomLayer& layer, const PoleConfig& config, double eps) {
  std::vector<int> nodes;
  if (eps == 0.0) {
    nodes.push_back(0);
    return nodes;
  }
  for (std::size_t j = 0; j < config.k(); ++j) {
    const double alpha = config.poles[j].alpha;
    const double r = eps * config.poles[j].r;
    const int q = layer.spoke_of_angle(alpha);
    if (q < 0) throw std::invalid_argument("assemble_magnetic: pole spoke missing");
    int found = -1;
    for (int i = 1; i <= layer.rings(); ++i) {
      if (std::abs(layer.node_radius(q, i) - r) < 1e-9 * std::max(1.0, r)) {
        found = layer.node_id(q, i);
        break;
      }
    }
    if (found < 0) throw std::invalid_argument("assemble_magnetic: pole is not a mesh node");
    nodes.push_back(found);
  }
  return nodes;
}

}  // namespace

CrackForms assemble_crack(const CrackMesh& mesh, bool clamp_outer) {
  CrackForms f;
  f.mesh = &mesh;
  P1Space sp = build_space(mesh);
  const SpMat Ks = scalar_stiffness(sp);
  const SpMat Ms = scalar_mass(sp);
  f.K_full = pair_expand(Ks, mesh.n_dofs());
  f.M_full = pair_expand(Ms, mesh.n_dofs());
  f.red = build_pair_reduction(mesh, clamp_outer);
  f.K = f.red.T.transpose() * f.K_full * f.red.T;
  f.M = f.red.T.transpose() * f.M_full * f.red.T;
  f.K.makeCompressed();
  f.M.makeCompressed();
  return f;
}

MagneticForms assemble_magnetic(const CrackMesh& mesh, const PoleConfig& config, double eps,
                                bool pole_dirichlet) {
  const GeomLayer& layer = *mesh.layer;
  MagneticForms f;
  f.pole_nodes = locate_pole_nodes(layer, config, eps);
  f.red = build_scalar_reduction(layer, pole_dirichlet ? f.pole_nodes : std::vector<int>{});

  std::vector<Vec2> pole_pos;
  std::vector<double> pole_rho;
  if (eps == 0.0) {
    pole_pos.push_back({0.0, 0.0});
    pole_rho.push_back(config.total_rho());
  } else {
    for (std::size_t j = 0; j < config.k(); ++j) {
      pole_pos.push_back({eps * config.poles[j].r * std::cos(config.poles[j].alpha),
                          eps * config.poles[j].r * std::sin(config.poles[j].alpha)});
      pole_rho.push_back(config.poles[j].rho);
    }
  }
  auto potential = [&](const Vec2& x) {
    Vec2 a{0.0, 0.0};
    for (std::size_t j = 0; j < pole_pos.size(); ++j)
      a = a + vector_potential(pole_pos[j], pole_rho[j], x);
    return a;
  };

  std::vector<Eigen::Triplet<Cplx>> kt, mt;
  kt.reserve(layer.tris.size() * 9);
  mt.reserve(layer.tris.size() * 9);
  for (const auto& tr0 : layer.tris) {
    std::array<int, 3> tr = tr0;
    // Put a pole vertex first so the graded rule clusters on it.
    bool pole_adjacent = false;
    for (int rot = 0; rot < 3; ++rot) {
      if (std::find(f.pole_nodes.begin(), f.pole_nodes.end(), tr[0]) != f.pole_nodes.end()) {
        pole_adjacent = true;
        break;
      }
      std::rotate(tr.begin(), tr.begin() + 1, tr.end());
    }
    const Vec2& a = layer.nodes[static_cast<std::size_t>(tr[0])];
    const Vec2& b = layer.nodes[static_cast<std::size_t>(tr[1])];
    const Vec2& c = layer.nodes[static_cast<std::size_t>(tr[2])];
    const double det = cross(b - a, c - a);
    const double area = 0.5 * det;
    const std::array<Vec2, 3> g{{{(b[1] - c[1]) / det, (c[0] - b[0]) / det},
                                 {(c[1] - a[1]) / det, (a[0] - c[0]) / det},
                                 {(a[1] - b[1]) / det, (b[0] - a[0]) / det}}};
    const QuadRule& rule = pole_adjacent ? tri_rule_pole16() : tri_rule_deg4();
    std::array<std::array<Cplx, 3>, 3> ke{};
    std::array<std::array<double, 3>, 3> me{};
    for (std::size_t q = 0; q < rule.pts.size(); ++q) {
      const auto& l = rule.pts[q];
      const Vec2 x = l[0] * a + l[1] * b + l[2] * c;
      const Vec2 A = potential(x);
      const double A2 = dot(A, A);
      const double wq = rule.w[q] * area;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          const double li = l[static_cast<std::size_t>(i)];
          const double lj = l[static_cast<std::size_t>(j)];
          const double re = dot(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]) +
                            A2 * li * lj;
          const double im = dot(A, lj * g[static_cast<std::size_t>(i)] - li * g[static_cast<std::size_t>(j)]);
          ke[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += wq * Cplx(re, im);
          me[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += wq * li * lj;
        }
      }
    }
    for (int i = 0; i < 3; ++i) {
      const int gi = f.red.index_of[static_cast<std::size_t>(tr[static_cast<std::size_t>(i)])];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = f.red.index_of[static_cast<std::size_t>(tr[static_cast<std::size_t>(j)])];
        if (gj < 0) continue;
        kt.emplace_back(gi, gj, ke[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
        mt.emplace_back(gi, gj, Cplx(me[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)], 0.0));
      }
    }
  }
  const int nf = static_cast<int>(f.red.free_nodes.size());
  f.K = SpMatC(nf, nf);
  f.K.setFromTriplets(kt.begin(), kt.end());
  f.M = SpMatC(nf, nf);
  f.M.setFromTriplets(mt.begin(), mt.end());
  return f;
}

MagneticForms assemble_laplace(const CrackMesh& mesh) {
  const GeomLayer& layer = *mesh.layer;
  MagneticForms f;
  f.red = build_scalar_reduction(layer, {});
  std::vector<Eigen::Triplet<Cplx>> kt, mt;
  for (const auto& tr : layer.tris) {
    const Vec2& a = layer.nodes[static_cast<std::size_t>(tr[0])];
    const Vec2& b = layer.nodes[static_cast<std::size_t>(tr[1])];
    const Vec2& c = layer.nodes[static_cast<std::size_t>(tr[2])];
    const double det = cross(b - a, c - a);
    const double area = 0.5 * det;
    const std::array<Vec2, 3> g{{{(b[1] - c[1]) / det, (c[0] - b[0]) / det},
                                 {(c[1] - a[1]) / det, (a[0] - c[0]) / det},
                                 {(a[1] - b[1]) / det, (b[0] - a[0]) / det}}};
    for (int i = 0; i < 3; ++i) {
      const int gi = f.red.index_of[static_cast<std::size_t>(tr[static_cast<std::size_t>(i)])];
      if (gi < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int gj = f.red.index_of[static_cast<std::size_t>(tr[static_cast<std::size_t>(j)])];
        if (gj < 0) continue;
        kt.emplace_back(gi, gj, Cplx(area * dot(g[static_cast<std::size_t>(i)], g[static_cast<std::size_t>(j)]), 0.0));
        mt.emplace_back(gi, gj, Cplx(area * (i == j ? 1.0 / 6.0 : 1.0 / 12.0), 0.0));
      }
    }
  }
  const int nf = static_cast<int>(f.red.free_nodes.size());
  f.K = SpMatC(nf, nf);
  f.K.setFromTriplets(kt.begin(), kt.end());
  f.M = SpMatC(nf, nf);
  f.M.setFromTriplets(mt.begin(), mt.end());
  return f;
}

namespace {

/// Shift-invert (shift 0) block subspace iteration with Rayleigh-Ritz in the
/// M-inner product. Deterministic start from the seeded PRNG.
template <typename Scalar>
struct GevpOut {
  std::vector<double> lambda;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> X;
  std::vector<double> resid;
  int iterations = 0;
};

template <typename Scalar>
GevpOut<Scalar> lowest_pairs(const Eigen::SparseMatrix<Scalar>& K,
                             const Eigen::SparseMatrix<Scalar>& M, const SolveOptions& opt) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int n = static_cast<int>(K.rows());
  const int nev = std::min(opt.nev, n);
  const int p = std::min(n, nev + std::max(8, nev / 2 + 2));

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<Scalar>> ldlt;
  ldlt.compute(K);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("solve_lowest: stiffness factorization failed (form not SPD?)");

  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Mat X(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) {
      if constexpr (std::is_same_v<Scalar, Cplx>)
        X(i, j) = Cplx(uni(rng), uni(rng));
      else
        X(i, j) = uni(rng);
    }

  GevpOut<Scalar> out;
  Eigen::VectorXd ritz(p);
  for (int it = 1; it <= opt.max_iter; ++it) {
    const Mat MX = M * X;
    Mat Z = ldlt.solve(MX);
    // M-orthonormalize via Cholesky of the Gram matrix.
    Mat G = Z.adjoint() * (M * Z);
    G = Scalar(0.5) * (G + Mat(G.adjoint()));
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) {
      // Rank loss: refresh with new random directions and continue.
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) {
          if constexpr (std::is_same_v<Scalar, Cplx>)
            Z(i, j) += Cplx(1e-8 * uni(rng), 1e-8 * uni(rng));
          else
            Z(i, j) += 1e-8 * uni(rng);
        }
      G = Z.adjoint() * (M * Z);
      G = Scalar(0.5) * (G + Mat(G.adjoint()));
      llt.compute(G);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("solve_lowest: subspace lost rank");
    }
    Z = llt.matrixU().template solve<Eigen::OnTheRight>(Z);
    // Rayleigh-Ritz.
    Mat A = Z.adjoint() * (K * Z);
    A = Scalar(0.5) * (A + Mat(A.adjoint()));
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    if (es.info() != Eigen::Success) throw std::runtime_error("solve_lowest: dense solver failed");
    X = Z * es.eigenvectors();
    ritz = es.eigenvalues();
    out.iterations = it;

    // Residual check on the wanted part.
    const Mat KX = K * X.leftCols(nev);
    const Mat MXc = M * X.leftCols(nev);
    bool done = true;
    out.resid.assign(static_cast<std::size_t>(nev), 0.0);
    for (int j = 0; j < nev; ++j) {
      const double rn = (KX.col(j) - Scalar(ritz[j]) * MXc.col(j)).norm();
      const double kn = KX.col(j).norm();
      out.resid[static_cast<std::size_t>(j)] = rn / std::max(kn, 1e-300);
      if (out.resid[static_cast<std::size_t>(j)] > opt.tol) done = false;
    }
    if (done) break;
    if (it == opt.max_iter)
      throw std::runtime_error("solve_lowest: no convergence after max iterations, residual " +
                               std::to_string(out.resid.empty() ? -1.0 : out.resid[0]));
  }
  out.lambda.assign(ritz.data(), ritz.data() + nev);
  out.X = X.leftCols(nev);
  return out;
}

// Deterministic sign/phase convention: the entry of largest magnitude is
// positive (real) in each column.
void fix_phase(Eigen::MatrixXd& X) {
  for (int j = 0; j < X.cols(); ++j) {
    int imax = 0;
    for (int i = 1; i < X.rows(); ++i)
      if (std::abs(X(i, j)) > std::abs(X(imax, j))) imax = i;
    if (X(imax, j) < 0.0) X.col(j) = -X.col(j);
  }
}

void fix_phase(Eigen::MatrixXcd& X) {
  for (int j = 0; j < X.cols(); ++j) {
    int imax = 0;
    for (int i = 1; i < X.rows(); ++i)
      if (std::abs(X(i, j)) > std::abs(X(imax, j))) imax = i;
    const Cplx z = X(imax, j);
    if (std::abs(z) > 0.0) X.col(j) *= std::conj(z) / std::abs(z);
  }
}

}  // namespace

SpectralResult solve_lowest(const CrackForms& forms, const CrackMesh& mesh, const SolveOptions& opt) {
  auto out = lowest_pairs<double>(forms.K, forms.M, opt);
  SpectralResult res;
  res.formulation = "crack";
  res.eigenvalues = out.lambda;
  res.residuals = out.resid;
  res.iterations = out.iterations;
  res.vectors.resize(2 * mesh.n_dofs(), out.X.cols());
  for (int j = 0; j < out.X.cols(); ++j)
    res.vectors.col(j) = forms.red.expand(out.X.col(j));
  fix_phase(res.vectors);
  return res;
}

SpectralResult solve_lowest(const MagneticForms& forms, const CrackMesh& mesh, const SolveOptions& opt) {
  auto out = lowest_pairs<Cplx>(forms.K, forms.M, opt);
  SpectralResult res;
  res.formulation = "magnetic";
  res.eigenvalues = out.lambda;
  res.residuals = out.resid;
  res.iterations = out.iterations;
  const int n = static_cast<int>(mesh.layer->nodes.size());
  res.vectors_c = Eigen::MatrixXcd::Zero(n, out.X.cols());
  for (int j = 0; j < out.X.cols(); ++j)
    for (std::size_t g = 0; g < forms.red.free_nodes.size(); ++g)
      res.vectors_c(forms.red.free_nodes[g], j) = out.X(static_cast<int>(g), j);
  fix_phase(res.vectors_c);
  return res;
}

PairEigenfunction normalize_pair(const SpectralResult& result, const CrackForms& forms, int n0,
                                 const Eigen::VectorXd& ref_coef) {
  if (result.formulation != "crack")
    throw std::invalid_argument("normalize_pair: crack formulation required");
  const int ia = 2 * (n0 - 1);
  const int ib = ia + 1;
  if (ib >= static_cast<int>(result.eigenvalues.size()))
    throw std::out_of_range("normalize_pair: not enough eigenpairs computed");
  const double la = result.eigenvalues[static_cast<std::size_t>(ia)];
  const double lb = result.eigenvalues[static_cast<std::size_t>(ib)];
  const double lam = 0.5 * (la + lb);
  if (std::abs(la - lb) > kSimpleGapTol * lam)
    throw std::runtime_error("normalize_pair: crack eigenspace is not a clean double pair");
  if (ia > 0 && lam - result.eigenvalues[static_cast<std::size_t>(ia - 1)] < kSimpleGapTol * lam)
    throw std::runtime_error("normalize_pair: eigenvalue not simple (lower neighbor too close)");
  if (ib + 1 < static_cast<int>(result.eigenvalues.size()) &&
      result.eigenvalues[static_cast<std::size_t>(ib + 1)] - lam < kSimpleGapTol * lam)
    throw std::runtime_error("normalize_pair: eigenvalue not simple (upper neighbor too close)");

  const Eigen::VectorXd& A = result.vectors.col(ia);
  const Eigen::VectorXd& B = result.vectors.col(ib);
  // J ref = (-w, v)
  Eigen::VectorXd jref(ref_coef.size());
  for (int d = 0; d < ref_coef.size() / 2; ++d) {
    jref[2 * d] = -ref_coef[2 * d + 1];
    jref[2 * d + 1] = ref_coef[2 * d];
  }
  const Eigen::VectorXd Mj = forms.M_full * jref;
  const Eigen::VectorXd Mr = forms.M_full * ref_coef;
  const double gA = A.dot(Mj);
  const double gB = B.dot(Mj);
  Eigen::VectorXd cand;
  if (std::abs(gA) < 1e-14 && std::abs(gB) < 1e-14) {
    cand = A;  // reference carries no swap component; any representative works
  } else {
    cand = gB * A - gA * B;
  }
  const double mass = cand.dot(forms.M_full * cand);
  if (mass <= 0.0) throw std::runtime_error("normalize_pair: degenerate combination");
  cand /= std::sqrt(mass);
  const double s = cand.dot(Mr);
  if (std::abs(s) < 1e-12)
    throw std::runtime_error("normalize_pair: reference nearly orthogonal to the eigenspace");
  if (s < 0.0) cand = -cand;

  PairEigenfunction pe;
  pe.mesh = forms.mesh;
  pe.lambda = lam;
  pe.coef = cand;
  return pe;
}

PairEigenfunction normalize_pair(const SpectralResult& result, const CrackForms& forms, int n0) {
  const int ia = 2 * (n0 - 1);
  return normalize_pair(result, forms, n0, result.vectors.col(ia));
}

KRealResult kreal_normalize(const PairEigenfunction& pair, const PoleConfig& config) {
  if (!config.half_integer())
    throw std::invalid_argument("kreal_normalize: total circulation must be 1/2");
  const CrackMesh& mesh = *pair.mesh;
  const GeomLayer& layer = *mesh.layer;
  const double lambda_const = kreal_lambda(config);

  double rmin = 1e300;
  for (double s : layer.spoke_support) rmin = std::min(rmin, s);
  std::vector<double> branch_angles;
  for (const auto& e : mesh.cracks) {
    branch_angles.push_back(e.back.angle);
    if (e.tip_radius > 0.0) branch_angles.push_back(e.front.angle);
  }

  const int n = static_cast<int>(pair.coef.size() / 2);
  Eigen::VectorXd v(n), w(n);
  for (int d = 0; d < n; ++d) {
    v[d] = pair.coef[2 * d];
    w[d] = pair.coef[2 * d + 1];
  }

  double q_aa = 0.0, q_ab = 0.0, q_bb = 0.0, total = 0.0;
  for (int ir = 0; ir < 6; ++ir) {
    const double r = rmin * (0.1 + 0.08 * ir);
    for (int ia = 0; ia < 64; ++ia) {
      const double t = 2.0 * kPi * (ia + 0.5) / 64;
      bool near_cut = false;
      for (double ba : branch_angles)
        if (std::abs(wrap_pm_pi(t - ba)) < 0.05) near_cut = true;
      if (near_cut) continue;
      const Vec2 x{r * std::cos(t), r * std::sin(t)};
      auto loc = mesh.locate(x);
      if (!loc) continue;
      const double vv = eval_p1(mesh, v, loc->first, loc->second);
      const double ww = eval_p1(mesh, w, loc->first, loc->second);
      const double theta0 = theta_total(config, 0.0, x);
      const Cplx z = std::polar(1.0, theta0 - 0.5 * t - lambda_const) * Cplx(vv, ww);
      const double a = z.imag();
      const double b = z.real();
      // Im(e^{i tau} z) = a cos(tau) + b sin(tau)
      q_aa += a * a;
      q_ab += a * b;
      q_bb += b * b;
      total += std::norm(z);
    }
  }
  if (total <= 0.0) throw std::runtime_error("kreal_normalize: no usable samples");
  Eigen::Matrix2d Q;
  Q << q_aa, q_ab, q_ab, q_bb;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Q);
  const Eigen::Vector2d dir = es.eigenvectors().col(0);
  const double tau = std::atan2(dir[1], dir[0]);
  const double ct = std::cos(tau), st = std::sin(tau);

  KRealResult out;
  out.pair = pair;
  for (int d = 0; d < n; ++d) {
    out.pair.coef[2 * d] = ct * v[d] - st * w[d];
    out.pair.coef[2 * d + 1] = st * v[d] + ct * w[d];
  }
  // Deterministic global sign.
  int imax = 0;
  for (int i = 1; i < out.pair.coef.size(); ++i)
    if (std::abs(out.pair.coef[i]) > std::abs(out.pair.coef[imax])) imax = i;
  if (out.pair.coef[imax] < 0.0) out.pair.coef = -out.pair.coef;
  out.residual = std::sqrt(std::max(0.0, es.eigenvalues()[0]) / total);
  return out;
}

}  // namespace abc
