#include "abcollide/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace abc {

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void parallel_over(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> futs;
  std::size_t next = 0;
  const std::size_t batch = 1;
  std::mutex mtx;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mtx);
        if (next >= n) return;
        i = next;
        next += batch;
      }
      fn(i);
    }
  };
  const int nt = std::min<int>(threads, static_cast<int>(n));
  futs.reserve(static_cast<std::size_t>(nt));
  for (int t = 0; t < nt; ++t) futs.push_back(std::async(std::launch::async, worker));
  for (auto& f : futs) f.get();
}

double local_radial_spacing(const GeomLayer& layer, double r) {
  // Spacing of the physical radii around r on the least-supported spoke.
  int q = 0;
  for (int s = 1; s < layer.spokes(); ++s)
    if (layer.spoke_support[static_cast<std::size_t>(s)] <
        layer.spoke_support[static_cast<std::size_t>(q)])
      q = s;
  double prev = 0.0;
  for (int i = 1; i <= layer.rings(); ++i) {
    const double ri = layer.node_radius(q, i);
    if (ri >= r) return ri - prev;
    prev = ri;
  }
  return layer.h;
}

struct Extrapolated {
  double value = 0.0;
  double order = 0.0;
};

/// Richardson extrapolation from the three finest ladder values; falls back
/// to second order when the observed ratio is unusable.
Extrapolated richardson(const std::vector<double>& hs, const std::vector<double>& vals) {
  Extrapolated out;
  const std::size_t n = vals.size();
  if (n == 1) {
    out.value = vals[0];
    return out;
  }
  const double v3 = vals[n - 1], v2 = vals[n - 2];
  const double h3 = hs[n - 1], h2 = hs[n - 2];
  double p = 2.0;
  if (n >= 3) {
    const double v1 = vals[n - 3];
    const double h1 = hs[n - 3];
    const double num = v1 - v2, den = v2 - v3;
    if (std::isfinite(num / den) && num / den > 1.0) {
      const double pp = std::log(num / den) / std::log(h1 / h2);
      if (pp > 0.3 && pp < 6.0) p = pp;
    }
  }
  out.order = p;
  const double factor = std::pow(h2 / h3, p);
  out.value = v3 + (v3 - v2) / (factor - 1.0);
  return out;
}

struct SharedSolve {
  std::shared_ptr<const GeomLayer> layer;
  std::shared_ptr<CrackMesh> mesh0, meshE;
  CrackForms forms0, formsE;
  PairEigenfunction pair0, pairE;
  double kreal_residual = 0.0;
  Eigen::VectorXd v0_on_eps;
  InteriorSolution interior;
  double grad_diff_sq = 0.0;
};

SharedSolve do_shared_solve(const ExperimentConfig& cfg, double eps, double h, bool with_interior) {
  SharedSolve s;
  const CrackSet cracksE = crack_polylines(cfg.poles, cfg.domain, eps);
  const CrackSet cracks0 = crack_polylines(cfg.poles, cfg.domain, 0.0);
  s.layer = std::make_shared<const GeomLayer>(build_layer(cfg.domain, cracksE, h, cfg.grade));
  s.mesh0 = std::make_shared<CrackMesh>(apply_cracks(s.layer, cracks0));
  s.meshE = std::make_shared<CrackMesh>(apply_cracks(s.layer, cracksE));
  s.forms0 = assemble_crack(*s.mesh0);
  s.formsE = assemble_crack(*s.meshE);

  SolveOptions opt;
  opt.nev = 2 * cfg.n0 + 4;
  opt.tol = cfg.tol_eigen;
  opt.seed = cfg.seed;
  const SpectralResult spec0 = solve_lowest(s.forms0, *s.mesh0, opt);
  s.pair0 = normalize_pair(spec0, s.forms0, cfg.n0);
  if (cfg.poles.half_integer()) {
    KRealResult kr = kreal_normalize(s.pair0, cfg.poles);
    s.pair0 = kr.pair;
    s.kreal_residual = kr.residual;
  }

  const std::vector<int> map = overlay_map(*s.mesh0, *s.meshE);
  s.v0_on_eps.resize(2 * s.meshE->n_dofs());
  for (int d = 0; d < s.meshE->n_dofs(); ++d) {
    s.v0_on_eps[2 * d] = s.pair0.coef[2 * map[static_cast<std::size_t>(d)]];
    s.v0_on_eps[2 * d + 1] = s.pair0.coef[2 * map[static_cast<std::size_t>(d)] + 1];
  }

  const SpectralResult specE = solve_lowest(s.formsE, *s.meshE, opt);
  s.pairE = normalize_pair(specE, s.formsE, cfg.n0, s.v0_on_eps);

  const Eigen::VectorXd diff = s.pairE.coef - s.v0_on_eps;
  s.grad_diff_sq = diff.dot(s.formsE.K_full * diff);

  if (with_interior)
    s.interior = solve_interior(*s.meshE, s.formsE, *s.mesh0, s.pair0.coef, eps);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  domain.validate();
  poles.validate();
  if (eps_ladder.empty()) throw std::invalid_argument("config: empty eps ladder");
  for (std::size_t i = 0; i + 1 < eps_ladder.size(); ++i)
    if (eps_ladder[i + 1] >= eps_ladder[i])
      throw std::invalid_argument("config: eps ladder must be strictly decreasing");
  if (eps_ladder.front() > 1.0 || eps_ladder.back() <= 0.0)
    throw std::invalid_argument("config: eps ladder outside (0,1]");
  if (mesh_ladder.empty()) throw std::invalid_argument("config: empty mesh ladder");
  for (std::size_t i = 0; i + 1 < mesh_ladder.size(); ++i)
    if (mesh_ladder[i + 1] >= mesh_ladder[i])
      throw std::invalid_argument("config: mesh ladder must be strictly decreasing");
  if (n0 < 1) throw std::invalid_argument("config: n0 must be >= 1");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig c;
  if (j.contains("domain")) {
    c.domain.polygon.clear();
    for (const auto& v : j.at("domain")) c.domain.polygon.push_back({v.at(0), v.at(1)});
  }
  c.poles.poles.clear();
  for (const auto& p : j.at("poles"))
    c.poles.poles.push_back({p.at("r"), p.at("alpha"), p.at("rho")});
  if (j.contains("epsilon_list")) c.eps_ladder = j.at("epsilon_list").get<std::vector<double>>();
  if (j.contains("mesh_ladder")) c.mesh_ladder = j.at("mesh_ladder").get<std::vector<double>>();
  if (j.contains("grade")) c.grade = j.at("grade");
  if (j.contains("n0")) c.n0 = j.at("n0");
  if (j.contains("tol_eigen")) c.tol_eigen = j.at("tol_eigen");
  if (j.contains("trunc")) c.trunc = j.at("trunc");
  if (j.contains("h_exterior")) c.h_exterior = j.at("h_exterior");
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("threads")) c.threads = j.at("threads");
  if (j.contains("kind")) c.kind = j.at("kind");
  c.validate();
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["domain"] = nlohmann::json::array();
  for (const auto& v : c.domain.polygon) j["domain"].push_back({v[0], v[1]});
  j["poles"] = nlohmann::json::array();
  for (const auto& p : c.poles.poles)
    j["poles"].push_back({{"r", p.r}, {"alpha", p.alpha}, {"rho", p.rho}});
  j["epsilon_list"] = c.eps_ladder;
  j["mesh_ladder"] = c.mesh_ladder;
  j["grade"] = c.grade;
  j["n0"] = c.n0;
  j["tol_eigen"] = c.tol_eigen;
  j["trunc"] = c.trunc;
  j["h_exterior"] = c.h_exterior;
  j["seed"] = c.seed;
  j["kind"] = c.kind;
  return j;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string dump = config_to_json(c).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

LadderPoint solve_ladder_point(const ExperimentConfig& cfg, double eps, double h) {
  SharedSolve s = do_shared_solve(cfg, eps, h, true);
  const EeSupCheck sup = check_Ee_sup(*s.meshE, s.formsE, *s.mesh0, s.pair0.coef, eps, s.interior,
                                      100, cfg.seed + 7);
  LadderPoint p;
  p.eps = eps;
  p.h = h;
  p.lambda_eps = s.pairE.lambda;
  p.lambda_0 = s.pair0.lambda;
  p.E_eps = s.interior.energy;
  p.L_v0 = s.interior.L_v0;
  p.grad_sq_VW = s.interior.grad_sq;
  p.grad_diff_sq = s.grad_diff_sq;
  p.sup_identity_residual = sup.identity_residual;
  p.interior_residual = s.interior.residual;
  return p;
}

LimitAnalysis analyze_limit(const ExperimentConfig& cfg, double feature_eps) {
  const double h = cfg.mesh_ladder.back();
  const CrackSet cracksF = crack_polylines(cfg.poles, cfg.domain, feature_eps);
  const CrackSet cracks0 = crack_polylines(cfg.poles, cfg.domain, 0.0);
  auto layer = std::make_shared<const GeomLayer>(build_layer(cfg.domain, cracksF, h, cfg.grade));
  auto mesh0 = std::make_shared<CrackMesh>(apply_cracks(layer, cracks0));
  CrackForms forms0 = assemble_crack(*mesh0);
  SolveOptions opt;
  opt.nev = 2 * cfg.n0 + 4;
  opt.tol = cfg.tol_eigen;
  opt.seed = cfg.seed;
  const SpectralResult spec0 = solve_lowest(forms0, *mesh0, opt);
  PairEigenfunction pair0 = normalize_pair(spec0, forms0, cfg.n0);
  LimitAnalysis out;
  if (cfg.poles.half_integer()) {
    KRealResult kr = kreal_normalize(pair0, cfg.poles);
    pair0 = kr.pair;
    out.kreal_residual = kr.residual;
  }
  out.lambda_0 = pair0.lambda;

  double min_support = 1e300;
  for (double s : layer->spoke_support) min_support = std::min(min_support, s);
  FitOptions fopt;
  fopt.delta0 = 0.45 * min_support;
  fopt.n_radii = 6;
  fopt.min_delta = 5.0 * local_radial_spacing(*layer, 0.05 * min_support);
  if (cfg.poles.half_integer()) fopt.m_lo = 0;

  const PairSampler sampler = mesh_sampler(*mesh0, pair0.coef);
  const VanishingOrderFit vo = fit_vanishing_order(sampler, cfg.poles, fopt);
  out.order_residual = vo.residual;
  out.order_ambiguous = vo.ambiguous;
  const ProfileFit pf = fit_profile(sampler, cfg.poles, vo.m, fopt);
  out.profile = pf.profile;
  out.fit_residual = pf.residual;
  return out;
}

ConvergenceTable run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  ConvergenceTable table;
  const std::size_t ne = cfg.eps_ladder.size();
  const std::size_t nh = cfg.mesh_ladder.size();
  table.raw.resize(ne * nh);
  parallel_over(ne, cfg.threads, [&](std::size_t ie) {
    for (std::size_t ih = 0; ih < nh; ++ih)
      table.raw[ie * nh + ih] = solve_ladder_point(cfg, cfg.eps_ladder[ie], cfg.mesh_ladder[ih]);
  });

  table.limit = analyze_limit(cfg, cfg.eps_ladder.back());
  const double mu = table.limit.profile.order();
  const std::vector<double> trunc_radii{cfg.trunc / 4.0, cfg.trunc / 2.0, cfg.trunc};
  table.exterior = solve_exterior(table.limit.profile, trunc_radii, cfg.h_exterior, cfg.grade);

  std::vector<double> eps_list, dl_list;
  for (std::size_t ie = 0; ie < ne; ++ie) {
    std::vector<double> hs, dls, l0s, les;
    for (std::size_t ih = 0; ih < nh; ++ih) {
      const LadderPoint& p = table.raw[ie * nh + ih];
      hs.push_back(p.h);
      dls.push_back(p.lambda_eps - p.lambda_0);
      l0s.push_back(p.lambda_0);
      les.push_back(p.lambda_eps);
    }
    const Extrapolated dl = richardson(hs, dls);
    if (ie == ne - 1) table.observed_mesh_order = dl.order;
    EnergyRow row;
    row.eps = cfg.eps_ladder[ie];
    row.lambda_0 = richardson(hs, l0s).value;
    row.lambda_eps = richardson(hs, les).value;
    row.delta_lambda = dl.value;
    const LadderPoint& fine = table.raw[ie * nh + (nh - 1)];
    row.E_eps = fine.E_eps;
    row.L_eps_v0 = fine.L_v0;
    row.grad_sq = fine.grad_sq_VW;
    row.predicted_2EL = 2.0 * (fine.E_eps + fine.L_v0);
    row.predicted_limit =
        predicted_shift(table.exterior.energy, table.exterior.L_profile, mu, row.eps);
    table.rows.push_back(row);
    eps_list.push_back(row.eps);
    dl_list.push_back(std::abs(row.delta_lambda));
  }

  if (table.rows.size() >= 4) {
    const SlopeFit sf = fit_loglog_slope(eps_list, dl_list);
    table.slope = sf.slope;
    table.slope_stderr = sf.stderr_;
  }
  return table;
}

SignReport run_sign_experiment(int variant, const ExperimentConfig& cfg) {
  cfg.validate();
  if (!cfg.poles.half_integer())
    throw std::invalid_argument("run_sign_experiment: total circulation must be 1/2");
  SignReport rep;
  rep.variant = variant;

  // Stage A: extract (m, gamma) with the provisional pole placement.
  const LimitAnalysis provisional = analyze_limit(cfg, cfg.eps_ladder.back());
  const int m = provisional.profile.m;
  const double gamma = provisional.profile.gamma;
  const int k = static_cast<int>(cfg.poles.k());
  if (k > 2 * m + 1)
    throw std::runtime_error("run_sign_experiment: k exceeds 2m+1 for the extracted m");

  ExperimentConfig tuned = cfg;
  for (int j = 0; j < k; ++j) {
    double target;
    if (variant == 1)
      target = -gamma + kPi * (1.0 + 2.0 * j) / (2 * m + 1);
    else
      target = -gamma + 2.0 * kPi * j / (2 * m + 1);
    tuned.poles.poles[static_cast<std::size_t>(j)].alpha = wrap_pm_pi(target);
  }
  tuned.poles.validate();

  // Stage B: rerun with the tuned angles; the lattice relation must hold in
  // the new gauge frame since the nodal directions are intrinsic.
  const LimitAnalysis limit = analyze_limit(tuned, tuned.eps_ladder.back());
  rep.m = limit.profile.m;
  rep.gamma = limit.profile.gamma;
  rep.pole_angle = tuned.poles.poles[0].alpha;

  const std::vector<double> trunc_radii{tuned.trunc / 4.0, tuned.trunc / 2.0, tuned.trunc};
  const ExteriorSolution ext = solve_exterior(limit.profile, trunc_radii, tuned.h_exterior, tuned.grade);
  rep.E_limit = ext.energy;
  rep.L_limit = ext.L_profile;
  rep.L_negligible = std::abs(rep.L_limit) < 1e-3 * std::abs(rep.E_limit);

  const std::size_t ne = tuned.eps_ladder.size();
  const std::size_t nh = tuned.mesh_ladder.size();
  std::vector<double> dls(ne);
  parallel_over(ne, tuned.threads, [&](std::size_t ie) {
    std::vector<double> hs, vals;
    for (std::size_t ih = 0; ih < nh; ++ih) {
      const LadderPoint p = solve_ladder_point(tuned, tuned.eps_ladder[ie], tuned.mesh_ladder[ih]);
      hs.push_back(p.h);
      vals.push_back(p.lambda_eps - p.lambda_0);
    }
    dls[ie] = richardson(hs, vals).value;
  });
  rep.eps = tuned.eps_ladder;
  rep.delta_lambda = dls;
  rep.signs_consistent = true;
  for (double dl : dls) {
    if (variant == 1 && !(dl < 0.0)) rep.signs_consistent = false;
    if (variant == 2 && !(dl > 0.0)) rep.signs_consistent = false;
  }
  return rep;
}

BlowupReport run_blowup_compare(const ExperimentConfig& cfg) {
  cfg.validate();
  BlowupReport rep;
  rep.limit = analyze_limit(cfg, cfg.eps_ladder.back());
  const AngularProfile& profile = rep.limit.profile;
  const double mu = profile.order();

  const std::vector<double> trunc_radii{cfg.trunc / 4.0, cfg.trunc / 2.0, cfg.trunc};
  const ExteriorSolution ext = solve_exterior(profile, trunc_radii, cfg.h_exterior, cfg.grade);
  rep.exterior_grad_sq = ext.grad_sq;
  const P1Space ext_sp = build_space(*ext.mesh);

  // Comparison mesh: disk of radius 2 cut along the full cracks Gamma_1.
  const DomainSpec cmp_domain = regular_polygon(96, 2.0);
  const CrackSet cmp_cracks = crack_polylines(cfg.poles, cmp_domain, 1.0);
  auto cmp_layer = std::make_shared<const GeomLayer>(build_layer(cmp_domain, cmp_cracks, 0.12, cfg.grade));
  const CrackMesh cmp_mesh = apply_cracks(cmp_layer, cmp_cracks);

  auto ext_field = [&](const Vec2& x, const Vec2& hint) {
    auto loc = ext.mesh->locate(x, hint);
    if (!loc) throw std::runtime_error("blowup: exterior lookup failed");
    const auto& tr = ext.mesh->tri[static_cast<std::size_t>(loc->first)];
    double v = 0.0, w = 0.0;
    Vec2 gv{0, 0}, gw{0, 0};
    for (int i = 0; i < 3; ++i) {
      const double li = loc->second[static_cast<std::size_t>(i)];
      v += li * ext.coef[2 * tr[static_cast<std::size_t>(i)]];
      w += li * ext.coef[2 * tr[static_cast<std::size_t>(i)] + 1];
      gv = gv + ext.coef[2 * tr[static_cast<std::size_t>(i)]] *
                    ext_sp.grad[static_cast<std::size_t>(loc->first)][static_cast<std::size_t>(i)];
      gw = gw + ext.coef[2 * tr[static_cast<std::size_t>(i)] + 1] *
                    ext_sp.grad[static_cast<std::size_t>(loc->first)][static_cast<std::size_t>(i)];
    }
    return std::make_tuple(v, w, gv, gw);
  };

  for (double eps : cfg.eps_ladder) {
    SharedSolve s = do_shared_solve(cfg, eps, cfg.mesh_ladder.back(), false);
    const P1Space spE = build_space(*s.meshE);
    const double scale_v = std::pow(eps, -mu);
    const double scale_g = std::pow(eps, 1.0 - mu);

    const QuadRule& rule = tri_rule_deg4();
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < cmp_mesh.tri.size(); ++t) {
      const auto& tr = cmp_mesh.tri[t];
      const Vec2& a = cmp_mesh.xy[static_cast<std::size_t>(tr[0])];
      const Vec2& b = cmp_mesh.xy[static_cast<std::size_t>(tr[1])];
      const Vec2& c = cmp_mesh.xy[static_cast<std::size_t>(tr[2])];
      const Vec2 cen{(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0};
      const double area = 0.5 * cross(b - a, c - a);
      for (std::size_t q = 0; q < rule.pts.size(); ++q) {
        const auto& l = rule.pts[q];
        const Vec2 x = l[0] * a + l[1] * b + l[2] * c;
        const Vec2 hint = cen - x;
        // Scaled eigenfunction pair at eps * x.
        const Vec2 xe{eps * x[0], eps * x[1]};
        auto locE = s.meshE->locate(xe, hint);
        if (!locE) continue;
        const auto& trE = s.meshE->tri[static_cast<std::size_t>(locE->first)];
        double sv = 0.0, sw = 0.0;
        Vec2 sgv{0, 0}, sgw{0, 0};
        for (int i = 0; i < 3; ++i) {
          const double li = locE->second[static_cast<std::size_t>(i)];
          sv += li * s.pairE.coef[2 * trE[static_cast<std::size_t>(i)]];
          sw += li * s.pairE.coef[2 * trE[static_cast<std::size_t>(i)] + 1];
          sgv = sgv + s.pairE.coef[2 * trE[static_cast<std::size_t>(i)]] *
                          spE.grad[static_cast<std::size_t>(locE->first)][static_cast<std::size_t>(i)];
          sgw = sgw + s.pairE.coef[2 * trE[static_cast<std::size_t>(i)] + 1] *
                          spE.grad[static_cast<std::size_t>(locE->first)][static_cast<std::size_t>(i)];
        }
        sv *= scale_v;
        sw *= scale_v;
        sgv = scale_g * sgv;
        sgw = scale_g * sgw;

        const auto [pv, pw] = profile.value(x);
        const auto [pgv, pgw] = profile.gradient(x);
        const auto [ev, ew, egv, egw] = ext_field(x, hint);
        const double tv = pv - ev, tw = pw - ew;
        const Vec2 tgv = pgv - egv, tgw = pgw - egw;

        const double wq = rule.w[q] * area;
        const Vec2 dgv = sgv - tgv, dgw = sgw - tgw;
        num += wq * (dot(dgv, dgv) + dot(dgw, dgw) + (sv - tv) * (sv - tv) + (sw - tw) * (sw - tw));
        den += wq * (dot(tgv, tgv) + dot(tgw, tgw) + tv * tv + tw * tw);
      }
    }
    rep.eps.push_back(eps);
    rep.discrepancy.push_back(std::sqrt(num / std::max(den, 1e-300)));
    rep.rate_quantity.push_back(std::pow(eps, -2.0 * mu) * s.grad_diff_sq);
  }
  return rep;
}

GaugeAgreement run_gauge_check(const ExperimentConfig& cfg, double eps, int n_magnetic) {
  cfg.validate();
  const std::size_t nh = cfg.mesh_ladder.size();
  std::vector<std::vector<double>> mag(nh), crk(nh);
  for (std::size_t ih = 0; ih < nh; ++ih) {
    const double h = cfg.mesh_ladder[ih];
    const CrackSet cracksE = crack_polylines(cfg.poles, cfg.domain, eps);
    auto layer = std::make_shared<const GeomLayer>(build_layer(cfg.domain, cracksE, h, cfg.grade));
    const CrackMesh meshE = apply_cracks(layer, cracksE);

    PoleConfig pc = cfg.poles;
    pc.eps = eps;
    const MagneticForms mf = assemble_magnetic(meshE, pc, eps);
    SolveOptions mo;
    mo.nev = n_magnetic;
    mo.tol = cfg.tol_eigen;
    mo.seed = cfg.seed;
    mag[ih] = solve_lowest(mf, meshE, mo).eigenvalues;

    const CrackForms cf = assemble_crack(meshE);
    SolveOptions co = mo;
    co.nev = 2 * n_magnetic;
    crk[ih] = solve_lowest(cf, meshE, co).eigenvalues;
  }

  GaugeAgreement ga;
  std::vector<double> hs = cfg.mesh_ladder;
  for (int i = 0; i < n_magnetic; ++i) {
    std::vector<double> vals;
    for (std::size_t ih = 0; ih < nh; ++ih) vals.push_back(mag[ih][static_cast<std::size_t>(i)]);
    ga.magnetic.push_back(richardson(hs, vals).value);
  }
  for (int i = 0; i < 2 * n_magnetic; ++i) {
    std::vector<double> vals;
    for (std::size_t ih = 0; ih < nh; ++ih) vals.push_back(crk[ih][static_cast<std::size_t>(i)]);
    ga.crack.push_back(richardson(hs, vals).value);
  }
  for (int i = 0; i < n_magnetic; ++i) {
    const double lm = ga.magnetic[static_cast<std::size_t>(i)];
    const double c1 = ga.crack[static_cast<std::size_t>(2 * i)];
    const double c2 = ga.crack[static_cast<std::size_t>(2 * i) + 1];
    ga.max_pair_split = std::max(ga.max_pair_split, std::abs(c1 - c2) / lm);
    ga.max_rel_mismatch =
        std::max(ga.max_rel_mismatch, std::abs(0.5 * (c1 + c2) - lm) / lm);
  }
  return ga;
}

SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need at least two points");
  const std::size_t n = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(std::abs(y[i]), 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  const double det = dn * sxx - sx * sx;
  SlopeFit f;
  f.slope = (dn * sxy - sx * sy) / det;
  f.intercept = (sy * sxx - sx * sxy) / det;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(std::abs(y[i]), 1e-300));
    const double e = ly - f.slope * lx - f.intercept;
    ss += e * e;
  }
  if (n > 2) f.stderr_ = std::sqrt(ss / (dn - 2.0) * dn / det);
  return f;
}

ReportFiles emit_report(const std::string& out_dir, const std::string& name,
                        const ExperimentConfig& cfg, const std::vector<std::string>& columns,
                        const std::vector<std::vector<double>>& rows,
                        const nlohmann::json& summary) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ReportFiles files;
  files.csv_path = (fs::path(out_dir) / (name + ".csv")).string();
  files.json_path = (fs::path(out_dir) / (name + ".json")).string();

  std::ofstream csv(files.csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("emit_report: cannot write " + files.csv_path);
  for (std::size_t c = 0; c < columns.size(); ++c) csv << (c ? "," : "") << columns[c];
  csv << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size()) throw std::runtime_error("emit_report: ragged row");
    for (std::size_t c = 0; c < row.size(); ++c) csv << (c ? "," : "") << fmt_g17(row[c]);
    csv << "\n";
  }
  csv.close();

  nlohmann::json j;
  j["config"] = config_to_json(cfg);
  j["config_hash"] = config_hash(cfg);
  j["tolerances"] = {{"tol_eigen", cfg.tol_eigen},
                     {"simple_gap", kSimpleGapTol},
                     {"trunc_radii", {cfg.trunc / 4.0, cfg.trunc / 2.0, cfg.trunc}}};
  j["summary"] = summary;
  std::ofstream js(files.json_path, std::ios::binary);
  if (!js) throw std::runtime_error("emit_report: cannot write " + files.json_path);
  js << j.dump(2) << "\n";
  return files;
}

nlohmann::json convergence_to_json(const ConvergenceTable& t) {
  nlohmann::json j;
  j["m"] = t.limit.profile.m;
  j["beta"] = t.limit.profile.beta;
  j["gamma"] = t.limit.profile.gamma;
  j["order"] = t.limit.profile.order();
  j["lambda_0"] = t.limit.lambda_0;
  j["E_limit"] = t.exterior.energy;
  j["L_limit"] = t.exterior.L_profile;
  j["slope"] = t.slope;
  j["slope_stderr"] = t.slope_stderr;
  j["observed_mesh_order"] = t.observed_mesh_order;
  j["trunc_energies"] = t.exterior.energies;
  j["trunc_converged"] = t.exterior.converged;
  j["profile_fit_residual"] = t.limit.fit_residual;
  j["kreal_residual"] = t.limit.kreal_residual;
  return j;
}

nlohmann::json sign_to_json(const SignReport& r) {
  nlohmann::json j;
  j["variant"] = r.variant;
  j["pole_angle"] = r.pole_angle;
  j["m"] = r.m;
  j["gamma"] = r.gamma;
  j["E_limit"] = r.E_limit;
  j["L_limit"] = r.L_limit;
  j["eps"] = r.eps;
  j["delta_lambda"] = r.delta_lambda;
  j["signs_consistent"] = r.signs_consistent;
  j["L_negligible"] = r.L_negligible;
  return j;
}

nlohmann::json blowup_to_json(const BlowupReport& r) {
  nlohmann::json j;
  j["eps"] = r.eps;
  j["discrepancy"] = r.discrepancy;
  j["rate_quantity"] = r.rate_quantity;
  j["exterior_grad_sq"] = r.exterior_grad_sq;
  j["m"] = r.limit.profile.m;
  j["order"] = r.limit.profile.order();
  return j;
}

}  // namespace abc
