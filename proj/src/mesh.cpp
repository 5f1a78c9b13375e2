#include "abcollide/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace abc {

namespace {

constexpr double kNodeTol = 1e-12;

double mean_support(const DomainSpec& domain) {
  double s = 0.0;
  const int n = 64;
  for (int i = 0; i < n; ++i) s += domain.support(2.0 * kPi * (i + 0.5) / n);
  return s / n;
}

// One-sided graded ladder on [0, len]: N offsets with spacing ~ hf at the far
// end and ~ (i/N)^g near 0, clamped below by i*hmin.
std::vector<double> graded_offsets(double len, double hf, double hmin, double grade) {
  const int n = std::max(2, static_cast<int>(std::ceil(grade * len / hf)));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double graded = std::pow(static_cast<double>(i) / n, grade) * len;
    out.push_back(std::max(graded, i * hmin));
  }
  out.back() = len;
  return out;
}

std::vector<double> uniform_offsets(double len, double hf) {
  const int n = std::max(1, static_cast<int>(std::ceil(len / hf)));
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) out.push_back(len * i / n);
  return out;
}

struct RadialFeature {
  double s = 0.0;
  bool graded = false;
};

std::vector<double> build_fraction_ladder(const std::vector<RadialFeature>& features, double hf,
                                          double hmin, double grade) {
  std::vector<double> ladder;
  for (std::size_t seg = 0; seg + 1 < features.size(); ++seg) {
    const RadialFeature& a = features[seg];
    const RadialFeature& b = features[seg + 1];
    const double len = b.s - a.s;
    if (len < kNodeTol) continue;
    std::vector<double> local;
    if (a.graded && b.graded) {
      const double half = 0.5 * len;
      for (double off : graded_offsets(half, hf, hmin, grade)) local.push_back(a.s + off);
      std::vector<double> upper;
      for (double off : graded_offsets(half, hf, hmin, grade)) upper.push_back(b.s - off);
      // Upper half mirrored; the midpoint appears in both lists.
      upper.pop_back();
      std::sort(upper.begin(), upper.end());
      local.insert(local.end(), upper.begin(), upper.end());
    } else if (a.graded) {
      for (double off : graded_offsets(len, hf, hmin, grade)) local.push_back(a.s + off);
    } else if (b.graded) {
      std::vector<double> rev;
      for (double off : graded_offsets(len, hf, hmin, grade)) rev.push_back(b.s - off);
      rev.pop_back();  // b.s itself is appended below
      std::sort(rev.begin(), rev.end());
      local = std::move(rev);
      local.push_back(b.s);
    } else {
      for (double off : uniform_offsets(len, hf)) local.push_back(a.s + off);
    }
    local.back() = b.s;
    for (double s : local)
      if (ladder.empty() || s > ladder.back() + kNodeTol) ladder.push_back(s);
  }
  return ladder;
}

std::vector<double> build_spoke_angles(const DomainSpec& domain, const CrackSet& features,
                                       double h) {
  std::vector<double> required;
  for (const auto& ray : features.rays) {
    required.push_back(wrap_2pi(ray.alpha));
    required.push_back(wrap_2pi(ray.alpha + kPi));
  }
  std::sort(required.begin(), required.end());
  // Polygon vertex angles join unless they collide with a crack spoke.
  std::vector<double> base = required;
  for (const Vec2& v : domain.polygon) {
    const double t = wrap_2pi(std::atan2(v[1], v[0]));
    bool clash = false;
    for (double c : required) {
      double d = std::abs(wrap_pm_pi(t - c));
      if (d < 1e-9) { clash = true; break; }
    }
    if (!clash) base.push_back(t);
  }
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-9; }),
             base.end());
  if (base.empty()) base.push_back(0.0);

  std::vector<double> spokes;
  const std::size_t nb = base.size();
  for (std::size_t i = 0; i < nb; ++i) {
    const double ta = base[i];
    const double tb = (i + 1 < nb) ? base[i + 1] : base[0] + 2.0 * kPi;
    spokes.push_back(ta);
    const double gap = tb - ta;
    if (gap < 1e-9) continue;
    const double rmax = std::max({domain.support(ta), domain.support(tb),
                                  domain.support(0.5 * (ta + tb))});
    const int n = std::max(1, static_cast<int>(std::ceil(gap * rmax / h)));
    for (int s = 1; s < n; ++s) spokes.push_back(wrap_2pi(ta + gap * s / n));
  }
  std::sort(spokes.begin(), spokes.end());
  if (spokes.size() < 8) {
    // Degenerate featureless domains: fall back to a uniform fan.
    spokes.clear();
    for (int i = 0; i < 8; ++i) spokes.push_back(2.0 * kPi * i / 8);
  }
  return spokes;
}

void triangulate_layer(GeomLayer& L) {
  const int Q = L.spokes();
  const int NR = L.rings();
  const int i0 = L.annulus ? 0 : 1;
  auto oriented = [&](int a, int b, int c) {
    const Vec2& pa = L.nodes[static_cast<std::size_t>(a)];
    return cross(L.nodes[static_cast<std::size_t>(b)] - pa, L.nodes[static_cast<std::size_t>(c)] - pa) > 0.0;
  };
  auto split_quad = [&](int a, int b, int c, int d) {
    // Quad (a,b,c,d) CCW; prefer the shorter diagonal, fall back to the one
    // that keeps both triangles positively oriented (non-convex cells near
    // polygon corners).
    const double dac = norm(L.nodes[static_cast<std::size_t>(a)] - L.nodes[static_cast<std::size_t>(c)]);
    const double dbd = norm(L.nodes[static_cast<std::size_t>(b)] - L.nodes[static_cast<std::size_t>(d)]);
    bool use_ac = dac <= dbd;
    if (use_ac && !(oriented(a, b, c) && oriented(a, c, d))) use_ac = false;
    if (!use_ac && !(oriented(a, b, d) && oriented(b, c, d))) use_ac = true;
    if (use_ac) {
      L.tris.push_back({a, b, c});
      L.tris.push_back({a, c, d});
    } else {
      L.tris.push_back({a, b, d});
      L.tris.push_back({b, c, d});
    }
  };
  L.wedge_tri_begin.assign(static_cast<std::size_t>(Q) + 1, 0);
  for (int q = 0; q < Q; ++q) {
    L.wedge_tri_begin[static_cast<std::size_t>(q)] = static_cast<int>(L.tris.size());
    const int qn = (q + 1) % Q;
    if (!L.annulus) L.tris.push_back({0, L.node_id(q, 1), L.node_id(qn, 1)});
    for (int i = i0; i < NR; ++i) {
      // CCW around the cell: inner@q, outer@q, outer@q+1, inner@q+1.
      split_quad(L.node_id(q, i), L.node_id(q, i + 1), L.node_id(qn, i + 1), L.node_id(qn, i));
    }
  }
  L.wedge_tri_begin[static_cast<std::size_t>(Q)] = static_cast<int>(L.tris.size());
  for (const auto& t : L.tris) {
    const Vec2 e1 = L.nodes[t[1]] - L.nodes[t[0]];
    const Vec2 e2 = L.nodes[t[2]] - L.nodes[t[0]];
    if (cross(e1, e2) <= 0.0) throw std::runtime_error("mesh: degenerate or inverted triangle");
  }
}

}  // namespace

int GeomLayer::node_id(int q, int i) const {
  const int NR = rings();
  if (annulus) return q * (NR + 1) + i;
  if (i == 0) return 0;
  return 1 + q * NR + (i - 1);
}

double GeomLayer::node_radius(int q, int i) const {
  if (annulus)
    return r_inner +
           fractions[static_cast<std::size_t>(i)] * (spoke_support[static_cast<std::size_t>(q)] - r_inner);
  if (i == 0) return 0.0;
  return fractions[static_cast<std::size_t>(i - 1)] * spoke_support[static_cast<std::size_t>(q)];
}

int GeomLayer::rings() const {
  return annulus ? static_cast<int>(fractions.size()) - 1 : static_cast<int>(fractions.size());
}

bool GeomLayer::on_outer_boundary(int node) const {
  const int NR = rings();
  if (annulus) return (node % (NR + 1)) == NR;
  return node >= 1 && ((node - 1) % NR) == NR - 1;
}

bool GeomLayer::on_inner_boundary(int node) const {
  const int NR = rings();
  if (!annulus) return false;
  return (node % (NR + 1)) == 0;
}

int GeomLayer::spoke_of_angle(double theta) const {
  const double t = wrap_2pi(theta);
  for (int q = 0; q < spokes(); ++q) {
    if (std::abs(wrap_pm_pi(spoke_angles[static_cast<std::size_t>(q)] - t)) < 1e-9) return q;
  }
  return -1;
}

GeomLayer build_layer(const DomainSpec& domain, const CrackSet& features, double h, double grade) {
  if (!(h > 0.0)) throw std::invalid_argument("build_layer: h must be positive");
  if (!(grade >= 1.0)) throw std::invalid_argument("build_layer: grade must be >= 1");
  domain.validate();

  GeomLayer L;
  L.h = h;
  L.grade = grade;
  L.spoke_angles = build_spoke_angles(domain, features, h);
  L.spoke_support.reserve(L.spoke_angles.size());
  for (double t : L.spoke_angles) L.spoke_support.push_back(domain.support(t));

  const double rbar = mean_support(domain);
  const double hf = h / rbar;
  const double hmin = h / (1000.0 * rbar);

  // Cracks must not run closer than 2*h_min to each other away from the
  // collision point; for radial cracks this means a minimal angular gap at
  // the smallest tip radius.
  for (std::size_t a = 0; a < features.rays.size(); ++a) {
    for (std::size_t b = a + 1; b < features.rays.size(); ++b) {
      double d = std::abs(wrap_pm_pi(features.rays[a].alpha - features.rays[b].alpha));
      d = std::min(d, kPi - d);
      const double rt = std::min(std::max(features.rays[a].tip_radius, hmin * rbar),
                                 std::max(features.rays[b].tip_radius, hmin * rbar));
      if (features.rays[a].tip_radius > 0.0 && features.rays[b].tip_radius > 0.0 &&
          2.0 * rt * std::sin(0.5 * d) < 2.0 * h / 1000.0)
        throw std::invalid_argument("build_layer: cracks closer than 2*h_min away from 0");
    }
  }

  std::vector<RadialFeature> rad;
  rad.push_back({0.0, true});
  for (const auto& ray : features.rays) {
    if (ray.tip_radius <= 0.0) continue;
    const double sup = domain.support(ray.alpha);
    const double s = ray.tip_radius / sup;
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("build_layer: tip outside the domain");
    rad.push_back({s, true});
  }
  rad.push_back({1.0, false});
  std::sort(rad.begin(), rad.end(), [](const RadialFeature& x, const RadialFeature& y) { return x.s < y.s; });
  for (std::size_t i = 0; i + 1 < rad.size(); ++i)
    if (rad[i + 1].s - rad[i].s < kNodeTol && i + 1 + 1 < rad.size())
      throw std::invalid_argument("build_layer: coincident radial features");
  L.fractions = build_fraction_ladder(rad, hf, hmin, grade);

  const int Q = L.spokes();
  const int NR = L.rings();
  L.nodes.resize(1 + static_cast<std::size_t>(Q) * NR);
  L.nodes[0] = {0.0, 0.0};
  for (int q = 0; q < Q; ++q) {
    const double c = std::cos(L.spoke_angles[static_cast<std::size_t>(q)]);
    const double s = std::sin(L.spoke_angles[static_cast<std::size_t>(q)]);
    for (int i = 1; i <= NR; ++i) {
      const double r = L.node_radius(q, i);
      L.nodes[static_cast<std::size_t>(L.node_id(q, i))] = {r * c, r * s};
    }
  }
  // Snap crack tips to their exact positions.
  for (const auto& ray : features.rays) {
    if (ray.tip_radius <= 0.0) continue;
    const int q = L.spoke_of_angle(ray.alpha);
    if (q < 0) throw std::runtime_error("build_layer: missing crack spoke");
    for (int i = 1; i <= NR; ++i) {
      if (std::abs(L.node_radius(q, i) - ray.tip_radius) < 1e-9 * std::max(1.0, ray.tip_radius)) {
        L.nodes[static_cast<std::size_t>(L.node_id(q, i))] = ray.tip;
        break;
      }
    }
  }
  triangulate_layer(L);
  return L;
}

GeomLayer build_annulus_layer(double r_inner, double r_outer, int n_boundary,
                              const CrackSet& features, double h) {
  if (!(r_inner > 0.0 && r_outer > r_inner))
    throw std::invalid_argument("build_annulus_layer: bad radii");
  DomainSpec outer = regular_polygon(n_boundary, r_outer);
  GeomLayer L;
  L.annulus = true;
  L.r_inner = r_inner;
  L.h = h;
  L.grade = 1.0;
  L.spoke_angles = build_spoke_angles(outer, features, h);
  L.spoke_support.reserve(L.spoke_angles.size());
  for (double t : L.spoke_angles) L.spoke_support.push_back(outer.support(t));
  std::vector<RadialFeature> rad{{0.0, false}, {1.0, false}};
  L.fractions.clear();
  L.fractions.push_back(0.0);
  for (double s :
       build_fraction_ladder(rad, h / (r_outer - r_inner), h / (1000.0 * (r_outer - r_inner)), 1.0))
    L.fractions.push_back(s);
  const int Q = L.spokes();
  const int nr = L.rings();
  L.nodes.resize(static_cast<std::size_t>(Q) * (nr + 1));
  for (int q = 0; q < Q; ++q) {
    const double c = std::cos(L.spoke_angles[static_cast<std::size_t>(q)]);
    const double s = std::sin(L.spoke_angles[static_cast<std::size_t>(q)]);
    for (int i = 0; i <= nr; ++i) {
      const double r = L.node_radius(q, i);
      L.nodes[static_cast<std::size_t>(L.node_id(q, i))] = {r * c, r * s};
    }
  }
  triangulate_layer(L);
  return L;
}

int CrackMesh::sector_of(double theta) const {
  if (sector_angles.empty()) return -1;
  const double t = wrap_2pi(theta);
  // sector s spans [sector_angles[s], sector_angles[s+1]) cyclically
  int lo = 0;
  const int n = static_cast<int>(sector_angles.size());
  if (t < sector_angles.front() || t >= sector_angles.back()) return n - 1;
  for (int s = 0; s < n - 1; ++s) {
    if (t >= sector_angles[static_cast<std::size_t>(s)] && t < sector_angles[static_cast<std::size_t>(s) + 1]) {
      lo = s;
      break;
    }
  }
  return lo;
}

namespace {

struct Incidence {
  std::vector<int> offsets;
  std::vector<int> tris;
};

Incidence build_incidence(const std::vector<std::array<int, 3>>& tris, int n_nodes) {
  Incidence inc;
  inc.offsets.assign(static_cast<std::size_t>(n_nodes) + 1, 0);
  for (const auto& t : tris)
    for (int v : t) inc.offsets[static_cast<std::size_t>(v) + 1]++;
  for (std::size_t i = 1; i < inc.offsets.size(); ++i) inc.offsets[i] += inc.offsets[i - 1];
  inc.tris.resize(static_cast<std::size_t>(inc.offsets.back()));
  std::vector<int> cur(inc.offsets.begin(), inc.offsets.end() - 1);
  for (int ti = 0; ti < static_cast<int>(tris.size()); ++ti)
    for (int v : tris[static_cast<std::size_t>(ti)])
      inc.tris[static_cast<std::size_t>(cur[static_cast<std::size_t>(v)]++)] = ti;
  return inc;
}

Vec2 tri_centroid(const std::vector<Vec2>& xy, const std::array<int, 3>& t) {
  return {(xy[t[0]][0] + xy[t[1]][0] + xy[t[2]][0]) / 3.0,
          (xy[t[0]][1] + xy[t[1]][1] + xy[t[2]][1]) / 3.0};
}

std::array<double, 4> rot2(double w) {
  return {std::cos(w), -std::sin(w), std::sin(w), std::cos(w)};
}

std::array<double, 4> mat_mul(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
          a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

}  // namespace

CrackMesh apply_cracks(std::shared_ptr<const GeomLayer> layer_ptr, const CrackSet& active) {
  const GeomLayer& layer = *layer_ptr;
  CrackMesh M;
  M.layer = std::move(layer_ptr);
  M.xy = layer.nodes;
  M.tri = layer.tris;
  M.n_geom = static_cast<int>(layer.nodes.size());
  M.geom_of.resize(layer.nodes.size());
  std::iota(M.geom_of.begin(), M.geom_of.end(), 0);

  Incidence inc = build_incidence(M.tri, M.n_geom);

  auto duplicate_node = [&](int geom_node, const Vec2& nu) -> std::pair<int, int> {
    // Keep the original dof on the x.nu > 0 side; give the x.nu < 0 side a
    // fresh copy. Returns (plus_dof, minus_dof).
    const int minus = static_cast<int>(M.xy.size());
    M.xy.push_back(M.xy[static_cast<std::size_t>(geom_node)]);
    M.geom_of.push_back(geom_node);
    for (int k = inc.offsets[static_cast<std::size_t>(geom_node)];
         k < inc.offsets[static_cast<std::size_t>(geom_node) + 1]; ++k) {
      auto& t = M.tri[static_cast<std::size_t>(inc.tris[static_cast<std::size_t>(k)])];
      const Vec2 c = tri_centroid(M.xy, t);
      if (dot(c, nu) < 0.0)
        for (int& v : t)
          if (v == geom_node) v = minus;
    }
    return {geom_node, minus};
  };

  const int NR = layer.rings();
  for (const auto& ray : active.rays) {
    CrackOverlayEntry entry;
    entry.alpha = ray.alpha;
    entry.rho = ray.rho;
    entry.nu = ray.nu;
    entry.tip_radius = ray.tip_radius;
    entry.back.angle = wrap_2pi(ray.alpha + kPi);
    entry.front.angle = wrap_2pi(ray.alpha);

    const int qb = layer.spoke_of_angle(entry.back.angle);
    if (qb < 0) throw std::invalid_argument("apply_cracks: crack spoke missing from layer");
    const int ib0 = layer.annulus ? 0 : 1;
    for (int i = ib0; i <= NR; ++i) {
      const int g = layer.node_id(qb, i);
      auto [p, m] = duplicate_node(g, ray.nu);
      entry.back.radii.push_back(layer.node_radius(qb, i));
      entry.back.plus_dofs.push_back(p);
      entry.back.minus_dofs.push_back(m);
    }

    if (ray.tip_radius > 0.0) {
      const int qf = layer.spoke_of_angle(entry.front.angle);
      if (qf < 0) throw std::invalid_argument("apply_cracks: crack spoke missing from layer");
      int tip_ring = -1;
      for (int i = 1; i <= NR; ++i) {
        if (std::abs(layer.node_radius(qf, i) - ray.tip_radius) <
            1e-9 * std::max(1.0, ray.tip_radius)) {
          tip_ring = i;
          break;
        }
      }
      if (tip_ring < 0) throw std::invalid_argument("apply_cracks: tip radius not on the ladder");
      for (int i = 1; i < tip_ring; ++i) {
        const int g = layer.node_id(qf, i);
        auto [p, m] = duplicate_node(g, ray.nu);
        entry.front.radii.push_back(layer.node_radius(qf, i));
        entry.front.plus_dofs.push_back(p);
        entry.front.minus_dofs.push_back(m);
      }
      const int tip = layer.node_id(qf, tip_ring);
      entry.front.radii.push_back(ray.tip_radius);
      entry.front.plus_dofs.push_back(tip);
      entry.front.minus_dofs.push_back(tip);
    }
    M.cracks.push_back(std::move(entry));
  }

  // Origin sectors: one dof per angular sector delimited by the crack
  // branches incident at 0.
  if (!layer.annulus && !active.rays.empty()) {
    struct Branch {
      double angle;
      double rot;  // rotation applied when crossing CCW
      std::size_t crack;
      bool front;
    };
    std::vector<Branch> branches;
    for (std::size_t j = 0; j < M.cracks.size(); ++j) {
      const auto& e = M.cracks[j];
      branches.push_back({e.back.angle, +2.0 * kPi * e.rho, j, false});
      if (e.tip_radius > 0.0) branches.push_back({e.front.angle, -2.0 * kPi * e.rho, j, true});
    }
    std::sort(branches.begin(), branches.end(),
              [](const Branch& a, const Branch& b) { return a.angle < b.angle; });
    const int ns = static_cast<int>(branches.size());
    M.sector_angles.resize(static_cast<std::size_t>(ns));
    for (int s = 0; s < ns; ++s) M.sector_angles[static_cast<std::size_t>(s)] = branches[static_cast<std::size_t>(s)].angle;
    M.origin_dofs.assign(static_cast<std::size_t>(ns), -1);
    M.origin_dofs[0] = 0;
    M.sector_rotation.assign(static_cast<std::size_t>(ns), rot2(0.0));
    for (int s = 1; s < ns; ++s) {
      M.origin_dofs[static_cast<std::size_t>(s)] = static_cast<int>(M.xy.size());
      M.xy.push_back({0.0, 0.0});
      M.geom_of.push_back(0);
      // value_s = Rot(crossing s-th branch) * value_{s-1}
      M.sector_rotation[static_cast<std::size_t>(s)] =
          mat_mul(rot2(branches[static_cast<std::size_t>(s)].rot), M.sector_rotation[static_cast<std::size_t>(s) - 1]);
    }
    // If the loop composes to the identity the sector values chain to one
    // free master; otherwise (total holonomy 2*pi*rho with rho not integer)
    // the only consistent origin value is zero.
    auto full = mat_mul(rot2(branches[0].rot), M.sector_rotation[static_cast<std::size_t>(ns) - 1]);
    M.origin_clamped = std::abs(full[0] - 1.0) > 1e-9 || std::abs(full[1]) > 1e-9;

    // Re-point the origin in each fan triangle to its sector copy.
    for (int k = inc.offsets[0]; k < inc.offsets[1]; ++k) {
      auto& t = M.tri[static_cast<std::size_t>(inc.tris[static_cast<std::size_t>(k)])];
      const Vec2 c = tri_centroid(M.xy, t);
      const int s = M.sector_of(std::atan2(c[1], c[0]));
      for (int& v : t)
        if (v == 0) v = M.origin_dofs[static_cast<std::size_t>(s)];
    }

    // Fill in the radius-0 entries of the crack tables: the trace side dofs
    // at the origin are the sector copies adjacent to each branch.
    auto sector_starting_at = [&](double angle) {
      for (int s = 0; s < ns; ++s)
        if (std::abs(wrap_pm_pi(M.sector_angles[static_cast<std::size_t>(s)] - angle)) < 1e-9) return s;
      throw std::runtime_error("apply_cracks: sector lookup failed");
    };
    for (auto& e : M.cracks) {
      const int s_back = sector_starting_at(e.back.angle);
      const int below_back = (s_back + ns - 1) % ns;
      // x.nu > 0 just below the back branch angle.
      e.back.radii.insert(e.back.radii.begin(), 0.0);
      e.back.plus_dofs.insert(e.back.plus_dofs.begin(), M.origin_dofs[static_cast<std::size_t>(below_back)]);
      e.back.minus_dofs.insert(e.back.minus_dofs.begin(), M.origin_dofs[static_cast<std::size_t>(s_back)]);
      if (e.tip_radius > 0.0) {
        const int s_front = sector_starting_at(e.front.angle);
        const int below_front = (s_front + ns - 1) % ns;
        // x.nu > 0 just above the front branch angle.
        e.front.radii.insert(e.front.radii.begin(), 0.0);
        e.front.plus_dofs.insert(e.front.plus_dofs.begin(), M.origin_dofs[static_cast<std::size_t>(s_front)]);
        e.front.minus_dofs.insert(e.front.minus_dofs.begin(), M.origin_dofs[static_cast<std::size_t>(below_front)]);
      }
    }
  }

  M.dirichlet.assign(M.xy.size(), 0);
  for (int d = 0; d < M.n_dofs(); ++d)
    if (layer.on_outer_boundary(M.geom_of[static_cast<std::size_t>(d)])) M.dirichlet[static_cast<std::size_t>(d)] = 1;

  return M;
}

CrackMesh generate(const DomainSpec& domain, const CrackSet& cracks, double h, double grade) {
  return apply_cracks(std::make_shared<const GeomLayer>(build_layer(domain, cracks, h, grade)),
                      cracks);
}

std::optional<std::pair<int, std::array<double, 3>>> CrackMesh::locate(const Vec2& x,
                                                                       const Vec2& side_hint) const {
  const GeomLayer& L = *layer;
  const double t = wrap_2pi(std::atan2(x[1], x[0]));
  const int Q = L.spokes();
  int q = static_cast<int>(std::upper_bound(L.spoke_angles.begin(), L.spoke_angles.end(), t) -
                           L.spoke_angles.begin()) - 1;
  if (q < 0) q = Q - 1;
  const double scale = std::max(1.0, norm(x));
  double best_score = -1e300;
  std::optional<std::pair<int, std::array<double, 3>>> best;
  for (int dq = -1; dq <= 1; ++dq) {
    const int w = (q + dq + Q) % Q;
    for (int ti = L.wedge_tri_begin[static_cast<std::size_t>(w)]; ti < L.wedge_tri_begin[static_cast<std::size_t>(w) + 1]; ++ti) {
      const auto& tr = tri[static_cast<std::size_t>(ti)];
      const Vec2& a = xy[static_cast<std::size_t>(tr[0])];
      const Vec2& b = xy[static_cast<std::size_t>(tr[1])];
      const Vec2& c = xy[static_cast<std::size_t>(tr[2])];
      const double area2 = cross(b - a, c - a);
      if (area2 <= 0.0) continue;
      const double l0 = cross(b - x, c - x) / area2;
      const double l1 = cross(c - x, a - x) / area2;
      const double l2 = cross(a - x, b - x) / area2;
      const double tol = 1e-9 * scale;
      if (l0 >= -tol && l1 >= -tol && l2 >= -tol) {
        double score = std::min({l0, l1, l2});
        if (side_hint[0] != 0.0 || side_hint[1] != 0.0) {
          const Vec2 cen = tri_centroid(xy, tr);
          score += (dot(cen - x, side_hint) > 0.0) ? 1.0 : 0.0;
        }
        if (score > best_score) {
          best_score = score;
          best = std::make_pair(ti, std::array<double, 3>{l0, l1, l2});
        }
      }
    }
  }
  return best;
}

TraceMap trace_dofs(const CrackMesh& mesh, std::size_t crack, int side, TracePortion portion) {
  if (crack >= mesh.cracks.size()) throw std::out_of_range("trace_dofs: crack index");
  const CrackOverlayEntry& e = mesh.cracks[crack];
  TraceMap tm;
  auto side_dofs = [&](const CrackBranch& br) -> const std::vector<int>& {
    return side >= 0 ? br.plus_dofs : br.minus_dofs;
  };
  if (portion == TracePortion::Segment) {
    if (e.tip_radius <= 0.0) return tm;  // degenerate segment
    const auto& dofs = side_dofs(e.front);
    tm.dofs = dofs;
    tm.params = e.front.radii;
  } else {
    // Whole polyline boundary -> origin -> tip; parameter is the signed t of
    // t*a_j, so the back branch runs from -r_boundary to 0.
    const auto& bdofs = side_dofs(e.back);
    for (std::size_t i = e.back.radii.size(); i-- > 0;) {
      tm.dofs.push_back(bdofs[i]);
      tm.params.push_back(-e.back.radii[i]);
    }
    if (e.tip_radius > 0.0) {
      const auto& fdofs = side_dofs(e.front);
      for (std::size_t i = 0; i < e.front.radii.size(); ++i) {
        if (e.front.radii[i] == 0.0) continue;  // origin already listed
        tm.dofs.push_back(fdofs[i]);
        tm.params.push_back(e.front.radii[i]);
      }
    }
  }
  const std::size_t n = tm.params.size();
  tm.weights.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double w = 0.5 * (tm.params[i + 1] - tm.params[i]);
    tm.weights[i] += w;
    tm.weights[i + 1] += w;
  }
  return tm;
}

GeomLayer build_exterior_layer(double R, const CrackSet& features, double h, double grade) {
  if (!(R > 4.0)) throw std::invalid_argument("build_exterior_layer: R too small");
  GeomLayer L;
  L.h = h;
  L.grade = grade;

  // Crack spokes plus uniform angular fill with step ~ h (chord matched near
  // unit radius, where the tips live).
  std::vector<double> base;
  for (const auto& ray : features.rays) {
    base.push_back(wrap_2pi(ray.alpha));
    base.push_back(wrap_2pi(ray.alpha + kPi));
  }
  std::sort(base.begin(), base.end());
  base.erase(std::unique(base.begin(), base.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-9; }),
             base.end());
  if (base.empty()) base.push_back(0.0);
  const std::size_t nb = base.size();
  for (std::size_t i = 0; i < nb; ++i) {
    const double ta = base[i];
    const double tb = (i + 1 < nb) ? base[i + 1] : base[0] + 2.0 * kPi;
    L.spoke_angles.push_back(ta);
    const double gap = tb - ta;
    const int n = std::max(1, static_cast<int>(std::ceil(gap / h)));
    for (int s = 1; s < n; ++s) L.spoke_angles.push_back(wrap_2pi(ta + gap * s / n));
  }
  std::sort(L.spoke_angles.begin(), L.spoke_angles.end());
  L.spoke_support.assign(L.spoke_angles.size(), R);

  // Radii: graded [0 .. tips .. seam], then multiplicative out to R.
  const double seam = 2.0;
  std::vector<RadialFeature> rad;
  rad.push_back({0.0, true});
  for (const auto& ray : features.rays) {
    if (ray.tip_radius <= 0.0) continue;
    if (!(ray.tip_radius < seam)) throw std::invalid_argument("build_exterior_layer: tip beyond seam");
    rad.push_back({ray.tip_radius / R, true});
  }
  rad.push_back({seam / R, false});
  std::sort(rad.begin(), rad.end(),
            [](const RadialFeature& x, const RadialFeature& y) { return x.s < y.s; });
  L.fractions = build_fraction_ladder(rad, h / R, h / (1000.0 * R), grade);
  double r = seam;
  while (r * (1.0 + h) < R) {
    r *= 1.0 + h;
    L.fractions.push_back(r / R);
  }
  L.fractions.push_back(1.0);

  const int Q = L.spokes();
  const int NR = L.rings();
  L.nodes.resize(1 + static_cast<std::size_t>(Q) * NR);
  L.nodes[0] = {0.0, 0.0};
  for (int q = 0; q < Q; ++q) {
    const double c = std::cos(L.spoke_angles[static_cast<std::size_t>(q)]);
    const double s = std::sin(L.spoke_angles[static_cast<std::size_t>(q)]);
    for (int i = 1; i <= NR; ++i) {
      const double rr = L.node_radius(q, i);
      L.nodes[static_cast<std::size_t>(L.node_id(q, i))] = {rr * c, rr * s};
    }
  }
  for (const auto& ray : features.rays) {
    if (ray.tip_radius <= 0.0) continue;
    const int q = L.spoke_of_angle(ray.alpha);
    if (q < 0) throw std::runtime_error("build_exterior_layer: missing crack spoke");
    for (int i = 1; i <= NR; ++i) {
      if (std::abs(L.node_radius(q, i) - ray.tip_radius) < 1e-9 * std::max(1.0, ray.tip_radius)) {
        L.nodes[static_cast<std::size_t>(L.node_id(q, i))] = ray.tip;
        break;
      }
    }
  }
  triangulate_layer(L);
  return L;
}

namespace {

struct DofSide {
  // -1 ordinary single dof, 0 plus copy, 1 minus copy, 2 origin sector
  int kind = -1;
  Vec2 nu{0.0, 0.0};
  double sector_mid = 0.0;
};

std::vector<DofSide> dof_sides(const CrackMesh& m) {
  std::vector<DofSide> s(static_cast<std::size_t>(m.n_dofs()));
  for (const auto& e : m.cracks) {
    for (const CrackBranch* br : {&e.back, &e.front}) {
      for (std::size_t i = 0; i < br->radii.size(); ++i) {
        if (br->radii[i] == 0.0) continue;
        if (br->plus_dofs[i] == br->minus_dofs[i]) continue;
        s[static_cast<std::size_t>(br->plus_dofs[i])] = {0, e.nu, 0.0};
        s[static_cast<std::size_t>(br->minus_dofs[i])] = {1, e.nu, 0.0};
      }
    }
  }
  const int ns = static_cast<int>(m.origin_dofs.size());
  for (int k = 0; k < ns; ++k) {
    const double a0 = m.sector_angles[static_cast<std::size_t>(k)];
    const double a1 = (k + 1 < ns) ? m.sector_angles[static_cast<std::size_t>(k) + 1]
                                   : m.sector_angles[0] + 2.0 * kPi;
    s[static_cast<std::size_t>(m.origin_dofs[static_cast<std::size_t>(k)])] = {2, {0, 0}, 0.5 * (a0 + a1)};
  }
  return s;
}

}  // namespace

std::vector<int> overlay_map(const CrackMesh& from, const CrackMesh& to) {
  if (from.layer != to.layer) throw std::invalid_argument("overlay_map: overlays of different layers");
  const auto fs = dof_sides(from);
  const auto ts = dof_sides(to);
  // Geometric node -> list of from-dofs.
  std::vector<std::vector<int>> at_geom(static_cast<std::size_t>(from.n_geom));
  for (int d = 0; d < from.n_dofs(); ++d) at_geom[static_cast<std::size_t>(from.geom_of[static_cast<std::size_t>(d)])].push_back(d);

  std::vector<int> map(static_cast<std::size_t>(to.n_dofs()), -1);
  for (int d = 0; d < to.n_dofs(); ++d) {
    const int g = to.geom_of[static_cast<std::size_t>(d)];
    const auto& cands = at_geom[static_cast<std::size_t>(g)];
    if (cands.size() == 1) {
      map[static_cast<std::size_t>(d)] = cands[0];
      continue;
    }
    const DofSide& td = ts[static_cast<std::size_t>(d)];
    int pick = -1;
    if (td.kind == 2) {
      // origin: the from-sector containing this to-sector's midpoint
      for (int c : cands) {
        const DofSide& fd = fs[static_cast<std::size_t>(c)];
        if (fd.kind != 2) continue;
        if (from.sector_of(td.sector_mid) ==
            from.sector_of(fs[static_cast<std::size_t>(c)].sector_mid)) {
          pick = c;
          break;
        }
      }
    } else if (td.kind == 0 || td.kind == 1) {
      const double want = (td.kind == 0) ? 1.0 : -1.0;
      for (int c : cands) {
        const DofSide& fd = fs[static_cast<std::size_t>(c)];
        const double side = (fd.kind == 0) ? 1.0 : (fd.kind == 1 ? -1.0 : 0.0);
        if (side == want) {
          pick = c;
          break;
        }
      }
    }
    if (pick < 0) throw std::runtime_error("overlay_map: no side-compatible counterpart");
    map[static_cast<std::size_t>(d)] = pick;
  }
  return map;
}

int euler_characteristic(const CrackMesh& mesh) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(mesh.tri.size() * 3);
  for (const auto& t : mesh.tri) {
    for (int k = 0; k < 3; ++k) {
      int a = t[static_cast<std::size_t>(k)];
      int b = t[static_cast<std::size_t>((k + 1) % 3)];
      if (a > b) std::swap(a, b);
      edges.emplace_back(a, b);
    }
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return mesh.n_dofs() - static_cast<int>(edges.size()) + static_cast<int>(mesh.tri.size());
}

int component_count(const CrackMesh& mesh) {
  std::vector<int> parent(static_cast<std::size_t>(mesh.n_dofs()));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  for (const auto& t : mesh.tri) {
    for (int k = 0; k < 3; ++k) {
      const int a = find(t[static_cast<std::size_t>(k)]);
      const int b = find(t[static_cast<std::size_t>((k + 1) % 3)]);
      if (a != b) parent[static_cast<std::size_t>(a)] = b;
    }
  }
  int n = 0;
  for (int d = 0; d < mesh.n_dofs(); ++d)
    if (find(d) == d) ++n;
  return n;
}

}  // namespace abc
