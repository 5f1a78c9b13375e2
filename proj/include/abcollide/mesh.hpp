#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "abcollide/geometry.hpp"

namespace abc {

/// Geometric layer of a crack-conforming triangulation of a star-shaped
/// polygon (or of a polygonal annulus). Crack lines are mesh spokes, rings
/// are graded toward the origin and toward prescribed tip radii. The layer
/// carries no duplication; crack overlays are applied on top of it so that
/// several crack sets (e.g. Gamma_eps and Gamma_0) can share identical
/// geometry.
struct GeomLayer {
  std::vector<Vec2> nodes;                  // node 0 = origin in disk mode
  std::vector<std::array<int, 3>> tris;     // CCW triangles
  std::vector<double> spoke_angles;         // sorted, in [0, 2*pi)
  std::vector<double> fractions;            // radial fraction ladder (excl. 0 in disk mode)
  std::vector<double> spoke_support;        // R(theta_q) per spoke
  bool annulus = false;
  double r_inner = 0.0;                     // annulus inner radius
  std::vector<int> wedge_tri_begin;         // per wedge: first triangle index (tris grouped by wedge)
  double h = 0.0;
  double grade = 3.0;

  /// Outermost ring index; node rings run 0..rings() in annulus mode and
  /// 0 (origin), 1..rings() in disk mode.
  int rings() const;
  int spokes() const { return static_cast<int>(spoke_angles.size()); }
  /// Node id at (spoke q, ring i); ring index i in [1, rings()] for disk
  /// mode (ring 0 is the origin), [0, rings()] in annulus mode.
  int node_id(int q, int i) const;
  double node_radius(int q, int i) const;
  bool on_outer_boundary(int node) const;
  bool on_inner_boundary(int node) const;
  int spoke_of_angle(double theta) const;   // exact match within kAngleTol, -1 otherwise
};

/// Build the shared geometric layer. `features` fixes the crack spoke angles
/// and tip radii (use the finest crack set the overlays will need).
GeomLayer build_layer(const DomainSpec& domain, const CrackSet& features, double h, double grade);

/// Annulus variant (outer boundary = regular polygon of the given radius),
/// used by the Hardy property checks. Crack spokes cross the full annulus.
GeomLayer build_annulus_layer(double r_inner, double r_outer, int n_boundary,
                              const CrackSet& features, double h);

/// One branch of a duplicated crack in an overlay, listed outward from the
/// origin (disk mode) or from the inner boundary (annulus mode).
struct CrackBranch {
  double angle = 0.0;            // spoke angle of this branch
  std::vector<double> radii;     // ascending; radius 0 entries refer to origin sector dofs
  std::vector<int> plus_dofs;    // dof on the x.nu > 0 side, per radius
  std::vector<int> minus_dofs;   // dof on the x.nu < 0 side, per radius
};

struct CrackOverlayEntry {
  double alpha = 0.0;            // pole direction
  double rho = 0.0;              // circulation (rotation 2*pi*rho across the crack)
  Vec2 nu{};                     // (-sin alpha, cos alpha)
  double tip_radius = 0.0;
  CrackBranch back;              // branch at angle alpha + pi (toward the boundary)
  CrackBranch front;             // branch at angle alpha (toward the tip); may be empty
};

/// Crack-conforming mesh with duplicated degrees of freedom: the dof layer
/// on top of a GeomLayer for a particular active crack set. Overlays built
/// from the same shared layer have bitwise-identical geometry.
struct CrackMesh {
  std::shared_ptr<const GeomLayer> layer;
  std::vector<Vec2> xy;                    // per dof (duplicates share coordinates)
  std::vector<std::array<int, 3>> tri;     // triangles referencing dofs (same order as layer)
  std::vector<int> geom_of;                // dof -> geometric node
  int n_geom = 0;
  std::vector<std::uint8_t> dirichlet;     // per dof: on the outer polygon boundary
  std::vector<CrackOverlayEntry> cracks;
  // Origin sector structure (disk mode with at least one crack):
  std::vector<int> origin_dofs;            // dof id per angular sector, CCW
  std::vector<double> sector_angles;       // start angle of each sector (branch angles, sorted)
  std::vector<std::array<double, 4>> sector_rotation;  // 2x2 row-major: value_s = R_s * value_0
  // When the rotation chain around the origin has nontrivial holonomy (the
  // collapsed crack set Gamma_0), the constraints admit only the zero value
  // there and every sector copy is clamped.
  bool origin_clamped = false;

  int n_dofs() const { return static_cast<int>(xy.size()); }
  int sector_of(double theta) const;       // index of the sector containing angle theta
  /// Triangle containing x (with centroid on the side of `side_hint` relative
  /// to coincident crack spokes, when x lies on one). Returns triangle index
  /// and barycentric coordinates; nullopt outside the mesh.
  std::optional<std::pair<int, std::array<double, 3>>> locate(const Vec2& x,
                                                              const Vec2& side_hint = {0, 0}) const;
};

/// Apply the duplication overlay for `active` cracks. Every active crack's
/// spokes must be feature spokes of the layer. Radii of active tips must be
/// ladder radii on their spoke.
CrackMesh apply_cracks(std::shared_ptr<const GeomLayer> layer, const CrackSet& active);

/// One-call generation as specified: layer + overlay for the same crack set.
CrackMesh generate(const DomainSpec& domain, const CrackSet& cracks, double h, double grade);

/// Disk of radius R for the exterior problem: rings graded toward the origin
/// and the crack tips, then logarithmically coarsened toward |x| = R;
/// angular resolution matched to unit radius.
GeomLayer build_exterior_layer(double R, const CrackSet& features, double h, double grade);

/// For two overlays of the same layer: to_dof -> from_dof matching geometric
/// node and crack side (origin sectors matched by inclusion). Used to carry
/// fields between the Gamma_0 and Gamma_eps overlays.
std::vector<int> overlay_map(const CrackMesh& from, const CrackMesh& to);

/// Ordered dof indices along one side of a crack with arc-length trapezoid
/// weights. `portion` selects the tip segment S (0..tip) or the whole
/// polyline Gamma (boundary..tip, via the origin).
enum class TracePortion { Segment, Full };
struct TraceMap {
  std::vector<int> dofs;
  std::vector<double> params;    // signed parameter t along a_j (arc length from 0)
  std::vector<double> weights;   // composite trapezoid, sum = polyline length
};
TraceMap trace_dofs(const CrackMesh& mesh, std::size_t crack, int side, TracePortion portion);

/// V - E + F of the dof mesh (the cut surface).
int euler_characteristic(const CrackMesh& mesh);

/// Number of connected components of Omega cut along the active cracks.
int component_count(const CrackMesh& mesh);

}  // namespace abc
