#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <unordered_set>
#include <vector>

#include "dritz/core.hpp"

namespace dritz {

// ---------------------------------------------------------------------------
// Cell ids: 64-bit path-encoded quadtree keys.
// Layout: [root index : 24][depth : 6][child path : 34], two bits per level
// (bit0 = x half, bit1 = y half). Root index is j*nx + i on the initial grid.
// ---------------------------------------------------------------------------

using CellId = std::uint64_t;

inline constexpr int kMaxDepth = 17;

inline CellId make_root_id(std::uint64_t root) { return root << 40; }

inline std::uint64_t id_root(CellId id) { return id >> 40; }
inline int id_depth(CellId id) { return static_cast<int>((id >> 34) & 0x3f); }
inline std::uint64_t id_path(CellId id) { return id & 0x3ffffffffull; }

inline CellId child_id(CellId parent, int quadrant) {
  const int d = id_depth(parent);
  const std::uint64_t path = id_path(parent) | (std::uint64_t(quadrant) << (2 * d));
  return (id_root(parent) << 40) | (std::uint64_t(d + 1) << 34) | path;
}

// True when the cell sits flush against its root cell's face in the given
// axis/direction (all path bits on that axis equal `bit`).
inline bool path_on_face(CellId id, int axis, int bit) {
  const int d = id_depth(id);
  const std::uint64_t path = id_path(id);
  for (int t = 0; t < d; ++t) {
    if (((path >> (2 * t + axis)) & 1ull) != std::uint64_t(bit)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Boundary segments: connected pieces of Gamma_D / Gamma_N with an arc-length
// chart s -> x. Straight polyline pieces and circular arcs (centered at the
// origin) cover the three benchmark geometries.
// ---------------------------------------------------------------------------

enum class BcType { Dirichlet, Neumann };

struct SegmentPiece {
  enum Kind { Line, Arc } kind = Line;
  double s0 = 0.0, s1 = 0.0;
  Vec2 p0 = Vec2::Zero(), p1 = Vec2::Zero();  // line endpoints
  Vec2 normal = Vec2::Zero();                 // line outward normal
  double radius = 0.0;                        // arc radius
  double th0 = 0.0, th1 = 0.0;                // arc angle range
  double arc_sign = 1.0;                      // +1 outward normal = radial, -1 = inward
};

struct Segment {
  int id = 0;
  BcType type = BcType::Dirichlet;
  bool closed = false;
  double length = 0.0;
  std::array<bool, 2> mask{true, true};  // constrained components (Dirichlet only)
  std::vector<SegmentPiece> pieces;

  const SegmentPiece& piece_at(double s) const {
    for (const auto& p : pieces) {
      if (s <= p.s1 || &p == &pieces.back()) return p;
    }
    return pieces.back();
  }

  Vec2 point(double s) const {
    const SegmentPiece& p = piece_at(s);
    const double t = (s - p.s0) / (p.s1 - p.s0);
    if (p.kind == SegmentPiece::Line) return p.p0 + t * (p.p1 - p.p0);
    const double th = p.th0 + t * (p.th1 - p.th0);
    return p.radius * Vec2(std::cos(th), std::sin(th));
  }

  Vec2 outward_normal(double s) const {
    const SegmentPiece& p = piece_at(s);
    if (p.kind == SegmentPiece::Line) return p.normal;
    const double t = (s - p.s0) / (p.s1 - p.s0);
    const double th = p.th0 + t * (p.th1 - p.th0);
    return p.arc_sign * Vec2(std::cos(th), std::sin(th));
  }

  // Geodesic distance along the segment (wraps around on closed loops).
  double geodesic(double sa, double sb) const {
    const double d = std::abs(sa - sb);
    return closed ? std::min(d, length - d) : d;
  }
};

// ---------------------------------------------------------------------------
// Domain geometry: chart rectangle plus the chart -> physical map. Rectangle
// and L-shape use the identity chart; the quarter annulus uses (r, theta).
// ---------------------------------------------------------------------------

enum class GeometryKind { Rectangle, LShape, QuarterAnnulus };

struct FaceGeom {
  Vec2 midpoint = Vec2::Zero();  // physical
  double length = 0.0;           // physical
  Vec2 normal = Vec2::Zero();    // physical outward unit normal
};

struct Domain {
  GeometryKind kind = GeometryKind::Rectangle;
  Vec2 chart_lo = Vec2(-1.0, -1.0);
  Vec2 chart_hi = Vec2(1.0, 1.0);
  bool right_neumann = false;  // rectangle: +x side is Gamma_N
  double r_in = 1.0, r_out = 10.0;
  std::vector<Segment> segments;

  static Domain rectangle(const Vec2& lo, const Vec2& hi, bool right_is_neumann) {
    Domain d;
    d.kind = GeometryKind::Rectangle;
    d.chart_lo = lo;
    d.chart_hi = hi;
    d.right_neumann = right_is_neumann;
    const double w = hi.x() - lo.x();
    const double h = hi.y() - lo.y();
    if (right_is_neumann) {
      Segment gn;
      gn.id = 0;
      gn.type = BcType::Neumann;
      gn.length = h;
      gn.pieces = {line_piece(0.0, h, {hi.x(), lo.y()}, {hi.x(), hi.y()}, {1.0, 0.0})};
      Segment gd;
      gd.id = 1;
      gd.type = BcType::Dirichlet;
      gd.length = 2.0 * w + h;  // top + left + bottom, one connected piece
      gd.pieces = {line_piece(0.0, w, {hi.x(), hi.y()}, {lo.x(), hi.y()}, {0.0, 1.0}),
                   line_piece(w, w + h, {lo.x(), hi.y()}, {lo.x(), lo.y()}, {-1.0, 0.0}),
                   line_piece(w + h, 2.0 * w + h, {lo.x(), lo.y()}, {hi.x(), lo.y()}, {0.0, -1.0})};
      d.segments = {gn, gd};
    } else {
      Segment gd;
      gd.id = 0;
      gd.type = BcType::Dirichlet;
      gd.closed = true;
      gd.length = 2.0 * (w + h);
      gd.pieces = {line_piece(0.0, w, {lo.x(), lo.y()}, {hi.x(), lo.y()}, {0.0, -1.0}),
                   line_piece(w, w + h, {hi.x(), lo.y()}, {hi.x(), hi.y()}, {1.0, 0.0}),
                   line_piece(w + h, 2.0 * w + h, {hi.x(), hi.y()}, {lo.x(), hi.y()}, {0.0, 1.0}),
                   line_piece(2.0 * w + h, 2.0 * (w + h), {lo.x(), hi.y()}, {lo.x(), lo.y()},
                              {-1.0, 0.0})};
      d.segments = {gd};
    }
    return d;
  }

  // (-1,1)^2 minus [0,1]x[-1,0]; Gamma_N = {1} x (0,1).
  static Domain lshape() {
    Domain d;
    d.kind = GeometryKind::LShape;
    d.chart_lo = Vec2(-1.0, -1.0);
    d.chart_hi = Vec2(1.0, 1.0);
    Segment gn;
    gn.id = 0;
    gn.type = BcType::Neumann;
    gn.length = 1.0;
    gn.pieces = {line_piece(0.0, 1.0, {1.0, 0.0}, {1.0, 1.0}, {1.0, 0.0})};
    Segment gd;
    gd.id = 1;
    gd.type = BcType::Dirichlet;
    gd.length = 7.0;
    gd.pieces = {line_piece(0.0, 2.0, {1.0, 1.0}, {-1.0, 1.0}, {0.0, 1.0}),
                 line_piece(2.0, 4.0, {-1.0, 1.0}, {-1.0, -1.0}, {-1.0, 0.0}),
                 line_piece(4.0, 5.0, {-1.0, -1.0}, {0.0, -1.0}, {0.0, -1.0}),
                 line_piece(5.0, 6.0, {0.0, -1.0}, {0.0, 0.0}, {1.0, 0.0}),
                 line_piece(6.0, 7.0, {0.0, 0.0}, {1.0, 0.0}, {0.0, -1.0})};
    d.segments = {gn, gd};
    return d;
  }

  // Quarter annulus r in [r_in, r_out], theta in [0, pi/2], chart = (r, theta).
  // Segment ids: 0 = bottom radial (u_y = 0), 1 = left radial (u_x = 0),
  // 2 = hole arc (traction free), 3 = outer arc (loaded/traction free).
  static Domain quarter_annulus(double r_in, double r_out) {
    Domain d;
    d.kind = GeometryKind::QuarterAnnulus;
    d.r_in = r_in;
    d.r_out = r_out;
    d.chart_lo = Vec2(r_in, 0.0);
    d.chart_hi = Vec2(r_out, kPi / 2.0);
    const double dr = r_out - r_in;
    Segment bottom;
    bottom.id = 0;
    bottom.type = BcType::Dirichlet;
    bottom.mask = {false, true};
    bottom.length = dr;
    bottom.pieces = {line_piece(0.0, dr, {r_in, 0.0}, {r_out, 0.0}, {0.0, -1.0})};
    Segment left;
    left.id = 1;
    left.type = BcType::Dirichlet;
    left.mask = {true, false};
    left.length = dr;
    left.pieces = {line_piece(0.0, dr, {0.0, r_in}, {0.0, r_out}, {-1.0, 0.0})};
    Segment hole;
    hole.id = 2;
    hole.type = BcType::Neumann;
    hole.length = r_in * kPi / 2.0;
    hole.pieces = {arc_piece(0.0, hole.length, r_in, 0.0, kPi / 2.0, -1.0)};
    Segment outer;
    outer.id = 3;
    outer.type = BcType::Neumann;
    outer.length = r_out * kPi / 2.0;
    outer.pieces = {arc_piece(0.0, outer.length, r_out, 0.0, kPi / 2.0, +1.0)};
    d.segments = {bottom, left, hole, outer};
    return d;
  }

  Vec2 map(const Vec2& chart) const {
    if (kind == GeometryKind::QuarterAnnulus) {
      return chart.x() * Vec2(std::cos(chart.y()), std::sin(chart.y()));
    }
    return chart;
  }

  double cell_measure(const Vec2& lo, const Vec2& size) const {
    if (kind == GeometryKind::QuarterAnnulus) {
      // mapped area of the chart box: 1/2 (r2^2 - r1^2) * dtheta
      return (lo.x() + 0.5 * size.x()) * size.x() * size.y();
    }
    return size.x() * size.y();
  }

  Vec2 cell_centroid(const Vec2& lo, const Vec2& size) const { return map(lo + 0.5 * size); }

  double total_measure() const {
    if (kind == GeometryKind::QuarterAnnulus) return kPi * (r_out * r_out - r_in * r_in) / 4.0;
    const Vec2 ext = chart_hi - chart_lo;
    const double box = ext.x() * ext.y();
    return kind == GeometryKind::LShape ? 0.75 * box : box;
  }

  bool contains(const Vec2& x) const {
    switch (kind) {
      case GeometryKind::Rectangle:
        return x.x() >= chart_lo.x() && x.x() <= chart_hi.x() && x.y() >= chart_lo.y() &&
               x.y() <= chart_hi.y();
      case GeometryKind::LShape:
        if (x.x() < -1.0 || x.x() > 1.0 || x.y() < -1.0 || x.y() > 1.0) return false;
        return !(x.x() > 0.0 && x.y() < 0.0);
      case GeometryKind::QuarterAnnulus: {
        if (x.x() < 0.0 || x.y() < 0.0) return false;
        const double r = x.norm();
        return r >= r_in && r <= r_out;
      }
    }
    return false;
  }

  // Physical geometry of one cell face (0:-x, 1:+x, 2:-y, 3:+y in the chart),
  // used by the residual indicator's boundary-flux quadrature.
  FaceGeom face_geom(const Vec2& lo, const Vec2& size, int face) const {
    FaceGeom g;
    if (kind != GeometryKind::QuarterAnnulus) {
      switch (face) {
        case 0:
          g = {Vec2(lo.x(), lo.y() + 0.5 * size.y()), size.y(), Vec2(-1.0, 0.0)};
          break;
        case 1:
          g = {Vec2(lo.x() + size.x(), lo.y() + 0.5 * size.y()), size.y(), Vec2(1.0, 0.0)};
          break;
        case 2:
          g = {Vec2(lo.x() + 0.5 * size.x(), lo.y()), size.x(), Vec2(0.0, -1.0)};
          break;
        default:
          g = {Vec2(lo.x() + 0.5 * size.x(), lo.y() + size.y()), size.x(), Vec2(0.0, 1.0)};
          break;
      }
      return g;
    }
    const double r0 = lo.x(), r1 = lo.x() + size.x();
    const double t0 = lo.y(), t1 = lo.y() + size.y();
    const double rm = 0.5 * (r0 + r1), tm = 0.5 * (t0 + t1);
    const auto radial = [](double th) { return Vec2(std::cos(th), std::sin(th)); };
    const auto angular = [](double th) { return Vec2(-std::sin(th), std::cos(th)); };
    switch (face) {
      case 0:
        return {map({r0, tm}), r0 * size.y(), -radial(tm)};
      case 1:
        return {map({r1, tm}), r1 * size.y(), radial(tm)};
      case 2:
        return {map({rm, t0}), size.x(), -angular(t0)};
      default:
        return {map({rm, t1}), size.x(), angular(t1)};
    }
  }

 private:
  static SegmentPiece line_piece(double s0, double s1, const Vec2& p0, const Vec2& p1,
                                 const Vec2& n) {
    SegmentPiece p;
    p.kind = SegmentPiece::Line;
    p.s0 = s0;
    p.s1 = s1;
    p.p0 = p0;
    p.p1 = p1;
    p.normal = n;
    return p;
  }

  static SegmentPiece arc_piece(double s0, double s1, double radius, double th0, double th1,
                                double sign) {
    SegmentPiece p;
    p.kind = SegmentPiece::Arc;
    p.s0 = s0;
    p.s1 = s1;
    p.radius = radius;
    p.th0 = th0;
    p.th1 = th1;
    p.arc_sign = sign;
    return p;
  }
};

// ---------------------------------------------------------------------------
// Mesh
// ---------------------------------------------------------------------------

struct Cell {
  CellId id = 0;
  Vec2 lo = Vec2::Zero();    // chart coordinates
  Vec2 size = Vec2::Zero();  // chart coordinates
  int depth = 0;
  bool active = true;
};

struct BoundaryEdge {
  int segment = 0;
  double s0 = 0.0, s1 = 0.0;     // arc-length range within the segment
  double measure = 0.0;          // |E| = s1 - s0 (physical length)
  Vec2 centroid = Vec2::Zero();  // physical
  Vec2 normal = Vec2::Zero();    // physical outward unit normal
  Vec2 p0 = Vec2::Zero(), p1 = Vec2::Zero();  // physical endpoints

  double s_mid() const { return 0.5 * (s0 + s1); }
};

class QuadMesh {
 public:
  Domain domain;
  int nx = 0, ny = 0;        // root grid resolution
  std::vector<Cell> cells;   // active cells, sorted by id
  std::vector<std::vector<BoundaryEdge>> edges;  // indexed by segment id

  const Segment& segment(int id) const { return domain.segments.at(id); }

  double total_measure() const {
    double m = 0.0;
    for (const auto& c : cells) m += domain.cell_measure(c.lo, c.size);
    return m;
  }

  double cell_measure(const Cell& c) const { return domain.cell_measure(c.lo, c.size); }
  Vec2 cell_centroid(const Cell& c) const { return domain.cell_centroid(c.lo, c.size); }

  std::size_t edge_count(BcType type) const {
    std::size_t n = 0;
    for (const auto& seg : domain.segments) {
      if (seg.type == type) n += edges[seg.id].size();
    }
    return n;
  }

  void rebuild_edges() {
    edges.assign(domain.segments.size(), {});
    for (const auto& c : cells) {
      for (int face = 0; face < 4; ++face) {
        auto hit = classify_face(c, face);
        if (!hit) continue;
        edges[hit->first].push_back(make_edge(c, face, hit->first, hit->second));
      }
    }
    for (auto& group : edges) {
      std::sort(group.begin(), group.end(),
                [](const BoundaryEdge& a, const BoundaryEdge& b) { return a.s0 < b.s0; });
    }
  }

 private:
  // Face membership on the chart boundary is decided in integer quadtree
  // coordinates, so refinement can never leak or duplicate boundary edges.
  std::optional<std::pair<int, int>> classify_face(const Cell& c, int face) const {
    const std::uint64_t root = id_root(c.id);
    const int i = static_cast<int>(root % std::uint64_t(nx));
    const int j = static_cast<int>(root / std::uint64_t(nx));
    const bool on_left = face == 0 && i == 0 && path_on_face(c.id, 0, 0);
    const bool on_right = face == 1 && i == nx - 1 && path_on_face(c.id, 0, 1);
    const bool on_bottom = face == 2 && j == 0 && path_on_face(c.id, 1, 0);
    const bool on_top = face == 3 && j == ny - 1 && path_on_face(c.id, 1, 1);

    switch (domain.kind) {
      case GeometryKind::Rectangle: {
        if (domain.right_neumann) {
          if (on_right) return std::pair{0, face};
          if (on_left || on_bottom || on_top) return std::pair{1, face};
        } else if (on_left || on_right || on_bottom || on_top) {
          return std::pair{0, face};
        }
        return std::nullopt;
      }
      case GeometryKind::LShape: {
        if (on_right) return std::pair{0, face};  // x = 1 exists only for y > 0
        if (on_left || on_top || on_bottom) return std::pair{1, face};
        // faces on the re-entrant cut
        const bool cut_right = face == 1 && i == nx / 2 - 1 && j <= ny / 2 - 1 &&
                               path_on_face(c.id, 0, 1);
        const bool cut_bottom = face == 2 && j == ny / 2 && i >= nx / 2 &&
                                path_on_face(c.id, 1, 0);
        if (cut_right || cut_bottom) return std::pair{1, face};
        return std::nullopt;
      }
      case GeometryKind::QuarterAnnulus: {
        if (on_bottom) return std::pair{0, face};
        if (on_top) return std::pair{1, face};
        if (on_left) return std::pair{2, face};
        if (on_right) return std::pair{3, face};
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  BoundaryEdge make_edge(const Cell& c, int face, int seg_id, int /*face_dup*/) const {
    const Segment& seg = segment(seg_id);
    BoundaryEdge e;
    e.segment = seg_id;
    auto range = face_arc_range(c, face, seg_id);
    e.s0 = range.first;
    e.s1 = range.second;
    e.measure = e.s1 - e.s0;
    e.centroid = seg.point(e.s_mid());
    e.normal = seg.outward_normal(e.s_mid());
    e.p0 = seg.point(e.s0);
    e.p1 = seg.point(e.s1);
    return e;
  }

  // Arc-length range of a boundary face within its segment's chart.
  std::pair<double, double> face_arc_range(const Cell& c, int face, int seg_id) const {
    const double x0 = c.lo.x(), x1 = c.lo.x() + c.size.x();
    const double y0 = c.lo.y(), y1 = c.lo.y() + c.size.y();
    switch (domain.kind) {
      case GeometryKind::Rectangle: {
        const Vec2 lo = domain.chart_lo, hi = domain.chart_hi;
        const double w = hi.x() - lo.x(), h = hi.y() - lo.y();
        if (domain.right_neumann) {
          if (seg_id == 0) return {y0 - lo.y(), y1 - lo.y()};
          switch (face) {
            case 3:  // top, s = hi.x - x
              return {hi.x() - x1, hi.x() - x0};
            case 0:  // left, s = w + (hi.y - y)
              return {w + (hi.y() - y1), w + (hi.y() - y0)};
            default:  // bottom, s = w + h + (x - lo.x)
              return {w + h + (x0 - lo.x()), w + h + (x1 - lo.x())};
          }
        }
        switch (face) {
          case 2:  // bottom, s = x - lo.x
            return {x0 - lo.x(), x1 - lo.x()};
          case 1:  // right
            return {w + (y0 - lo.y()), w + (y1 - lo.y())};
          case 3:  // top, s = w + h + (hi.x - x)
            return {w + h + (hi.x() - x1), w + h + (hi.x() - x0)};
          default:  // left, s = 2w + h + (hi.y - y)
            return {2.0 * w + h + (hi.y() - y1), 2.0 * w + h + (hi.y() - y0)};
        }
      }
      case GeometryKind::LShape: {
        if (seg_id == 0) return {y0, y1};  // Gamma_N: {1} x (0,1), s = y
        if (face == 3) return {1.0 - x1, 1.0 - x0};                // top
        if (face == 0) return {2.0 + (1.0 - y1), 2.0 + (1.0 - y0)};  // left
        if (face == 2 && j_below_cut(c)) return {4.0 + (x0 + 1.0), 4.0 + (x1 + 1.0)};  // bottom
        if (face == 1) return {5.0 + (y0 + 1.0), 5.0 + (y1 + 1.0)};  // cut right
        return {6.0 + x0, 6.0 + x1};                                 // cut bottom
      }
      case GeometryKind::QuarterAnnulus: {
        switch (seg_id) {
          case 0:
            return {x0 - domain.r_in, x1 - domain.r_in};  // theta = 0, s = r - r_in
          case 1:
            return {x0 - domain.r_in, x1 - domain.r_in};  // theta = pi/2
          case 2:
            return {domain.r_in * y0, domain.r_in * y1};  // hole arc, s = r_in * theta
          default:
            return {domain.r_out * y0, domain.r_out * y1};  // outer arc
        }
      }
    }
    return {0.0, 0.0};
  }

  bool j_below_cut(const Cell& c) const {
    const std::uint64_t root = id_root(c.id);
    const int j = static_cast<int>(root / std::uint64_t(nx));
    return j == 0;
  }
};

// ---------------------------------------------------------------------------
// Construction and refinement
// ---------------------------------------------------------------------------

inline QuadMesh build_uniform(const Domain& domain, int nx, int ny) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("build_uniform: nx and ny must be >= 1");
  if (domain.kind == GeometryKind::LShape && (nx % 2 != 0 || ny % 2 != 0)) {
    throw std::invalid_argument(
        "build_uniform: L-shape grid must align with the re-entrant corner (nx, ny even)");
  }
  QuadMesh mesh;
  mesh.domain = domain;
  mesh.nx = nx;
  mesh.ny = ny;
  const auto grid = [](double lo, double hi, int n, int i) {
    return i == 0 ? lo : (i == n ? hi : lo + (hi - lo) * (double(i) / double(n)));
  };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (domain.kind == GeometryKind::LShape && i >= nx / 2 && j < ny / 2) continue;
      Cell c;
      c.id = make_root_id(std::uint64_t(j) * nx + i);
      const double x0 = grid(domain.chart_lo.x(), domain.chart_hi.x(), nx, i);
      const double x1 = grid(domain.chart_lo.x(), domain.chart_hi.x(), nx, i + 1);
      const double y0 = grid(domain.chart_lo.y(), domain.chart_hi.y(), ny, j);
      const double y1 = grid(domain.chart_lo.y(), domain.chart_hi.y(), ny, j + 1);
      c.lo = Vec2(x0, y0);
      c.size = Vec2(x1 - x0, y1 - y0);
      c.depth = 0;
      mesh.cells.push_back(c);
    }
  }
  std::sort(mesh.cells.begin(), mesh.cells.end(),
            [](const Cell& a, const Cell& b) { return a.id < b.id; });
  mesh.rebuild_edges();
  return mesh;
}

// Replaces every marked cell by its 2^d = 4 congruent children. Returns a new
// mesh; the input is untouched.
inline QuadMesh refine(const QuadMesh& mesh, const std::vector<CellId>& marked) {
  std::unordered_set<CellId> mark(marked.begin(), marked.end());
  if (mark.size() != marked.size()) throw std::invalid_argument("refine: duplicate cell ids");
  std::unordered_set<CellId> present;
  present.reserve(mesh.cells.size());
  for (const auto& c : mesh.cells) present.insert(c.id);
  for (CellId id : marked) {
    if (!present.count(id)) throw std::invalid_argument("refine: stale cell id");
  }

  QuadMesh out;
  out.domain = mesh.domain;
  out.nx = mesh.nx;
  out.ny = mesh.ny;
  out.cells.reserve(mesh.cells.size() + 3 * mark.size());
  for (const auto& c : mesh.cells) {
    if (!mark.count(c.id)) {
      out.cells.push_back(c);
      continue;
    }
    if (c.depth + 1 > kMaxDepth) throw std::invalid_argument("refine: maximum depth exceeded");
    const Vec2 half = 0.5 * c.size;
    for (int q = 0; q < 4; ++q) {
      Cell child;
      child.id = child_id(c.id, q);
      child.lo = c.lo + Vec2((q & 1) ? half.x() : 0.0, (q & 2) ? half.y() : 0.0);
      child.size = half;
      child.depth = c.depth + 1;
      out.cells.push_back(child);
    }
  }
  std::sort(out.cells.begin(), out.cells.end(),
            [](const Cell& a, const Cell& b) { return a.id < b.id; });
  out.rebuild_edges();
  return out;
}

// h = min over active cells of |T|^(1/d), d = 2; the global ND step is h/4.
inline double min_cell_size(const QuadMesh& mesh) {
  if (mesh.cells.empty()) throw std::invalid_argument("min_cell_size: empty mesh");
  double h = std::numeric_limits<double>::infinity();
  for (const auto& c : mesh.cells) h = std::min(h, std::sqrt(mesh.cell_measure(c)));
  return h;
}

inline void export_cells_csv(const QuadMesh& mesh, std::ostream& os) {
  os << "id,cx,cy,measure,depth\n";
  for (const auto& c : mesh.cells) {
    const Vec2 x = mesh.cell_centroid(c);
    os << c.id << ',' << x.x() << ',' << x.y() << ',' << mesh.cell_measure(c) << ',' << c.depth
       << '\n';
  }
}

inline void export_edges_csv(const QuadMesh& mesh, std::ostream& os) {
  os << "segment,cx,cy,measure,nx,ny\n";
  for (const auto& group : mesh.edges) {
    for (const auto& e : group) {
      os << e.segment << ',' << e.centroid.x() << ',' << e.centroid.y() << ',' << e.measure << ','
         << e.normal.x() << ',' << e.normal.y() << '\n';
    }
  }
}

}  // namespace dritz
