#pragma once
/**
 * Almost toric base diagrams: a moment polygon with rational facet data,
 * branch cuts carrying focus-focus nodes, and a marked monotone fiber.
 * Provides validation, the dual polytope of facet normals, the four diagram
 * surgeries (cut transfer, nodal trade, nodal slide, mutation), toric
 * potentials, JSON (de)serialization, and a built-in validated catalog of
 * del Pezzo diagrams, T-wedge families and the spherical-pendulum wedge.
 */

#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trop/laurent.hpp"

namespace trop {

/**
 * A branch cut: a ray from a polygon vertex into the interior carrying one or
 * more focus-focus node positions.  Node parameters are fractions of the
 * cut's reference length (distance to the marked fiber when the cut aims at
 * it, else distance to the far boundary), strictly increasing, in (0,1].
 */
struct BranchCut {
  std::size_t vertex_index = 0;
  Vec direction;           // primitive, pointing from the vertex inward
  std::vector<Rat> nodes;  // parameters t placing nodes at vertex + t*scale*dir
};

/**
 * A base diagram.  For bounded diagrams, facets.size() == polygon.size() and
 * facet i spans polygon edge i (vertex i to vertex i+1).  For unbounded
 * wedges, the polygon is an open polyline [far, apex, far'] and
 * facets.size() == polygon.size() - 1 (no closing edge).
 */
struct BaseDiagram {
  struct Facet {
    Vec normal;  // primitive outward normal
    Rat level;   // <normal, x> on the facet
  };

  std::string name;
  Polygon polygon;
  std::vector<Facet> facets;
  std::vector<BranchCut> cuts;
  QVec fiber;     // the marked monotone fiber position
  Rat scale = 1;  // monotonicity constant: level_i - <normal_i, fiber> for all i
  std::vector<std::size_t> elliptic_vertices;  // vertices without cuts
  bool unbounded = false;
  std::vector<std::string> moves;  // construction history, newest last

  std::size_t facet_count() const { return facets.size(); }

  /** Interior/boundary test by facet half-planes (valid for convex shapes,
   *  bounded or wedge).  1 inside, 0 on boundary, -1 outside. */
  int side(const QVec& p) const {
    bool boundary = false;
    for (const auto& f : facets) {
      Rat v = Rat(f.normal.x) * p.x + Rat(f.normal.y) * p.y;
      if (v > f.level) return -1;
      if (v == f.level) boundary = true;
    }
    return boundary ? 0 : 1;
  }
};

/** Outward primitive normal of a CCW boundary edge direction. */
inline Vec outward_normal(Vec edge_dir) {
  return -perp(primitive_and_length(edge_dir).first);
}

/**
 * Reference length of a cut: the ray parameter of the marked fiber when the
 * cut points straight at it, else the parameter where the ray leaves the
 * diagram (1 if it never does).
 */
inline Rat cut_scale(const BaseDiagram& d, const BranchCut& c) {
  QVec v = d.polygon.vertex(c.vertex_index);
  QVec to_fiber = d.fiber - v;
  QVec dir = to_q(c.direction);
  if (det2q(to_fiber, dir) == 0) {
    // Colinear; use the fiber's parameter if it lies forward along the ray.
    Rat s = (dir.x != 0) ? to_fiber.x / dir.x : to_fiber.y / dir.y;
    if (s > 0) return s;
  }
  Rat best = 0;
  bool found = false;
  for (const auto& f : d.facets) {
    Rat denom = Rat(f.normal.x) * dir.x + Rat(f.normal.y) * dir.y;
    if (denom <= 0) continue;  // parallel or moving away from this facet
    Rat s = (f.level - (Rat(f.normal.x) * v.x + Rat(f.normal.y) * v.y)) / denom;
    if (s > 0 && (!found || s < best)) { best = s; found = true; }
  }
  return found ? best : Rat(1);
}

/** Position of node j on cut c. */
inline QVec node_position(const BaseDiagram& d, const BranchCut& c, std::size_t j) {
  Rat s = cut_scale(d, c) * c.nodes.at(j);
  return d.polygon.vertex(c.vertex_index) + s * to_q(c.direction);
}

namespace detail {

/** Exact intersection test of two closed segments (proper or touching). */
inline bool segments_intersect(const QVec& a0, const QVec& a1, const QVec& b0,
                               const QVec& b1) {
  auto orient = [](const QVec& p, const QVec& q, const QVec& r) {
    Rat v = det2q(q - p, r - p);
    return v > 0 ? 1 : (v < 0 ? -1 : 0);
  };
  int o1 = orient(a0, a1, b0), o2 = orient(a0, a1, b1);
  int o3 = orient(b0, b1, a0), o4 = orient(b0, b1, a1);
  if (o1 != o2 && o3 != o4) return true;
  auto on_seg = [](const QVec& p, const QVec& q, const QVec& r) {
    return det2q(q - p, r - p) == 0 && std::min(p.x, q.x) <= r.x &&
           r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  return (o1 == 0 && on_seg(a0, a1, b0)) || (o2 == 0 && on_seg(a0, a1, b1)) ||
         (o3 == 0 && on_seg(b0, b1, a0)) || (o4 == 0 && on_seg(b0, b1, a1));
}

/** Endpoints of the cut segment: polygon vertex to innermost node. */
inline std::pair<QVec, QVec> cut_segment(const BaseDiagram& d, const BranchCut& c) {
  return {d.polygon.vertex(c.vertex_index), node_position(d, c, c.nodes.size() - 1)};
}

}  // namespace detail

/**
 * Structural validation.  Returns a human-readable list of violations; empty
 * means the diagram satisfies every invariant.
 */
inline std::vector<std::string> validate(const BaseDiagram& d) {
  std::vector<std::string> bad;
  std::size_t nv = d.polygon.size();
  std::size_t nf = d.unbounded ? nv - 1 : nv;
  if (nv < (d.unbounded ? 3u : 3u)) { bad.push_back("too few vertices"); return bad; }
  if (d.facets.size() != nf) { bad.push_back("facet count mismatch"); return bad; }
  if (!d.unbounded && !d.polygon.is_convex_ccw()) bad.push_back("polygon not convex CCW");

  // Facet normals: primitive, outward, constant level along the edge.
  for (std::size_t i = 0; i < nf; ++i) {
    const Vec n = d.facets[i].normal;
    if (!is_primitive(n)) bad.push_back("facet normal not primitive");
    QVec e = d.polygon.vertex(i + 1) - d.polygon.vertex(i);
    if (Rat(n.x) * e.x + Rat(n.y) * e.y != 0) bad.push_back("normal not orthogonal to edge");
    // Outward for CCW order: the edge runs with the interior on its left.
    if (det2q(to_q(n), e) <= 0) bad.push_back("facet normal not outward");
    QVec v = d.polygon.vertex(i);
    if (Rat(n.x) * v.x + Rat(n.y) * v.y != d.facets[i].level)
      bad.push_back("facet level inconsistent");
    if (d.facets[i].level - (Rat(n.x) * d.fiber.x + Rat(n.y) * d.fiber.y) != d.scale)
      bad.push_back("monotonicity violated at a facet");
  }
  if (d.scale <= 0) bad.push_back("scale not positive");
  if (d.side(d.fiber) != 1) bad.push_back("fiber not interior");

  // Cuts.
  for (const auto& c : d.cuts) {
    if (c.vertex_index >= nv) { bad.push_back("cut vertex index out of range"); continue; }
    if (d.unbounded && (c.vertex_index == 0 || c.vertex_index + 1 == nv))
      bad.push_back("cut based at a truncation point");
    if (!is_primitive(c.direction)) bad.push_back("cut direction not primitive");
    if (c.nodes.empty()) { bad.push_back("cut without nodes"); continue; }
    Rat prev = 0;
    for (const Rat& t : c.nodes) {
      if (!(t > prev)) bad.push_back("cut node parameters not strictly increasing");
      if (t > 1) bad.push_back("cut node parameter above 1");
      prev = t;
    }
    for (std::size_t j = 0; j < c.nodes.size(); ++j) {
      QVec p = node_position(d, c, j);
      if (d.side(p) != 1) bad.push_back("cut node not interior");
      if (p == d.fiber) bad.push_back("fiber on branch cut");
    }
    auto [s0, s1] = detail::cut_segment(d, c);
    if (detail::segments_intersect(s0, s1, d.fiber, d.fiber))
      bad.push_back("fiber on branch cut");
  }
  for (std::size_t i = 0; i < d.cuts.size(); ++i)
    for (std::size_t j = i + 1; j < d.cuts.size(); ++j) {
      if (d.cuts[i].vertex_index == d.cuts[j].vertex_index)
        bad.push_back("two cuts at one vertex");
      auto [a0, a1] = detail::cut_segment(d, d.cuts[i]);
      auto [b0, b1] = detail::cut_segment(d, d.cuts[j]);
      if (detail::segments_intersect(a0, a1, b0, b1)) bad.push_back("cuts intersect");
    }

  // Affine consistency at cut vertices: the transpose of the shear matrix
  // along the cut direction, with power +-(node count), carries one adjacent
  // facet normal to the other.
  for (const auto& c : d.cuts) {
    if (c.vertex_index >= nv || !is_primitive(c.direction) || c.nodes.empty()) continue;
    std::size_t i = c.vertex_index;
    if (d.unbounded && (i == 0 || i + 1 == nv)) continue;
    Vec n_prev = d.facets[(i + nf - 1) % nf].normal;
    Vec n_next = d.facets[i % nf].normal;
    Int m = static_cast<Int>(c.nodes.size());
    bool ok = false;
    for (Int k : {m, -m}) {
      Mat2 st = shear_matrix(c.direction, k).transpose();
      if (st.apply(n_prev) == n_next || st.apply(n_next) == n_prev) ok = true;
    }
    if (!ok) bad.push_back("cut shear does not relate adjacent facet normals");
  }

  // Elliptic vertex list == vertices without cuts (truncation points excluded).
  {
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < nv; ++i) {
      if (d.unbounded && (i == 0 || i + 1 == nv)) continue;
      bool has_cut = false;
      for (const auto& c : d.cuts) has_cut = has_cut || c.vertex_index == i;
      if (!has_cut) expect.push_back(i);
    }
    if (expect != d.elliptic_vertices) bad.push_back("elliptic vertex list inconsistent");
  }
  return bad;
}

/** Euclidean lattice volume of the moment polygon and the inferred degree
 *  2*Vol/scale^2.  Errors on unbounded diagrams. */
inline std::pair<Rat, Rat> volume_degree_check(const BaseDiagram& d) {
  if (d.unbounded)
    throw std::invalid_argument("volume_degree_check: unbounded diagram");
  Rat vol = d.polygon.area();
  return {vol, 2 * vol / (d.scale * d.scale)};
}

/** Convex hull of the facet normals (the Newton polygon of the potential). */
inline Polygon dual_polytope(const BaseDiagram& d) {
  std::vector<Vec> pts;
  for (const auto& f : d.facets) pts.push_back(f.normal);
  return convex_hull(std::move(pts));
}

/** Hori-Vafa sum over facet normals; only defined without cuts. */
inline Laurent toric_potential(const BaseDiagram& d) {
  if (!d.cuts.empty())
    throw std::invalid_argument("toric_potential: diagram has cuts");
  Laurent w;
  for (const auto& f : d.facets) w = w + Laurent::monomial(1, f.normal);
  return w;
}

namespace detail {

/** Rebuild facet levels/normals and the elliptic list from polygon + cuts. */
inline void refresh_derived(BaseDiagram& d) {
  std::size_t nf = d.unbounded ? d.polygon.size() - 1 : d.polygon.size();
  d.facets.resize(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    QVec e = d.polygon.vertex(i + 1) - d.polygon.vertex(i);
    // Edge endpoints are rational; pick the primitive integral direction.
    Rat sc = 1;
    BigInt dx = denominator(e.x), dy = denominator(e.y);
    sc = Rat(dx * dy);
    Vec ev{static_cast<Int>(numerator(Rat(e.x * sc))), static_cast<Int>(numerator(Rat(e.y * sc)))};
    Vec n = outward_normal(ev);
    d.facets[i].normal = n;
    QVec v = d.polygon.vertex(i);
    d.facets[i].level = Rat(n.x) * v.x + Rat(n.y) * v.y;
  }
  d.elliptic_vertices.clear();
  for (std::size_t i = 0; i < d.polygon.size(); ++i) {
    if (d.unbounded && (i == 0 || i + 1 == d.polygon.size())) continue;
    bool has_cut = false;
    for (const auto& c : d.cuts) has_cut = has_cut || c.vertex_index == i;
    if (!has_cut) d.elliptic_vertices.push_back(i);
  }
}

/** Default node parameters for an m-node cut: (j+1)/(2m), j = 0..m-1. */
inline std::vector<Rat> default_nodes(std::size_t m) {
  std::vector<Rat> t;
  for (std::size_t j = 0; j < m; ++j) t.push_back(Rat(j + 1, 2 * m));
  return t;
}

}  // namespace detail

/**
 * Nodal trade: replace a smooth cornerless vertex by a cut carrying one node.
 * The cut points inward along minus the sum of the adjacent outward normals.
 */
inline BaseDiagram nodal_trade(const BaseDiagram& d, std::size_t vertex_index) {
  std::size_t nv = d.polygon.size();
  std::size_t nf = d.facet_count();
  if (vertex_index >= nv || (d.unbounded && (vertex_index == 0 || vertex_index + 1 == nv)))
    throw std::invalid_argument("nodal_trade: invalid vertex");
  for (const auto& c : d.cuts)
    if (c.vertex_index == vertex_index)
      throw std::invalid_argument("nodal_trade: vertex already has a cut");
  Vec n_prev = d.facets[(vertex_index + nf - 1) % nf].normal;
  Vec n_next = d.facets[vertex_index % nf].normal;
  Int det = det2(n_prev, n_next);
  if (det != 1 && det != -1)
    throw std::invalid_argument("nodal_trade: vertex not smooth");
  // Inward eigendirection: sum of the primitive edge directions leaving the
  // vertex (affinely natural, unlike any rule built from the normals).
  auto prim_q = [](const QVec& e) {
    BigInt dx = denominator(e.x), dy = denominator(e.y);
    Rat sc = Rat(dx * dy);
    Vec v{static_cast<Int>(numerator(Rat(e.x * sc))), static_cast<Int>(numerator(Rat(e.y * sc)))};
    return primitive_and_length(v).first;
  };
  Vec e_fwd = prim_q(d.polygon.vertex(vertex_index + 1) - d.polygon.vertex(vertex_index));
  Vec e_bwd = prim_q(d.polygon.vertex(vertex_index + nv - 1) - d.polygon.vertex(vertex_index));
  BaseDiagram out = d;
  BranchCut c;
  c.vertex_index = vertex_index;
  c.direction = primitive_and_length(e_fwd + e_bwd).first;
  c.nodes = {Rat(1, 2)};
  out.cuts.push_back(c);
  detail::refresh_derived(out);
  out.moves.push_back("trade v" + std::to_string(vertex_index));
  auto bad = validate(out);
  if (!bad.empty())
    throw std::invalid_argument("nodal_trade: result invalid: " + bad.front());
  return out;
}

/**
 * Nodal slide: reposition one node along its cut.  The move must keep the
 * node ordering, stay interior, and must not carry the node across the
 * marked fiber (that crossing is a mutation, not a slide).
 */
inline BaseDiagram nodal_slide(const BaseDiagram& d, std::size_t cut_index,
                               std::size_t node_index, const Rat& new_t) {
  const auto& c = d.cuts.at(cut_index);
  const Rat old_t = c.nodes.at(node_index);
  BaseDiagram out = d;
  auto& nodes = out.cuts[cut_index].nodes;
  nodes[node_index] = new_t;
  // The fiber sits at parameter 1 when the cut aims at it; crossing it flips
  // the sign of (1 - t).
  QVec v = d.polygon.vertex(c.vertex_index);
  if (det2q(d.fiber - v, to_q(c.direction)) == 0) {
    if ((old_t < 1 && new_t > 1) || (old_t > 1 && new_t < 1))
      throw std::invalid_argument("nodal_slide: crossing the fiber; use mutate_diagram");
  }
  out.moves.push_back("slide c" + std::to_string(cut_index) + " n" +
                      std::to_string(node_index) + " " + rat_str(new_t));
  auto bad = validate(out);
  if (!bad.empty())
    throw std::invalid_argument("nodal_slide: result invalid: " + bad.front());
  return out;
}

namespace detail {

/** First positive boundary hit of the ray base + s*dir, required to land in a
 *  facet interior; returns (facet index, point). */
inline std::pair<std::size_t, QVec> ray_exit(const BaseDiagram& d, const QVec& base,
                                             Vec dir) {
  bool found = false;
  Rat best = 0;
  std::size_t best_f = 0;
  for (std::size_t i = 0; i < d.facet_count(); ++i) {
    const auto& f = d.facets[i];
    Rat denom = Rat(f.normal.x) * dir.x + Rat(f.normal.y) * dir.y;
    if (denom <= 0) continue;
    Rat s = (f.level - (Rat(f.normal.x) * base.x + Rat(f.normal.y) * base.y)) / denom;
    if (s > 0 && (!found || s < best)) { best = s; best_f = i; found = true; }
  }
  if (!found) throw std::invalid_argument("ray does not exit the diagram");
  QVec p = base + best * to_q(dir);
  // Reject exits through a vertex.
  for (std::size_t i = 0; i < d.polygon.size(); ++i)
    if (d.polygon.vertex(i) == p)
      throw std::invalid_argument("non-generic: ray exits through a vertex");
  return {best_f, p};
}

}  // namespace detail

/**
 * Mutation: slide the cut's nodes across the marked fiber and transfer the
 * cut to the far side.  The polygon half on one side of the cut line is
 * resheared about that line; the old cut vertex flattens and the exit point
 * of the cut line through the far boundary becomes the new cut vertex.
 * Returns the new diagram together with the coordinate-change direction
 * (the slide direction of the nodes) for the matching potential mutation.
 */
inline std::pair<BaseDiagram, Vec> mutate_diagram(const BaseDiagram& d,
                                                  std::size_t cut_index) {
  if (d.unbounded) throw std::invalid_argument("mutate_diagram: unbounded diagram");
  const auto& c = d.cuts.at(cut_index);
  QVec v = d.polygon.vertex(c.vertex_index);
  Vec nu = c.direction;
  if (det2q(d.fiber - v, to_q(nu)) != 0 ||
      (Rat(nu.x) * (d.fiber - v).x + Rat(nu.y) * (d.fiber - v).y) < 0)
    throw std::invalid_argument("mutate_diagram: cut does not aim at the fiber");
  // The full cut line must miss the other cuts' segments.
  auto [exit_facet, exit_point] = detail::ray_exit(d, d.fiber, nu);
  for (std::size_t i = 0; i < d.cuts.size(); ++i) {
    if (i == cut_index) continue;
    auto [s0, s1] = detail::cut_segment(d, d.cuts[i]);
    if (detail::segments_intersect(v, exit_point, s0, s1))
      throw std::invalid_argument("mutate_diagram: cut line meets another cut");
  }
  const Int m = static_cast<Int>(c.nodes.size());
  AffineMap s = shear_about_line(d.fiber, nu, m);

  // Shear the half {p : det(nu, p - fiber) < 0}; insert the exit point as the
  // new vertex; drop the old vertex (it flattens).
  auto side_of = [&](const QVec& p) { return det2q(to_q(nu), p - d.fiber); };
  std::size_t nv = d.polygon.size();
  std::vector<QVec> verts;
  for (std::size_t i = 0; i < nv; ++i) {
    QVec p = d.polygon.vertex(i);
    if (i == c.vertex_index) continue;  // flattens after the reshear
    verts.push_back(side_of(p) < 0 ? s.apply(p) : p);
    // Insert the new cut vertex after the near endpoint of the exit facet.
    if (i == exit_facet) verts.push_back(exit_point);
  }
  BaseDiagram out = d;
  out.polygon.vertices = verts;
  // Keep only the other cuts, reindexed against the new vertex list.
  out.cuts.clear();
  for (std::size_t i = 0; i < d.cuts.size(); ++i) {
    if (i == cut_index) continue;
    const auto& oc = d.cuts[i];
    QVec ov = d.polygon.vertex(oc.vertex_index);
    QVec nvtx = side_of(ov) < 0 ? s.apply(ov) : ov;
    Vec ndir = side_of(ov) < 0 ? s.apply_dir(oc.direction) : oc.direction;
    BranchCut nc = oc;
    nc.direction = primitive_and_length(ndir).first;
    bool located = false;
    for (std::size_t j = 0; j < verts.size(); ++j)
      if (verts[j] == nvtx) { nc.vertex_index = j; located = true; }
    if (!located) throw std::logic_error("mutate_diagram: lost a cut vertex");
    out.cuts.push_back(nc);
  }
  // The transferred cut: from the exit point back toward the fiber.
  BranchCut nc;
  nc.direction = -nu;
  nc.nodes = detail::default_nodes(static_cast<std::size_t>(m));
  for (std::size_t j = 0; j < verts.size(); ++j)
    if (verts[j] == exit_point) nc.vertex_index = j;
  out.cuts.push_back(nc);
  detail::refresh_derived(out);
  out.moves.push_back("mutate c" + std::to_string(cut_index));
  auto bad = validate(out);
  if (!bad.empty())
    throw std::invalid_argument("mutate_diagram: result invalid: " + bad.front());
  return {out, nu};
}

/**
 * Cut transfer: reverse a cut through its nodes to the opposite boundary
 * without moving nodes across the fiber.  Implemented as the polygon
 * surgery of mutation based at the outermost node position instead of the
 * fiber, so the nodes stay put and the potential is unchanged.
 */
inline BaseDiagram transfer_cut(const BaseDiagram& d, std::size_t cut_index) {
  if (d.unbounded) throw std::invalid_argument("transfer_cut: unbounded diagram");
  const auto& c = d.cuts.at(cut_index);
  QVec v = d.polygon.vertex(c.vertex_index);
  Vec nu = c.direction;
  QVec pivot = node_position(d, c, 0);  // outermost node anchors the reshear
  auto [exit_facet, exit_point] = detail::ray_exit(d, pivot, nu);
  if (detail::segments_intersect(pivot, exit_point, d.fiber, d.fiber))
    throw std::invalid_argument("transfer_cut: reversed ray hits the fiber");
  for (std::size_t i = 0; i < d.cuts.size(); ++i) {
    if (i == cut_index) continue;
    auto [s0, s1] = detail::cut_segment(d, d.cuts[i]);
    if (detail::segments_intersect(v, exit_point, s0, s1))
      throw std::invalid_argument("transfer_cut: cut line meets another cut");
  }
  const Int m = static_cast<Int>(c.nodes.size());
  // Shear the half of the polygon on the far side of the cut line from the
  // fiber, so the fiber-side geometry (and hence the potential) is fixed.
  Rat fiber_side = det2q(to_q(nu), d.fiber - pivot);
  if (fiber_side == 0)
    throw std::invalid_argument("transfer_cut: fiber on the cut line");
  Int sign = fiber_side > 0 ? -1 : 1;  // shear the opposite side
  AffineMap s = shear_about_line(pivot, nu, sign > 0 ? m : -m);
  auto sheared = [&](const QVec& p) {
    Rat side = det2q(to_q(nu), p - pivot);
    return (fiber_side > 0 ? side < 0 : side > 0);
  };
  std::size_t nv = d.polygon.size();
  std::vector<QVec> verts;
  for (std::size_t i = 0; i < nv; ++i) {
    QVec p = d.polygon.vertex(i);
    if (i == c.vertex_index) continue;
    verts.push_back(sheared(p) ? s.apply(p) : p);
    if (i == exit_facet) verts.push_back(exit_point);
  }
  BaseDiagram out = d;
  out.polygon.vertices = verts;
  out.cuts.clear();
  for (std::size_t i = 0; i < d.cuts.size(); ++i) {
    if (i == cut_index) continue;
    const auto& oc = d.cuts[i];
    QVec ov = d.polygon.vertex(oc.vertex_index);
    QVec nvtx = sheared(ov) ? s.apply(ov) : ov;
    Vec ndir = sheared(ov) ? s.apply_dir(oc.direction) : oc.direction;
    BranchCut nc = oc;
    nc.direction = primitive_and_length(ndir).first;
    for (std::size_t j = 0; j < verts.size(); ++j)
      if (verts[j] == nvtx) nc.vertex_index = j;
    out.cuts.push_back(nc);
  }
  BranchCut nc;
  nc.direction = -nu;
  // Node positions are preserved exactly: recompute their parameters on the
  // reversed cut after the polygon is rebuilt.
  for (std::size_t j = 0; j < verts.size(); ++j)
    if (verts[j] == exit_point) nc.vertex_index = j;
  std::vector<QVec> node_pts;
  for (std::size_t j = 0; j < c.nodes.size(); ++j)
    node_pts.push_back(node_position(d, c, j));
  nc.nodes = detail::default_nodes(c.nodes.size());  // provisional
  out.cuts.push_back(nc);
  detail::refresh_derived(out);
  // Solve for the exact parameters reproducing the old node positions.
  {
    auto& cut = out.cuts.back();
    Rat sc = cut_scale(out, cut);
    QVec base = out.polygon.vertex(cut.vertex_index);
    QVec dq = to_q(cut.direction);
    std::vector<Rat> ts;
    for (auto it = node_pts.rbegin(); it != node_pts.rend(); ++it) {
      QVec rel = *it - base;
      Rat t = (dq.x != 0 ? rel.x / dq.x : rel.y / dq.y) / sc;
      ts.push_back(t);
    }
    cut.nodes = ts;
  }
  out.moves.push_back("transfer c" + std::to_string(cut_index));
  auto bad = validate(out);
  if (!bad.empty())
    throw std::invalid_argument("transfer_cut: result invalid: " + bad.front());
  return out;
}

// ---------------------------------------------------------------------------
// JSON (de)serialization.
// ---------------------------------------------------------------------------

inline nlohmann::json diagram_to_json(const BaseDiagram& d) {
  nlohmann::json j;
  j["name"] = d.name;
  j["polygon"] = nlohmann::json::array();
  for (const auto& v : d.polygon.vertices)
    j["polygon"].push_back({rat_str(v.x), rat_str(v.y)});
  j["facets"] = nlohmann::json::array();
  for (const auto& f : d.facets)
    j["facets"].push_back({{"normal", {f.normal.x, f.normal.y}},
                           {"level", rat_str(f.level)}});
  j["cuts"] = nlohmann::json::array();
  for (const auto& c : d.cuts) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& t : c.nodes) nodes.push_back(rat_str(t));
    j["cuts"].push_back({{"vertex", c.vertex_index},
                         {"direction", {c.direction.x, c.direction.y}},
                         {"nodes", nodes}});
  }
  j["fiber"] = {rat_str(d.fiber.x), rat_str(d.fiber.y)};
  j["scale"] = rat_str(d.scale);
  j["elliptic_vertices"] = d.elliptic_vertices;
  j["unbounded"] = d.unbounded;
  j["moves"] = d.moves;
  return j;
}

inline BaseDiagram diagram_from_json(const nlohmann::json& j) {
  BaseDiagram d;
  d.name = j.value("name", "");
  for (const auto& v : j.at("polygon"))
    d.polygon.vertices.push_back(
        {rat_parse(v.at(0).get<std::string>()), rat_parse(v.at(1).get<std::string>())});
  for (const auto& f : j.at("facets"))
    d.facets.push_back({{f.at("normal").at(0).get<Int>(), f.at("normal").at(1).get<Int>()},
                        rat_parse(f.at("level").get<std::string>())});
  for (const auto& c : j.at("cuts")) {
    BranchCut bc;
    bc.vertex_index = c.at("vertex").get<std::size_t>();
    bc.direction = {c.at("direction").at(0).get<Int>(), c.at("direction").at(1).get<Int>()};
    for (const auto& t : c.at("nodes")) bc.nodes.push_back(rat_parse(t.get<std::string>()));
    d.cuts.push_back(bc);
  }
  d.fiber = {rat_parse(j.at("fiber").at(0).get<std::string>()),
             rat_parse(j.at("fiber").at(1).get<std::string>())};
  d.scale = rat_parse(j.at("scale").get<std::string>());
  d.elliptic_vertices = j.at("elliptic_vertices").get<std::vector<std::size_t>>();
  d.unbounded = j.value("unbounded", false);
  if (j.contains("moves")) d.moves = j.at("moves").get<std::vector<std::string>>();
  return d;
}

// ---------------------------------------------------------------------------
// Catalog.
// ---------------------------------------------------------------------------

namespace detail {

/**
 * Builds a monotone diagram from a CCW polygon with the fiber at the origin:
 * facet data from edges, and a cut at every non-smooth corner aimed at the
 * fiber.  The node count at a corner with primitive edge directions e_in,
 * e_out and dual edge length L is L^2/|det|, which must divide evenly.
 */
inline BaseDiagram from_polygon(const std::string& name, std::vector<QVec> vertices,
                                const Rat& tau) {
  BaseDiagram d;
  d.name = name;
  d.polygon.vertices = std::move(vertices);
  d.fiber = {0, 0};
  d.scale = tau;
  std::size_t nv = d.polygon.size();
  detail::refresh_derived(d);
  for (std::size_t i = 0; i < nv; ++i) {
    Vec n_prev = d.facets[(i + nv - 1) % nv].normal;
    Vec n_next = d.facets[i].normal;
    // Dual edge length between the adjacent normals.
    Int len = primitive_and_length(n_next - n_prev).second;
    QVec e_in = d.polygon.vertex(i) - d.polygon.vertex(i + nv - 1);
    QVec e_out = d.polygon.vertex(i + 1) - d.polygon.vertex(i);
    auto prim = [](const QVec& e) {
      BigInt dx = denominator(e.x), dy = denominator(e.y);
      Rat sc = Rat(dx * dy);
      Vec v{static_cast<Int>(numerator(Rat(e.x * sc))), static_cast<Int>(numerator(Rat(e.y * sc)))};
      return primitive_and_length(v).first;
    };
    Int det = det2(prim(e_in), prim(e_out));
    if (det < 0) det = -det;
    if (det == 1) continue;  // smooth corner
    if ((len * len) % det != 0 || det % len != 0)
      throw std::invalid_argument(name + ": corner not of smoothable type");
    Int nodes = (len * len) / det;
    BranchCut c;
    c.vertex_index = i;
    QVec to_fiber = d.fiber - d.polygon.vertex(i);
    c.direction = prim(to_fiber);
    c.nodes = default_nodes(static_cast<std::size_t>(nodes));
    d.cuts.push_back(c);
  }
  detail::refresh_derived(d);
  auto bad = validate(d);
  if (!bad.empty())
    throw std::invalid_argument(name + ": catalog entry invalid: " + bad.front());
  return d;
}

/** Polar dual polygon of a lattice polygon (normals = its vertices) at level
 *  tau, vertices CCW. */
inline std::vector<QVec> polar_dual_vertices(const std::vector<Vec>& normals_ccw,
                                             const Rat& tau) {
  std::vector<QVec> verts;
  std::size_t n = normals_ccw.size();
  for (std::size_t i = 0; i < n; ++i) {
    Vec a = normals_ccw[i], b = normals_ccw[(i + 1) % n];
    Rat det = Rat(det2(a, b));
    if (det == 0) throw std::invalid_argument("polar dual: parallel normals");
    // Solve <a,x> = tau, <b,x> = tau.
    verts.push_back({tau * Rat(b.y - a.y) / det, tau * Rat(a.x - b.x) / det});
  }
  // Vertex i above sits between facets i and i+1; rotate so that edge i of
  // the polygon carries normal i.
  std::vector<QVec> out(n);
  for (std::size_t i = 0; i < n; ++i) out[(i + 1) % n] = verts[i];
  return out;
}

/** Wedge diagram: apex with two boundary rays, truncated for storage. */
inline BaseDiagram make_wedge(const std::string& name, const QVec& apex, Vec dir_in,
                              Vec dir_out, const QVec& fiber, const Rat& tau,
                              std::size_t node_count, Vec cut_dir) {
  // CCW boundary: arrive along -dir_in into the apex, leave along dir_out.
  const Rat far = 1024;
  BaseDiagram d;
  d.name = name;
  d.unbounded = true;
  d.polygon.vertices = {apex + far * to_q(dir_in), apex, apex + far * to_q(dir_out)};
  d.fiber = fiber;
  d.scale = tau;
  BranchCut c;
  c.vertex_index = 1;
  c.direction = cut_dir;
  c.nodes = default_nodes(node_count);
  d.cuts = {c};
  detail::refresh_derived(d);
  auto bad = validate(d);
  if (!bad.empty())
    throw std::invalid_argument(name + ": wedge entry invalid: " + bad.front());
  return d;
}

}  // namespace detail

/** T-wedge family member: d nodes on the cut along (p,q) out of a corner of
 *  type (1/dp^2)(1, dpq-1); its potential is y1^{-1} (1 + y1^q y2^{-p})^{dp}. */
inline BaseDiagram tsing_diagram(Int p, Int q, Int dd) {
  if (p < 1 || q < 1 || q >= p || std::gcd(p, q) != 1 || dd < 1)
    throw std::invalid_argument("tsing_diagram: need 1 <= q < p coprime, d >= 1");
  std::ostringstream nm;
  nm << "tsing(" << p << "," << q << "," << dd << ")";
  // Apex at the origin; edges along (0,1) and (dp^2, dpq-1); fiber at (p,q).
  return detail::make_wedge(nm.str(), {0, 0}, Vec{0, 1},
                            Vec{dd * p * p, dd * p * q - 1}, to_q({p, q}), Rat(p),
                            static_cast<std::size_t>(dd),
                            primitive_and_length({p, q}).first);
}

/** Total critical-point count (with multiplicity) of any monotone chart
 *  potential of the diagram: one per uncut corner plus one per node. */
inline Int critical_count(const BaseDiagram& d) {
  Int n = static_cast<Int>(d.elliptic_vertices.size());
  for (const auto& c : d.cuts) n += static_cast<Int>(c.nodes.size());
  return n;
}

/** The full named catalog. */
inline std::vector<BaseDiagram> catalog() {
  using detail::from_polygon;
  using detail::polar_dual_vertices;
  std::vector<BaseDiagram> out;

  auto dual_of = [](const std::string& name, std::vector<Vec> normals_ccw, Rat tau) {
    return from_polygon(name, polar_dual_vertices(normals_ccw, tau), tau);
  };

  out.push_back(dual_of("p2", {{1, 0}, {0, 1}, {-1, -1}}, 1));
  out.push_back(dual_of("quadric_square", {{1, 0}, {0, 1}, {-1, 0}, {0, -1}}, 1));
  out.push_back(dual_of("quadric_triangle", {{1, 1}, {-1, 1}, {0, -1}}, 1));
  out.push_back(dual_of("bl1", {{1, 0}, {1, 1}, {0, 1}, {-1, -1}}, 1));
  out.push_back(dual_of("bl2", {{1, 0}, {0, 1}, {-1, 0}, {-1, -1}, {0, -1}}, 1));
  out.push_back(dual_of("bl3", {{1, 0}, {1, 1}, {0, 1}, {-1, 0}, {-1, -1}, {0, -1}}, 1));
  out.push_back(dual_of("bl4", {{1, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}}, 1));
  out.push_back(dual_of("bl5", {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}, 1));
  out.push_back(dual_of("bl6", {{2, -1}, {-1, 2}, {-1, -1}}, 1));
  out.push_back(dual_of("bl7", {{2, 1}, {-2, 1}, {-2, -1}, {2, -1}}, 1));
  out.push_back(dual_of("bl8", {{5, -2}, {-1, 4}, {-1, -2}}, 6));
  // The alternative degree-one chart: a width-9 corner chain plus two sharp
  // corners; volume 9/2 at scale 3.
  out.push_back(from_polygon("bl8_triangle",
                             {to_q({-1, 3}), to_q({0, -3}), to_q({1, 0})}, 3));
  out.push_back(dual_of("chekanov", {{3, -1}, {1, 1}, {-1, 0}}, 1));

  // Nodal companions of the toric blowup diagrams: every corner traded.
  for (const char* base : {"bl1", "bl2", "bl3"}) {
    BaseDiagram d;
    for (const auto& e : out)
      if (e.name == base) d = e;
    for (std::size_t v = 0; v < d.polygon.size(); ++v) d = nodal_trade(d, v);
    d.name = std::string(base) + "_nodal";
    out.push_back(d);
  }

  // Spherical-pendulum wedge: apex below the fiber, two nodes on the cut.
  out.push_back(detail::make_wedge("pendulum", {0, -1}, Vec{-1, 1}, Vec{1, 1},
                                   {0, 0}, 1, 2, {0, 1}));

  // T-wedge family at small parameters.
  for (Int p = 2; p <= 4; ++p)
    for (Int q = 1; q < p; ++q) {
      if (std::gcd(p, q) != 1) continue;
      for (Int dd = 1; dd <= 3; ++dd) out.push_back(tsing_diagram(p, q, dd));
    }
  return out;
}

/** Look up a catalog entry by name; understands "tsing(p,q,d)". */
inline BaseDiagram catalog_entry(const std::string& name) {
  if (name.rfind("tsing(", 0) == 0) {
    Int p = 0, q = 0, dd = 0;
    char l, c1, c2, r;
    std::istringstream is(name.substr(5));
    if ((is >> l >> p >> c1 >> q >> c2 >> dd >> r) && l == '(' && c1 == ',' &&
        c2 == ',' && r == ')')
      return tsing_diagram(p, q, dd);
    throw std::invalid_argument("catalog_entry: bad tsing parameters");
  }
  for (auto& d : catalog())
    if (d.name == name) return d;
  throw std::invalid_argument("catalog_entry: unknown name " + name);
}

/** A recorded mutation move: apply mutate_diagram to `from` at `cut_index`. */
struct MutationMove {
  std::string label;
  BaseDiagram from;
  std::size_t cut_index;
};

/** The catalog's recorded generic mutation moves (used by the mutation
 *  compatibility and critical-value invariance checks). */
inline std::vector<MutationMove> recorded_mutation_moves() {
  std::vector<MutationMove> out;
  // Standard triangle, traded at its smooth corner facing the long edge,
  // mutates onto the Chekanov-type triangle.
  BaseDiagram p2 = catalog_entry("p2");
  std::size_t v_trade = 0;
  std::size_t nf = p2.facet_count();
  for (std::size_t i = 0; i < p2.polygon.size(); ++i) {
    Vec a = p2.facets[(i + nf - 1) % nf].normal, b = p2.facets[i].normal;
    if ((a == Vec{1, 0} && b == Vec{0, 1}) || (a == Vec{0, 1} && b == Vec{1, 0}))
      v_trade = i;
  }
  BaseDiagram p2t = nodal_trade(p2, v_trade);
  out.push_back({"p2_traded->chekanov", p2t, 0});
  // Chekanov triangle mutates one step further down the triangle chain.
  out.push_back({"chekanov->next", catalog_entry("chekanov"), 0});
  // Cubic-surface triangle: all three cuts are symmetric; record one.
  out.push_back({"bl6->mutant", catalog_entry("bl6"), 0});
  return out;
}

}  // namespace trop
