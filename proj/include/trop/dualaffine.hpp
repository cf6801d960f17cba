#pragma once
/**
 * The developed integral-affine picture of a base diagram: the core polygon
 * together with one perpendicular half-strip per facet, glued across wedge
 * gaps at the vertices by integral shears.  Rays (tropical edges) are traced
 * exactly through this atlas; focus-focus nodes of a cut are merged into a
 * single singular point carrying a bunching multiplicity.
 */

#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "trop/diagram.hpp"

namespace trop {

inline std::atomic<long> dbg_trace{0}, dbg_pairs{0}, dbg_exact{0}, dbg_isect{0};

/** Half-infinite strip over facet i: {f + s*normal : f on the facet, s >= 0}. */
struct DualSector {
  Vec normal;   // primitive outward facet normal
  Rat level;    // <normal, x> on the facet
  QVec v0, v1;  // facet endpoints (v1 is a truncation point on wedge ends)
  bool open_far = false;  // wedge: the facet extends beyond v1 (or before v0)
};

/**
 * Gluing at vertex i: crossing the side ray {v + t*n_prev} counterclockwise
 * out of sector i-1 applies `map`, which carries that ray onto
 * {v + t*n_next}, the flank of sector i.  Crossing clockwise applies the
 * inverse.
 */
struct SectorTransition {
  std::size_t vertex_index = 0;
  QVec vertex;
  Vec axis;  // primitive shear axis
  Int power = 0;
  AffineMap map;
  bool elliptic = false;  // the glued corner carries no branch cut
};

/** A merged focus-focus point: all nodes of one cut, bunched. */
struct SingularPoint {
  QVec position;          // outermost node position of the cut
  Vec eigendirection;     // cut direction (the monodromy-invariant line)
  std::size_t node_count = 0;
  std::size_t cut_index = 0;
};

struct DualAffineAnnulus {
  BaseDiagram diagram;
  std::vector<DualSector> sectors;            // one per facet
  std::vector<SectorTransition> transitions;  // one per glued vertex
  std::vector<SingularPoint> singular_points;
  QVec fiber;
  Mat2 monodromy = Mat2::identity();  // full counterclockwise composition
  bool unbounded = false;

  std::size_t sector_count() const { return sectors.size(); }
};

/** One straight piece of a traced ray, in drawn coordinates. */
struct TraceSegment {
  QVec start;
  Vec dir;                    // integral drawn direction
  std::optional<Rat> length;  // parameter of the endpoint; nullopt = infinite
  int sector = -1;            // -1 core, else sector index
  int winding = 0;            // signed unrolled sheet index

  // Floating-point image of the segment, filled lazily; used only to reject
  // clearly disjoint segment pairs before the exact intersection test.
  mutable double fsx = std::numeric_limits<double>::quiet_NaN();
  mutable double fsy = 0, flen = 0;
  void fill_floats() const {
    if (!std::isnan(fsx)) return;
    fsy = static_cast<double>(start.y);
    flen = length ? static_cast<double>(*length)
                  : std::numeric_limits<double>::infinity();
    fsx = static_cast<double>(start.x);
  }

  QVec end() const { return start + *length * to_q(dir); }
  QVec at(const Rat& t) const { return start + t * to_q(dir); }
};

/** A ray developed through the atlas. */
struct TracedRay {
  std::vector<TraceSegment> segments;
  Rat multiplicity = 1;
  bool escaped = false;   // ran off to infinity in its last segment
  int escape_sector = -1;
  Vec escape_dir;         // drawn direction of the escaping segment
  std::vector<std::string> flags;  // "non-generic ..." / "truncated ..."

  bool generic() const { return flags.empty(); }
};

namespace detail {

/** Transition shear at a glued vertex between outward normals n_prev and
 *  n_next: the power is content(n_next - n_prev)^2 / det(n_next, n_prev). */
inline SectorTransition make_transition(std::size_t vertex_index, const QVec& v,
                                        Vec n_prev, Vec n_next) {
  auto [axis, g] = primitive_and_length(n_next - n_prev);
  Int den = det2(n_next, n_prev);
  if (den == 0 || (g * g) % den != 0)
    throw std::invalid_argument("sector transition: non-integral gluing shear");
  Int k = (g * g) / den;
  SectorTransition t;
  t.vertex_index = vertex_index;
  t.vertex = v;
  t.axis = axis;
  t.power = k;
  t.map = shear_about_line(v, axis, k);
  if (t.map.apply_dir(n_prev) != n_next)
    throw std::logic_error("sector transition: shear does not match the flanks");
  return t;
}

}  // namespace detail

/** Build the developed picture of a validated diagram. */
inline DualAffineAnnulus build_annulus(const BaseDiagram& d) {
  auto bad = validate(d);
  if (!bad.empty())
    throw std::invalid_argument("build_annulus: invalid diagram: " + bad.front());
  DualAffineAnnulus a;
  a.diagram = d;
  a.fiber = d.fiber;
  a.unbounded = d.unbounded;
  std::size_t nf = d.facet_count();
  for (std::size_t i = 0; i < nf; ++i) {
    DualSector s;
    s.normal = d.facets[i].normal;
    s.level = d.facets[i].level;
    s.v0 = d.polygon.vertex(i);
    s.v1 = d.polygon.vertex(i + 1);
    s.open_far = d.unbounded && (i == 0 || i + 1 == nf);
    a.sectors.push_back(s);
  }
  auto uncut = [&](std::size_t v) {
    for (const auto& c : d.cuts)
      if (c.vertex_index == v) return false;
    return true;
  };
  if (d.unbounded) {
    // Only the interior vertices glue; for a wedge that is the apex alone.
    for (std::size_t i = 1; i + 1 < d.polygon.size(); ++i) {
      a.transitions.push_back(detail::make_transition(
          i, d.polygon.vertex(i), d.facets[i - 1].normal, d.facets[i].normal));
      a.transitions.back().elliptic = uncut(i);
    }
    a.monodromy = a.transitions.front().map.linear;
  } else {
    for (std::size_t i = 0; i < nf; ++i) {
      a.transitions.push_back(detail::make_transition(
          i, d.polygon.vertex(i), d.facets[(i + nf - 1) % nf].normal,
          d.facets[i].normal));
      a.transitions.back().elliptic = uncut(i);
    }
    // Developing once around: compose counterclockwise starting after
    // sector 0 and ending with the gluing back into sector 0.
    Mat2 m = Mat2::identity();
    for (std::size_t i = 1; i <= nf; ++i)
      m = a.transitions[i % nf].map.linear * m;
    a.monodromy = m;
    if (m.apply(d.facets[0].normal) != d.facets[0].normal)
      throw std::logic_error("build_annulus: monodromy does not fix the seam normal");
  }
  for (std::size_t ci = 0; ci < d.cuts.size(); ++ci) {
    const auto& c = d.cuts[ci];
    SingularPoint b;
    b.position = node_position(d, c, 0);  // outermost node
    b.eigendirection = c.direction;
    b.node_count = c.nodes.size();
    b.cut_index = ci;
    a.singular_points.push_back(b);
  }
  return a;
}

namespace detail {

inline Rat dotq(Vec n, const QVec& x) { return Rat(n.x) * x.x + Rat(n.y) * x.y; }
inline Int doti(Vec n, Vec x) { return n.x * x.x + n.y * x.y; }

}  // namespace detail

/** Locate a point: -1 core (or boundary), sector index if strictly beyond a
 *  facet, -2 if in no chart (wedge gap). */
inline int locate(const DualAffineAnnulus& a, const QVec& p) {
  for (std::size_t i = 0; i < a.sectors.size(); ++i) {
    const auto& s = a.sectors[i];
    if (detail::dotq(s.normal, p) <= s.level) continue;
    // Perpendicular foot between the facet endpoints?
    QVec e = s.v1 - s.v0;
    Rat nn = detail::dotq(s.normal, to_q(s.normal));
    Rat sdist = (detail::dotq(s.normal, p) - s.level) / nn;
    QVec foot = p - sdist * to_q(s.normal);
    Rat ee = e.x * e.x + e.y * e.y;
    Rat u = ((foot.x - s.v0.x) * e.x + (foot.y - s.v0.y) * e.y) / ee;
    // For wedges sector 0 extends before v0 (its far end is a truncation
    // point) and the last sector extends beyond v1.
    bool lo_ok = (a.unbounded && i == 0) || u >= 0;
    bool hi_ok = (a.unbounded && i + 1 == a.sectors.size()) || u <= 1;
    if (lo_ok && hi_ok) return static_cast<int>(i);
  }
  bool inside = true;
  for (const auto& s : a.sectors)
    inside = inside && detail::dotq(s.normal, p) <= s.level;
  return inside ? -1 : -2;
}

/**
 * Transport an integral direction counterclockwise from sector `from` to
 * sector `to` through the gluing shears.
 */
inline Vec transport_direction(const DualAffineAnnulus& a, std::size_t from,
                               std::size_t to, Vec v) {
  std::size_t n = a.sector_count();
  if (a.unbounded) {
    if (from == to) return v;
    if (from + 1 != to) throw std::invalid_argument("transport: wedge has one gluing");
    return a.transitions.front().map.apply_dir(v);
  }
  std::size_t i = from;
  while (i != to) {
    i = (i + 1) % n;
    v = a.transitions[i].map.apply_dir(v);
  }
  return v;
}

/** Whether direction v points out of the diagram at a strip point. */
inline bool outward_cone_contains(const DualAffineAnnulus& a, const QVec& p, Vec v) {
  int s = locate(a, p);
  if (s < 0) throw std::invalid_argument("outward_cone_contains: point not in a sector");
  return detail::doti(a.sectors[s].normal, v) > 0;
}

/**
 * Trace the ray start + t*dir through the atlas.  Segments are split at
 * facet crossings (no transform) and at side-ray crossings (the gluing shear
 * is applied).  Tracing stops when the ray escapes to infinity, hits a
 * vertex or singular point exactly (flagged non-generic), or exceeds the
 * transition budget max_winding * sector_count (flagged truncated).
 */
inline TracedRay trace_ray(const DualAffineAnnulus& a, QVec p, Vec dir,
                           const Rat& multiplicity = 1, Int max_winding = 3) {
  ++dbg_trace;
  TracedRay ray;
  ray.multiplicity = multiplicity;
  if (dir.is_zero()) { ray.flags.push_back("non-generic: zero direction"); return ray; }
  int sector = locate(a, p);
  if (sector == -2) { ray.flags.push_back("non-generic: start outside atlas"); return ray; }
  int winding = 0;
  Int transitions_used = 0;
  const Int budget = max_winding * static_cast<Int>(a.sector_count());
  const std::size_t nf = a.sector_count();

  while (true) {
    // Candidate events along p + t*dir, t > 0: facet crossings in/out and
    // side-ray crossings of the current sector.
    struct Event {
      Rat t;
      enum Kind { EnterSector, EnterCore, CrossCCW, CrossCW, Vertex } kind;
      std::size_t index;  // sector or transition index
    };
    std::optional<Event> best;
    auto consider = [&](const Event& e) {
      if (!best || e.t < best->t) best = e;
    };

    if (sector == -1) {
      for (std::size_t i = 0; i < nf; ++i) {
        Int dn = detail::doti(a.sectors[i].normal, dir);
        if (dn <= 0) continue;
        Rat t = (a.sectors[i].level - detail::dotq(a.sectors[i].normal, p)) / Rat(dn);
        // t == 0 happens when the ray starts on a facet heading outward: it
        // is in that sector immediately.
        if (t >= 0) consider({t, Event::EnterSector, i});
      }
    } else {
      const auto& s = a.sectors[static_cast<std::size_t>(sector)];
      // Re-entry into the core.
      Int dn = detail::doti(s.normal, dir);
      if (dn < 0) {
        Rat t = (s.level - detail::dotq(s.normal, p)) / Rat(dn);
        if (t > 0) consider({t, Event::EnterCore, static_cast<std::size_t>(sector)});
      }
      // Side rays: {v0 + r*normal} (clockwise flank, transition at v0) and
      // {v1 + r*normal} (counterclockwise flank, transition at v1).
      auto side = [&](const QVec& v, Event::Kind kind, std::size_t trans_index,
                      bool exists) {
        if (!exists) return;
        Int dd = det2(s.normal, dir);
        if (dd == 0) return;  // parallel to the flank
        Rat t = -det2q(to_q(s.normal), p - v) / Rat(dd);
        if (t <= 0) return;
        QVec hit = p + t * to_q(dir);
        // Flank parameter r >= 0 (r == 0 is the vertex itself).
        Rat r = (s.normal.x != 0) ? (hit.x - v.x) / Rat(s.normal.x)
                                  : (hit.y - v.y) / Rat(s.normal.y);
        if (r < 0) return;
        if (r == 0) { consider({t, Event::Vertex, trans_index}); return; }
        consider({t, kind, trans_index});
      };
      bool has_cw, has_ccw;
      std::size_t cw_index, ccw_index;
      if (a.unbounded) {
        // Wedge: the single gluing sits between sector 0 and sector 1.
        has_cw = sector == 1;
        has_ccw = sector == 0;
        cw_index = 0;
        ccw_index = 0;
      } else {
        has_cw = has_ccw = true;
        cw_index = static_cast<std::size_t>(sector);
        ccw_index = (static_cast<std::size_t>(sector) + 1) % nf;
      }
      side(s.v0, Event::CrossCW, cw_index, has_cw);
      side(s.v1, Event::CrossCCW, ccw_index, has_ccw);
    }

    // Does the open piece of this segment pass through a singular point or
    // the marked fiber?  That is a non-generic incidence.
    auto through_point = [&](const QVec& q) {
      if (det2q(to_q(dir), q - p) != 0) return false;
      Rat t = (dir.x != 0) ? (q.x - p.x) / Rat(dir.x) : (q.y - p.y) / Rat(dir.y);
      if (t <= 0) return false;
      return !best || t < best->t;
    };
    for (const auto& b : a.singular_points)
      if (p != b.position && through_point(b.position)) {
        ray.segments.push_back({p, dir, std::nullopt, sector, winding});
        ray.flags.push_back("non-generic: ray meets a singular point");
        return ray;
      }

    if (!best) {
      // Escape to infinity.
      ray.segments.push_back({p, dir, std::nullopt, sector, winding});
      ray.escaped = true;
      ray.escape_sector = sector;
      ray.escape_dir = dir;
      return ray;
    }

    ray.segments.push_back({p, dir, best->t, sector, winding});
    QVec hit = p + best->t * to_q(dir);
    switch (best->kind) {
      case Event::Vertex:
        ray.flags.push_back("non-generic: ray meets a vertex");
        return ray;
      case Event::EnterSector:
        // Check that the crossing point lies in the facet's span; an exact
        // endpoint hit is a vertex incidence.
        if (hit == a.sectors[best->index].v0 || hit == a.sectors[best->index].v1) {
          ray.flags.push_back("non-generic: ray meets a vertex");
          return ray;
        }
        sector = static_cast<int>(best->index);
        p = hit;
        break;
      case Event::EnterCore:
        if (hit == a.sectors[best->index].v0 || hit == a.sectors[best->index].v1) {
          ray.flags.push_back("non-generic: ray meets a vertex");
          return ray;
        }
        sector = -1;
        p = hit;
        break;
      case Event::CrossCCW:
      case Event::CrossCW: {
        const auto& tr = a.transitions[best->index];
        bool ccw = best->kind == Event::CrossCCW;
        // A ray reaching the gap at an uncut corner parallel to the far
        // flank runs off toward the corner divisor point: an accepted
        // corner output, not a gluing crossing.
        if (tr.elliptic) {
          std::size_t next_sec, prev_sec;
          if (a.unbounded) {
            next_sec = tr.vertex_index;
            prev_sec = tr.vertex_index - 1;
          } else {
            next_sec = best->index;
            prev_sec = (best->index + nf - 1) % nf;
          }
          std::size_t far_sec = ccw ? next_sec : prev_sec;
          if (dir == a.sectors[far_sec].normal) {
            ray.segments.push_back({hit, dir, std::nullopt,
                                    static_cast<int>(far_sec), winding});
            ray.escaped = true;
            ray.escape_sector = static_cast<int>(far_sec);
            ray.escape_dir = dir;
            return ray;
          }
        }
        AffineMap m = ccw ? tr.map : tr.map.inverse();
        p = m.apply(hit);
        dir = m.apply_dir(dir);
        if (!a.unbounded) {
          std::size_t cur = static_cast<std::size_t>(sector);
          sector = static_cast<int>(ccw ? (cur + 1) % nf : (cur + nf - 1) % nf);
          if (ccw && best->index == 0) ++winding;
          if (!ccw && best->index == 0) --winding;
        } else {
          sector = ccw ? 1 : 0;
        }
        if (++transitions_used > budget) {
          ray.segments.push_back({p, dir, std::nullopt, sector, winding});
          ray.flags.push_back("truncated: transition budget exhausted");
          return ray;
        }
        break;
      }
    }
  }
}

/** A transversal intersection between two traced rays, in drawn coordinates. */
struct RayIntersection {
  QVec point;
  std::size_t seg_a = 0, seg_b = 0;  // segment indices in the two rays
  Rat t_a, t_b;                      // parameters along the segments
  bool coincident_stretch = false;   // parallel overlap instead of a point
};

/**
 * All exact pairwise intersections of the drawn segments of two rays.
 * Tangential overlaps are reported as coincident stretches (with the overlap
 * start stored as the point).  The result is symmetric in the two rays.
 */
inline std::vector<RayIntersection> intersect_rays(const DualAffineAnnulus&,
                                                   const TracedRay& ra,
                                                   const TracedRay& rb) {
  ++dbg_isect;
  std::vector<RayIntersection> out;
  for (std::size_t i = 0; i < ra.segments.size(); ++i) {
    const auto& sa = ra.segments[i];
    for (std::size_t j = 0; j < rb.segments.size(); ++j) {
      const auto& sb = rb.segments[j];
      ++dbg_pairs;
      Int dd = det2(sa.dir, sb.dir);
      if (dd == 0) {
        if (det2q(to_q(sa.dir), sb.start - sa.start) != 0) continue;
        // Colinear: project sb's endpoints onto sa's parameter line.
        auto param = [&](const QVec& q) {
          return (sa.dir.x != 0) ? (q.x - sa.start.x) / Rat(sa.dir.x)
                                 : (q.y - sa.start.y) / Rat(sa.dir.y);
        };
        Rat lo = param(sb.start);
        std::optional<Rat> hi;
        if (sb.length) hi = param(sb.end());
        if (hi && *hi < lo) { Rat tmp = *hi; hi = lo; lo = tmp; }
        Rat start = lo < 0 ? Rat(0) : lo;
        bool nonempty = (!sa.length || start <= *sa.length) && (!hi || *hi >= 0);
        if (nonempty) {
          RayIntersection x;
          x.point = sa.at(start);
          x.seg_a = i;
          x.seg_b = j;
          x.t_a = start;
          x.t_b = 0;
          x.coincident_stretch = true;
          out.push_back(x);
        }
        continue;
      }
      // Floating-point reject: only segment pairs whose crossing parameters
      // are inside (or within a safety margin of) both parameter ranges are
      // handed to the exact test.
      sa.fill_floats();
      sb.fill_floats();
      {
        double wx = sb.fsx - sa.fsx, wy = sb.fsy - sa.fsy;
        double fdd = static_cast<double>(dd);
        double fta = (wx * sb.dir.y - wy * sb.dir.x) / fdd;
        double ftb = (wx * sa.dir.y - wy * sa.dir.x) / fdd;
        double m = 1e-6 * (1.0 + std::abs(fta) + std::abs(ftb));
        if (fta < -m || ftb < -m) continue;
        if (fta > sa.flen + m || ftb > sb.flen + m) continue;
      }
      ++dbg_exact;
      QVec w = sb.start - sa.start;
      Rat ta = det2q(w, to_q(sb.dir)) / Rat(dd);
      Rat tb = det2q(w, to_q(sa.dir)) / Rat(dd);
      if (ta < 0 || tb < 0) continue;
      if (sa.length && ta > *sa.length) continue;
      if (sb.length && tb > *sb.length) continue;
      out.push_back({sa.at(ta), i, j, ta, tb, false});
    }
  }
  return out;
}

/** Minimal SVG rendering of the atlas and some rays, for debugging. */
inline std::string annulus_svg(const DualAffineAnnulus& a,
                               const std::vector<TracedRay>& rays = {}) {
  std::ostringstream os;
  auto px = [](const Rat& r) { return 40.0 * static_cast<double>(numerator(r)) /
                                      static_cast<double>(denominator(r)); };
  os << "<svg xmlns='http://www.w3.org/2000/svg' viewBox='-300 -300 600 600'>\n";
  os << "<g transform='scale(1,-1)'>\n";
  os << "<polygon points='";
  for (const auto& v : a.diagram.polygon.vertices)
    os << px(v.x) << "," << px(v.y) << " ";
  os << "' fill='#eef' stroke='#336'/>\n";
  for (const auto& b : a.singular_points)
    os << "<circle cx='" << px(b.position.x) << "' cy='" << px(b.position.y)
       << "' r='3' fill='#c33'/>\n";
  os << "<circle cx='" << px(a.fiber.x) << "' cy='" << px(a.fiber.y)
     << "' r='3' fill='#393'/>\n";
  for (const auto& r : rays)
    for (const auto& s : r.segments) {
      QVec e = s.length ? s.end() : s.at(Rat(10));
      os << "<line x1='" << px(s.start.x) << "' y1='" << px(s.start.y)
         << "' x2='" << px(e.x) << "' y2='" << px(e.y)
         << "' stroke='#888' stroke-width='0.7'/>\n";
    }
  os << "</g></svg>\n";
  return os.str();
}

}  // namespace trop
