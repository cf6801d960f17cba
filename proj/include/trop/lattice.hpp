#pragma once
/**
 * Exact integral linear algebra on Z^2 and the group of integral affine
 * transformations: lattice vectors, unimodular matrices, shears, convex
 * lattice polygons and their equivalence maps.
 *
 * All geometry in this library is decided by exact sign tests: lattice
 * directions are 64-bit integers and polygon coordinates are arbitrary
 * precision rationals.  No floating point appears in this header.
 */

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace trop {

using Int = std::int64_t;
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/** Parse a rational from "p/q" or "p" form. */
inline Rat rat_parse(const std::string& s) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return Rat(BigInt(s));
  return Rat(BigInt(s.substr(0, slash)), BigInt(s.substr(slash + 1)));
}

/** Serialize a rational as "p" or "p/q" (lowest terms, q > 0). */
inline std::string rat_str(const Rat& r) {
  BigInt num = numerator(r), den = denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

/** An integral vector in Z^2; doubles as an exponent of a Laurent monomial. */
struct Vec {
  Int x = 0, y = 0;

  friend Vec operator+(Vec a, Vec b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec operator-(Vec a, Vec b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec operator-(Vec a) { return {-a.x, -a.y}; }
  friend Vec operator*(Int k, Vec a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Vec a, Vec b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(Vec a, Vec b) { return !(a == b); }
  /** Lexicographic order; used wherever deterministic ordering matters. */
  friend bool operator<(Vec a, Vec b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  }
  bool is_zero() const { return x == 0 && y == 0; }
};

/** A point with exact rational coordinates. */
struct QVec {
  Rat x = 0, y = 0;

  friend QVec operator+(const QVec& a, const QVec& b) { return {a.x + b.x, a.y + b.y}; }
  friend QVec operator-(const QVec& a, const QVec& b) { return {a.x - b.x, a.y - b.y}; }
  friend QVec operator*(const Rat& t, const QVec& a) { return {t * a.x, t * a.y}; }
  friend bool operator==(const QVec& a, const QVec& b) { return a.x == b.x && a.y == b.y; }
  friend bool operator!=(const QVec& a, const QVec& b) { return !(a == b); }
  friend bool operator<(const QVec& a, const QVec& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  }
};

inline QVec to_q(Vec v) { return {Rat(v.x), Rat(v.y)}; }

/** Round-trip to Vec when the coordinates happen to be integral. */
inline std::optional<Vec> to_lattice(const QVec& p) {
  if (denominator(p.x) != 1 || denominator(p.y) != 1) return std::nullopt;
  return Vec{static_cast<Int>(numerator(p.x)), static_cast<Int>(numerator(p.y))};
}

/** Signed 2x2 determinant det(a|b) = a.x*b.y - a.y*b.x. */
inline Int det2(Vec a, Vec b) { return a.x * b.y - a.y * b.x; }
inline Rat det2q(const QVec& a, const QVec& b) { return a.x * b.y - a.y * b.x; }

/** Rotation by +90 degrees: (a,b) -> (-b,a). */
inline Vec perp(Vec v) { return {-v.y, v.x}; }

/** Split v = len * mu with mu primitive, len >= 1.  Errors on v = 0. */
inline std::pair<Vec, Int> primitive_and_length(Vec v) {
  if (v.is_zero()) throw std::invalid_argument("primitive_and_length: zero direction");
  Int g = std::gcd(std::abs(v.x), std::abs(v.y));
  return {{v.x / g, v.y / g}, g};
}

inline bool is_primitive(Vec v) {
  return !v.is_zero() && std::gcd(std::abs(v.x), std::abs(v.y)) == 1;
}

/** A 2x2 integer matrix [[a,b],[c,d]], column action on vectors. */
struct Mat2 {
  Int a = 1, b = 0, c = 0, d = 1;

  static Mat2 identity() { return {}; }
  Int det() const { return a * d - b * c; }
  Int trace() const { return a + d; }
  Vec apply(Vec v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  QVec apply(const QVec& v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
  Mat2 transpose() const { return {a, c, b, d}; }
  friend Mat2 operator*(const Mat2& m, const Mat2& n) {
    return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
            m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
  }
  friend bool operator==(const Mat2& m, const Mat2& n) {
    return m.a == n.a && m.b == n.b && m.c == n.c && m.d == n.d;
  }
  /** Inverse; requires det = +-1. */
  Mat2 inverse() const {
    Int dt = det();
    if (dt != 1 && dt != -1) throw std::invalid_argument("Mat2::inverse: not unimodular");
    return {d / dt, -b / dt, -c / dt, a / dt};
  }
};

/** An affine map x -> Ax + t with A in GL(2,Z) and rational translation t. */
struct AffineMap {
  Mat2 linear;
  QVec translation;

  static AffineMap identity() { return {}; }
  QVec apply(const QVec& p) const { return linear.apply(p) + translation; }
  /** Directions transform by the linear part alone. */
  Vec apply_dir(Vec v) const { return linear.apply(v); }
  friend AffineMap operator*(const AffineMap& f, const AffineMap& g) {
    return {f.linear * g.linear, f.linear.apply(g.translation) + f.translation};
  }
  AffineMap inverse() const {
    Mat2 li = linear.inverse();
    return {li, QVec{} - li.apply(translation)};
  }
  friend bool operator==(const AffineMap& f, const AffineMap& g) {
    return f.linear == g.linear && f.translation == g.translation;
  }
};

/**
 * The unique determinant-one shear fixing the primitive direction u with
 * conjugacy power k: S(x) = x + k * det(u, x) * u.
 *
 * Convention check: shear_fixing((1,0),1) = [[1,1],[0,1]] and
 * shear_fixing((0,1),1) maps (1,0) to (1,-1).
 */
inline Mat2 shear_matrix(Vec u, Int k) {
  if (!is_primitive(u)) throw std::invalid_argument("shear: direction not primitive");
  return {1 - k * u.x * u.y, k * u.x * u.x, -k * u.y * u.y, 1 + k * u.x * u.y};
}

inline AffineMap shear_fixing(Vec u, Int k) { return {shear_matrix(u, k), {}}; }

/** The affine shear about the line {base + t*u}: conjugate of shear_matrix by
 *  the translation taking base to the origin. */
inline AffineMap shear_about_line(const QVec& base, Vec u, Int k) {
  Mat2 m = shear_matrix(u, k);
  return {m, base - m.apply(base)};
}

/**
 * A convex polygon with rational vertices in counterclockwise order, no three
 * consecutive collinear.  Supports Newton polygons, moment polygons, and the
 * dual polytopes of facet normals.
 */
struct Polygon {
  std::vector<QVec> vertices;

  std::size_t size() const { return vertices.size(); }
  const QVec& vertex(std::size_t i) const { return vertices[i % vertices.size()]; }

  /** Edge i runs from vertex i to vertex i+1. */
  QVec edge_vector(std::size_t i) const {
    return vertex(i + 1) - vertex(i);
  }

  /** Euclidean area by the shoelace formula (positive for CCW order). */
  Rat area() const {
    Rat s = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
      s += det2q(vertex(i), vertex(i + 1));
    return s / 2;
  }

  bool is_convex_ccw() const {
    std::size_t n = vertices.size();
    if (n < 3) return false;
    for (std::size_t i = 0; i < n; ++i) {
      Rat cr = det2q(edge_vector(i), edge_vector(i + 1));
      if (cr <= 0) return false;  // collinear consecutive edges also rejected
    }
    return true;
  }

  /** 1 = strictly inside, 0 = on the boundary, -1 = outside. */
  int side(const QVec& p) const {
    bool boundary = false;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      Rat cr = det2q(edge_vector(i), p - vertex(i));
      if (cr < 0) return -1;
      if (cr == 0) {
        // On the edge line; inside the segment span?
        const QVec a = vertex(i), b = vertex(i + 1);
        if ((std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x)) &&
            (std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y)))
          boundary = true;
        else
          return -1;
      }
    }
    return boundary ? 0 : 1;
  }

  bool contains(const QVec& p) const { return side(p) >= 0; }

  /** All lattice points in the closed polygon, in lexicographic order. */
  std::vector<Vec> lattice_points() const {
    Rat xmin = vertices[0].x, xmax = xmin, ymin = vertices[0].y, ymax = ymin;
    for (const auto& v : vertices) {
      xmin = std::min(xmin, v.x); xmax = std::max(xmax, v.x);
      ymin = std::min(ymin, v.y); ymax = std::max(ymax, v.y);
    }
    auto floor_rat = [](const Rat& r) {
      BigInt q = numerator(r) / denominator(r);
      if (r < 0 && q * denominator(r) != numerator(r)) --q;
      return static_cast<Int>(q);
    };
    std::vector<Vec> out;
    for (Int x = floor_rat(xmin); Rat(x) <= xmax; ++x)
      for (Int y = floor_rat(ymin); Rat(y) <= ymax; ++y)
        if (contains(QVec{Rat(x), Rat(y)})) out.push_back({x, y});
    return out;
  }
};

/** Convex hull of lattice points, CCW, collinear interior points dropped.
 *  A single point or a segment yields a degenerate 1- or 2-vertex polygon. */
inline Polygon convex_hull(std::vector<Vec> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  Polygon poly;
  if (pts.size() <= 2) {
    for (auto p : pts) poly.vertices.push_back(to_q(p));
    return poly;
  }
  std::vector<Vec> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {           // lower hull
    while (k >= 2 && det2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {  // upper hull
    while (k >= t && det2(h[k - 1] - h[k - 2], pts[i] - h[k - 2]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  poly.vertices.reserve(h.size());
  for (auto p : h) poly.vertices.push_back(to_q(p));
  return poly;
}

/**
 * All affine unimodular maps sending polygon P onto polygon Q as vertex
 * cycles.  The search matches one ordered vertex-plus-edges frame of P to
 * every frame of Q (both orientations); an affine map is determined by such a
 * frame, so the search is exhaustive.  Returns the empty list when the
 * polygons are inequivalent.
 */
inline std::vector<AffineMap> polygon_unimodular_maps(const Polygon& P, const Polygon& Q) {
  std::vector<AffineMap> out;
  std::size_t n = P.size();
  if (n != Q.size() || n < 3) return out;
  // Solve A * e = f, A * e2 = f2 over the rationals, keep integral unimodular A.
  auto solve = [](const QVec& e, const QVec& e2, const QVec& f, const QVec& f2)
      -> std::optional<Mat2> {
    Rat d = det2q(e, e2);
    if (d == 0) return std::nullopt;
    // A = [f f2] * [e e2]^{-1}
    Rat a = (f.x * e2.y - f2.x * e.y) / d;
    Rat b = (f2.x * e.x - f.x * e2.x) / d;
    Rat c = (f.y * e2.y - f2.y * e.y) / d;
    Rat dd = (f2.y * e.x - f.y * e2.x) / d;
    for (const Rat* r : {&a, &b, &c, &dd})
      if (denominator(*r) != 1) return std::nullopt;
    Mat2 m{static_cast<Int>(numerator(a)), static_cast<Int>(numerator(b)),
           static_cast<Int>(numerator(c)), static_cast<Int>(numerator(dd))};
    if (m.det() != 1 && m.det() != -1) return std::nullopt;
    return m;
  };
  for (int rev = 0; rev < 2; ++rev) {
    std::vector<QVec> q = Q.vertices;
    if (rev) std::reverse(q.begin(), q.end());
    for (std::size_t r = 0; r < n; ++r) {
      auto qv = [&](std::size_t i) { return q[(r + i) % n]; };
      auto m = solve(P.vertex(1) - P.vertex(0), P.vertex(2) - P.vertex(0),
                     qv(1) - qv(0), qv(2) - qv(0));
      if (!m) continue;
      AffineMap f{*m, qv(0) - m->apply(P.vertex(0))};
      bool ok = true;
      for (std::size_t i = 0; i < n && ok; ++i)
        ok = f.apply(P.vertex(i)) == qv(i);
      if (ok) out.push_back(f);
    }
  }
  return out;
}

}  // namespace trop
