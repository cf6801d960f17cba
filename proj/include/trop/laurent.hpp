#pragma once
/**
 * Bivariate Laurent polynomials over exact rationals: ring arithmetic,
 * Newton polygons, mutation coordinate changes with exact divisibility
 * tests, monomial GL(2,Z) transforms, and complex evaluation.
 */

#include <complex>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "trop/lattice.hpp"

namespace trop {

/**
 * A finitely supported map from Z^2 exponents to nonzero rational
 * coefficients, kept in lexicographic exponent order for deterministic
 * serialization.
 */
struct Laurent {
  std::map<Vec, Rat> terms;

  Laurent() = default;
  /** The monomial c * y^e. */
  static Laurent monomial(const Rat& c, Vec e) {
    Laurent w;
    if (c != 0) w.terms[e] = c;
    return w;
  }
  static Laurent constant(const Rat& c) { return monomial(c, {0, 0}); }

  bool is_zero() const { return terms.empty(); }

  Rat coefficient(Vec e) const {
    auto it = terms.find(e);
    return it == terms.end() ? Rat(0) : it->second;
  }
  Rat constant_term() const { return coefficient({0, 0}); }

  void add_term(Vec e, const Rat& c) {
    auto it = terms.find(e);
    if (it == terms.end()) {
      if (c != 0) terms.emplace(e, c);
    } else {
      it->second += c;
      if (it->second == 0) terms.erase(it);
    }
  }

  friend Laurent operator+(const Laurent& f, const Laurent& g) {
    Laurent h = f;
    for (const auto& [e, c] : g.terms) h.add_term(e, c);
    return h;
  }
  friend Laurent operator-(const Laurent& f, const Laurent& g) {
    Laurent h = f;
    for (const auto& [e, c] : g.terms) h.add_term(e, -c);
    return h;
  }
  friend Laurent operator*(const Laurent& f, const Laurent& g) {
    Laurent h;
    for (const auto& [e1, c1] : f.terms)
      for (const auto& [e2, c2] : g.terms) h.add_term(e1 + e2, c1 * c2);
    return h;
  }
  friend Laurent operator*(const Rat& s, const Laurent& f) {
    Laurent h;
    if (s == 0) return h;
    for (const auto& [e, c] : f.terms) h.terms[e] = s * c;
    return h;
  }
  friend bool operator==(const Laurent& f, const Laurent& g) {
    return f.terms == g.terms;
  }
  friend bool operator!=(const Laurent& f, const Laurent& g) { return !(f == g); }

  Laurent shifted(Vec e) const {  // multiply by y^e
    Laurent h;
    for (const auto& [m, c] : terms) h.terms[m + e] = c;
    return h;
  }

  Laurent pow(Int n) const {
    if (n < 0) throw std::invalid_argument("Laurent::pow: negative exponent");
    Laurent r = constant(1), b = *this;
    while (n > 0) {
      if (n & 1) r = r * b;
      b = b * b;
      n >>= 1;
    }
    return r;
  }
};

/** Newton polygon: convex hull of the exponents of the nonzero terms. */
inline Polygon newton_polygon(const Laurent& w) {
  if (w.is_zero()) throw std::invalid_argument("newton_polygon: zero polynomial");
  std::vector<Vec> pts;
  pts.reserve(w.terms.size());
  for (const auto& [e, c] : w.terms) pts.push_back(e);
  return convex_hull(std::move(pts));
}

/**
 * Exact division in the Laurent ring: returns f/g when g divides f exactly,
 * nullopt otherwise.  Works by peeling lexicographic leading terms; the
 * quotient support is confined a priori to the Minkowski box
 * [min(f)-max(g), max(f)-min(g)], which bounds the iteration count and makes
 * non-divisibility a finite verdict.
 */
inline std::optional<Laurent> divide_exact(const Laurent& f, const Laurent& g) {
  if (g.is_zero()) throw std::invalid_argument("divide_exact: division by zero");
  if (f.is_zero()) return Laurent{};
  auto bbox = [](const Laurent& w) {
    Vec lo = w.terms.begin()->first, hi = lo;
    for (const auto& [e, c] : w.terms) {
      lo.x = std::min(lo.x, e.x); lo.y = std::min(lo.y, e.y);
      hi.x = std::max(hi.x, e.x); hi.y = std::max(hi.y, e.y);
    }
    return std::pair{lo, hi};
  };
  auto [flo, fhi] = bbox(f);
  auto [glo, ghi] = bbox(g);
  const Vec qlo = flo - ghi, qhi = fhi - glo;

  const auto& [glead, gleadc] = *g.terms.rbegin();  // lex-largest term of g
  Laurent q, r = f;
  while (!r.is_zero()) {
    const auto& [rlead, rleadc] = *r.terms.rbegin();
    Vec t = rlead - glead;
    if (t.x < qlo.x || t.x > qhi.x || t.y < qlo.y || t.y > qhi.y)
      return std::nullopt;  // quotient term outside the admissible box
    Rat c = rleadc / gleadc;
    q.add_term(t, c);
    r = r - g.shifted(t) * Laurent::constant(c);
    // Each step strictly lowers the lex leading exponent of r, and every
    // quotient term is distinct, so the box bound guarantees termination.
  }
  return q;
}

/**
 * Mutation coordinate change in direction nu: each monomial y^mu is replaced
 * by y^mu * (1 + y1^{nu2} y2^{-nu1})^{<mu,nu>}.  Negative powers are handled
 * by clearing with a common power of the binomial and testing exact
 * divisibility; nullopt means "not mutable in this direction" (a verdict,
 * not a failure).
 */
inline std::optional<Laurent> mutate(const Laurent& w, Vec nu) {
  if (nu.is_zero()) throw std::invalid_argument("mutate: zero direction");
  const Vec factor_exp{nu.y, -nu.x};
  Laurent binom = Laurent::constant(1) + Laurent::monomial(1, factor_exp);
  Int shift = 0;
  for (const auto& [mu, c] : w.terms)
    shift = std::max(shift, -(mu.x * nu.x + mu.y * nu.y));
  Laurent num;
  for (const auto& [mu, c] : w.terms) {
    Int p = mu.x * nu.x + mu.y * nu.y + shift;
    num = num + Laurent::monomial(c, mu) * binom.pow(p);
  }
  if (shift == 0) return num;
  return divide_exact(num, binom.pow(shift));
}

/**
 * Mutation with respect to a weight vector w and factor a: y^mu is replaced
 * by y^mu * a^{<w,mu>}, with the same exact-divisibility convention.
 */
inline std::optional<Laurent> mutate_general(const Laurent& f, Vec w, const Laurent& a) {
  Laurent result;
  Int shift = 0;
  for (const auto& [mu, c] : f.terms)
    shift = std::max(shift, -(w.x * mu.x + w.y * mu.y));
  Laurent num;
  for (const auto& [mu, c] : f.terms) {
    Int p = w.x * mu.x + w.y * mu.y + shift;
    num = num + Laurent::monomial(c, mu) * a.pow(p);
  }
  if (shift == 0) return num;
  return divide_exact(num, a.pow(shift));
}

/** Per-edge mutability report for the Newton polygon of a potential. */
struct EdgeMutabilityReport {
  struct Edge {
    Vec from, to;        // Newton polygon edge endpoints
    Vec direction;       // primitive edge direction
    Vec inward_normal;   // primitive inward normal
    Int lattice_length = 0;
    bool mutable_edge = false;
  };
  std::vector<Edge> edges;
  bool all_mutable = true;
};

/**
 * Tests, for every edge e of the Newton polygon with primitive direction v_e,
 * lattice length n_e and primitive inward normal w_e, mutability with respect
 * to (w_e, (1 + y^{v_e})^{n_e}).
 */
inline EdgeMutabilityReport is_edgewise_mutable(const Laurent& f) {
  Polygon np = newton_polygon(f);
  if (np.size() < 3)
    throw std::invalid_argument("is_edgewise_mutable: degenerate Newton polygon");
  EdgeMutabilityReport rep;
  for (std::size_t i = 0; i < np.size(); ++i) {
    auto from = to_lattice(np.vertex(i)), to = to_lattice(np.vertex(i + 1));
    if (!from || !to)
      throw std::invalid_argument("is_edgewise_mutable: non-integral Newton vertex");
    auto [v, len] = primitive_and_length(*to - *from);
    Vec w = perp(v);  // interior lies left of a CCW edge
    Laurent a = (Laurent::constant(1) + Laurent::monomial(1, v)).pow(len);
    bool ok = mutate_general(f, w, a).has_value();
    rep.edges.push_back({*from, *to, v, w, len, ok});
    rep.all_mutable = rep.all_mutable && ok;
  }
  return rep;
}

/**
 * Transforms each exponent mu by the transpose of the linear part of A
 * (a multiplicative change of variables).  The translation part must vanish.
 */
inline Laurent monomial_transform(const Laurent& f, const AffineMap& A) {
  if (A.translation != QVec{})
    throw std::invalid_argument("monomial_transform: nonzero translation");
  Mat2 mt = A.linear.transpose();
  Laurent h;
  for (const auto& [e, c] : f.terms) h.add_term(mt.apply(e), c);
  return h;
}

/**
 * Searches for an exponent-linear unimodular change of variables carrying f1
 * to f2 exactly (candidates come from Newton polygon matchings with zero
 * translation; exponent translations are not considered equivalences).
 */
inline std::optional<AffineMap> equivalent_up_to_gl2(const Laurent& f1, const Laurent& f2) {
  if (f1.is_zero() || f2.is_zero()) return std::nullopt;
  for (const auto& m : polygon_unimodular_maps(newton_polygon(f1), newton_polygon(f2))) {
    if (m.translation != QVec{}) continue;
    // Polygon maps act on exponent points by the linear part; realize that
    // action through monomial_transform's transpose convention.
    AffineMap probe{m.linear.transpose(), {}};
    if (monomial_transform(f1, probe) == f2) return probe;
  }
  return std::nullopt;
}

/** Evaluate in double-precision complex arithmetic; both coordinates must be
 *  nonzero (negative exponents are poles at zero). */
inline std::complex<double> evaluate(const Laurent& f, std::complex<double> y1,
                                     std::complex<double> y2) {
  if (y1 == 0.0 || y2 == 0.0)
    throw std::invalid_argument("evaluate: coordinate at a pole");
  auto ipow = [](std::complex<double> b, Int n) {
    std::complex<double> r = 1.0;
    bool inv = n < 0;
    for (Int i = 0, m = inv ? -n : n; i < m; ++i) r *= b;
    return inv ? 1.0 / r : r;
  };
  std::complex<double> s = 0.0;
  for (const auto& [e, c] : f.terms)
    s += static_cast<double>(c) * ipow(y1, e.x) * ipow(y2, e.y);
  return s;
}

/** Human-readable form, lex-ordered, e.g. "1/y1 + y1*y2 + 2*y1^2 + y1^3/y2". */
inline std::string to_string(const Laurent& f) {
  if (f.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : f.terms) {
    Rat ac = c < 0 ? Rat(-c) : c;
    if (first) {
      if (c < 0) os << "-";
      first = false;
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    std::vector<std::string> num, den;
    auto var = [](const char* n, Int p) {
      std::string s = n;
      if (p > 1 || p < -1) s += "^" + std::to_string(p < 0 ? -p : p);
      return s;
    };
    if (e.x > 0) num.push_back(var("y1", e.x));
    if (e.y > 0) num.push_back(var("y2", e.y));
    if (e.x < 0) den.push_back(var("y1", e.x));
    if (e.y < 0) den.push_back(var("y2", e.y));
    std::string ns;
    if (ac != 1 || num.empty()) ns = rat_str(ac);
    for (const auto& v : num) ns += (ns.empty() ? "" : "*") + v;
    os << ns;
    for (const auto& v : den) os << "/" << v;
  }
  return os.str();
}

}  // namespace trop
