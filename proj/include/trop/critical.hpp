#pragma once
/**
 * Critical points and critical values of bivariate Laurent potentials.
 *
 * The critical equations are taken in logarithmic form,
 *   y1 dW/dy1 = 0,   y2 dW/dy2 = 0,
 * cleared of monomial denominators (harmless on the torus y1 y2 != 0).
 * The second variable is eliminated with an exact Sylvester resultant over
 * the rationals; its roots are found numerically by simultaneous
 * (Aberth-Ehrlich) iteration from a deterministic initial circle, polished
 * with Newton steps, then back-substituted to recover the full points.
 * Points are deduplicated and their values clustered with multiplicities.
 */

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "trop/laurent.hpp"

namespace trop {

using Cx = std::complex<double>;

/** Tolerances and iteration limits for the numerical stages. */
struct CriticalOptions {
  double residual_tol = 1e-8;       ///< accept a point if both equations vanish to this
  double point_cluster_tol = 1e-6;  ///< coordinates closer than this are one point
  double value_cluster_tol = 1e-6;  ///< values closer than this are one critical value
  int max_iterations = 500;         ///< Aberth-Ehrlich iteration cap
  /** Expected total multiplicity over all critical points, when known from
   *  the geometry (one per uncut corner plus one per node of the source
   *  diagram).  0 means: fall back to the Bernstein count of the gradient
   *  supports, which can overshoot for degenerate systems. */
  int total_count = 0;
};

/** One isolated critical point of the potential on the torus. */
struct CriticalPoint {
  Cx y1, y2;
  Cx value;             ///< W(y1, y2)
  int multiplicity = 1; ///< local multiplicity seen by the solver
  bool degenerate = false;  ///< root cluster collapsed, multiplicity heuristic
  double residual = 0;  ///< max |equation| at the point, scaled
};

/** A cluster of critical values agreeing within the value tolerance. */
struct CriticalValueCluster {
  Cx value;
  int multiplicity = 0;     ///< total multiplicity of points in the cluster
  bool degenerate = false;  ///< some contributing point was degenerate
};

/** Everything the solver found, with points and clustered values sorted. */
struct CriticalReport {
  std::vector<CriticalPoint> points;
  std::vector<CriticalValueCluster> values;
};

/** The logarithmic critical system (y1 dW/dy1, y2 dW/dy2). */
inline std::pair<Laurent, Laurent> log_critical_system(const Laurent& w) {
  Laurent p, q;
  for (const auto& [e, c] : w.terms) {
    p.add_term(e, Rat(e.x) * c);
    q.add_term(e, Rat(e.y) * c);
  }
  return {p, q};
}

namespace detail {

/** Dense univariate polynomial over Rat, low degree first. */
using RPoly = std::vector<Rat>;

inline void rp_trim(RPoly& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

inline Rat rp_eval(const RPoly& p, const Rat& t) {
  Rat v(0);
  for (std::size_t i = p.size(); i-- > 0;) v = v * t + p[i];
  return v;
}

inline Cx rp_eval(const RPoly& p, const Cx& t) {
  Cx v(0);
  for (std::size_t i = p.size(); i-- > 0;)
    v = v * t + static_cast<double>(p[i]);
  return v;
}

/** A Laurent polynomial as a dense polynomial in y2 with RPoly coefficients,
 * after clearing the monomial denominator (exponents shifted to >= 0). */
struct PolyY2 {
  std::vector<RPoly> coeff;  // coeff[j] multiplies y2^j
  int deg_y2() const { return static_cast<int>(coeff.size()) - 1; }
  int deg_y1() const {
    int d = 0;
    for (const auto& c : coeff)
      d = std::max(d, static_cast<int>(c.size()) - 1);
    return d;
  }
};

inline PolyY2 clear_denominators(const Laurent& f) {
  if (f.is_zero()) return {};
  Int min1 = 0, min2 = 0, max1 = 0, max2 = 0;
  bool first = true;
  for (const auto& [e, c] : f.terms) {
    if (first) { min1 = max1 = e.x; min2 = max2 = e.y; first = false; }
    min1 = std::min(min1, e.x); max1 = std::max(max1, e.x);
    min2 = std::min(min2, e.y); max2 = std::max(max2, e.y);
  }
  PolyY2 out;
  out.coeff.assign(static_cast<std::size_t>(max2 - min2) + 1, RPoly{});
  for (const auto& [e, c] : f.terms) {
    auto& row = out.coeff[static_cast<std::size_t>(e.y - min2)];
    std::size_t k = static_cast<std::size_t>(e.x - min1);
    if (row.size() <= k) row.resize(k + 1, Rat(0));
    row[k] = c;
  }
  for (auto& row : out.coeff) rp_trim(row);
  while (!out.coeff.empty() && out.coeff.back().empty()) out.coeff.pop_back();
  std::size_t lead = 0;
  while (lead < out.coeff.size() && out.coeff[lead].empty()) ++lead;
  out.coeff.erase(out.coeff.begin(),
                  out.coeff.begin() + static_cast<std::ptrdiff_t>(lead));
  return out;
}

/** Exact determinant of a square Rat matrix by Gaussian elimination. */
inline Rat rat_determinant(std::vector<std::vector<Rat>> m) {
  const std::size_t n = m.size();
  Rat det(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && m[piv][c] == 0) ++piv;
    if (piv == n) return Rat(0);
    if (piv != c) { std::swap(m[piv], m[c]); det = -det; }
    det *= m[c][c];
    Rat inv = Rat(1) / m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      if (m[r][c] == 0) continue;
      Rat f = m[r][c] * inv;
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return det;
}

/**
 * Resultant of two polynomials in y2 (coefficients polynomials in y1),
 * eliminating y2.  Computed exactly by evaluating the Sylvester determinant
 * at enough rational points and Lagrange-interpolating the result.
 */
inline RPoly sylvester_resultant(const PolyY2& a, const PolyY2& b) {
  const int n = a.deg_y2(), m = b.deg_y2();
  if (n < 0 || m < 0) return {};
  if (n == 0 && m == 0) return {Rat(1)};  // empty matrix
  const int deg_bound = n * b.deg_y1() + m * a.deg_y1();
  const std::size_t npts = static_cast<std::size_t>(deg_bound) + 1;
  const std::size_t size = static_cast<std::size_t>(n + m);

  std::vector<Rat> xs(npts), ys(npts);
  for (std::size_t s = 0; s < npts; ++s) {
    // 0, 1, -1, 2, -2, ...
    Int t = (s + 1) / 2;
    xs[s] = (s % 2 == 0) ? Rat(-t) : Rat(t);
    std::vector<std::vector<Rat>> mat(size, std::vector<Rat>(size, Rat(0)));
    for (int r = 0; r < m; ++r)
      for (int j = 0; j <= n; ++j)
        mat[static_cast<std::size_t>(r)][static_cast<std::size_t>(r + j)] =
            rp_eval(a.coeff[static_cast<std::size_t>(n - j)], xs[s]);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j <= m; ++j)
        mat[static_cast<std::size_t>(m + r)][static_cast<std::size_t>(r + j)] =
            rp_eval(b.coeff[static_cast<std::size_t>(m - j)], xs[s]);
    ys[s] = rat_determinant(std::move(mat));
  }

  // Newton-form interpolation through (xs, ys).
  std::vector<Rat> divided = ys;
  for (std::size_t lvl = 1; lvl < npts; ++lvl)
    for (std::size_t i = npts - 1; i >= lvl; --i)
      divided[i] = (divided[i] - divided[i - 1]) / (xs[i] - xs[i - lvl]);
  RPoly result{divided[npts - 1]};
  for (std::size_t i = npts - 1; i-- > 0;) {
    // result = result * (y - xs[i]) + divided[i]
    RPoly next(result.size() + 1, Rat(0));
    for (std::size_t k = 0; k < result.size(); ++k) {
      next[k + 1] += result[k];
      next[k] -= xs[i] * result[k];
    }
    next[0] += divided[i];
    result = std::move(next);
  }
  rp_trim(result);
  return result;
}

// --- univariate polynomial arithmetic over Rat ---------------------------

inline RPoly rp_mul(const RPoly& a, const RPoly& b) {
  if (a.empty() || b.empty()) return {};
  RPoly c(a.size() + b.size() - 1, Rat(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  rp_trim(c);
  return c;
}

/** Long division a = q*b + r over Q; returns {q, r}. */
inline std::pair<RPoly, RPoly> rp_divmod(RPoly a, const RPoly& b) {
  RPoly q;
  if (b.empty()) throw std::invalid_argument("rp_divmod: division by zero");
  if (a.size() < b.size()) return {q, a};
  q.assign(a.size() - b.size() + 1, Rat(0));
  while (a.size() >= b.size() && !a.empty()) {
    Rat c = a.back() / b.back();
    std::size_t off = a.size() - b.size();
    q[off] = c;
    for (std::size_t i = 0; i < b.size(); ++i) a[off + i] -= c * b[i];
    rp_trim(a);
    if (a.size() < b.size()) break;
  }
  rp_trim(q);
  return {q, a};
}

inline RPoly rp_gcd(RPoly a, RPoly b) {
  rp_trim(a);
  rp_trim(b);
  while (!b.empty()) {
    RPoly r = rp_divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    Rat lead = a.back();
    for (auto& c : a) c /= lead;  // monic normalization
  }
  return a;
}

inline RPoly rp_div_exact(const RPoly& a, const RPoly& b) {
  auto [q, r] = rp_divmod(a, b);
  if (!r.empty()) throw std::logic_error("rp_div_exact: inexact division");
  return q;
}

// --- bivariate gcd via a primitive pseudo-remainder sequence -------------

inline RPoly py_content(const PolyY2& f) {
  RPoly c;
  for (const auto& row : f.coeff)
    if (!row.empty()) c = c.empty() ? row : rp_gcd(c, row);
  return c;
}

inline PolyY2 py_divide_content(const PolyY2& f, const RPoly& c) {
  PolyY2 g;
  for (const auto& row : f.coeff)
    g.coeff.push_back(row.empty() ? RPoly{} : rp_div_exact(row, c));
  return g;
}

inline void py_trim(PolyY2& f) {
  while (!f.coeff.empty() && f.coeff.back().empty()) f.coeff.pop_back();
}

/** lc(b)^k * a mod b in (Q[y1])[y2] (pseudo-remainder). */
inline PolyY2 py_pseudo_rem(PolyY2 a, const PolyY2& b) {
  py_trim(a);
  const int db = b.deg_y2();
  const RPoly& lb = b.coeff.back();
  while (a.deg_y2() >= db && !a.coeff.empty()) {
    int shift = a.deg_y2() - db;
    RPoly la = a.coeff.back();
    PolyY2 next;
    next.coeff.assign(a.coeff.size(), RPoly{});
    for (std::size_t j = 0; j < a.coeff.size(); ++j)
      next.coeff[j] = rp_mul(a.coeff[j], lb);
    for (int j = 0; j <= db; ++j) {
      std::size_t k = static_cast<std::size_t>(j + shift);
      RPoly sub = rp_mul(b.coeff[static_cast<std::size_t>(j)], la);
      RPoly& dst = next.coeff[k];
      if (dst.size() < sub.size()) dst.resize(sub.size(), Rat(0));
      for (std::size_t i = 0; i < sub.size(); ++i) dst[i] -= sub[i];
      rp_trim(dst);
    }
    next.coeff.pop_back();  // leading term cancels by construction
    py_trim(next);
    a = std::move(next);
  }
  return a;
}

/** GCD of two bivariate polynomials (content times primitive gcd in y2). */
inline PolyY2 py_gcd(PolyY2 a, PolyY2 b) {
  py_trim(a);
  py_trim(b);
  if (a.coeff.empty()) return b;
  if (b.coeff.empty()) return a;
  RPoly ca = py_content(a), cb = py_content(b);
  RPoly cg = rp_gcd(ca, cb);
  a = py_divide_content(a, ca);
  b = py_divide_content(b, cb);
  if (a.deg_y2() < b.deg_y2()) std::swap(a, b);
  while (!b.coeff.empty()) {
    PolyY2 r = py_pseudo_rem(a, b);
    py_trim(r);
    a = std::move(b);
    if (r.coeff.empty()) {
      b = PolyY2{};
    } else {
      b = py_divide_content(r, py_content(r));
    }
  }
  PolyY2 g = py_divide_content(a, py_content(a));
  // restore the common content
  for (auto& row : g.coeff) row = rp_mul(row, cg);
  return g;
}

inline Laurent py_to_laurent(const PolyY2& f) {
  Laurent out;
  for (std::size_t j = 0; j < f.coeff.size(); ++j)
    for (std::size_t k = 0; k < f.coeff[j].size(); ++k)
      out.add_term({static_cast<Int>(k), static_cast<Int>(j)}, f.coeff[j][k]);
  return out;
}

inline bool py_is_constant(const PolyY2& f) {
  if (f.coeff.empty()) return true;
  if (f.coeff.size() > 1) return false;
  return f.coeff[0].size() <= 1;
}

/** Complex polynomial, low degree first. */
using CPoly = std::vector<Cx>;

inline Cx cp_eval(const CPoly& p, const Cx& z) {
  Cx v(0);
  for (std::size_t i = p.size(); i-- > 0;) v = v * z + p[i];
  return v;
}

inline CPoly cp_derivative(const CPoly& p) {
  CPoly d;
  for (std::size_t i = 1; i < p.size(); ++i)
    d.push_back(static_cast<double>(i) * p[i]);
  return d;
}

/**
 * All complex roots of a polynomial by simultaneous Aberth-Ehrlich
 * iteration started on a deterministic circle, then Newton-polished.
 * Leading/trailing quasi-zero coefficients must be stripped by the caller.
 */
inline std::vector<Cx> aberth_roots(CPoly p, int max_iterations) {
  while (!p.empty() && std::abs(p.back()) == 0) p.pop_back();
  if (p.size() <= 1) return {};
  double scale = 0;
  for (const auto& c : p) scale = std::max(scale, std::abs(c));
  for (auto& c : p) c /= scale;
  const std::size_t n = p.size() - 1;
  CPoly dp = cp_derivative(p);

  double lead = std::abs(p[n]);
  double radius = 0;
  for (std::size_t i = 0; i < n; ++i)
    radius = std::max(radius, std::abs(p[i]) / lead);
  radius = 1.0 + radius;  // Cauchy bound

  std::vector<Cx> z(n);
  const double pi = 3.14159265358979323846;
  for (std::size_t k = 0; k < n; ++k) {
    double ang = 2.0 * pi * static_cast<double>(k) / static_cast<double>(n) + 0.7;
    z[k] = radius * Cx(std::cos(ang), std::sin(ang));
  }

  for (int it = 0; it < max_iterations; ++it) {
    double worst = 0;
    for (std::size_t k = 0; k < n; ++k) {
      Cx pv = cp_eval(p, z[k]);
      Cx dv = cp_eval(dp, z[k]);
      if (std::abs(dv) == 0) dv = Cx(1e-300, 0);
      Cx w = pv / dv;
      Cx s(0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) s += Cx(1.0, 0) / (z[k] - z[j]);
      Cx denom = Cx(1.0, 0) - w * s;
      Cx delta = (std::abs(denom) == 0) ? w : w / denom;
      z[k] -= delta;
      worst = std::max(worst, std::abs(delta) / (1.0 + std::abs(z[k])));
    }
    if (worst < 1e-14) break;
  }
  // Newton polish.
  for (auto& r : z)
    for (int s = 0; s < 8; ++s) {
      Cx dv = cp_eval(dp, r);
      if (std::abs(dv) == 0) break;
      Cx step = cp_eval(p, r) / dv;
      r -= step;
      if (std::abs(step) < 1e-16 * (1.0 + std::abs(r))) break;
    }
  std::sort(z.begin(), z.end(), [](const Cx& a, const Cx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return z;
}

/** Cluster sorted-ish complex numbers by proximity; returns representative
 * (centroid) and count per cluster. */
inline std::vector<std::pair<Cx, int>> cluster_complex(std::vector<Cx> v,
                                                       double tol) {
  std::sort(v.begin(), v.end(), [](const Cx& a, const Cx& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<std::pair<Cx, int>> out;
  std::vector<char> taken(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (taken[i]) continue;
    Cx sum = v[i];
    int cnt = 1;
    taken[i] = 1;
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      if (taken[j]) continue;
      if (std::abs(v[j] - sum / static_cast<double>(cnt)) <
          tol * (1.0 + std::abs(v[i]))) {
        sum += v[j];
        ++cnt;
        taken[j] = 1;
      }
    }
    out.push_back({sum / static_cast<double>(cnt), cnt});
  }
  return out;
}

/** Evaluate a PolyY2 at a fixed complex y1: a complex polynomial in y2. */
inline CPoly specialize_y1(const PolyY2& f, const Cx& y1) {
  CPoly out;
  for (const auto& row : f.coeff) out.push_back(rp_eval(row, y1));
  while (!out.empty() && std::abs(out.back()) < 1e-12) out.pop_back();
  return out;
}

inline double laurent_scale(const Laurent& f, const Cx& y1, const Cx& y2) {
  double s = 1.0;
  for (const auto& [e, c] : f.terms)
    s += std::abs(static_cast<double>(c)) *
         std::pow(std::abs(y1), static_cast<double>(e.x)) *
         std::pow(std::abs(y2), static_cast<double>(e.y));
  return s;
}

}  // namespace detail

/**
 * Determinant of the logarithmic Hessian  [ t_i t_j W ]  at a point, where
 * t_i = y_i d/dy_i.
 */
inline Cx hessian_det(const Laurent& w, const Cx& y1, const Cx& y2) {
  Laurent h11, h12, h22;
  for (const auto& [e, c] : w.terms) {
    h11.add_term(e, Rat(e.x) * Rat(e.x) * c);
    h12.add_term(e, Rat(e.x) * Rat(e.y) * c);
    h22.add_term(e, Rat(e.y) * Rat(e.y) * c);
  }
  Cx a = evaluate(h11, y1, y2), b = evaluate(h12, y1, y2),
     d = evaluate(h22, y1, y2);
  return a * d - b * b;
}

namespace detail {

/** A couple of damped Newton steps on the full system (p, q) in (y1, y2). */
inline void newton_polish_2d(const Laurent& p, const Laurent& q, Cx& y1,
                             Cx& y2) {
  Laurent t1p, t2p, t1q, t2q;  // logarithmic partials
  for (const auto& [e, c] : p.terms) {
    t1p.add_term(e, Rat(e.x) * c);
    t2p.add_term(e, Rat(e.y) * c);
  }
  for (const auto& [e, c] : q.terms) {
    t1q.add_term(e, Rat(e.x) * c);
    t2q.add_term(e, Rat(e.y) * c);
  }
  for (int it = 0; it < 40; ++it) {
    Cx fp = evaluate(p, y1, y2), fq = evaluate(q, y1, y2);
    // Jacobian in ordinary coordinates: d/dy_i = (theta_i ...) / y_i.
    Cx j11 = evaluate(t1p, y1, y2) / y1, j12 = evaluate(t2p, y1, y2) / y2;
    Cx j21 = evaluate(t1q, y1, y2) / y1, j22 = evaluate(t2q, y1, y2) / y2;
    Cx det = j11 * j22 - j12 * j21;
    if (std::abs(det) < 1e-14) return;  // degenerate point: leave as is
    Cx d1 = (fp * j22 - fq * j12) / det;
    Cx d2 = (fq * j11 - fp * j21) / det;
    y1 -= d1;
    y2 -= d2;
    if (std::abs(d1) + std::abs(d2) < 1e-15 * (1.0 + std::abs(y1) + std::abs(y2)))
      break;
  }
}

}  // namespace detail

/**
 * All critical points of the potential on the torus.  Isolated points come
 * from an exact resultant elimination followed by numerical root finding
 * and a full-system Newton polish.  If the gradient components share a
 * nonconstant common factor, the potential has whole critical curves: their
 * (constant) values are sampled and reported as degenerate clusters whose
 * multiplicity is the Kushnirenko count of the Newton polygon minus the
 * isolated multiplicities.
 */
inline CriticalReport critical_points(const Laurent& w,
                                      const CriticalOptions& opt = {}) {
  auto [p, q] = log_critical_system(w);
  if (p.is_zero() && q.is_zero())
    throw std::runtime_error("critical_points: potential is constant");

  detail::PolyY2 P0 = detail::clear_denominators(p);
  detail::PolyY2 Q0 = detail::clear_denominators(q);
  if (P0.coeff.empty() || Q0.coeff.empty())
    throw std::runtime_error("critical_points: non-isolated critical set");

  // Factor out the common divisor: it carries the non-isolated components.
  detail::PolyY2 g = detail::py_gcd(P0, Q0);
  bool has_components = !detail::py_is_constant(g);
  Laurent gl = detail::py_to_laurent(g);
  Laurent pr = p, qr = q;
  if (has_components) {
    auto pd = divide_exact(p, gl), qd = divide_exact(q, gl);
    if (!pd || !qd)
      throw std::logic_error("critical_points: common factor does not divide");
    pr = *pd;
    qr = *qd;
  }

  detail::PolyY2 P = detail::clear_denominators(pr);
  detail::PolyY2 Q = detail::clear_denominators(qr);
  std::vector<Cx> y1_roots;
  if (!P.coeff.empty() && !Q.coeff.empty()) {
    detail::RPoly res = detail::sylvester_resultant(P, Q);
    if (res.empty() && !has_components)
      throw std::runtime_error("critical_points: non-isolated critical set");
    std::size_t strip = 0;  // roots at y1 = 0 lie outside the torus
    while (strip < res.size() && res[strip] == 0) ++strip;
    res.erase(res.begin(), res.begin() + static_cast<std::ptrdiff_t>(strip));
    detail::CPoly resc;
    double rscale = 1e-300;
    for (const auto& c : res)
      rscale = std::max(rscale, std::abs(static_cast<double>(c)));
    for (const auto& c : res)
      resc.push_back(Cx(static_cast<double>(c) / rscale, 0));
    y1_roots = detail::aberth_roots(resc, opt.max_iterations);
  }

  auto y1_clusters = detail::cluster_complex(y1_roots, opt.point_cluster_tol);

  CriticalReport rep;
  std::vector<Cx> escape_vals;
  for (const auto& [y1c, mult1] : y1_clusters) {
    if (std::abs(y1c) < opt.point_cluster_tol) continue;
    detail::CPoly py2 = detail::specialize_y1(P, y1c);
    std::vector<Cx> cands = detail::aberth_roots(py2, opt.max_iterations);
    if (py2.size() <= 1)
      cands = detail::aberth_roots(detail::specialize_y1(Q, y1c),
                                   opt.max_iterations);
    auto y2_clusters = detail::cluster_complex(cands, opt.point_cluster_tol);
    for (const auto& [y2c, mult2] : y2_clusters) {
      if (std::abs(y2c) < opt.point_cluster_tol) continue;
      Cx y1 = y1c, y2 = y2c;
      double mag = std::max(std::max(std::abs(y1), std::abs(y2)),
                            std::max(1.0 / std::abs(y1), 1.0 / std::abs(y2)));
      if (mag > 1e6) {
        // A solution running off toward the toric boundary.  If the
        // potential stays bounded along it, the limit value still carries
        // critical mass; remember it for the multiplicity completion.
        Cx v = evaluate(w, y1, y2);
        if (std::isfinite(v.real()) && std::isfinite(v.imag()) &&
            std::abs(v) < 1e9)
          escape_vals.push_back(v);
        continue;
      }
      detail::newton_polish_2d(pr, qr, y1, y2);
      mag = std::max(std::max(std::abs(y1), std::abs(y2)),
                     std::max(1.0 / std::abs(y1), 1.0 / std::abs(y2)));
      if (mag > 1e6) {  // the polish can also drive a seed off to the boundary
        Cx v = evaluate(w, y1, y2);
        if (std::isfinite(v.real()) && std::isfinite(v.imag()) &&
            std::abs(v) < 1e9)
          escape_vals.push_back(v);
        continue;
      }
      if (std::abs(y1) < opt.point_cluster_tol ||
          std::abs(y2) < opt.point_cluster_tol)
        continue;
      if (has_components) {  // skip points on the degenerate components
        double gs = std::abs(evaluate(gl, y1, y2)) /
                    detail::laurent_scale(gl, y1, y2);
        if (gs < opt.residual_tol * 10) continue;
      }
      double rp_ = std::abs(evaluate(pr, y1, y2)) /
                   detail::laurent_scale(pr, y1, y2);
      double rq_ = std::abs(evaluate(qr, y1, y2)) /
                   detail::laurent_scale(qr, y1, y2);
      double residual = std::max(rp_, rq_);
      if (residual > opt.residual_tol) continue;
      CriticalPoint cp;
      cp.y1 = y1;
      cp.y2 = y2;
      cp.value = evaluate(w, y1, y2);
      cp.multiplicity = std::max(1, mult2);
      cp.residual = residual;
      // Nondegeneracy is decided by the logarithmic Hessian, which is the
      // reliable signal; the root clustering only seeds the search.
      Cx h = hessian_det(w, y1, y2);
      cp.degenerate = std::abs(h) < 1e-6 * detail::laurent_scale(w, y1, y2);
      if (!cp.degenerate) cp.multiplicity = 1;
      bool dup = false;  // the polish can pull two clusters to one point;
                         // unpolishable multiple roots sit further apart
      for (const auto& prev : rep.points) {
        double tol = (prev.degenerate && cp.degenerate)
                         ? std::max(1e-4, opt.point_cluster_tol)
                         : opt.point_cluster_tol;
        if (std::abs(prev.y1 - y1) + std::abs(prev.y2 - y2) <
            tol * (1.0 + std::abs(y1) + std::abs(y2))) {
          dup = true;
          break;
        }
      }
      if (dup) continue;
      rep.points.push_back(cp);
    }
  }

  // Total solution count of the cleared gradient system on the torus
  // (Bernstein: the mixed area of the two Newton polygons).  The gap not
  // accounted for by nondegenerate points sits in the degenerate part.
  int bernstein = 0;
  {
    std::vector<Vec> sum_pts;
    for (const auto& [e1, c1] : p.terms)
      for (const auto& [e2, c2] : q.terms) sum_pts.push_back(e1 + e2);
    Polygon S = convex_hull(std::move(sum_pts));
    Rat mv = S.area() - newton_polygon(p).area() - newton_polygon(q).area();
    bernstein = static_cast<int>(numerator(mv));
  }

  std::vector<Cx> comp_vals;
  if (has_components) {
    // Sample each critical curve: the potential is constant along it, so a
    // handful of slices determine the component values.
    bool vertical = g.deg_y2() == 0;
    for (int s = 0; s < 5; ++s) {
      Cx t(0.83 + 0.19 * s, 0.11 + 0.07 * s);
      if (!vertical) {
        detail::CPoly gs = detail::specialize_y1(g, t);
        for (const Cx& r : detail::aberth_roots(gs, opt.max_iterations))
          if (std::abs(r) > opt.point_cluster_tol)
            comp_vals.push_back(evaluate(w, t, r));
      } else {
        detail::RPoly g1;
        for (const auto& row : g.coeff)
          if (!row.empty()) g1 = row;
        detail::CPoly gc;
        for (const auto& c : g1) gc.push_back(Cx(static_cast<double>(c), 0));
        for (const Cx& r : detail::aberth_roots(gc, opt.max_iterations))
          if (std::abs(r) > opt.point_cluster_tol)
            comp_vals.push_back(evaluate(w, r, t));
      }
    }
  }
  auto comp_clusters = detail::cluster_complex(comp_vals, opt.value_cluster_tol);
  // Bounded limit values of boundary escapes join the completion pool; a
  // value already represented by a component is not counted twice.
  for (const auto& [ev, ec] : detail::cluster_complex(escape_vals,
                                                      opt.value_cluster_tol)) {
    bool known = false;
    for (const auto& [cv, cc] : comp_clusters)
      if (std::abs(cv - ev) < opt.value_cluster_tol * (1.0 + std::abs(cv))) {
        known = true;
        break;
      }
    if (!known) comp_clusters.emplace_back(ev, ec);
  }
  int comp_share = 0;

  {
    int nondegen = 0, degen_elim = 0, degen_entities = 0;
    for (const auto& cp : rep.points) {
      if (cp.degenerate) {
        degen_elim += cp.multiplicity;
        ++degen_entities;
      } else {
        ++nondegen;
      }
    }
    degen_entities += static_cast<int>(comp_clusters.size());
    int total = opt.total_count > 0 ? opt.total_count : bernstein;
    int deficit = std::max(0, total - nondegen);
    if (degen_entities == 1) {
      // A single degenerate entity absorbs the whole gap exactly.
      for (auto& cp : rep.points)
        if (cp.degenerate) cp.multiplicity = deficit;
    }
    int assigned = 0;
    for (const auto& cp : rep.points)
      if (cp.degenerate) assigned += cp.multiplicity;
    if (!comp_clusters.empty())
      comp_share = std::max(0, deficit - assigned) /
                   static_cast<int>(comp_clusters.size());
    (void)degen_elim;
  }

  std::sort(rep.points.begin(), rep.points.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) {
              if (a.y1.real() != b.y1.real()) return a.y1.real() < b.y1.real();
              if (a.y1.imag() != b.y1.imag()) return a.y1.imag() < b.y1.imag();
              if (a.y2.real() != b.y2.real()) return a.y2.real() < b.y2.real();
              return a.y2.imag() < b.y2.imag();
            });

  // Cluster values.
  struct Acc { Cx sum{0, 0}; int mult = 0; bool degen = false; };
  std::vector<Acc> accs;
  for (const auto& cp : rep.points) {
    bool placed = false;
    for (auto& a : accs) {
      Cx rep_val = a.sum / static_cast<double>(a.mult);
      if (std::abs(cp.value - rep_val) <
          opt.value_cluster_tol * (1.0 + std::abs(rep_val))) {
        a.sum += cp.value * static_cast<double>(cp.multiplicity);
        a.mult += cp.multiplicity;
        a.degen = a.degen || cp.degenerate;
        placed = true;
        break;
      }
    }
    if (!placed)
      accs.push_back({cp.value * static_cast<double>(cp.multiplicity),
                      cp.multiplicity, cp.degenerate});
  }
  for (const auto& a : accs)
    rep.values.push_back({a.sum / static_cast<double>(a.mult), a.mult, a.degen});

  for (const auto& [val, cnt] : comp_clusters) {
    bool merged = false;
    for (auto& v : rep.values)
      if (std::abs(v.value - val) <
          opt.value_cluster_tol * (1.0 + std::abs(val))) {
        v.multiplicity += comp_share;
        v.degenerate = true;
        merged = true;
        break;
      }
    if (!merged) rep.values.push_back({val, comp_share, true});
  }
  std::sort(rep.values.begin(), rep.values.end(),
            [](const CriticalValueCluster& a, const CriticalValueCluster& b) {
              if (a.value.real() != b.value.real())
                return a.value.real() < b.value.real();
              return a.value.imag() < b.value.imag();
            });
  return rep;
}

}  // namespace trop
