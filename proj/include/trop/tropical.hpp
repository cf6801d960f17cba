#pragma once
/**
 * Tropical curve enumeration in the developed picture of a base diagram:
 * Maslov-index-two disk trees rooted at the marked fiber, rigid sphere
 * trees, their exact multiplicities, and the resulting disk potential.
 */

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <atomic>
#include <thread>
#include <tuple>
#include <vector>

#include "trop/dualaffine.hpp"

namespace trop {

// ---------------------------------------------------------------------------
// Multiplicity rules.
// ---------------------------------------------------------------------------

/** Closed form for the multiple-cover weight: (-1)^(l-1) / l^2. */
inline Rat bp_multiplicity(Int l) {
  if (l < 1) throw std::invalid_argument("bp_multiplicity: l >= 1");
  Rat r(1, l * l);
  return (l % 2 == 0) ? -r : r;
}

/**
 * Solve the recursion 0 = sum over partitions Theta of d of
 * (prod d_i n_{d_i}) / (prod nu_j(Theta)!) with n_1 = 1, for d = 2..d_max.
 * Returns [n_1, ..., n_d_max]; an independent oracle for bp_multiplicity.
 */
inline std::vector<Rat> bp_recursion_solve(Int d_max) {
  std::vector<Rat> n{Rat(1)};  // n_1
  for (Int d = 2; d <= d_max; ++d) {
    // Accumulate over partitions of d other than {d} itself.
    Rat acc = 0;
    std::vector<Int> parts;
    std::function<void(Int, Int)> rec = [&](Int rest, Int max_part) {
      if (rest == 0) {
        if (parts.size() < 2) return;  // skip the trivial partition {d}
        Rat term = 1;
        for (Int p : parts) term *= Rat(p) * n[static_cast<std::size_t>(p - 1)];
        // Divide by the factorials of the part multiplicities.
        Int run = 1;
        for (std::size_t i = 1; i <= parts.size(); ++i) {
          if (i < parts.size() && parts[i] == parts[i - 1]) { ++run; continue; }
          Int fact = 1;
          for (Int j = 2; j <= run; ++j) fact *= j;
          term /= Rat(fact);
          run = 1;
        }
        acc += term;
        return;
      }
      for (Int p = std::min(rest, max_part); p >= 1; --p) {
        parts.push_back(p);
        rec(rest - p, p);
        parts.pop_back();
      }
    };
    rec(d, d - 1);
    // The partition {d} contributes d * n_d; solve for n_d.
    n.push_back(-acc / Rat(d));
  }
  return n;
}

/** Integer binomial coefficient (0 when n < 0 or n > k). */
inline Int binomial_int(Int k, Int n) {
  if (n < 0 || n > k) return 0;
  if (n > k - n) n = k - n;
  BigInt r = 1;
  for (Int i = 1; i <= n; ++i) { r *= k - n + i; r /= i; }
  return static_cast<Int>(r);
}

/** Weight of drawing n of the k available unit leaves of a bunched edge. */
inline Rat bunched_multiplicity(Int k, Int n) { return Rat(binomial_int(k, n)); }

/** Multiplicity of a trivalent merge of weighted edges e1, e2. */
inline Int mikhalkin_multiplicity(Vec e1, Vec e2) {
  Int d = det2(e1, e2);
  return d < 0 ? -d : d;
}

/**
 * Multiplicity of a vertex with three or more incoming weighted edges,
 * computed by the staged-offset perturbation: edges are merged pairwise in
 * sequence, each stage contributing its trivalent multiplicity.  The result
 * is checked against the reversed ordering; a disagreement means the vertex
 * is not rigid and is an error.
 */
inline Int higher_valence_multiplicity(std::vector<Vec> edges) {
  if (edges.size() < 3)
    throw std::invalid_argument("higher_valence_multiplicity: need >= 3 edges");
  auto staged = [](std::vector<Vec> es) {
    Int mult = 1;
    Vec acc = es[0];
    for (std::size_t i = 1; i < es.size(); ++i) {
      mult *= mikhalkin_multiplicity(acc, es[i]);
      acc = acc + es[i];
    }
    return mult;
  };
  Int fwd = staged(edges);
  std::reverse(edges.begin(), edges.end());
  Int bwd = staged(edges);
  if (fwd != bwd)
    throw std::invalid_argument(
        "higher_valence_multiplicity: ordering-dependent (vertex not rigid)");
  return fwd;
}

// ---------------------------------------------------------------------------
// Trees.
// ---------------------------------------------------------------------------

struct EnumerationBounds {
  Int max_winding = 3;
  Int max_leaf_units = 0;  // 0 = derive from the longest dual-polytope edge
  Int max_merges = 12;
  Int max_junction_det = 2;  // largest front-crossing determinant that sprouts
                             // induced rays
  Int max_induced_merges = 1;  // induced-ray merges allowed per tree
};

/** One merge along a tree branch: a bunched leaf or a composite sub-branch
 *  joins at `point`. */
struct TreeEvent {
  QVec point;
  std::size_t singular_index = 0;  // for bunched leaves
  Int units = 0;                   // n > 0 for a bunched leaf; 0 = composite
  Vec leaf_dir;                    // drawn direction of the joining edge
  Vec chain_dir;                   // drawn trunk direction before the merge
  Rat factor = 1;
  std::string sub_key;             // canonical key of a composite sub-branch
};

struct TropicalTree {
  Vec initial_direction;   // class exponent: disk direction at the fiber,
                           // or the total leaf weight seed for spheres
  bool is_disk = true;
  Vec output_direction;    // primitive outward normal at the escape
  int output_sector = -1;
  std::vector<TreeEvent> events;
  Rat multiplicity = 1;
  std::string key;

  /** Number of underlying single-node configurations. */
  Int config_count(const std::vector<SingularPoint>& bs) const {
    Int c = 1;
    for (const auto& e : events)
      if (e.units > 0)
        c *= binomial_int(static_cast<Int>(bs[e.singular_index].node_count), e.units);
    return c;
  }
};

struct WeightedCount {
  TropicalTree tree;
  Rat multiplicity;
};

/** Sum of m(T) * y^(initial direction) over the given trees. */
inline Laurent assemble_potential(const std::vector<TropicalTree>& trees) {
  Laurent w;
  for (const auto& t : trees) w = w + Laurent::monomial(t.multiplicity, t.initial_direction);
  return w;
}

/**
 * Every edge of the Newton polygon of w must carry the binomial pattern
 * C(L, j) against the vertex coefficients, and the vertex coefficients must
 * be 1 (after normalizing each edge by its endpoints this is the condition
 * for mutability across every edge).
 */
inline bool binomial_edge_check(const Laurent& w) {
  Polygon np = newton_polygon(w);
  if (np.size() < 3) return false;
  for (std::size_t i = 0; i < np.size(); ++i) {
    auto a = to_lattice(np.vertex(i)), b = to_lattice(np.vertex(i + 1));
    if (!a || !b) return false;
    if (w.coefficient(*a) != 1) return false;
    auto [dir, len] = primitive_and_length(*b - *a);
    for (Int j = 0; j <= len; ++j)
      if (w.coefficient(*a + j * dir) != Rat(binomial_int(len, j))) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Enumeration engine.
// ---------------------------------------------------------------------------

namespace detail {

/** Longest dual-polytope edge, the default bunching budget. */
inline Int default_leaf_units(const BaseDiagram& d) {
  Polygon dp = dual_polytope(d);
  Int best = 1;
  if (dp.size() < 2) return best;
  for (std::size_t i = 0; i < dp.size(); ++i) {
    QVec e = dp.vertex(i + 1) - dp.vertex(i);
    Vec ev{static_cast<Int>(numerator(e.x)), static_cast<Int>(numerator(e.y))};
    if (ev.is_zero()) continue;
    best = std::max(best, primitive_and_length(ev).second);
  }
  return best;
}

/** Deterministic fiber offsets used to resolve non-generic incidences. */
inline QVec fiber_offset(std::size_t attempt) {
  if (attempt == 0) return {0, 0};
  static const Vec dirs[] = {{1, 2}, {2, 1}, {1, -2}, {-2, 1}, {-1, 2},
                             {2, -1}, {-1, -2}, {-2, -1}};
  Rat eps(1, 997 + 101 * static_cast<Int>(attempt));
  Vec u = dirs[(attempt - 1) % 8];
  return {eps * Rat(u.x), eps * Rat(u.y)};
}

inline std::string vec_key(Vec v) {
  return std::to_string(v.x) + "," + std::to_string(v.y);
}
inline std::string qvec_key(const QVec& v) {
  return rat_str(v.x) + "," + rat_str(v.y);
}

// ---------------------------------------------------------------------------
// Local wall scattering.
//
// Where two wall fronts cross transversally, consistency of the wall-crossing
// automorphisms around the crossing forces a fan of induced rays.  Each ray
// has a direction p*a + q*b (a, b the front directions, p, q >= 1) and a
// weight function written as a product prod_k (1 + z^{k(p,q)})^{c_k}; the
// exponents c_k are computed order by order so that the full loop of
// crossings composes to the identity.
// ---------------------------------------------------------------------------

/** One induced ray of a junction: primitive frame direction and the power
 *  series coefficients of its weight function (F[0] = 1). */
struct ScatterRay {
  Vec pq;
  std::vector<Rat> F;
};

/** Truncated bivariate power series used by the junction solver. */
class JSeries {
 public:
  explicit JSeries(int n) : n_(n), c_((n + 1) * (n + 1)) {}
  Rat& at(int p, int q) { return c_[static_cast<std::size_t>(p * (n_ + 1) + q)]; }
  const Rat& at(int p, int q) const {
    return c_[static_cast<std::size_t>(p * (n_ + 1) + q)];
  }
  int order() const { return n_; }

  static JSeries one(int n) {
    JSeries s(n);
    s.at(0, 0) = 1;
    return s;
  }
  friend JSeries operator*(const JSeries& a, const JSeries& b) {
    int n = a.n_;
    JSeries r(n);
    for (int p = 0; p <= n; ++p)
      for (int q = 0; p + q <= n; ++q) {
        if (a.at(p, q) == 0) continue;
        for (int u = 0; p + u <= n; ++u)
          for (int v = 0; p + q + u + v <= n; ++v) {
            if (b.at(u, v) == 0) continue;
            r.at(p + u, q + v) += a.at(p, q) * b.at(u, v);
          }
      }
    return r;
  }
  JSeries inverse() const {  // constant term must be 1
    int n = n_;
    JSeries u = *this;
    u.at(0, 0) -= 1;
    JSeries r = one(n), term = one(n);
    for (int k = 1; k <= n; ++k) {
      term = term * u;
      for (auto& x : term.c_) x = -x;
      for (std::size_t i = 0; i < r.c_.size(); ++i) r.c_[i] += term.c_[i];
    }
    return r;
  }
  JSeries pow(Int e) const {
    JSeries base = e < 0 ? inverse() : *this;
    Int k = e < 0 ? -e : e;
    JSeries r = one(n_);
    while (k) {
      if (k & 1) r = r * base;
      base = base * base;
      k >>= 1;
    }
    return r;
  }

 private:
  int n_;
  std::vector<Rat> c_;
};

/**
 * Induced rays of the junction of fronts with multiplicities mA, mB in the
 * canonical frame a = (1, 0), b = (r, d) with d = det(a, b) > 0, computed to
 * total frame order N.  Results are cached; (mA, mB, d, r mod d, N)
 * classifies the junction up to a lattice automorphism.
 */
inline std::vector<ScatterRay> local_scattering(Int mA, Int mB, Int d, Int r,
                                                int N) {
  r = ((r % d) + d) % d;
  using Key = std::tuple<Int, Int, Int, Int, int>;
  static std::map<Key, std::vector<ScatterRay>> cache;
  static std::mutex cache_mutex;
  Key key{mA, mB, d, r, N};
  {
    std::lock_guard<std::mutex> lk(cache_mutex);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }

  const Vec a{1, 0}, b{r, d};
  auto content = [&](Vec pq) {
    Vec w = pq.x * a + pq.y * b;
    return std::gcd(std::abs(w.x), std::abs(w.y));
  };
  // Crossing exponent of wall direction v against monomial m (frame
  // coordinates): det of the primitive real wall direction with m.
  auto pair_exp = [&](Vec v, Vec m, int sign) {
    return sign * det2(v, m) * d / content(v);
  };

  struct Wall {
    Vec v;
    JSeries F;
  };
  auto apply = [&](const Wall& w, int sign, const JSeries& s) {
    JSeries r2(N);
    std::map<Int, JSeries> powers;
    for (int p = 0; p <= N; ++p)
      for (int q = 0; p + q <= N; ++q) {
        if (s.at(p, q) == 0) continue;
        Int e = pair_exp(w.v, {p, q}, sign);
        auto it = powers.find(e);
        if (it == powers.end()) it = powers.emplace(e, w.F.pow(e)).first;
        for (int u = 0; p + u <= N; ++u)
          for (int v = 0; p + q + u + v <= N; ++v) {
            if (it->second.at(u, v) == 0) continue;
            r2.at(p + u, q + v) += s.at(p, q) * it->second.at(u, v);
          }
      }
    return r2;
  };

  Wall WA{{1, 0}, JSeries::one(N)}, WB{{0, 1}, JSeries::one(N)};
  {
    JSeries f = JSeries::one(N);
    f.at(1, 0) = 1;
    WA.F = f.pow(mA);
    JSeries g = JSeries::one(N);
    g.at(0, 1) = 1;
    WB.F = g.pow(mB);
  }
  std::map<std::pair<Int, Int>, JSeries> rays;

  for (int order = 2; order <= N; ++order) {
    // Full counterclockwise loop: cross a, the induced rays by increasing
    // angle, b, then the opposite halves of the two front lines.
    auto loop = [&](Vec gen) {
      JSeries s(N);
      s.at(static_cast<int>(gen.x), static_cast<int>(gen.y)) = 1;
      s = apply(WA, +1, s);
      std::vector<std::pair<Vec, const JSeries*>> rs;
      for (auto& [k, F] : rays) rs.push_back({{k.first, k.second}, &F});
      std::sort(rs.begin(), rs.end(),
                [](const auto& l, const auto& r3) { return det2(l.first, r3.first) > 0; });
      for (auto& [v, F] : rs) s = apply({v, *F}, +1, s);
      s = apply(WB, +1, s);
      s = apply(WA, -1, s);
      s = apply(WB, -1, s);
      return s;
    };
    JSeries cx = loop({1, 0});
    for (int p = 1; p < order; ++p) {
      int q = order - p;
      if (p + 1 > N) continue;
      Rat delta = cx.at(p + 1, q);
      if (delta == 0) continue;
      Int g = std::gcd(p, q);
      Vec v0{p / g, q / g};
      Int e = pair_exp(v0, {1, 0}, +1);
      Rat eps = -delta / Rat(e);
      auto it = rays.find({v0.x, v0.y});
      if (it == rays.end()) it = rays.emplace(std::make_pair(v0.x, v0.y), JSeries::one(N)).first;
      // Multiply the ray function by (1 + z^{(p,q)})^eps.
      JSeries f = JSeries::one(N);
      Rat binom = 1;
      for (int k = 1; k * order <= N; ++k) {
        binom *= (eps - (k - 1)) / k;
        f.at(k * p, k * q) = binom;
      }
      it->second = it->second * f;
    }
  }

  std::vector<ScatterRay> out;
  for (auto& [k, F] : rays) {
    ScatterRay sr;
    sr.pq = {k.first, k.second};
    int step = static_cast<int>(k.first + k.second);
    for (int j = 0; j * step <= N; ++j)
      sr.F.push_back(F.at(j * static_cast<int>(k.first), j * static_cast<int>(k.second)));
    bool nonzero = false;
    for (std::size_t j = 1; j < sr.F.size(); ++j) nonzero = nonzero || sr.F[j] != 0;
    if (nonzero) out.push_back(std::move(sr));
  }
  std::lock_guard<std::mutex> lk(cache_mutex);
  return cache.emplace(key, std::move(out)).first->second;
}

/** Extended gcd: returns (g, p, q) with p*a + q*b = g = gcd(a, b) > 0. */
inline std::tuple<Int, Int, Int> ext_gcd(Int a, Int b) {
  if (b == 0) return a >= 0 ? std::tuple<Int, Int, Int>{a, 1, 0}
                            : std::tuple<Int, Int, Int>{-a, -1, 0};
  auto [g, p, q] = ext_gcd(b, a % b);
  return {g, q, p - (a / b) * q};
}

/** Coefficients of F^e up to degree n_max, for a 1-variable series F with
 *  F[0] = 1 and e >= 1. */
inline std::vector<Rat> series_pow(const std::vector<Rat>& F, Int e, Int n_max) {
  std::vector<Rat> r(static_cast<std::size_t>(n_max) + 1);
  r[0] = 1;
  for (Int rep = 0; rep < e; ++rep) {
    std::vector<Rat> nr(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i] == 0) continue;
      for (std::size_t j = 0; i + j < nr.size() && j < F.size(); ++j)
        nr[i + j] += r[i] * F[j];
    }
    r = std::move(nr);
  }
  return r;
}

/**
 * A branch formed away from the trunk: an induced ray of a junction of two
 * wall fronts.  One unit of the branch consumes `units` leaves per singular
 * point; its weight function coefficients govern the merge multiplicity.
 */
struct CompositeBranch {
  TracedRay ray;                     // traced from the junction
  QVec origin;                       // the junction point
  std::vector<Rat> F;                // weight function coefficients, F[0]=1
  std::vector<std::pair<std::size_t, Int>> units;  // per-unit leaf cost
  std::string key;                   // canonical description for tree keys
};

struct EngineContext {
  const DualAffineAnnulus* a = nullptr;
  EnumerationBounds bounds;
  Int leaf_units = 1;
  std::vector<TracedRay> fronts;       // two per singular point: +perp, -perp
  std::vector<Vec> front_dirs;         // seed drawn direction of each front
  std::vector<CompositeBranch> composites;
  bool nongeneric = false;             // set when genericity fails
};

/** Trace the two wall fronts of every singular point. */
inline void trace_fronts(EngineContext& ctx) {
  ctx.fronts.clear();
  ctx.front_dirs.clear();
  for (const auto& b : ctx.a->singular_points) {
    for (Vec eta : {perp(b.eigendirection), -perp(b.eigendirection)}) {
      TracedRay f = trace_ray(*ctx.a, b.position, eta, 1, ctx.bounds.max_winding);
      for (const auto& fl : f.flags)
        if (fl.rfind("non-generic", 0) == 0)
          throw std::runtime_error("wall front is non-generic: " + fl);
      ctx.fronts.push_back(std::move(f));
      ctx.front_dirs.push_back(eta);
    }
  }
}

/** Build every composite branch: each transversal crossing of two wall
 *  fronts sprouts its fan of induced rays, traced with their weight
 *  functions attached. */
inline void build_composites(EngineContext& ctx) {
  ctx.composites.clear();
  const Int cap = ctx.leaf_units;
  for (std::size_t fi = 0; fi < ctx.fronts.size(); ++fi) {
    for (std::size_t fj = fi + 1; fj < ctx.fronts.size(); ++fj) {
      std::size_t si = fi / 2, sj = fj / 2;
      Int mA = static_cast<Int>(ctx.a->singular_points[si].node_count);
      Int mB = static_cast<Int>(ctx.a->singular_points[sj].node_count);
      for (const auto& x : intersect_rays(*ctx.a, ctx.fronts[fi], ctx.fronts[fj])) {
        if (x.coincident_stretch) continue;
        if (x.seg_a == 0 && x.t_a == 0) continue;  // the common singular point
        if (x.seg_b == 0 && x.t_b == 0) continue;
        Vec lA = ctx.fronts[fi].segments[x.seg_a].dir;
        Vec lB = ctx.fronts[fj].segments[x.seg_b].dir;
        if (det2(lA, lB) == 0) continue;
        if (std::abs(det2(lA, lB)) > ctx.bounds.max_junction_det) continue;
        // Orient the frame positively and map it to the canonical one.
        Vec A = lA, B = lB;
        std::size_t sA = si, sB = sj;
        Int mA2 = mA, mB2 = mB;
        if (det2(A, B) < 0) {
          std::swap(A, B);
          std::swap(sA, sB);
          std::swap(mA2, mB2);
        }
        Int d = det2(A, B);
        // Unimodular map sending A to (1, 0): B lands on (t, d).
        auto [g, p, q] = ext_gcd(A.x, A.y);
        Int t = p * B.x + q * B.y;
        int N = static_cast<int>(std::min<Int>(12, si == sj ? cap : 2 * cap));
        for (const auto& sr : local_scattering(mA2, mB2, d, t, N)) {
          Int uA = sr.pq.x, uB = sr.pq.y;
          if (si == sj ? (uA + uB > cap) : (uA > cap || uB > cap)) continue;
          Vec w = uA * A + uB * B;
          if (w.is_zero()) continue;
          TracedRay r =
              trace_ray(*ctx.a, x.point, w, 1, ctx.bounds.max_winding);
          bool bad = false;
          for (const auto& fl : r.flags)
            if (fl.rfind("non-generic", 0) == 0) bad = true;
          if (bad) continue;  // a fiber perturbation cannot move this branch
          CompositeBranch c;
          c.ray = std::move(r);
          c.origin = x.point;
          c.F = sr.F;
          c.units = {{sA, uA}, {sB, uB}};
          c.key = "C" + std::to_string(sA) + "n" + std::to_string(uA) + "+" +
                  std::to_string(sB) + "n" + std::to_string(uB) + "d" +
                  std::to_string(d) + "@" + qvec_key(x.point);
          ctx.composites.push_back(std::move(c));
        }
      }
    }
  }
}

/** Ordered merge candidates of a trunk ray against one front. */
struct MergeSite {
  std::size_t front_index;
  RayIntersection hit;
  Vec trunk_dir;  // drawn trunk direction at the hit
  Vec leaf_dir;   // drawn front direction at the hit (points away from b)
};

inline std::vector<MergeSite> merge_sites(const EngineContext& ctx,
                                          const TracedRay& trunk,
                                          bool with_composites = true) {
  std::vector<MergeSite> out;
  for (std::size_t fi = 0; fi < ctx.fronts.size(); ++fi) {
    for (const auto& x : intersect_rays(*ctx.a, trunk, ctx.fronts[fi])) {
      if (x.coincident_stretch) continue;  // tangential; never a rigid merge
      if (x.seg_a == 0 && x.t_a == 0) continue;  // the trunk's own start
      if (x.t_b == 0) continue;  // exactly at the singular point: non-generic
      out.push_back({fi, x, trunk.segments[x.seg_a].dir,
                     ctx.fronts[fi].segments[x.seg_b].dir});
    }
  }
  for (std::size_t ci = 0; with_composites && ci < ctx.composites.size(); ++ci) {
    for (const auto& x :
         intersect_rays(*ctx.a, trunk, ctx.composites[ci].ray)) {
      if (x.coincident_stretch) continue;
      if (x.seg_a == 0 && x.t_a == 0) continue;
      if (x.t_b == 0) continue;  // at the internal vertex or a crossing point
      out.push_back({ctx.fronts.size() + ci, x, trunk.segments[x.seg_a].dir,
                     ctx.composites[ci].ray.segments[x.seg_b].dir});
    }
  }
  std::sort(out.begin(), out.end(), [](const MergeSite& l, const MergeSite& r) {
    if (l.hit.seg_a != r.hit.seg_a) return l.hit.seg_a < r.hit.seg_a;
    if (l.hit.t_a != r.hit.t_a) return l.hit.t_a < r.hit.t_a;
    return l.front_index < r.front_index;
  });
  return out;
}

/** Escape acceptance: the trunk runs off with exactly the primitive outward
 *  normal of its final sector. */
inline bool accepted_escape(const EngineContext& ctx, const TracedRay& r) {
  if (!r.escaped || r.escape_sector < 0) return false;
  return r.escape_dir == ctx.a->sectors[static_cast<std::size_t>(r.escape_sector)].normal;
}

/**
 * Depth-first enumeration of merge sequences along a disk trunk.
 *
 * The merge budget counts wall-crossing events examined along the whole
 * developed chain: merging at the i-th crossing of the current trunk
 * consumes the i declined crossings before it as well.  This keeps the
 * search finite and monotone along the trunk while still admitting deep
 * merges close to the basepoint.
 */
inline void extend_trunk(EngineContext& ctx, const TracedRay& trunk, Vec xi,
                         std::vector<TreeEvent>& events,
                         std::map<std::size_t, Int>& used, const Rat& mult,
                         Int events_used, Int induced_used,
                         std::vector<TropicalTree>& out) {
  for (const auto& fl : trunk.flags)
    if (fl.rfind("non-generic", 0) == 0) { ctx.nongeneric = true; return; }

  if (accepted_escape(ctx, trunk)) {
    TropicalTree t;
    t.initial_direction = xi;
    t.is_disk = true;
    t.output_direction = trunk.escape_dir;
    t.output_sector = trunk.escape_sector;
    t.events = events;
    t.multiplicity = mult;
    std::string k = "D " + vec_key(xi) + " ->" + std::to_string(t.output_sector);
    for (const auto& e : events)
      k += " [" + std::to_string(e.singular_index) + " n" + std::to_string(e.units) +
           " @" + qvec_key(e.point) +
           (e.sub_key.empty() ? "" : " " + e.sub_key) + "]";
    t.key = k;
    out.push_back(std::move(t));
  }
  if (events_used >= ctx.bounds.max_merges) return;

  auto sites = merge_sites(ctx, trunk,
                           induced_used < ctx.bounds.max_induced_merges);
  // The crossing budget prices primary-front merges by their ordinal along
  // the developed trunk; induced rays are capped separately per tree and
  // cost a flat unit, so the size of the induced pool cannot push them out
  // of reach.
  Int primary_seen = 0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& site = sites[i];
    bool induced = site.front_index >= ctx.fronts.size();
    Int cost = events_used + (induced ? 1 : ++primary_seen);
    if (cost > ctx.bounds.max_merges) continue;
    if (site.front_index >= ctx.fronts.size()) {
      // An induced ray: n units bend the trunk by n times its weight vector;
      // the multiplicity is the matching coefficient of its weight function
      // raised to the crossing determinant.
      const auto& comp = ctx.composites[site.front_index - ctx.fronts.size()];
      Int g = std::gcd(std::abs(site.leaf_dir.x), std::abs(site.leaf_dir.y));
      Int jd = mikhalkin_multiplicity(site.leaf_dir, site.trunk_dir) / g;
      if (jd == 0) continue;
      Int n_max = ctx.leaf_units;
      for (const auto& [s2, u2] : comp.units)
        if (u2 > 0) n_max = std::min(n_max, (ctx.leaf_units - used[s2]) / u2);
      if (n_max < 1) continue;
      auto Fjd = series_pow(comp.F, jd, n_max);
      for (Int n = 1; n <= n_max; ++n) {
        if (Fjd[static_cast<std::size_t>(n)] == 0) continue;
        Vec step = site.leaf_dir;
        Vec next_dir = site.trunk_dir + n * step;
        if (next_dir.is_zero()) continue;
        TracedRay next =
            trace_ray(*ctx.a, site.hit.point, next_dir, 1, ctx.bounds.max_winding);
        std::size_t pushed = 0;
        for (const auto& [s2, u2] : comp.units) {
          TreeEvent e;
          e.point = site.hit.point;
          e.singular_index = s2;
          e.units = n * u2;
          e.leaf_dir = site.leaf_dir;
          e.chain_dir = site.trunk_dir;
          e.factor = pushed == 0 ? Fjd[static_cast<std::size_t>(n)] : Rat(1);
          e.sub_key = comp.key;
          events.push_back(e);
          used[s2] += n * u2;
          ++pushed;
        }
        extend_trunk(ctx, next, xi, events, used,
                     mult * Fjd[static_cast<std::size_t>(n)], cost,
                     induced_used + 1, out);
        for (const auto& [s2, u2] : comp.units) {
          used[s2] -= n * u2;
          events.pop_back();
        }
        if (ctx.nongeneric) return;
      }
      continue;
    }
    std::size_t si = site.front_index / 2;
    Int m = static_cast<Int>(ctx.a->singular_points[si].node_count);
    Int det = mikhalkin_multiplicity(site.leaf_dir, site.trunk_dir);
    if (det == 0) continue;
    Int avail = ctx.leaf_units - used[si];
    for (Int n = 1; n <= avail; ++n) {
      Int slots = m * det;
      if (n > slots) break;
      Vec next_dir = site.trunk_dir + n * site.leaf_dir;
      if (next_dir.is_zero()) continue;
      TracedRay next =
          trace_ray(*ctx.a, site.hit.point, next_dir, 1, ctx.bounds.max_winding);
      TreeEvent e;
      e.point = site.hit.point;
      e.singular_index = si;
      e.units = n;
      e.leaf_dir = site.leaf_dir;
      e.chain_dir = site.trunk_dir;
      e.factor = bunched_multiplicity(slots, n);
      events.push_back(e);
      used[si] += n;
      extend_trunk(ctx, next, xi, events, used, mult * e.factor, cost,
                   induced_used, out);
      used[si] -= n;
      events.pop_back();
      if (ctx.nongeneric) return;
    }
  }
}

inline void sort_trees(std::vector<TropicalTree>& trees) {
  std::sort(trees.begin(), trees.end(),
            [](const TropicalTree& l, const TropicalTree& r) { return l.key < r.key; });
}

}  // namespace detail

/**
 * All Maslov-index-two tropical disk trees rooted at the marked fiber.
 * Initial directions range over the nonzero lattice points of the dual
 * polytope.  Non-generic incidences are resolved by deterministically
 * perturbing the basepoint; the result does not depend on the perturbation.
 */
inline std::vector<TropicalTree> enumerate_index_two_trees(
    const BaseDiagram& d, const EnumerationBounds& bounds = {}, int threads = 1) {
  DualAffineAnnulus a = build_annulus(d);
  std::vector<Vec> seeds;
  {
    Polygon dp = dual_polytope(d);
    if (dp.size() >= 3) {
      for (Vec p : dp.lattice_points())
        if (!p.is_zero()) seeds.push_back(p);
    } else if (dp.size() == 2) {
      // Degenerate (wedge) dual: the lattice points of the segment.
      auto v0 = *to_lattice(dp.vertex(0)), v1 = *to_lattice(dp.vertex(1));
      auto [dir, len] = primitive_and_length(v1 - v0);
      for (Int j = 0; j <= len; ++j) {
        Vec p = v0 + j * dir;
        if (!p.is_zero()) seeds.push_back(p);
      }
    }
  }
  std::sort(seeds.begin(), seeds.end());

  for (std::size_t attempt = 0; attempt < 48; ++attempt) {
    detail::EngineContext ctx;
    ctx.a = &a;
    ctx.bounds = bounds;
    ctx.leaf_units =
        bounds.max_leaf_units > 0 ? bounds.max_leaf_units : detail::default_leaf_units(d);
    detail::trace_fronts(ctx);
    detail::build_composites(ctx);
    QVec base = a.fiber + detail::fiber_offset(attempt);

    std::vector<std::vector<TropicalTree>> per_seed(seeds.size());
    std::vector<char> bad(seeds.size(), 0);
    auto run = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        detail::EngineContext local = ctx;  // independent non-generic flag
        TracedRay trunk =
            trace_ray(a, base, seeds[i], 1, bounds.max_winding);
        std::vector<TreeEvent> events;
        std::map<std::size_t, Int> used;
        detail::extend_trunk(local, trunk, seeds[i], events, used, 1, 0, 0,
                             per_seed[i]);
        bad[i] = local.nongeneric ? 1 : 0;
      }
    };
    int nt = std::max(1, threads);
    if (nt == 1 || seeds.size() < 2) {
      run(0, seeds.size());
    } else {
      std::vector<std::thread> pool;
      std::size_t chunk = (seeds.size() + nt - 1) / nt;
      for (int t = 0; t < nt; ++t) {
        std::size_t lo = std::min(seeds.size(), t * chunk);
        std::size_t hi = std::min(seeds.size(), lo + chunk);
        if (lo < hi) pool.emplace_back(run, lo, hi);
      }
      for (auto& th : pool) th.join();
    }
    bool any_bad = false;
    for (char b : bad) any_bad = any_bad || b;
    if (any_bad) continue;  // retry with the next deterministic offset

    std::vector<TropicalTree> out;
    for (auto& v : per_seed)
      for (auto& t : v) out.push_back(std::move(t));
    detail::sort_trees(out);
    return out;
  }
  throw std::runtime_error(
      "enumerate_index_two_trees: no generic basepoint found (bounds too small?)");
}

/** Trees of one enumeration, with their multiplicities exposed. */
inline std::vector<WeightedCount> weighted_counts(const std::vector<TropicalTree>& ts) {
  std::vector<WeightedCount> out;
  for (const auto& t : ts) out.push_back({t, t.multiplicity});
  return out;
}

/** Total configuration count (bunched merges expanded node by node). */
inline Int configuration_total(const BaseDiagram& d,
                               const std::vector<TropicalTree>& trees) {
  DualAffineAnnulus a = build_annulus(d);
  Int c = 0;
  for (const auto& t : trees) c += t.config_count(a.singular_points);
  return c;
}

// ---------------------------------------------------------------------------
// Sphere enumeration.
// ---------------------------------------------------------------------------

namespace detail {

/** A composite branch: a subtree carried by one outgoing weighted edge. */
struct Branch {
  TracedRay ray;        // traced with the full weight vector as direction
  Vec weight;           // weight vector at the origin of the ray
  Rat mult = 1;
  bool is_leaf = true;  // a bare bunched edge
  std::size_t leaf_si = 0;
  Int leaf_units = 0;
  std::map<std::size_t, Int> used;  // units drawn per singular point
  std::vector<TreeEvent> events;
  std::string key;
  int depth = 0;
};

/** Vertex factor for merging two branches at a point where their drawn
 *  weighted directions are w1, w2 (leaf branches pass their primitive leaf
 *  direction l and unit count n). */
inline Rat sphere_vertex_factor(const EngineContext& ctx, const Branch& b1,
                                Vec w1, const Branch& b2, Vec w2) {
  auto leaf_term = [&](const Branch& leaf, Vec lw, Vec other_w) {
    Int m = static_cast<Int>(ctx.a->singular_points[leaf.leaf_si].node_count);
    auto [l, len] = primitive_and_length(lw);
    (void)len;
    Int det = mikhalkin_multiplicity(l, other_w);
    return bunched_multiplicity(m * det, leaf.leaf_units);
  };
  Int det12 = mikhalkin_multiplicity(w1, w2);
  if (det12 == 0) return 0;
  if (b1.is_leaf && b2.is_leaf)
    return leaf_term(b1, w1, w2) * leaf_term(b2, w2, w1) / Rat(det12);
  if (b1.is_leaf) return leaf_term(b1, w1, w2);
  if (b2.is_leaf) return leaf_term(b2, w2, w1);
  return Rat(det12);
}

}  // namespace detail

/**
 * Rigid tropical sphere trees: leaves bunched at singular points, no disk
 * vertex, output a primitive outward normal.  The weighted total over all
 * trees is the rigid-sphere count of the ambient surface.
 */
inline std::vector<TropicalTree> enumerate_sphere_trees(
    const BaseDiagram& d, const EnumerationBounds& bounds = {}, int threads = 1) {
  (void)threads;  // the branch closure is cheap to merge deterministically
  DualAffineAnnulus a = build_annulus(d);
  detail::EngineContext ctx;
  ctx.a = &a;
  ctx.bounds = bounds;
  ctx.leaf_units =
      bounds.max_leaf_units > 0 ? bounds.max_leaf_units : detail::default_leaf_units(d);
  detail::trace_fronts(ctx);

  using detail::Branch;
  std::vector<Branch> pool;
  // Base branches: bunched edges out of each singular point, both fronts.
  for (std::size_t fi = 0; fi < ctx.fronts.size(); ++fi) {
    std::size_t si = fi / 2;
    Int m = static_cast<Int>(a.singular_points[si].node_count);
    (void)m;
    for (Int n = 1; n <= ctx.leaf_units; ++n) {
      Branch b;
      Vec w = n * ctx.front_dirs[fi];
      b.ray = trace_ray(a, a.singular_points[si].position, w, 1, bounds.max_winding);
      b.weight = w;
      b.is_leaf = true;
      b.leaf_si = si;
      b.leaf_units = n;
      b.used[si] = n;
      b.key = "L" + std::to_string(fi) + "n" + std::to_string(n);
      b.depth = 0;
      pool.push_back(std::move(b));
    }
  }

  // Close the pool under pairwise merges, bounded by the merge budget.
  std::set<std::string> seen;
  for (const auto& b : pool) seen.insert(b.key);
  std::size_t scanned_lo = 0;
  std::size_t frontier = pool.size();
  Int rounds = 0;
  while (rounds++ < bounds.max_merges) {
    std::vector<Branch> fresh;
    for (std::size_t i = 0; i < frontier; ++i)
      for (std::size_t j = std::max(i + 1, scanned_lo); j < frontier; ++j) {
        const Branch& b1 = pool[i];
        const Branch& b2 = pool[j];
        if (static_cast<Int>(b1.events.size() + b2.events.size()) + 1 >
            bounds.max_merges)
          continue;
        // Unit budgets combine.
        bool ok = true;
        std::map<std::size_t, Int> used = b1.used;
        for (const auto& [si, n] : b2.used) {
          used[si] += n;
          if (used[si] > ctx.leaf_units) ok = false;
        }
        if (!ok) continue;
        for (const auto& x : intersect_rays(a, b1.ray, b2.ray)) {
          if (x.coincident_stretch) continue;
          if (x.t_a == 0 && x.seg_a == 0) continue;
          if (x.t_b == 0 && x.seg_b == 0) continue;
          Vec w1 = b1.ray.segments[x.seg_a].dir;
          Vec w2 = b2.ray.segments[x.seg_b].dir;
          Rat f = detail::sphere_vertex_factor(ctx, b1, w1, b2, w2);
          if (f == 0) continue;
          Vec w = w1 + w2;
          if (w.is_zero()) continue;
          Branch nb;
          nb.ray = trace_ray(a, x.point, w, 1, bounds.max_winding);
          nb.weight = w;
          nb.mult = b1.mult * b2.mult * f;
          nb.is_leaf = false;
          nb.used = used;
          nb.events = b1.events;
          for (const auto& e : b2.events) nb.events.push_back(e);
          TreeEvent e;
          e.point = x.point;
          e.units = 0;
          e.leaf_dir = w2;
          e.chain_dir = w1;
          e.factor = f;
          nb.events.push_back(e);
          std::string ka = b1.key, kb = b2.key;
          if (kb < ka) std::swap(ka, kb);
          nb.key = "(" + ka + "+" + kb + "@" + detail::qvec_key(x.point) + ")";
          nb.depth = std::max(b1.depth, b2.depth) + 1;
          if (seen.insert(nb.key).second) fresh.push_back(std::move(nb));
        }
      }
    if (fresh.empty()) break;
    scanned_lo = 0;
    for (auto& b : fresh) pool.push_back(std::move(b));
    frontier = pool.size();
  }

  std::vector<TropicalTree> out;
  for (const auto& b : pool) {
    if (!detail::accepted_escape(ctx, b.ray)) continue;
    TropicalTree t;
    t.is_disk = false;
    t.initial_direction = b.weight;
    t.output_direction = b.ray.escape_dir;
    t.output_sector = b.ray.escape_sector;
    t.events = b.events;
    // A bare escaping bunched edge counts once per participating node.
    if (b.is_leaf) {
      Int m = static_cast<Int>(a.singular_points[b.leaf_si].node_count);
      t.multiplicity = bunched_multiplicity(m, b.leaf_units);
    } else {
      t.multiplicity = b.mult;
    }
    t.key = "S " + b.key + " ->" + std::to_string(t.output_sector);
    out.push_back(std::move(t));
  }
  detail::sort_trees(out);
  return out;
}

/** Weighted total of the sphere enumeration. */
inline Rat sphere_total(const std::vector<TropicalTree>& trees) {
  Rat s = 0;
  for (const auto& t : trees) s += t.multiplicity;
  return s;
}

}  // namespace trop
