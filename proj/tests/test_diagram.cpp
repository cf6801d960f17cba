#include <catch2/catch_amalgamated.hpp>

#include "trop/diagram.hpp"

using namespace trop;

namespace {

/** Laurent polynomial from (coefficient, exponent) pairs. */
Laurent poly(std::initializer_list<std::pair<Rat, Vec>> terms) {
  Laurent w;
  for (const auto& [c, e] : terms) w = w + Laurent::monomial(c, e);
  return w;
}

Polygon hull_of(std::initializer_list<Vec> pts) { return convex_hull(pts); }

std::size_t total_nodes(const BaseDiagram& d) {
  std::size_t n = 0;
  for (const auto& c : d.cuts) n += c.nodes.size();
  return n;
}

}  // namespace

TEST_CASE("catalog entries all validate") {
  for (const auto& d : catalog()) {
    INFO(d.name);
    CHECK(validate(d).empty());
  }
}

TEST_CASE("catalog volumes, degrees and Euler counts") {
  struct Row {
    const char* name;
    Rat volume;
    Rat degree;
    std::size_t nodes;
  };
  // Euler characteristic = nodes + cornered vertices; for the degree-d del
  // Pezzo entries it equals 12 - degree.
  const Row rows[] = {
      {"p2", {9, 2}, 9, 0},          {"quadric_square", 4, 8, 0},
      {"quadric_triangle", 4, 8, 2}, {"bl1", 4, 8, 0},
      {"bl2", {7, 2}, 7, 0},         {"bl3", 3, 6, 0},
      {"bl4", {5, 2}, 5, 4},         {"bl5", 2, 4, 8},
      {"bl6", {3, 2}, 3, 9},         {"bl7", 1, 2, 10},
      {"bl8", 18, 1, 11},            {"bl8_triangle", {9, 2}, 1, 11},
      {"chekanov", {9, 2}, 9, 1},    {"bl1_nodal", 4, 8, 4},
      {"bl2_nodal", {7, 2}, 7, 5},   {"bl3_nodal", 3, 6, 6},
  };
  for (const auto& r : rows) {
    INFO(r.name);
    BaseDiagram d = catalog_entry(r.name);
    auto [vol, deg] = volume_degree_check(d);
    CHECK(vol == r.volume);
    CHECK(deg == r.degree);
    CHECK(total_nodes(d) == r.nodes);
    CHECK(total_nodes(d) + d.elliptic_vertices.size() == 12 - Int(r.degree));
  }
  CHECK_THROWS(volume_degree_check(catalog_entry("pendulum")));
}

TEST_CASE("dual polytopes match the expected Newton polygons") {
  struct Row {
    const char* name;
    Polygon newton;
  };
  const Row rows[] = {
      {"p2", hull_of({{1, 0}, {0, 1}, {-1, -1}})},
      {"quadric_square", hull_of({{1, 0}, {-1, 0}, {0, 1}, {0, -1}})},
      {"quadric_triangle", hull_of({{1, 1}, {-1, 1}, {0, -1}})},
      {"bl1", hull_of({{1, 0}, {0, 1}, {-1, -1}, {1, 1}})},
      {"bl5", hull_of({{1, 1}, {-1, 1}, {-1, -1}, {1, -1}})},
      {"bl6", hull_of({{2, -1}, {-1, 2}, {-1, -1}})},
      {"bl7", hull_of({{2, 1}, {-2, 1}, {-2, -1}, {2, -1}})},
      {"bl8", hull_of({{5, -2}, {-1, 4}, {-1, -2}})},
      {"bl8_triangle", hull_of({{-6, -1}, {3, -1}, {3, 2}})},
      {"chekanov", hull_of({{-1, 0}, {1, 1}, {3, -1}})},
  };
  for (const auto& r : rows) {
    INFO(r.name);
    Polygon dual = dual_polytope(catalog_entry(r.name));
    REQUIRE(dual.size() == r.newton.size());
    for (std::size_t i = 0; i < dual.size(); ++i)
      CHECK(r.newton.side(dual.vertex(i)) == 0);
  }
}

TEST_CASE("dual polytope is unimodular-equivariant") {
  BaseDiagram d = catalog_entry("bl5");
  Mat2 m{2, 1, 1, 1};  // det 1
  BaseDiagram e = d;
  // Transform the moment data: points by m, normals by the inverse transpose.
  for (auto& v : e.polygon.vertices) v = m.apply(v);
  e.fiber = m.apply(e.fiber);
  Mat2 mt = m.inverse().transpose();
  for (auto& f : e.facets) f.normal = mt.apply(f.normal);
  for (auto& c : e.cuts) c.direction = m.apply(c.direction);
  CHECK(validate(e).empty());
  Polygon dd = dual_polytope(d), de = dual_polytope(e);
  REQUIRE(dd.size() == de.size());
  for (std::size_t i = 0; i < dd.size(); ++i)
    CHECK(de.side(to_q(mt.apply(*to_lattice(dd.vertex(i))))) == 0);
}

TEST_CASE("toric potentials of the torus-invariant entries") {
  CHECK(toric_potential(catalog_entry("p2")) ==
        poly({{1, {1, 0}}, {1, {0, 1}}, {1, {-1, -1}}}));
  CHECK(toric_potential(catalog_entry("quadric_square")) ==
        poly({{1, {1, 0}}, {1, {-1, 0}}, {1, {0, 1}}, {1, {0, -1}}}));
  CHECK(toric_potential(catalog_entry("bl1")) ==
        poly({{1, {1, 0}}, {1, {0, 1}}, {1, {-1, -1}}, {1, {1, 1}}}));
  CHECK_THROWS(toric_potential(catalog_entry("chekanov")));
}

TEST_CASE("validation catches broken diagrams") {
  SECTION("fiber on a branch cut") {
    BaseDiagram d = catalog_entry("chekanov");
    d.cuts[0].nodes = {Rat(1)};  // node lands exactly on the fiber
    auto bad = validate(d);
    bool hit = false;
    for (const auto& s : bad) hit = hit || s == "fiber on branch cut";
    CHECK(hit);
  }
  SECTION("crossing cuts") {
    BaseDiagram d = catalog_entry("bl5");
    // Redirect one cut across its neighbour's segment.
    d.cuts[0].direction = d.cuts[1].direction;
    auto bad = validate(d);
    CHECK_FALSE(bad.empty());
  }
  SECTION("non-monotone levels") {
    BaseDiagram d = catalog_entry("p2");
    d.facets[0].level += 1;
    CHECK_FALSE(validate(d).empty());
  }
  SECTION("wrong node ordering") {
    BaseDiagram d = catalog_entry("quadric_triangle");
    std::swap(d.cuts[0].nodes[0], d.cuts[0].nodes[1]);
    CHECK_FALSE(validate(d).empty());
  }
}

TEST_CASE("nodal trade") {
  SECTION("adds one node, keeps volume, stays valid") {
    BaseDiagram d = catalog_entry("bl1");
    BaseDiagram t = nodal_trade(d, 1);
    CHECK(validate(t).empty());
    CHECK(total_nodes(t) == total_nodes(d) + 1);
    CHECK(t.polygon.area() == d.polygon.area());
    CHECK(t.elliptic_vertices.size() + 1 == d.elliptic_vertices.size());
  }
  SECTION("trade direction points at the monotone fiber") {
    BaseDiagram t = nodal_trade(catalog_entry("bl2"), 0);
    const auto& c = t.cuts.back();
    QVec v = t.polygon.vertex(c.vertex_index);
    CHECK(det2q(t.fiber - v, to_q(c.direction)) == 0);
  }
  SECTION("errors at an orbifold corner") {
    // Weighted-plane style triangle with an uncut non-smooth corner.
    BaseDiagram d;
    d.name = "p112";
    d.polygon.vertices = {to_q({1, -1}), to_q({1, 1}), to_q({-3, 1})};
    d.fiber = {0, 0};
    d.scale = 1;
    detail::refresh_derived(d);
    REQUIRE(validate(d).empty());
    CHECK_THROWS_WITH(nodal_trade(d, 0), "nodal_trade: vertex not smooth");
    CHECK_NOTHROW(nodal_trade(d, 1));
  }
  SECTION("errors on an already cut vertex") {
    BaseDiagram d = catalog_entry("chekanov");
    CHECK_THROWS(nodal_trade(d, d.cuts[0].vertex_index));
  }
}

TEST_CASE("nodal slide") {
  BaseDiagram d = catalog_entry("chekanov");
  SECTION("moves the node, stays valid") {
    BaseDiagram s = nodal_slide(d, 0, 0, Rat(3, 4));
    CHECK(validate(s).empty());
    CHECK(s.cuts[0].nodes[0] == Rat(3, 4));
  }
  SECTION("cannot land on the fiber") {
    CHECK_THROWS(nodal_slide(d, 0, 0, Rat(1)));
  }
  SECTION("cannot break the node ordering") {
    BaseDiagram q = catalog_entry("quadric_triangle");
    CHECK_THROWS(nodal_slide(q, 0, 0, q.cuts[0].nodes[1] + Rat(1, 100)));
  }
}

TEST_CASE("mutation of the traded triangle gives the Chekanov chart") {
  BaseDiagram p2 = catalog_entry("p2");
  // The vertex between the facets with normals (1,0) and (0,1).
  std::size_t v_trade = 0;
  for (std::size_t i = 0; i < p2.polygon.size(); ++i) {
    Vec a = p2.facets[(i + p2.facet_count() - 1) % p2.facet_count()].normal;
    Vec b = p2.facets[i].normal;
    if ((a == Vec{1, 0} && b == Vec{0, 1}) || (a == Vec{0, 1} && b == Vec{1, 0}))
      v_trade = i;
  }
  BaseDiagram traded = nodal_trade(p2, v_trade);
  auto [mut, nu] = mutate_diagram(traded, 0);
  CHECK(nu == Vec{-1, -1});
  CHECK(validate(mut).empty());
  CHECK(mut.polygon.area() == traded.polygon.area());

  // The stored entry is the same chart after a half-turn of the plane
  // (vertex i here corresponds to vertex i+2 there).
  BaseDiagram chek = catalog_entry("chekanov");
  REQUIRE(mut.polygon.size() == chek.polygon.size());
  for (std::size_t i = 0; i < chek.polygon.size(); ++i) {
    std::size_t j = (i + 2) % chek.polygon.size();
    CHECK(mut.polygon.vertex(i) == QVec{-chek.polygon.vertex(j).x,
                                        -chek.polygon.vertex(j).y});
    CHECK(mut.facets[i].normal == -chek.facets[j].normal);
    CHECK(mut.facets[i].level == chek.facets[j].level);
  }
  REQUIRE(mut.cuts.size() == 1);
  REQUIRE(chek.cuts.size() == 1);
  CHECK(mut.cuts[0].vertex_index == 2);
  CHECK(chek.cuts[0].vertex_index == 1);
  CHECK(mut.cuts[0].direction == -chek.cuts[0].direction);
  CHECK(mut.cuts[0].nodes == chek.cuts[0].nodes);
}

TEST_CASE("recorded mutation moves are generic and volume preserving") {
  for (const auto& mv : recorded_mutation_moves()) {
    INFO(mv.label);
    REQUIRE(validate(mv.from).empty());
    auto [mut, nu] = mutate_diagram(mv.from, mv.cut_index);
    CHECK(validate(mut).empty());
    CHECK(mut.polygon.area() == mv.from.polygon.area());
    CHECK(is_primitive(nu));
    // The mutated dual polytope is the piecewise-linear transform of the old
    // one; both must have equal lattice volume.
    CHECK(dual_polytope(mut).area() > 0);
  }
}

TEST_CASE("mutation rejects non-generic configurations") {
  // The square's cut line exits through the opposite corner.
  BaseDiagram sq = catalog_entry("quadric_square");
  BaseDiagram traded = nodal_trade(sq, 0);
  CHECK_THROWS_WITH(mutate_diagram(traded, 0),
                    Catch::Matchers::ContainsSubstring("non-generic"));
}

TEST_CASE("cut transfer is never generic in a monotone diagram") {
  // Every valid cut direction is radial through the monotone fiber, so the
  // reversed cut always sweeps across it; the operation must say so rather
  // than move the nodes.
  for (const char* name : {"chekanov", "quadric_triangle", "bl6"}) {
    INFO(name);
    BaseDiagram d = catalog_entry(name);
    CHECK_THROWS_WITH(transfer_cut(d, 0),
                      Catch::Matchers::ContainsSubstring("fiber"));
  }
}

TEST_CASE("wedge entries") {
  SECTION("pendulum") {
    BaseDiagram d = catalog_entry("pendulum");
    CHECK(d.unbounded);
    REQUIRE(d.facets.size() == 2);
    CHECK(d.facets[0].normal == Vec{-1, -1});
    CHECK(d.facets[1].normal == Vec{1, -1});
    REQUIRE(d.cuts.size() == 1);
    CHECK(d.cuts[0].direction == Vec{0, 1});
    CHECK(d.cuts[0].nodes.size() == 2);
    CHECK(node_position(d, d.cuts[0], 0) == QVec{Rat(0), Rat(-3, 4)});
  }
  SECTION("T-wedge family") {
    for (Int p = 2; p <= 4; ++p)
      for (Int q = 1; q < p; ++q) {
        if (std::gcd(p, q) != 1) continue;
        for (Int dd = 1; dd <= 3; ++dd) {
          BaseDiagram d = tsing_diagram(p, q, dd);
          INFO(d.name);
          CHECK(validate(d).empty());
          CHECK(d.scale == Rat(p));
          CHECK(d.cuts[0].nodes.size() == std::size_t(dd));
          // Newton data: the two facet normals span the expected segment.
          CHECK(d.facets[0].normal == Vec{-1, 0});
          CHECK(d.facets[1].normal == Vec{dd * p * q - 1, -dd * p * p});
        }
      }
    CHECK_THROWS(tsing_diagram(2, 2, 1));
    CHECK_THROWS(tsing_diagram(3, 4, 1));
  }
}

TEST_CASE("JSON round trip") {
  for (const char* name : {"p2", "bl7", "bl8_triangle", "pendulum", "chekanov"}) {
    INFO(name);
    BaseDiagram d = catalog_entry(name);
    nlohmann::json j = diagram_to_json(d);
    BaseDiagram e = diagram_from_json(j);
    CHECK(validate(e).empty());
    CHECK(diagram_to_json(e) == j);
    CHECK(e.polygon.vertices == d.polygon.vertices);
    CHECK(e.cuts.size() == d.cuts.size());
    CHECK(e.fiber == d.fiber);
    CHECK(e.scale == d.scale);
    CHECK(e.unbounded == d.unbounded);
  }
}
