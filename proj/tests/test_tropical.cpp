// Tests for the disk-tree enumeration engine and its multiplicity rules:
// closed-form potentials of the named catalog, tree/configuration counts,
// binomial edge structure, Newton-polygon duality, and stabilization of the
// enumeration as the search bounds grow.
#include <catch2/catch_amalgamated.hpp>

#include "trop/tropical.hpp"

using namespace trop;

namespace {

Laurent mono(const Rat& c, Vec e) { return Laurent::monomial(c, e); }

Laurent trinomial_power(Int k, Vec shift, const Rat& constant_after) {
  Laurent t = Laurent::constant(1) + mono(1, {1, 0}) + mono(1, {0, 1});
  Laurent w = t.pow(k).shifted(shift);
  w.add_term({0, 0}, constant_after - w.coefficient({0, 0}));
  return w;
}

Laurent potential_of(const std::string& name, Int max_merges, Int max_winding = 3) {
  EnumerationBounds b;
  b.max_merges = max_merges;
  b.max_winding = max_winding;
  return assemble_potential(enumerate_index_two_trees(catalog_entry(name), b));
}

}  // namespace

TEST_CASE("multiple-cover weights solve the degree recursion") {
  auto n = bp_recursion_solve(12);
  REQUIRE(n.size() == 12);
  for (Int d = 1; d <= 12; ++d) {
    REQUIRE(n[static_cast<std::size_t>(d - 1)] == bp_multiplicity(d));
    Rat expect(1, d * d);
    if (d % 2 == 0) expect = -expect;
    REQUIRE(bp_multiplicity(d) == expect);
  }
}

TEST_CASE("vertex multiplicity helpers") {
  REQUIRE(mikhalkin_multiplicity({1, 0}, {0, 1}) == 1);
  REQUIRE(mikhalkin_multiplicity({2, 1}, {-1, 1}) == 3);
  REQUIRE(mikhalkin_multiplicity({1, 1}, {2, 2}) == 0);
  REQUIRE(bunched_multiplicity(6, 2) == 15);
  REQUIRE(bunched_multiplicity(3, 0) == 1);
  REQUIRE(bunched_multiplicity(2, 5) == 0);
  REQUIRE(higher_valence_multiplicity({{1, 0}, {0, 1}, {1, 1}}) ==
          higher_valence_multiplicity({{1, 1}, {0, 1}, {1, 0}}));
}

TEST_CASE("projective-plane fiber has the three-term potential") {
  Laurent w = potential_of("p2", 2);
  Laurent expect = mono(1, {1, 0}) + mono(1, {0, 1}) + mono(1, {-1, -1});
  REQUIRE(w == expect);
}

TEST_CASE("quadric potentials in both charts") {
  Laurent square = potential_of("quadric_square", 2);
  Laurent expect4 = mono(1, {1, 0}) + mono(1, {-1, 0}) + mono(1, {0, 1}) + mono(1, {0, -1});
  REQUIRE(square == expect4);

  Laurent tri = potential_of("quadric_triangle", 2);
  Laurent expect_tri =
      mono(1, {1, 1}) + mono(1, {-1, 1}) + mono(2, {0, 1}) + mono(1, {0, -1});
  REQUIRE(tri == expect_tri);
}

TEST_CASE("one- to three-point blowup potentials") {
  REQUIRE(potential_of("bl1", 2) ==
          mono(1, {1, 0}) + mono(1, {0, 1}) + mono(1, {1, 1}) + mono(1, {-1, -1}));
  REQUIRE(potential_of("bl2", 2) ==
          mono(1, {1, 0}) + mono(1, {0, 1}) + mono(1, {-1, 0}) + mono(1, {0, -1}) +
              mono(1, {-1, -1}));
  REQUIRE(potential_of("bl3", 2) ==
          mono(1, {1, 0}) + mono(1, {0, 1}) + mono(1, {1, 1}) + mono(1, {-1, 0}) +
              mono(1, {0, -1}) + mono(1, {-1, -1}));
}

TEST_CASE("four- and five-point blowup potentials") {
  Laurent bl4 = potential_of("bl4", 2);
  Laurent expect4 = mono(2, {1, 0}) + mono(2, {0, 1}) + mono(1, {-1, 0}) +
                    mono(1, {0, -1}) + mono(1, {1, 1}) + mono(1, {1, -1}) +
                    mono(1, {-1, 1});
  REQUIRE(bl4 == expect4);

  Laurent bl5 = potential_of("bl5", 2);
  Laurent f1 = mono(1, {1, 0}) + Laurent::constant(2) + mono(1, {-1, 0});
  Laurent f2 = mono(1, {0, 1}) + Laurent::constant(2) + mono(1, {0, -1});
  Laurent expect5 = f1 * f2 - Laurent::constant(4);
  REQUIRE(bl5 == expect5);
}

TEST_CASE("six- to eight-point blowup potentials") {
  REQUIRE(potential_of("bl6", 2) == trinomial_power(3, {-1, -1}, 0));

  Laurent bl7 = potential_of("bl7", 2);
  Laurent expect7 = (Laurent::constant(1) + mono(1, {1, 0})).pow(4) *
                    (Laurent::constant(1) + mono(1, {0, 1})).pow(2);
  expect7 = expect7.shifted({-2, -1});
  expect7.add_term({0, 0}, -12);
  REQUIRE(bl7 == expect7);

  REQUIRE(potential_of("bl8", 3, 4) == trinomial_power(6, {-1, -2}, 0));
}

TEST_CASE("wedge-chart potentials: pendulum and Chekanov-type fibers") {
  Laurent pend = potential_of("pendulum", 2);
  Laurent expect_p = mono(1, {1, -1}) + mono(2, {0, -1}) + mono(1, {-1, -1});
  REQUIRE(pend == expect_p);

  EnumerationBounds b;
  b.max_merges = 2;
  auto trees = enumerate_index_two_trees(catalog_entry("chekanov"), b);
  REQUIRE(trees.size() == 4);
  int mult2 = 0;
  for (const auto& t : trees) {
    if (t.multiplicity == 2) ++mult2;
  }
  REQUIRE(mult2 == 1);
  Laurent expect_c =
      mono(1, {-1, 0}) + mono(1, {1, 1}) + mono(2, {2, 0}) + mono(1, {3, -1});
  REQUIRE(assemble_potential(trees) == expect_c);
}

TEST_CASE("five-point blowup tree and configuration counts") {
  EnumerationBounds b;
  b.max_merges = 2;
  BaseDiagram d = catalog_entry("bl5");
  auto trees = enumerate_index_two_trees(d, b);
  REQUIRE(trees.size() == 8);
  REQUIRE(configuration_total(d, trees) == 12);
}

TEST_CASE("wedge family potentials are binomial powers") {
  for (Int p = 2; p <= 4; ++p)
    for (Int q = 1; q < p; ++q) {
      if (std::gcd(p, q) != 1) continue;
      for (Int dd = 1; dd <= 3; ++dd) {
        BaseDiagram d = tsing_diagram(p, q, dd);
        EnumerationBounds b;
        b.max_merges = 2;
        Laurent w = assemble_potential(enumerate_index_two_trees(d, b));
        Laurent expect =
            (Laurent::constant(1) + mono(1, {q, -p})).pow(dd * p).shifted({-1, 0});
        REQUIRE(w == expect);
      }
    }
}

TEST_CASE("wedge family potentials arise from mutating the bare toric seed") {
  // The bare toric wedge potential y1^-1, mutated across the node with all d
  // units at once (weight opposite the node direction, factor the d-th power
  // binomial), lands exactly on the computed wedge potential.
  for (Int p = 2; p <= 4; ++p)
    for (Int q = 1; q < p; ++q) {
      if (std::gcd(p, q) != 1) continue;
      for (Int dd = 1; dd <= 3; ++dd) {
        Laurent seed = mono(1, {-1, 0});
        Laurent a = (Laurent::constant(1) + mono(1, {q, -p})).pow(dd);
        auto img = mutate_general(seed, {-p, -q}, a);
        REQUIRE(img.has_value());
        Laurent expect =
            (Laurent::constant(1) + mono(1, {q, -p})).pow(dd * p).shifted({-1, 0});
        REQUIRE(*img == expect);
      }
    }
}

TEST_CASE("per-diagram structural checks of the computed potentials") {
  struct Row {
    const char* name;
    Int mm, w;
  };
  const Row rows[] = {{"p2", 2, 3},      {"quadric_square", 2, 3},
                      {"quadric_triangle", 2, 3}, {"bl1", 2, 3},
                      {"bl2", 2, 3},     {"bl3", 2, 3},
                      {"bl4", 2, 3},     {"bl5", 2, 3},
                      {"bl6", 2, 3},     {"bl7", 2, 3}};
  for (const auto& r : rows) {
    INFO(r.name);
    BaseDiagram d = catalog_entry(r.name);
    EnumerationBounds b;
    b.max_merges = r.mm;
    b.max_winding = r.w;
    Laurent w = assemble_potential(enumerate_index_two_trees(d, b));
    REQUIRE(w.coefficient({0, 0}) == 0);
    REQUIRE(binomial_edge_check(w));
    Polygon np = newton_polygon(w);
    Polygon dp = dual_polytope(d);
    REQUIRE(np.size() == dp.size());
    for (std::size_t i = 0; i < np.size(); ++i) {
      bool found = false;
      for (std::size_t j = 0; j < dp.size(); ++j)
        if (np.vertex(i) == dp.vertex(j)) found = true;
      REQUIRE(found);
    }
    auto rep = is_edgewise_mutable(w);
    REQUIRE(rep.all_mutable);
  }
}

TEST_CASE("enumeration is stable when the bounds grow") {
  struct Row {
    const char* name;
    Int mm, w;
  };
  const Row rows[] = {{"p2", 2, 3},   {"chekanov", 2, 3}, {"bl5", 2, 3},
                      {"bl6", 1, 3},  {"bl7", 2, 3},      {"pendulum", 2, 3}};
  for (const auto& r : rows) {
    INFO(r.name);
    Laurent base = potential_of(r.name, r.mm, r.w);
    REQUIRE(potential_of(r.name, r.mm + 1, r.w) == base);
    REQUIRE(potential_of(r.name, r.mm, r.w + 1) == base);
  }
}

TEST_CASE("enumeration is deterministic and thread-count independent") {
  EnumerationBounds b;
  b.max_merges = 2;
  BaseDiagram d = catalog_entry("bl5");
  auto t1 = enumerate_index_two_trees(d, b, 1);
  auto t4 = enumerate_index_two_trees(d, b, 4);
  auto t8 = enumerate_index_two_trees(d, b, 8);
  REQUIRE(t1.size() == t4.size());
  REQUIRE(t1.size() == t8.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    REQUIRE(t1[i].key == t4[i].key);
    REQUIRE(t1[i].key == t8[i].key);
    REQUIRE(t1[i].multiplicity == t4[i].multiplicity);
  }
}

TEST_CASE("recorded diagram mutations transform the potential compatibly") {
  EnumerationBounds b;
  b.max_merges = 2;
  for (const auto& mv : recorded_mutation_moves()) {
    INFO(mv.label);
    auto [d2, nu] = mutate_diagram(mv.from, mv.cut_index);
    Laurent w1 = assemble_potential(enumerate_index_two_trees(mv.from, b));
    Laurent w2 = assemble_potential(enumerate_index_two_trees(d2, b));
    auto img = mutate(w1, nu);
    REQUIRE(img.has_value());
    REQUIRE(*img == w2);
  }
}
