#include <catch2/catch_amalgamated.hpp>

#include "trop/dualaffine.hpp"

using namespace trop;

TEST_CASE("annulus builds for every catalog entry") {
  for (const auto& d : catalog()) {
    INFO(d.name);
    DualAffineAnnulus a = build_annulus(d);
    CHECK(a.sector_count() == d.facet_count());
    CHECK(a.singular_points.size() == d.cuts.size());
    // Transporting the seam normal all the way around returns it.
    if (!a.unbounded) {
      Vec n0 = d.facets[0].normal;
      CHECK(a.monodromy.apply(n0) == n0);
    }
  }
}

TEST_CASE("singular points merge all nodes of a cut") {
  DualAffineAnnulus a = build_annulus(catalog_entry("quadric_triangle"));
  REQUIRE(a.singular_points.size() == 1);
  CHECK(a.singular_points[0].position == QVec{Rat(0), Rat(3, 4)});
  CHECK(a.singular_points[0].eigendirection == Vec{0, -1});
  CHECK(a.singular_points[0].node_count == 2);

  DualAffineAnnulus p = build_annulus(catalog_entry("pendulum"));
  REQUIRE(p.singular_points.size() == 1);
  CHECK(p.singular_points[0].position == QVec{Rat(0), Rat(-3, 4)});
  CHECK(p.singular_points[0].eigendirection == Vec{0, 1});
  CHECK(p.singular_points[0].node_count == 2);
}

TEST_CASE("smooth corner gluing is the expected unimodular shear") {
  DualAffineAnnulus a = build_annulus(catalog_entry("quadric_square"));
  // At the vertex between the facets with normals (0,-1) and (1,0).
  const auto& t = a.transitions[0];
  CHECK(t.map.apply_dir({0, -1}) == Vec{1, 0});
  CHECK(t.map.linear.det() == 1);
  CHECK(t.power == -1);
  // The flank ray through the vertex maps onto the other flank exactly.
  QVec v = t.vertex;
  QVec on_flank = v + Rat(5, 3) * to_q({0, -1});
  QVec image = t.map.apply(on_flank);
  CHECK(image == v + Rat(5, 3) * to_q({1, 0}));
}

TEST_CASE("transport around all transitions returns the facet normal") {
  for (const char* name : {"p2", "bl5", "bl7", "bl8", "chekanov"}) {
    INFO(name);
    DualAffineAnnulus a = build_annulus(catalog_entry(name));
    std::size_t n = a.sector_count();
    for (std::size_t i = 0; i < n; ++i) {
      // One full counterclockwise loop through every gluing.
      Vec v = a.sectors[i].normal;
      Vec w = v;
      for (std::size_t step = 1; step <= n; ++step)
        w = a.transitions[(i + step) % n].map.apply_dir(w);
      CHECK(w == v);
    }
    CHECK(transport_direction(a, 0, 1, a.sectors[0].normal) ==
          a.sectors[1].normal);
  }
}

TEST_CASE("straight escape through a facet") {
  DualAffineAnnulus a = build_annulus(catalog_entry("p2"));
  TracedRay r = trace_ray(a, {Rat(0), Rat(0)}, {1, 0});
  REQUIRE(r.generic());
  CHECK(r.escaped);
  CHECK(r.escape_sector == 0);
  CHECK(r.escape_dir == Vec{1, 0});
  REQUIRE(r.segments.size() == 2);
  CHECK(r.segments[0].sector == -1);
  CHECK(r.segments[0].length.has_value());
  CHECK(r.segments[0].end() == QVec{Rat(1), Rat(0)});
  CHECK_FALSE(r.segments[1].length.has_value());
  CHECK(r.segments[1].sector == 0);
}

TEST_CASE("vertex and singular incidences are flagged") {
  DualAffineAnnulus a = build_annulus(catalog_entry("p2"));
  TracedRay hit_vertex = trace_ray(a, {Rat(0), Rat(0)}, {1, 1});
  CHECK_FALSE(hit_vertex.generic());

  DualAffineAnnulus c = build_annulus(catalog_entry("chekanov"));
  TracedRay hit_node = trace_ray(c, {Rat(0), Rat(0)}, {1, 1});
  REQUIRE_FALSE(hit_node.generic());
  CHECK(hit_node.flags.front() ==
        "non-generic: ray meets a singular point");
}

TEST_CASE("gluing crossings develop the ray and respect the budget") {
  DualAffineAnnulus a = build_annulus(catalog_entry("p2"));
  TracedRay r = trace_ray(a, {Rat(0), Rat(0)}, {2, 1});
  REQUIRE(r.segments.size() >= 3);
  // First crossing: out of the core at (1,1/2) into the strip over x = 1,
  // then across the flank at (1,1) where the drawn direction shears.
  CHECK(r.segments[0].end() == QVec{Rat(1), Rat(1, 2)});
  CHECK(r.segments[1].sector == 0);
  CHECK(r.segments[2].start == QVec{Rat(1), Rat(2)});
  CHECK(r.segments[2].dir == Vec{-1, 4});
  CHECK(r.segments[2].sector == 1);
  // This direction never aligns with a facet normal: the ray keeps winding
  // until the budget runs out rather than escaping.
  CHECK_FALSE(r.escaped);
  REQUIRE_FALSE(r.flags.empty());
  CHECK(r.flags.front() == "truncated: transition budget exhausted");

  TracedRay t = trace_ray(a, {Rat(0), Rat(0)}, {2, 1}, 1, 0);
  CHECK_FALSE(t.generic());
  CHECK(t.flags.front() == "truncated: transition budget exhausted");
}

TEST_CASE("pendulum wall front and disk trace") {
  DualAffineAnnulus a = build_annulus(catalog_entry("pendulum"));
  QVec b = a.singular_points[0].position;

  SECTION("the rightward front leaves through the right facet and escapes") {
    TracedRay front = trace_ray(a, b, {1, 0});
    REQUIRE(front.generic());
    REQUIRE(front.segments.size() == 2);
    CHECK(front.segments[0].end() == QVec{Rat(1, 4), Rat(-3, 4)});
    CHECK(front.segments[1].sector == 1);
    CHECK(front.escaped);
    CHECK(front.escape_dir == Vec{1, 0});
  }

  SECTION("a downward ray crosses the apex gluing clockwise") {
    TracedRay r = trace_ray(a, {Rat(1, 8), Rat(0)}, {0, -1});
    REQUIRE(r.generic());
    REQUIRE(r.segments.size() == 3);
    CHECK(r.segments[0].sector == -1);
    CHECK(r.segments[1].sector == 1);
    CHECK(r.segments[1].end() == QVec{Rat(1, 8), Rat(-9, 8)});
    CHECK(r.segments[2].start == QVec{Rat(-1, 8), Rat(-9, 8)});
    CHECK(r.segments[2].dir == Vec{-2, -1});
    CHECK(r.segments[2].sector == 0);
    CHECK(r.escaped);
  }

  SECTION("the exactly-central ray is non-generic") {
    TracedRay r = trace_ray(a, {Rat(0), Rat(0)}, {0, -1});
    CHECK_FALSE(r.generic());
  }
}

TEST_CASE("ray intersection") {
  DualAffineAnnulus a = build_annulus(catalog_entry("pendulum"));
  QVec b = a.singular_points[0].position;
  TracedRay front = trace_ray(a, b, {1, 0});
  TracedRay disk = trace_ray(a, {Rat(1, 8), Rat(0)}, {0, -1});
  auto xs = intersect_rays(a, front, disk);
  REQUIRE(xs.size() == 1);
  CHECK(xs[0].point == QVec{Rat(1, 8), Rat(-3, 4)});
  CHECK(xs[0].seg_a == 0);
  CHECK(xs[0].seg_b == 0);
  CHECK(xs[0].t_a == Rat(1, 8));
  CHECK(xs[0].t_b == Rat(3, 4));
  CHECK_FALSE(xs[0].coincident_stretch);
  // Symmetry.
  auto sx = intersect_rays(a, disk, front);
  REQUIRE(sx.size() == 1);
  CHECK(sx[0].point == xs[0].point);

  // Coincident stretches are reported, not enumerated pointwise.
  TracedRay again = trace_ray(a, b + Rat(1, 8) * to_q({-1, 0}), {1, 0});
  auto cs = intersect_rays(a, front, again);
  bool has_stretch = false;
  for (const auto& x : cs) has_stretch = has_stretch || x.coincident_stretch;
  CHECK(has_stretch);
}

TEST_CASE("point location") {
  DualAffineAnnulus a = build_annulus(catalog_entry("p2"));
  CHECK(locate(a, {Rat(0), Rat(0)}) == -1);
  CHECK(locate(a, {Rat(2), Rat(0)}) == 0);
  CHECK(locate(a, {Rat(0), Rat(2)}) == 1);
  CHECK(locate(a, {Rat(2), Rat(2)}) == -2);  // wedge gap beyond the vertex
  CHECK(outward_cone_contains(a, {Rat(2), Rat(0)}, {1, 0}));
  CHECK_FALSE(outward_cone_contains(a, {Rat(2), Rat(0)}, {-1, 0}));
  CHECK_THROWS(outward_cone_contains(a, {Rat(0), Rat(0)}, {1, 0}));
}

TEST_CASE("svg dump emits a document") {
  DualAffineAnnulus a = build_annulus(catalog_entry("bl5"));
  std::string svg = annulus_svg(a, {trace_ray(a, {Rat(1, 64), Rat(0)}, {1, 0})});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("circle") != std::string::npos);
}
