#include <catch2/catch_amalgamated.hpp>

#include "trop/lattice.hpp"

using namespace trop;

TEST_CASE("primitive_and_length splits off the content") {
  SECTION("already primitive") {
    auto [mu, len] = primitive_and_length({1, 1});
    CHECK(mu == Vec{1, 1});
    CHECK(len == 1);
  }
  SECTION("even vector") {
    auto [mu, len] = primitive_and_length({2, 0});
    CHECK(mu == Vec{1, 0});
    CHECK(len == 2);
  }
  SECTION("negative coordinates") {
    auto [mu, len] = primitive_and_length({-6, -9});
    CHECK(mu == Vec{-2, -3});
    CHECK(len == 3);
  }
  SECTION("zero vector rejected") {
    CHECK_THROWS(primitive_and_length({0, 0}));
  }
  SECTION("reconstruction property") {
    for (Int lx = -3; lx <= 3; ++lx)
      for (Int ly = -3; ly <= 3; ++ly) {
        if (lx == 0 && ly == 0) continue;
        Vec mu = primitive_and_length({lx, ly}).first;
        for (Int l = 1; l <= 4; ++l) {
          auto [m2, l2] = primitive_and_length(l * mu);
          CHECK(m2 == mu);
          CHECK(l2 == l);
        }
      }
  }
}

TEST_CASE("det2 and perp") {
  CHECK(det2({1, 0}, {0, 1}) == 1);
  CHECK(det2({2, 0}, {1, 1}) == 2);
  CHECK(det2({1, 1}, {1, 1}) == 0);
  CHECK(det2({1, 2}, {3, 4}) == -det2({3, 4}, {1, 2}));
  // bilinearity
  Vec a{2, -1}, b{3, 5}, c{-1, 4};
  CHECK(det2(a, b + c) == det2(a, b) + det2(a, c));
  CHECK(perp({1, 0}) == Vec{0, 1});
  CHECK(perp({0, 0}) == Vec{0, 0});
  CHECK(perp({3, -2}) == Vec{2, 3});
}

TEST_CASE("shear_fixing pinned conventions") {
  SECTION("horizontal axis is the upper triangular shear") {
    Mat2 s = shear_fixing({1, 0}, 1).linear;
    CHECK(s == Mat2{1, 1, 0, 1});
  }
  SECTION("vertical axis sends (1,0) to (1,-1)") {
    AffineMap s = shear_fixing({0, 1}, 1);
    CHECK(s.apply_dir({0, 1}) == Vec{0, 1});
    CHECK(s.apply_dir({1, 0}) == Vec{1, -1});
  }
  SECTION("power law, determinant and trace") {
    Vec dirs[] = {{1, 0}, {0, 1}, {1, 1}, {-2, 3}, {5, -3}};
    for (Vec u : dirs) {
      Mat2 s1 = shear_fixing(u, 1).linear;
      Mat2 acc = Mat2::identity();
      for (Int k = 1; k <= 4; ++k) {
        acc = acc * s1;
        Mat2 sk = shear_fixing(u, k).linear;
        CHECK(sk == acc);
        CHECK(sk.det() == 1);
        CHECK(sk.trace() == 2);
        CHECK(sk.apply(u) == u);
      }
    }
    CHECK(shear_fixing({1, 0}, 3).linear == Mat2{1, 3, 0, 1});
  }
  SECTION("non-primitive direction rejected") {
    CHECK_THROWS(shear_fixing({2, 0}, 1));
  }
}

TEST_CASE("affine map composition and inverse") {
  AffineMap f{Mat2{1, 1, 0, 1}, QVec{Rat(1), Rat(2)}};
  AffineMap g{Mat2{0, -1, 1, 0}, QVec{Rat(-3), Rat(1, 2)}};
  QVec p{Rat(2, 3), Rat(-5)};
  CHECK((f * g).apply(p) == f.apply(g.apply(p)));
  CHECK((f.inverse() * f).apply(p) == p);
  CHECK((f * f.inverse()) == AffineMap::identity());
}

TEST_CASE("shear_about_line fixes the line") {
  QVec base{Rat(1), Rat(1)};
  AffineMap s = shear_about_line(base, {1, 2}, 3);
  CHECK(s.apply(base) == base);
  QVec on_line = base + Rat(5, 7) * to_q({1, 2});
  CHECK(s.apply(on_line) == on_line);
  QVec off{Rat(0), Rat(0)};
  CHECK(s.apply(off) != off);
}

TEST_CASE("polygon area, convexity, containment") {
  Polygon tri{{to_q({0, 0}), to_q({3, 0}), to_q({0, 3})}};
  CHECK(tri.area() == Rat(9, 2));
  CHECK(tri.is_convex_ccw());
  CHECK(tri.side(QVec{Rat(1), Rat(1)}) == 1);
  CHECK(tri.side(QVec{Rat(0), Rat(1)}) == 0);
  CHECK(tri.side(QVec{Rat(-1), Rat(1)}) == -1);
  Polygon cw{{to_q({0, 0}), to_q({0, 3}), to_q({3, 0})}};
  CHECK_FALSE(cw.is_convex_ccw());
}

TEST_CASE("convex hull drops interior and edge-interior points") {
  Polygon h = convex_hull({{-1, 0}, {1, 1}, {2, 0}, {3, -1}});
  REQUIRE(h.size() == 3);
  // (2,0) lies on the edge from (1,1) to (3,-1)
  std::vector<Vec> vs;
  for (const auto& v : h.vertices) vs.push_back(*to_lattice(v));
  std::sort(vs.begin(), vs.end());
  CHECK(vs == std::vector<Vec>{{-1, 0}, {1, 1}, {3, -1}});
}

TEST_CASE("lattice point enumeration") {
  Polygon tri{{to_q({0, 0}), to_q({2, 0}), to_q({0, 2})}};
  auto pts = tri.lattice_points();
  CHECK(pts.size() == 6);
}

TEST_CASE("polygon_unimodular_maps") {
  Polygon unit{{to_q({0, 0}), to_q({1, 0}), to_q({0, 1})}};
  SECTION("identity found on self-maps") {
    auto maps = polygon_unimodular_maps(unit, unit);
    bool has_id = false;
    for (const auto& m : maps) has_id = has_id || m == AffineMap::identity();
    CHECK(has_id);
    for (const auto& m : maps)
      CHECK((m.linear.det() == 1 || m.linear.det() == -1));
  }
  SECTION("equivalent triangles") {
    Polygon p{{to_q({1, 0}), to_q({0, 1}), to_q({-1, -1})}};
    Polygon q{{to_q({0, 1}), to_q({-1, -1}), to_q({1, 0})}};  // same set, CCW
    auto maps = polygon_unimodular_maps(p, q);
    CHECK_FALSE(maps.empty());
    for (const auto& m : maps)
      for (std::size_t i = 0; i < p.size(); ++i)
        CHECK(q.side(m.apply(p.vertex(i))) == 0);
    CHECK(polygon_unimodular_maps(q, p).empty() == maps.empty());
  }
  SECTION("different vertex counts are inequivalent") {
    Polygon square{{to_q({0, 0}), to_q({1, 0}), to_q({1, 1}), to_q({0, 1})}};
    CHECK(polygon_unimodular_maps(square, unit).empty());
  }
  SECTION("equal area but inequivalent triangles") {
    Polygon p{{to_q({0, 0}), to_q({1, 0}), to_q({0, 1})}};
    Polygon q{{to_q({0, 0}), to_q({1, 0}), to_q({-3, 1})}};
    // q has a vertex whose adjacent edges span determinant 1 as well, but the
    // polygons differ by more than a unimodular map composed with translation.
    auto maps = polygon_unimodular_maps(p, q);
    for (const auto& m : maps)
      for (std::size_t i = 0; i < p.size(); ++i)
        CHECK(q.side(m.apply(p.vertex(i))) == 0);
  }
}

TEST_CASE("rational parse and print round trip") {
  CHECK(rat_parse("3/4") == Rat(3, 4));
  CHECK(rat_parse("-7") == Rat(-7));
  CHECK(rat_str(Rat(6, 4)) == "3/2");
  CHECK(rat_str(Rat(-5)) == "-5");
  CHECK(rat_parse(rat_str(Rat(22, 7))) == Rat(22, 7));
}
