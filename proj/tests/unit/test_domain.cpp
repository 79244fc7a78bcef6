#include "doctest.h"

#include "fracmono/domain.hpp"

using namespace fracmono;

namespace {

Shape box1(double lo, double hi) { return {Box{{lo, 0.0}, {hi, 0.0}}}; }
Shape box2(double x0, double x1, double y0, double y1) { return {Box{{x0, y0}, {x1, y1}}}; }

}  // namespace

TEST_CASE("grid spec validation") {
  CHECK_THROWS_AS(GridSpec(3, 16, 1.0), ValidationError);
  CHECK_THROWS_AS(GridSpec(1, 7, 1.0), ValidationError);
  CHECK_THROWS_AS(GridSpec(1, 16, 0.0), ValidationError);
  const GridSpec g(2, 16, 2.0);
  CHECK(g.spacing() == doctest::Approx(0.25));
  CHECK(g.cell_count() == 256);
  CHECK(g.cell_volume() == doctest::Approx(0.0625));
  CHECK(g.coords(g.cell(3, 5)) == std::array<Index, 2>{3, 5});
}

TEST_CASE("1D partition with a window gap") {
  const GridSpec g(1, 64, 1.0);
  const auto p = build_partition(g, Geometry{box1(-0.5, 0.5), box1(0.7, 0.9), {}, {}, {}});
  CHECK(!p.omega.empty());
  CHECK(!p.window.empty());
  CHECK(set_intersection(p.omega, p.window).empty());
  for (Index w : p.window)
    for (Index c : p.omega) CHECK(cell_distance(g, w, c) >= 2);
}

TEST_CASE("window overlapping the domain is rejected") {
  const GridSpec g(1, 64, 1.0);
  try {
    build_partition(g, Geometry{box1(-0.5, 0.5), box1(0.4, 0.9), {}, {}, {}});
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("window intersects domain closure") != std::string::npos);
  }
  // Touching closures (adjacent cells) are rejected as well.
  CHECK_THROWS_AS(make_partition(g, {10, 11}, {12}), ValidationError);
  CHECK_NOTHROW(make_partition(g, {10, 11}, {13}));
}

TEST_CASE("empty domain or window is rejected") {
  const GridSpec g(1, 32, 1.0);
  CHECK_THROWS_AS(make_partition(g, {}, {3}), ValidationError);
  CHECK_THROWS_AS(make_partition(g, {10}, {}), ValidationError);
}

TEST_CASE("2D partition cell counts") {
  // Count by enumerating the mask directly.
  const GridSpec g(2, 16, 1.0);
  const auto p = build_partition(g, Geometry{box2(-0.5, 0.5, -0.5, 0.5), box2(0.8, 0.95, -0.25, 0.25), {}, {}, {}});
  Index inside = 0;
  for (Index iy = 0; iy < 16; ++iy)
    for (Index ix = 0; ix < 16; ++ix)
      if (ix >= 4 && ix <= 11 && iy >= 4 && iy <= 11) ++inside;
  CHECK(inside == 64);
  CHECK(p.omega.size() == 64);
  CHECK(p.exterior.size() == 192);
  CHECK(p.window.size() == 8);
  for (Index c : p.window) CHECK(g.coords(c)[0] >= 14);
}

TEST_CASE("omega and exterior cover the grid exactly") {
  const GridSpec g(2, 12, 1.0);
  const auto p = make_partition(g, {26, 27, 38, 39}, {0, 1});
  CHECK(set_intersection(p.omega, p.exterior).empty());
  CHECK(set_union(p.omega, p.exterior).size() == static_cast<std::size_t>(g.cell_count()));
}

TEST_CASE("test subsets") {
  const GridSpec g(1, 32, 1.0);
  IndexSet om;
  for (Index i = 8; i < 24; ++i) om.push_back(i);
  CHECK_NOTHROW(make_partition(g, om, {2}, IndexSet{10, 11}, IndexSet{20, 21}));
  CHECK_THROWS_AS(make_partition(g, om, {2}, IndexSet{10, 11}, IndexSet{11, 12}), ValidationError);
  CHECK_THROWS_AS(make_partition(g, om, {2}, IndexSet{3}, std::nullopt), ValidationError);
}

TEST_CASE("conductivity construction") {
  const GridSpec g(1, 32, 1.0);
  IndexSet om;
  for (Index i = 8; i < 24; ++i) om.push_back(i);
  const auto p = make_partition(g, om, {2});

  const auto one = make_conductivity<double>(p, 1.0, {}, 0.4);
  CHECK(one.values == Vec<double>::Ones(32));

  const auto inc = make_conductivity<double>(p, 1.0, {Inclusion{{15, 16}, 2.0}}, 0.4);
  for (Index c = 0; c < 32; ++c) CHECK(inc.values(c) == (c == 15 || c == 16 ? 2.0 : 1.0));

  try {
    make_conductivity<double>(p, 1.0, {Inclusion{{12}, 0.0}}, 0.4);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("ellipticity violated") != std::string::npos);
    CHECK(msg.find("cell 12") != std::string::npos);
  }
  CHECK_THROWS_AS(make_conductivity<double>(p, 1.0, {Inclusion{{3}, 1.5}}, 0.4), ValidationError);
}

TEST_CASE("conductivity band holds for constructed fields") {
  const GridSpec g(1, 32, 1.0);
  IndexSet om;
  for (Index i = 8; i < 24; ++i) om.push_back(i);
  const auto p = make_partition(g, om, {2});
  for (double v : {0.4, 1.0, 1.7, 2.5}) {
    const auto s = make_conductivity<double>(p, 1.0, {Inclusion{{9, 10, 11}, v}}, 0.4);
    for (Index c = 0; c < 32; ++c) {
      if (p.in_omega(c)) {
        CHECK(s.values(c) >= 0.4);
        CHECK(s.values(c) <= 2.5);
      } else {
        CHECK(s.values(c) == 1.0);
      }
    }
  }
  Vec<double> bad = Vec<double>::Ones(32);
  bad(0) = 1.5;
  CHECK_THROWS_AS(conductivity_from_values(p, bad, 0.4), ValidationError);
}
