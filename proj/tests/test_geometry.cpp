#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "optsample/geometry.hpp"

using namespace optsample;

namespace {

double brute_segment(double px, double py, double ax, double ay, double bx, double by) {
  double best = 1e300;
  for (int k = 0; k <= 200000; ++k) {
    const double t = k / 200000.0;
    best = std::min(best, std::hypot(px - (ax + t * (bx - ax)), py - (ay + t * (by - ay))));
  }
  return best;
}

// Curve s -> (side s^2, s + offset), s in [0, 1], sampled densely.
double brute_root(double px, double py, double side, double offset) {
  double best = 1e300;
  for (int k = 0; k <= 200000; ++k) {
    const double s = k / 200000.0;
    best = std::min(best, std::hypot(px - side * s * s, py - (s + offset)));
  }
  return best;
}

}  // namespace

TEST_CASE("built-in domain areas and radius") {
  CHECK(disc_radius() * disc_radius() == doctest::Approx(2.0 / std::numbers::pi).epsilon(1e-15));
  CHECK(Domain::make_builtin(BuiltinDomain::Disc).area() == doctest::Approx(2.0));
  CHECK(Domain::make_builtin(BuiltinDomain::CornerPolygon).area() == doctest::Approx(2.0));
  CHECK(Domain::make_builtin(BuiltinDomain::CuspDomain).area() == doctest::Approx(2.0));
  CHECK(Domain::make_builtin(BuiltinDomain::Square).area() == doctest::Approx(4.0));
}

TEST_CASE("names round-trip") {
  for (auto b : {BuiltinDomain::Disc, BuiltinDomain::CornerPolygon, BuiltinDomain::CuspDomain,
                 BuiltinDomain::Square}) {
    CHECK(builtin_from_string(to_string(b)) == b);
  }
  CHECK_THROWS(builtin_from_string("triangle"));
}

TEST_CASE("membership") {
  const Domain poly = Domain::make_builtin(BuiltinDomain::CornerPolygon);
  CHECK(poly.contains(std::vector<double>{0.0, -0.5}));
  CHECK(poly.contains(std::vector<double>{0.9, 0.5}));
  CHECK_FALSE(poly.contains(std::vector<double>{0.0, 0.5}));
  const Domain cusp = Domain::make_builtin(BuiltinDomain::CuspDomain);
  CHECK(cusp.contains(std::vector<double>{0.0, -1.0}));
  CHECK(cusp.contains(std::vector<double>{0.25, 0.0}));
  CHECK_FALSE(cusp.contains(std::vector<double>{0.5, -0.5}));
  CHECK_FALSE(cusp.contains(std::vector<double>{0.0, 0.1}));
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  CHECK(disc.contains(std::vector<double>{0.0, 0.79}));
  CHECK_FALSE(disc.contains(std::vector<double>{0.0, 0.8}));
}

TEST_CASE("uniform samples stay inside and reproduce the area") {
  for (auto b : {BuiltinDomain::Disc, BuiltinDomain::CornerPolygon, BuiltinDomain::CuspDomain,
                 BuiltinDomain::Square}) {
    const Domain dom = Domain::make_builtin(b);
    Rng rng = make_rng(7, 0);
    const Points pts = sample_uniform(dom, 2000, rng);
    REQUIRE(pts.rows() == 2000);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) CHECK(dom.contains(row_span(pts, i)));

    Box bbox = dom.bbox();
    const Domain custom = Domain::make_custom(
        "copy", bbox, [&dom](std::span<const double> x) { return dom.contains(x); }, 1000000, 11);
    CHECK(std::abs(custom.area() / dom.area() - 1.0) < 0.01);
  }
}

TEST_CASE("sample mean of x1^2 on the disc") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  Rng rng = make_rng(3);
  const Points pts = sample_uniform(disc, 200000, rng);
  const double mean = pts.col(0).array().square().mean();
  CHECK(mean == doctest::Approx(1.0 / (2.0 * std::numbers::pi)).epsilon(0.01));
}

TEST_CASE("degenerate custom domain") {
  Box box{{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS_WITH(Domain::make_custom("empty", box, [](std::span<const double>) { return false; }, 10000, 1),
                    doctest::Contains("degenerate"));
  const Domain hollow("hollow", box, [](std::span<const double>) { return false; }, 1.0);
  Rng rng(1);
  CHECK_THROWS_WITH(sample_uniform(hollow, 1, rng), doctest::Contains("degenerate domain/bbox"));
}

TEST_CASE("make_rng streams") {
  Rng a = make_rng(5, 1, 0);
  Rng b = make_rng(5, 1, 0);
  Rng c = make_rng(5, 2, 0);
  Rng d = make_rng(5, 1, 1);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
}

TEST_CASE("exact moments against quadrature oracles") {
  auto m = [](BuiltinDomain b, int a, int c) {
    const std::vector<int> nu{a, c};
    return exact_moment(b, nu).to_double();
  };
  // Polar integration oracle.
  CHECK(m(BuiltinDomain::Disc, 2, 0) == doctest::Approx(0.15915494309189533577).epsilon(1e-15));
  CHECK(m(BuiltinDomain::Disc, 2, 4) == doctest::Approx(0.0040314418041499361481).epsilon(1e-15));
  CHECK(m(BuiltinDomain::Disc, 1, 2) == 0.0);
  // Nested 1-D quadrature oracle.
  CHECK(m(BuiltinDomain::CornerPolygon, 0, 1) == doctest::Approx(0.0));
  CHECK(m(BuiltinDomain::CornerPolygon, 2, 1) == doctest::Approx(0.083333333333333333333).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CornerPolygon, 2, 3) == doctest::Approx(0.033333333333333333333).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CornerPolygon, 4, 2) == doctest::Approx(0.042857142857142857143).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CuspDomain, 0, 1) == doctest::Approx(0.16666666666666666667).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CuspDomain, 2, 1) == doctest::Approx(0.11904761904761904762).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CuspDomain, 2, 3) == doctest::Approx(0.049603174603174603175).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CuspDomain, 4, 2) == doctest::Approx(0.051515151515151515152).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CuspDomain, 0, 5) == doctest::Approx(0.035714285714285714286).epsilon(1e-15));
  CHECK(m(BuiltinDomain::CuspDomain, 3, 2) == 0.0);
  CHECK(m(BuiltinDomain::Square, 2, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(m(BuiltinDomain::Square, 4, 2) == doctest::Approx(1.0 / 15.0).epsilon(1e-15));
  for (auto b : {BuiltinDomain::Disc, BuiltinDomain::CornerPolygon, BuiltinDomain::CuspDomain,
                 BuiltinDomain::Square}) {
    CHECK(m(b, 0, 0) == 1.0);
  }
}

TEST_CASE("boundary distances against dense sampling") {
  const std::vector<std::vector<double>> probes{{0.3, 0.1}, {0.9, 0.95}, {-0.5, -0.2}, {0.05, -0.9}};
  for (const auto& x : probes) {
    if (!Domain::make_builtin(BuiltinDomain::CornerPolygon).contains(x)) continue;
    const auto d = distance_to_boundary_pieces(BuiltinDomain::CornerPolygon, x);
    const double v[6][2] = {{0, -1}, {1, 0}, {1, 1}, {0, 0}, {-1, 1}, {-1, 0}};
    REQUIRE(d.size() == 6);
    for (int i = 0; i < 6; ++i) {
      const int j = (i + 1) % 6;
      CHECK(d[static_cast<std::size_t>(i)] ==
            doctest::Approx(brute_segment(x[0], x[1], v[i][0], v[i][1], v[j][0], v[j][1])).epsilon(1e-6));
    }
  }
  const std::vector<std::vector<double>> cusp_probes{{0.3, 0.2}, {0.0, -0.5}, {-0.7, 0.6}, {0.01, -0.85}};
  for (const auto& x : cusp_probes) {
    REQUIRE(Domain::make_builtin(BuiltinDomain::CuspDomain).contains(x));
    const auto d = distance_to_boundary_pieces(BuiltinDomain::CuspDomain, x);
    REQUIRE(d.size() == 6);
    CHECK(d[0] == doctest::Approx(brute_root(x[0], x[1], 1.0, -1.0)).epsilon(1e-6));
    CHECK(d[1] == doctest::Approx(brute_segment(x[0], x[1], 1, 0, 1, 1)).epsilon(1e-6));
    CHECK(d[2] == doctest::Approx(brute_root(x[0], x[1], 1.0, 0.0)).epsilon(1e-6));
    CHECK(d[3] == doctest::Approx(brute_root(x[0], x[1], -1.0, 0.0)).epsilon(1e-6));
    CHECK(d[4] == doctest::Approx(brute_segment(x[0], x[1], -1, 1, -1, 0)).epsilon(1e-6));
    CHECK(d[5] == doctest::Approx(brute_root(x[0], x[1], -1.0, -1.0)).epsilon(1e-6));
  }
  const std::vector<double> center{0.0, 0.0};
  const auto sq = distance_to_boundary_pieces(BuiltinDomain::Square, center);
  REQUIRE(sq.size() == 4);
  for (double v : sq) CHECK(v == doctest::Approx(1.0));
  CHECK(distance_to_boundary_pieces(BuiltinDomain::Disc, center)[0] == doctest::Approx(disc_radius()));
  CHECK_THROWS(distance_to_boundary_pieces(BuiltinDomain::Square, std::vector<double>{2.0, 0.0}));
}

TEST_CASE("piece adjacency and extreme points") {
  CHECK(boundary_piece_adjacency(BuiltinDomain::Disc).empty());
  CHECK(boundary_piece_adjacency(BuiltinDomain::Square).size() == 4);
  CHECK(boundary_piece_adjacency(BuiltinDomain::CornerPolygon).size() == 6);
  CHECK(boundary_piece_adjacency(BuiltinDomain::CuspDomain).size() == 6);
  for (auto b : {BuiltinDomain::Disc, BuiltinDomain::CornerPolygon, BuiltinDomain::CuspDomain,
                 BuiltinDomain::Square}) {
    const Domain dom = Domain::make_builtin(b);
    const Points pts = extreme_points(b, 200);
    CHECK(pts.rows() >= 200);
    int inside = 0;
    // Boundary points: pulled 1e-9 toward an interior point they land inside.
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const std::vector<double> y{(1 - 1e-9) * pts(i, 0), (1 - 1e-9) * (pts(i, 1) + 0.5) - 0.5};
      inside += dom.contains(y) ? 1 : 0;
    }
    CHECK(inside == pts.rows());
  }
}
