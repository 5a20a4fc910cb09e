#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "optsample/polyspace.hpp"

using namespace optsample;

namespace {

// Tensor Gauss-Legendre rule on [-1, 1]^2 with weights summing to one.
DiscreteInnerProduct gauss_square(int points_per_axis) {
  std::vector<double> nodes(static_cast<std::size_t>(points_per_axis));
  std::vector<double> weights(static_cast<std::size_t>(points_per_axis));
  for (int i = 0; i < points_per_axis; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (points_per_axis + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= points_per_axis; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = points_per_axis * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
        break;
      }
    }
    nodes[static_cast<std::size_t>(i)] = x;
  }
  DiscreteInnerProduct ip;
  const Eigen::Index m = static_cast<Eigen::Index>(points_per_axis) * points_per_axis;
  ip.points.resize(m, 2);
  ip.weights.resize(m);
  Eigen::Index r = 0;
  for (int i = 0; i < points_per_axis; ++i) {
    for (int j = 0; j < points_per_axis; ++j) {
      ip.points(r, 0) = nodes[static_cast<std::size_t>(i)];
      ip.points(r, 1) = nodes[static_cast<std::size_t>(j)];
      // (1/M) sum w u v must equal the mean over the square.
      ip.weights[r] = static_cast<double>(m) * weights[static_cast<std::size_t>(i)] * weights[static_cast<std::size_t>(j)] / 4.0;
      ++r;
    }
  }
  ip.sample_id = "gauss";
  return ip;
}

}  // namespace

TEST_CASE("space dimension") {
  CHECK(space_dimension(2, 0) == 1);
  CHECK(space_dimension(2, 1) == 3);
  CHECK(space_dimension(2, 15) == 136);
  CHECK(space_dimension(2, 20) == 231);
  CHECK(space_dimension(3, 4) == 35);
  CHECK_THROWS_AS(space_dimension(40, 200), std::overflow_error);
}

TEST_CASE("graded ordering and prefixes") {
  const PolynomialSpace s = PolynomialSpace::total_degree(2, 2);
  REQUIRE(s.size() == 6);
  const std::vector<MultiIndex> expect{{0, 0}, {1, 0}, {0, 1}, {2, 0}, {1, 1}, {0, 2}};
  CHECK(s.indices() == expect);
  CHECK(s.max_degree() == 2);
  CHECK(PolynomialSpace::first_n(2, 4).indices().back() == MultiIndex{2, 0});
  CHECK(s.prefix(3) == PolynomialSpace::total_degree(2, 1));
  CHECK(PolynomialSpace::first_n(2, 5).max_degree() == 2);
  const PolynomialSpace t = PolynomialSpace::total_degree(3, 1);
  const std::vector<MultiIndex> expect3{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  CHECK(t.indices() == expect3);
}

TEST_CASE("monomial evaluation") {
  const PolynomialSpace s = PolynomialSpace::total_degree(2, 3);
  const std::vector<double> x{0.5, -2.0};
  const Eigen::VectorXd v = evaluate_monomials(s, x);
  for (int j = 0; j < s.size(); ++j) {
    const auto& nu = s.indices()[static_cast<std::size_t>(j)];
    CHECK(v[j] == doctest::Approx(std::pow(0.5, nu[0]) * std::pow(-2.0, nu[1])));
  }
}

TEST_CASE("reference families") {
  CHECK(reference_family_from_string("legendre") == ReferenceFamily::Legendre);
  CHECK(reference_family_from_string(to_string(ReferenceFamily::Monomial)) == ReferenceFamily::Monomial);
  const PolynomialSpace s = PolynomialSpace::total_degree(2, 2);
  const ReferenceBasis leg = ReferenceBasis::legendre(s, Box{{-1.0, -1.0}, {1.0, 1.0}});
  const std::vector<double> x{0.3, -0.7};
  const Eigen::VectorXd v = leg.evaluate(x);
  // sqrt(2j+1) P_j
  CHECK(v[1] == doctest::Approx(std::sqrt(3.0) * 0.3));
  CHECK(v[3] == doctest::Approx(std::sqrt(5.0) * 0.5 * (3 * 0.09 - 1)));
  CHECK(v[4] == doctest::Approx(3.0 * 0.3 * -0.7));
  // The monomial coefficients reproduce the values.
  const auto coeff = leg.monomial_coefficients();
  const Eigen::VectorXd mono = evaluate_monomials(s, x);
  for (int j = 0; j < s.size(); ++j) {
    double acc = 0.0;
    for (int k = 0; k <= j; ++k) acc += coeff[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)].to_double() * mono[k];
    CHECK(acc == doctest::Approx(v[j]).epsilon(1e-13));
  }
}

TEST_CASE("exact orthonormalization on the square reproduces normalized Legendre") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  const OrthonormalBasis b = orthonormalize_exact(PolynomialSpace::total_degree(2, 4), sq);
  CHECK(b.provenance().kind == Provenance::Kind::Exact);
  CHECK(b.gram_residual() <= 1e-14);
  // Uniform probability on the square: the Legendre reference is already orthonormal.
  CHECK((b.transform() - Eigen::MatrixXd::Identity(15, 15)).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("exact orthonormalization residuals on the curved domains") {
  for (auto d : {BuiltinDomain::Disc, BuiltinDomain::CornerPolygon, BuiltinDomain::CuspDomain}) {
    const Domain dom = Domain::make_builtin(d);
    const OrthonormalBasis b = orthonormalize_exact(PolynomialSpace::total_degree(2, 15), dom);
    CHECK(b.gram_residual() <= 1e-10);
    const Eigen::MatrixXd g = exact_gram(b, dom);
    CHECK((g - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() < 1e-8);
    // Lower triangular transform keeps prefixes spanning the smaller spaces.
    CHECK(b.transform().triangularView<Eigen::StrictlyUpper>().toDenseMatrix().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("monomial reference is accepted at low degree") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  const OrthonormalBasis b = orthonormalize_exact(ReferenceBasis::monomial(PolynomialSpace::total_degree(2, 4)), disc);
  CHECK(b.gram_residual() <= 1e-10);
  const std::vector<double> x{0.2, 0.1};
  const OrthonormalBasis l = orthonormalize_exact(PolynomialSpace::total_degree(2, 4), disc);
  // Same Gram-Schmidt flag and ordering: identical functions.
  CHECK((b.evaluate(x) - l.evaluate(x)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("missing moment oracle") {
  Box box{{0.0, 0.0}, {1.0, 1.0}};
  const Domain dom("box", box, [](std::span<const double>) { return true; }, 1.0);
  CHECK_THROWS_WITH(orthonormalize_exact(PolynomialSpace::total_degree(2, 1), dom),
                    doctest::Contains("no moment oracle"));
}

TEST_CASE("discrete orthonormalization with a quadrature point set") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  const PolynomialSpace s = PolynomialSpace::total_degree(2, 6);
  const ReferenceBasis ref = ReferenceBasis::legendre(s, sq.bbox());
  const OrthonormalBasis d = orthonormalize_discrete(ref, gauss_square(8));
  CHECK(d.provenance().kind == Provenance::Kind::Discrete);
  CHECK(d.provenance().sample_id == "gauss");
  CHECK(d.gram_residual() < 1e-12);
  const OrthonormalBasis e = orthonormalize_exact(s, sq);
  const std::vector<double> x{0.41, -0.83};
  CHECK((d.evaluate(x) - e.evaluate(x)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("discrete orthonormalization errors") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  const ReferenceBasis ref = ReferenceBasis::legendre(PolynomialSpace::total_degree(2, 2), sq.bbox());
  Rng rng(1);
  CHECK_THROWS_WITH(orthonormalize_discrete(ref, DiscreteInnerProduct::unit(sample_uniform(sq, 5, rng))),
                    doctest::Contains("increase M"));
  // Six points on a line cannot determine V_n.
  Points line(6, 2);
  for (int i = 0; i < 6; ++i) {
    line(i, 0) = -0.9 + 0.3 * i;
    line(i, 1) = 0.5;
  }
  CHECK_THROWS_WITH(orthonormalize_discrete(ref, DiscreteInnerProduct::unit(line)), doctest::Contains("increase M"));
}

TEST_CASE("n = 1, M = 1") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  const ReferenceBasis ref = ReferenceBasis::legendre(PolynomialSpace::first_n(2, 1), sq.bbox());
  Points one(1, 2);
  one << 0.3, 0.4;
  const OrthonormalBasis b = orthonormalize_discrete(ref, DiscreteInnerProduct::unit(one));
  CHECK(b.evaluate(std::vector<double>{-0.5, 0.9})[0] == doctest::Approx(1.0));
}

TEST_CASE("batch and pointwise evaluation agree") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  const OrthonormalBasis b = orthonormalize_exact(PolynomialSpace::total_degree(2, 8), disc);
  Rng rng(2);
  const Points pts = sample_uniform(disc, 50, rng);
  const Eigen::MatrixXd batch = b.evaluate(pts);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    CHECK((batch.row(i).transpose() - b.evaluate(row_span(pts, i))).cwiseAbs().maxCoeff() < 1e-12);
  }
  const OrthonormalBasis p = b.prefix(10);
  CHECK(p.size() == 10);
  CHECK((p.evaluate(pts) - batch.leftCols(10)).cwiseAbs().maxCoeff() < 1e-12);
}
