#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "optsample/bounds.hpp"
#include "optsample/least_squares.hpp"

using namespace optsample;

namespace {

OrthonormalBasis exact_basis(BuiltinDomain b, int degree) {
  return orthonormalize_exact(PolynomialSpace::total_degree(2, degree), Domain::make_builtin(b));
}

WeightedSample mu_sample(BuiltinDomain b, std::int64_t m, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return sample_measure(SamplingMeasure::mu(), Domain::make_builtin(b), m, rng);
}

// Gauss-Legendre tensor rule on the square with weights normalized to mean one.
WeightedSample gauss_square(int q) {
  std::vector<double> x(static_cast<std::size_t>(q)), w(static_cast<std::size_t>(q));
  for (int i = 0; i < q; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= q; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  WeightedSample s;
  s.points.resize(q * q, 2);
  s.weights.resize(q * q);
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) {
      s.points(i * q + j, 0) = x[static_cast<std::size_t>(i)];
      s.points(i * q + j, 1) = x[static_cast<std::size_t>(j)];
      s.weights[i * q + j] = q * q * w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] / 4.0;
    }
  }
  s.measure = "gauss";
  return s;
}

}  // namespace

TEST_CASE("reproduction of a basis function") {
  const OrthonormalBasis b = exact_basis(BuiltinDomain::CornerPolygon, 4);
  const WeightedSample s = mu_sample(BuiltinDomain::CornerPolygon, 60, 1);
  const Eigen::VectorXd values = b.evaluate(s.points).col(1);
  const FitResult f = fit(s, values, b);
  Eigen::VectorXd e2 = Eigen::VectorXd::Zero(b.size());
  e2[1] = 1.0;
  CHECK((f.coefficients - e2).cwiseAbs().maxCoeff() <= 1e-10);
  REQUIRE(f.diagnostics.has_value());
}

TEST_CASE("common weight scaling leaves the fit unchanged") {
  const OrthonormalBasis b = exact_basis(BuiltinDomain::Disc, 5);
  WeightedSample s = mu_sample(BuiltinDomain::Disc, 100, 2);
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.weights[i] = u(rng);
  const Eigen::VectorXd values = s.points.col(0).array().exp().matrix();
  const FitResult f1 = fit(s, values, b);
  s.weights *= 17.0;
  const FitResult f2 = fit(s, values, b);
  CHECK((f1.coefficients - f2.coefficients).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("interpolation when m = n") {
  const OrthonormalBasis b = exact_basis(BuiltinDomain::Square, 3);
  const WeightedSample s = mu_sample(BuiltinDomain::Square, b.size(), 3);
  const Eigen::VectorXd values = s.points.col(0).array().sin().matrix() + s.points.col(1);
  const FitResult f = fit(s, values, b);
  CHECK((evaluate_fit(f, s.points) - values).norm() <= 1e-8 * values.norm());
}

TEST_CASE("projection property") {
  const OrthonormalBasis b = exact_basis(BuiltinDomain::CuspDomain, 4);
  const WeightedSample s = mu_sample(BuiltinDomain::CuspDomain, 200, 5);
  const Eigen::VectorXd values = (s.points.col(0).array() * 3.0).cos().matrix();
  const FitResult f = fit(s, values, b);
  const Eigen::VectorXd r = values - evaluate_fit(f, s.points);
  const Eigen::VectorXd ip = b.evaluate(s.points).transpose() * s.weights.cwiseProduct(r) / static_cast<double>(s.size());
  CHECK(ip.cwiseAbs().maxCoeff() <= 1e-8 * values.norm());
}

TEST_CASE("rank deficiency carries the rank") {
  const OrthonormalBasis b = exact_basis(BuiltinDomain::Square, 2);
  WeightedSample s;
  s.points.resize(10, 2);
  for (int i = 0; i < 10; ++i) {
    s.points(i, 0) = -0.9 + 0.2 * i;
    s.points(i, 1) = 0.3;
  }
  s.weights = Eigen::VectorXd::Ones(10);
  try {
    fit(s, Eigen::VectorXd::Ones(10), b);
    FAIL("expected a rank error");
  } catch (const RankDeficientError& e) {
    CHECK(e.rank() == 3);
  }
  WeightedSample bad = s;
  bad.weights[0] = -1.0;
  CHECK_THROWS(fit(bad, Eigen::VectorXd::Ones(10), b));
  CHECK_THROWS(fit(s, Eigen::VectorXd::Ones(3), b));
}

TEST_CASE("gramian") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  const OrthonormalBasis b = exact_basis(BuiltinDomain::Square, 6);
  const GramianDiagnostics g = gramian(gauss_square(8), b);
  CHECK((g.gram - Eigen::MatrixXd::Identity(b.size(), b.size())).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(g.deviation <= 1e-10);
  CHECK(g.condition == doctest::Approx(1.0));

  WeightedSample one;
  one.points.resize(1, 2);
  one.points << 0.2, 0.3;
  one.weights = Eigen::VectorXd::Ones(1);
  const GramianDiagnostics g1 = gramian(one, b.prefix(1));
  CHECK(g1.gram(0, 0) == doctest::Approx(1.0));
  (void)sq;
}

TEST_CASE("norm equivalence with delta = ||G - I||") {
  const OrthonormalBasis b = exact_basis(BuiltinDomain::Disc, 6);
  const WeightedSample s = mu_sample(BuiltinDomain::Disc, 400, 6);
  const GramianDiagnostics g = gramian(s, b);
  const double delta = g.deviation + 1e-10;
  Rng rng(12);
  std::normal_distribution<double> nd;
  const Eigen::MatrixXd l = b.evaluate(s.points);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd c(b.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) c[j] = nd(rng);
    const double norm2 = c.squaredNorm();
    const double discrete = (l * c).cwiseAbs2().cwiseProduct(s.weights).sum() / static_cast<double>(s.size());
    CHECK(discrete >= (1 - delta) * norm2);
    CHECK(discrete <= (1 + delta) * norm2);
  }
  CHECK(g.lower_frame() == doctest::Approx(1 - g.deviation));
  CHECK(g.upper_frame() == doctest::Approx(1 + g.deviation));
}

TEST_CASE("optimal sampling concentrates at the theorem budget") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  auto k = std::make_shared<ChristoffelEvaluator>(exact_basis(BuiltinDomain::Disc, 10));
  MeasureSampler sampler(SamplingMeasure::optimal(k), disc);
  const std::int64_t m = online_budget(66, 3.0, 0.01);
  int failures = 0;
  for (int t = 0; t < 100; ++t) {
    Rng rng = make_rng(100, static_cast<std::uint64_t>(t));
    failures += gramian(sampler.sample(m, rng), k->basis()).deviation > 0.5 ? 1 : 0;
  }
  CHECK(failures <= 1);
}

TEST_CASE("truncation") {
  CHECK(truncate(0.3, 1.0) == 0.3);
  CHECK(truncate(-5.0, 1.0) == -1.0);
  CHECK(truncate(5.0, 1.0) == 1.0);
  CHECK_THROWS(truncate(1.0, 0.0));
  const OrthonormalBasis b = exact_basis(BuiltinDomain::Square, 2);
  FitResult f;
  f.basis = b;
  f.coefficients = Eigen::VectorXd::Zero(b.size());
  f.coefficients[1] = 0.5;
  // u = 0.5 L_2, |u| <= 0.5 sqrt(3).
  const TruncatedEstimator t = estimate_truncated(f, 0.5 * std::sqrt(3.0));
  Rng rng(1);
  const Points pts = sample_uniform(Domain::make_builtin(BuiltinDomain::Square), 1000, rng);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    CHECK(t(row_span(pts, i)) == doctest::Approx(evaluate_fit(f, row_span(pts, i))));
  }
}

TEST_CASE("conditioned estimator") {
  const OrthonormalBasis b = exact_basis(BuiltinDomain::Square, 2);
  FitResult f;
  f.basis = b;
  f.coefficients = Eigen::VectorXd::Ones(b.size());
  CHECK_THROWS_WITH(estimate_conditioned(f), "conditioned estimator requires exact reference basis");
  f.diagnostics = GramianDiagnostics{};
  f.diagnostics->deviation = 0.4;
  const FitResult kept = estimate_conditioned(f);
  CHECK_FALSE(kept.conditioned_zeroed);
  CHECK(kept.coefficients.isOnes());
  f.diagnostics->deviation = 0.6;
  const FitResult zeroed = estimate_conditioned(f);
  CHECK(zeroed.conditioned_zeroed);
  CHECK(zeroed.coefficients.isZero());
  const WeightedSample q = gauss_square(6);
  const FitResult exact = fit(q, q.points.col(0), b, true);
  CHECK_FALSE(estimate_conditioned(exact).conditioned_zeroed);
}

TEST_CASE("discrete basis fits carry no diagnostics by default") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  const WeightedSample q = gauss_square(6);
  const OrthonormalBasis d = orthonormalize_discrete(
      ReferenceBasis::legendre(PolynomialSpace::total_degree(2, 2), sq.bbox()),
      DiscreteInnerProduct{q.points, q.weights, "gauss", "gauss"});
  const FitResult f = fit(q, q.points.col(1), d);
  CHECK_FALSE(f.diagnostics.has_value());
  CHECK_THROWS(estimate_conditioned(f));
}

TEST_CASE("redraw") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  auto k = std::make_shared<ChristoffelEvaluator>(exact_basis(BuiltinDomain::Disc, 10));
  MeasureSampler sampler(SamplingMeasure::optimal(k), disc);
  int calls = 0;
  std::int64_t seen = 0;
  const ValuesOracle oracle = [&](const Points& p) {
    ++calls;
    seen += p.rows();
    return Eigen::VectorXd(p.col(0));
  };
  const std::int64_t m = online_budget(66, 3.0, 0.01);
  int redraws = 0;
  for (int t = 0; t < 100; ++t) {
    Rng rng = make_rng(200, static_cast<std::uint64_t>(t));
    redraws += fit_with_redraw(sampler, m, oracle, k->basis(), 5, rng).redraws_used;
  }
  CHECK(calls == 100);
  CHECK(seen == 100 * m);
  CHECK(redraws / 100.0 <= 0.02);

  Rng rng(1);
  CHECK_THROWS_WITH(fit_with_redraw(sampler, 66, oracle, k->basis(), 3, rng),
                    doctest::Contains("redraw budget exhausted"));
  CHECK(calls == 100);
}

TEST_CASE("noise hook") {
  const ValuesOracle base = [](const Points& p) { return Eigen::VectorXd(p.col(0)); };
  Points p(3, 2);
  p << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  CHECK(with_noise(base, 0.0, 1)(p) == base(p));
  const Eigen::VectorXd noisy = with_noise(base, 0.1, 1)(p);
  CHECK((noisy - base(p)).norm() > 0.0);
  CHECK(with_noise(base, 0.1, 1)(p) == noisy);
}

TEST_CASE("synthetic target and exact error") {
  const OrthonormalBasis full = exact_basis(BuiltinDomain::CornerPolygon, 5);
  const SyntheticTarget t = make_synthetic_target(full, 15, 1e-4);
  CHECK(t.n() == 15);
  CHECK(t.tail.size() == 6);
  CHECK(t.tail_energy() == doctest::Approx(1e-4).epsilon(1e-14));
  CHECK(t.inner[2] == doctest::Approx(1.0 / 3.0));

  FitResult f;
  f.basis = full.prefix(15);
  f.coefficients = t.inner;
  CHECK(exact_l2_error(f, t) == doctest::Approx(1e-4).epsilon(1e-14));
  f.coefficients.setZero();
  CHECK(exact_l2_error(f, t) == doctest::Approx(t.inner.squaredNorm() + 1e-4).epsilon(1e-14));
  f.coefficients = t.inner;
  f.coefficients[4] += 0.01;
  CHECK(exact_l2_error(f, t) == doctest::Approx(1e-4 + 1e-4).epsilon(1e-12));

  FitResult wrong;
  wrong.basis = exact_basis(BuiltinDomain::Disc, 4);
  wrong.coefficients = Eigen::VectorXd::Zero(15);
  CHECK_THROWS_WITH(exact_l2_error(wrong, t), doctest::Contains("does not match"));

  // A noiseless fit of a V_n target recovers the tail energy.
  const SyntheticTarget v = make_synthetic_target(full, 15, 1e-30);
  const WeightedSample s = mu_sample(BuiltinDomain::CornerPolygon, 200, 9);
  Eigen::VectorXd c(21);
  c << v.inner, Eigen::VectorXd::Zero(6);
  const FitResult g = fit(s, full.evaluate(s.points) * c, full.prefix(15));
  CHECK(std::abs(exact_l2_error(g, v) - v.tail_energy()) <= 1e-16);

  const SyntheticTarget tt = make_synthetic_target(full, 15, 1e-4, 100.0);
  CHECK(tt.tau == doctest::Approx(std::sqrt((tt.inner.squaredNorm() + 1e-4) * 100.0)));
  CHECK_THROWS(make_synthetic_target(full, 21, 1e-4));
}
