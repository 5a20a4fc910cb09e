#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "optsample/algorithms.hpp"
#include "optsample/bounds.hpp"

using namespace optsample;

namespace {

std::vector<int> disc_ladder(int top) {
  std::vector<int> dims;
  for (int p = 0; p <= top; ++p) dims.push_back(space_dimension(2, p));
  return dims;
}

bool framed(const ChristoffelEvaluator& approx, const ChristoffelEvaluator& exact, const Domain& dom,
            int probes, Rng& rng) {
  const Points x = sample_uniform(dom, probes, rng);
  const Eigen::VectorXd a = approx(x);
  const Eigen::VectorXd e = exact(x);
  return (a.array() >= 2.0 / 3.0 * e.array()).all() && (a.array() <= 2.0 * e.array()).all();
}

}  // namespace

TEST_CASE("constants and budgets") {
  CHECK(c_delta(0.5) == doctest::Approx(tropp_gamma()).epsilon(1e-15));
  CHECK(c_delta(0.25) == doctest::Approx(34.566864399449936591).epsilon(1e-13));
  CHECK(c_delta(1e-3) * 1e-6 / 2.0 == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS(c_delta(0.0));
  CHECK_THROWS(c_delta(1.0));

  CHECK(sufficient_M(1, 1.0, 2.0 / std::exp(2.0)) == 19);
  CHECK(sufficient_M(136, 2.0 * 136 * 136, 1e-2) == 3491058);
  CHECK(sufficient_M(66, 3.0 * std::pow(66.0, 1.5), 1e-2) == 141057);
  CHECK_THROWS(sufficient_M(10, 5.0, 0.1));
}

TEST_CASE("schedules") {
  const LevelSchedule ml = LevelSchedule::multilevel_preset({1, 3, 6}, 0.03);
  CHECK(ml.eps[0] == doctest::Approx(0.01));
  CHECK(ml.offline[1] == static_cast<std::int64_t>(std::ceil(6.0 * tropp_gamma() * 3 * std::log(600.0))));
  const LevelSchedule h = LevelSchedule::hierarchical_preset({10, 21}, 0.01, 0.25);
  CHECK(h.online[0] == hierarchical_budget(10, 0.25, 0.01));
  CHECK(h.online[1] == hierarchical_budget(21, 0.25, 0.01));
  CHECK(h.deltas[1] == doctest::Approx(0.125));
  CHECK(h.offline[0] ==
        static_cast<std::int64_t>(std::ceil(4.0 * c_delta(0.125) * 10 * std::log(2.0 * 10 / 0.005))));

  LevelSchedule bad = h;
  bad.online = {1000, 1200};
  CHECK_THROWS_WITH(bad.validate(true), "schedule violates m_p/n_p monotonicity");
  bad = h;
  bad.dims = {21, 10};
  CHECK_THROWS(bad.validate(true));
  bad = h;
  bad.deltas = {0.3, 0.3};
  CHECK_THROWS(bad.validate(true));
}

TEST_CASE("algorithm 1 with a single point") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  Rng rng = make_rng(1);
  const OfflineResult r = algorithm1_offline(PolynomialSpace::total_degree(2, 0), disc, 1, rng);
  const Points x = sample_uniform(disc, 100, rng);
  CHECK(((*r.k)(x).array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(r.M == 1);
  REQUIRE(r.condition().has_value());
  CHECK(*r.condition() == doctest::Approx(1.0));
  CHECK_THROWS(algorithm1_offline(PolynomialSpace::total_degree(2, 2), disc, 5, rng));
}

TEST_CASE("algorithm 1 on the square at large M") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  Rng rng = make_rng(2);
  const OfflineResult r = algorithm1_offline(PolynomialSpace::total_degree(2, 1), sq, 100000, rng);
  const Points x = sample_uniform(sq, 1000, rng);
  const Eigen::VectorXd kt = (*r.k)(x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double k = 1.0 + 3.0 * x(i, 0) * x(i, 0) + 3.0 * x(i, 1) * x(i, 1);
    worst = std::max(worst, std::abs(kt[i] / k - 1.0));
  }
  CHECK(worst <= 0.2);
  CHECK(r.alpha() == doctest::Approx(1.0).epsilon(0.02));
  CHECK(*r.deviation() <= 0.05);
}

TEST_CASE("algorithm 1 framing on the disc at the sufficient budget") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  const PolynomialSpace space = PolynomialSpace::total_degree(2, 10);
  AlgorithmOptions opt;
  opt.alpha_samples = 0;
  opt.exact_basis = std::make_shared<OrthonormalBasis>(orthonormalize_exact(space, disc));
  const ChristoffelEvaluator exact(*opt.exact_basis);
  const std::int64_t M = sufficient_M(66, *builtin_sup_bound(BuiltinDomain::Disc, 66), 1e-2);
  for (int t = 0; t < 3; ++t) {
    Rng rng = make_rng(3, static_cast<std::uint64_t>(t));
    const OfflineResult r = algorithm1_offline(space, disc, M, rng, opt);
    CHECK(*r.deviation() <= 0.5);
    CHECK(framed(*r.k, exact, disc, 2000, rng));
  }
}

TEST_CASE("empirical M") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  Rng rng = make_rng(4);
  const EmpiricalMResult one = empirical_M(PolynomialSpace::total_degree(2, 0), sq, 3.0, 1, 1.5, rng);
  CHECK(one.M == 1);
  CHECK(one.condition_T == doctest::Approx(1.0));
  CHECK(one.history.size() == 1);

  int good = 0;
  for (int t = 0; t < 20; ++t) {
    Rng r = make_rng(5, static_cast<std::uint64_t>(t));
    AlgorithmOptions opt;
    opt.alpha_samples = 0;
    const EmpiricalMResult e = empirical_M(PolynomialSpace::total_degree(2, 1), sq, 3.0, 3, 1.5, r, 10'000'000, opt);
    CHECK(e.condition_T <= 3.0);
    for (std::size_t i = 1; i < e.history.size(); ++i) CHECK(e.history[i].first > e.history[i - 1].first);
    good += *e.offline.condition() <= 9.0 ? 1 : 0;
  }
  CHECK(good >= 18);

  CHECK_THROWS_WITH(empirical_M(PolynomialSpace::total_degree(2, 3), sq, 1.0001, 10, 1.5, rng, 200),
                    "empirical M search diverged");
  CHECK_THROWS(empirical_M(PolynomialSpace::total_degree(2, 1), sq, 1.0, 3, 1.5, rng));
  CHECK_THROWS(empirical_M(PolynomialSpace::total_degree(2, 1), sq, 3.0, 3, 1.0, rng));
}

TEST_CASE("empirical M is far below the sufficient budget on the disc") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  Rng rng = make_rng(6);
  AlgorithmOptions opt;
  opt.alpha_samples = 0;
  const EmpiricalMResult e = empirical_M(PolynomialSpace::total_degree(2, 10), disc, 3.0, 66, 1.5, rng,
                                         10'000'000, opt);
  CHECK(static_cast<double>(e.M) <= sufficient_M(66, 3.0 * std::pow(66.0, 1.5), 1e-2) / 10.0);
}

TEST_CASE("multilevel with one level") {
  const Domain sq = Domain::make_builtin(BuiltinDomain::Square);
  LevelSchedule s;
  s.dims = {6};
  s.offline = {5000};
  s.eps = {0.01};
  Rng a = make_rng(7);
  Rng b = make_rng(7);
  const OfflineResult ml = algorithm2_multilevel(s, sq, a);
  const OfflineResult a1 = algorithm1_offline(PolynomialSpace::total_degree(2, 2), sq, 5000, b);
  CHECK(ml.levels.size() == 1);
  CHECK(ml.M == 5000);
  // Same seed and same draws: the two constructions coincide.
  CHECK((ml.k->basis().transform() - a1.k->basis().transform()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("multilevel budget beats the single draw on the cusp") {
  const LevelSchedule s = LevelSchedule::multilevel_preset(disc_ladder(10), 1e-2);
  std::int64_t total = 0;
  for (std::int64_t M : s.offline) total += M;
  CHECK(total < sufficient_M(66, std::pow(66.0, 3), 1e-2));
  CHECK(sufficient_M(66, std::pow(66.0, 3), 1e-2) == 25210841);
}

TEST_CASE("multilevel framing on the disc") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  const LevelSchedule s = LevelSchedule::multilevel_preset(disc_ladder(10), 1e-2);
  const ChristoffelEvaluator exact(orthonormalize_exact(PolynomialSpace::total_degree(2, 10), disc));
  for (int t = 0; t < 2; ++t) {
    Rng rng = make_rng(8, static_cast<std::uint64_t>(t));
    const OfflineResult r = algorithm2_multilevel(s, disc, rng);
    CHECK(r.levels.size() == 11);
    CHECK(framed(*r.k, exact, disc, 2000, rng));
    for (const auto& lv : r.levels) CHECK(*lv.deviation <= 0.5);
  }
}

TEST_CASE("hierarchical sampling with one level") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  const LevelSchedule s = LevelSchedule::hierarchical_preset({10}, 1e-2, 0.25);
  Rng rng = make_rng(9);
  const HierarchicalSampleState st = algorithm3_hierarchical(s, disc, rng);
  const auto& lv = st.levels().front();
  CHECK(st.points().rows() == lv.m);
  const Points x = sample_uniform(disc, 500, rng);
  const Eigen::VectorXd w = st.weights(x, 0);
  const Eigen::VectorXd expected = (lv.n / lv.alpha) * (*lv.k)(x).cwiseInverse();
  CHECK((w - expected).cwiseAbs().maxCoeff() <= 1e-10 * expected.cwiseAbs().maxCoeff());
}

TEST_CASE("hierarchical sampling with two levels") {
  const Domain disc = Domain::make_builtin(BuiltinDomain::Disc);
  const LevelSchedule s = LevelSchedule::hierarchical_preset({10, 21}, 1e-2, 0.25);
  const OrthonormalBasis exact = orthonormalize_exact(PolynomialSpace::total_degree(2, 5), disc);

  Rng rng = make_rng(10);
  HierarchicalSampleState st(s, disc);
  st.advance(rng);
  const Points first = st.points();
  CHECK(first.rows() == s.online[0]);
  CHECK_FALSE(st.done());
  st.advance(rng);
  CHECK(st.done());
  CHECK(st.points().rows() == s.online[1]);
  CHECK(st.points().topRows(first.rows()) == first);
  CHECK(st.point_levels().front() == 1);
  CHECK(st.point_levels().back() == 2);
  CHECK_THROWS(st.advance(rng));

  // Same seed, same points.
  Rng again = make_rng(10);
  const HierarchicalSampleState twin = algorithm3_hierarchical(s, disc, again);
  CHECK(twin.points() == st.points());

  // Mixture identity.
  const Points x = sample_uniform(disc, 10000, rng);
  const Eigen::VectorXd w = st.weights(x, 1);
  Eigen::VectorXd mix = static_cast<double>(s.online[0]) * st.density(0, x) +
                        static_cast<double>(s.online[1] - s.online[0]) * st.density(1, x);
  const double m = static_cast<double>(s.online[1]);
  CHECK(((w.cwiseProduct(mix).array() - m).abs() / m).maxCoeff() <= 1e-8);

  // Later level densities are non-negative on the probes.
  CHECK(st.levels()[1].min_probe >= -1e-10);
  // Both levels are well conditioned against the exact basis.
  CHECK(gramian(st.sample(0), exact.prefix(10)).deviation <= 0.5);
  CHECK(gramian(st.sample(1), exact.prefix(21)).deviation <= 0.5);
}
