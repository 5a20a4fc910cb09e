#include "optsample/algorithms.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "optsample/bounds.hpp"

namespace optsample {

double SymmetricSpectrum::condition() const {
  return lambda_min > 0.0 ? lambda_max / lambda_min : std::numeric_limits<double>::infinity();
}

double SymmetricSpectrum::deviation() const {
  return std::max(std::abs(lambda_max - 1.0), std::abs(1.0 - lambda_min));
}

SymmetricSpectrum symmetric_spectrum(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().minCoeff(), eig.eigenvalues().maxCoeff()};
}

std::int64_t sufficient_M(int n, double Bn, double eps) {
  if (n < 1 || Bn < n || !(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("sufficient_M needs n >= 1, B(n) >= n, 0 < eps < 1");
  }
  return static_cast<std::int64_t>(std::ceil(tropp_gamma() * Bn * std::log(2.0 * n / eps)));
}

double c_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  // log1p keeps the small-delta regime accurate.
  const double lp = std::log1p(delta);
  return 1.0 / ((1.0 + delta) * lp - delta);
}

// --- schedules ---------------------------------------------------------------

void LevelSchedule::validate(bool hierarchical) const {
  const std::size_t q = dims.size();
  if (q == 0) throw std::invalid_argument("schedule has no levels");
  if (offline.size() != q || eps.size() != q) {
    throw std::invalid_argument("schedule needs one offline count and one eps per level");
  }
  double eps_sum = 0.0;
  for (std::size_t p = 0; p < q; ++p) {
    if (dims[p] < 1 || (p > 0 && dims[p] <= dims[p - 1])) {
      throw std::invalid_argument("schedule dimensions must be positive and strictly increasing");
    }
    if (offline[p] < dims[p]) throw std::invalid_argument("offline count M_p must be at least n_p");
    if (!(eps[p] > 0.0 && eps[p] < 1.0)) throw std::invalid_argument("eps_p must lie in (0, 1)");
    eps_sum += eps[p];
  }
  if (!(eps_sum < 1.0 + 1e-12)) throw std::invalid_argument("sum of eps_p must be below 1");
  if (!(kappa >= 1.0)) throw std::invalid_argument("kappa must be at least 1");
  if (!hierarchical) return;

  if (online.size() != q) throw std::invalid_argument("hierarchical schedule needs m_p per level");
  if (!deltas.empty()) {
    if (deltas.size() != q) throw std::invalid_argument("schedule needs one delta per level");
    double delta_sum = 0.0;
    for (double dl : deltas) {
      if (!(dl > 0.0 && dl < 1.0)) throw std::invalid_argument("delta_p must lie in (0, 1)");
      delta_sum += dl;
    }
    if (!(delta_sum < 0.5)) throw std::invalid_argument("sum of delta_p must be below 1/2");
  }
  for (std::size_t p = 0; p < q; ++p) {
    if (online[p] < dims[p] || (p > 0 && online[p] <= online[p - 1])) {
      throw std::invalid_argument("online counts must satisfy m_p >= n_p and increase strictly");
    }
    if (p > 0 && static_cast<double>(online[p]) * dims[p - 1] <
                     static_cast<double>(online[p - 1]) * dims[p]) {
      throw std::invalid_argument("schedule violates m_p/n_p monotonicity");
    }
  }
}

LevelSchedule LevelSchedule::multilevel_preset(std::vector<int> dims, double eps, double kappa) {
  LevelSchedule s;
  const double q = static_cast<double>(dims.size());
  s.kappa = kappa;
  for (int n : dims) {
    const double eps_p = eps / q;
    s.eps.push_back(eps_p);
    s.offline.push_back(static_cast<std::int64_t>(
        std::ceil(3.0 * kappa * tropp_gamma() * n * std::log(2.0 * n / eps_p))));
  }
  s.dims = std::move(dims);
  s.validate(false);
  return s;
}

LevelSchedule LevelSchedule::hierarchical_preset(std::vector<int> dims, double eps, double delta,
                                                 double kappa) {
  LevelSchedule s;
  const double q = static_cast<double>(dims.size());
  s.kappa = kappa;
  for (int n : dims) {
    const double eps_p = eps / q;
    const double delta_p = delta / q;
    s.eps.push_back(eps_p);
    s.deltas.push_back(delta_p);
    s.offline.push_back(static_cast<std::int64_t>(
        std::ceil(2.0 * kappa * c_delta(delta_p) * n * std::log(2.0 * n / eps_p))));
    s.online.push_back(hierarchical_budget(n, delta, eps));
  }
  s.dims = std::move(dims);
  s.validate(true);
  return s;
}

// --- offline stages ------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ReferenceBasis make_reference(const PolynomialSpace& space, const Domain& domain,
                              ReferenceFamily family) {
  return ReferenceBasis(space, family, domain.bbox());
}

// Exact orthonormal basis of `space`, from the options when it covers the
// space, otherwise through the moments; nullopt when unavailable.
class ExactBasisCache {
 public:
  ExactBasisCache(const Domain& domain, const AlgorithmOptions& options)
      : domain_(&domain), options_(&options) {}

  std::optional<OrthonormalBasis> get(const PolynomialSpace& space) {
    if (!options_->exact_diagnostics) return std::nullopt;
    const auto& given = options_->exact_basis;
    if (given && given->size() >= space.size() && given->space().prefix(space.size()) == space) {
      return given->prefix(space.size());
    }
    if (cached_ && cached_->size() >= space.size() && cached_->space().prefix(space.size()) == space) {
      return cached_->prefix(space.size());
    }
    if (!domain_->has_moments()) return std::nullopt;
    cached_ = orthonormalize_exact(space, *domain_);
    return cached_;
  }

 private:
  const Domain* domain_;
  const AlgorithmOptions* options_;
  std::optional<OrthonormalBasis> cached_;
};

// kappa and ||G - I||_2 of (1/M) sum w L L^T for the exact basis L.
void attach_exact_diagnostics(LevelDiagnostics& diag, const Points& pts, const Eigen::VectorXd& w,
                              const std::optional<OrthonormalBasis>& exact) {
  if (!exact) return;
  WeightedSample s;
  s.points = pts;
  s.weights = w;
  const GramianDiagnostics g = gramian(s, *exact);
  diag.condition = g.condition;
  diag.deviation = g.deviation;
}

void attach_alpha(LevelDiagnostics& diag, const ChristoffelEvaluator& k, const Domain& domain,
                  const AlgorithmOptions& options, Rng& rng) {
  if (options.alpha_samples <= 0) return;
  const AlphaEstimate a = estimate_alpha(k, domain, options.alpha_samples, rng);
  diag.alpha = a.alpha;
  diag.alpha_se = a.standard_error;
}

// One level of the multilevel construction: M points from sigma~_{p-1} (mu
// when prev is null), inner-product weights w~_{p-1}/alpha_{p-1}.
std::pair<std::shared_ptr<ChristoffelEvaluator>, LevelDiagnostics> offline_level(
    const ReferenceBasis& reference, const Domain& domain,
    const std::shared_ptr<ChristoffelEvaluator>& prev, double prev_alpha, std::int64_t M, Rng& rng,
    const AlgorithmOptions& options, ExactBasisCache& exact, const std::string& label) {
  const auto t0 = Clock::now();
  LevelDiagnostics diag;
  diag.n = reference.size();
  diag.M = M;
  if (M < reference.size()) {
    throw std::invalid_argument(label + ": offline count M is smaller than n");
  }

  DiscreteInnerProduct ip;
  if (!prev) {
    ip = DiscreteInnerProduct::unit(sample_uniform(domain, M, rng), label);
  } else {
    MeasureSampler sampler(SamplingMeasure::perturbed(prev), domain);
    WeightedSample s = sampler.sample(M, rng);
    ip.points = std::move(s.points);
    ip.weights = s.weights / prev_alpha;
    ip.sample_id = label;
    ip.weights_id = "n/(alpha k~) of previous level";
  }

  OrthonormalBasis basis;
  try {
    basis = orthonormalize_discrete(reference, ip);
  } catch (const std::exception& e) {
    throw std::runtime_error(label + ": " + e.what());
  }
  auto k = std::make_shared<ChristoffelEvaluator>(std::move(basis));
  attach_exact_diagnostics(diag, ip.points, ip.weights, exact.get(reference.space()));
  attach_alpha(diag, *k, domain, options, rng);
  diag.seconds = seconds_since(t0);
  return {k, diag};
}

std::string points_label(const std::string& algorithm, int level, std::int64_t M) {
  std::ostringstream id;
  id << algorithm << "/level" << level << "/M" << M;
  return id.str();
}

}  // namespace

OfflineResult algorithm1_offline(const PolynomialSpace& space, const Domain& domain, std::int64_t M,
                                 Rng& rng, const AlgorithmOptions& options) {
  if (M < space.size()) throw std::invalid_argument("algorithm1_offline needs M >= n");
  ExactBasisCache exact(domain, options);
  const std::string label = points_label("a1", 1, M);
  auto [k, diag] = offline_level(make_reference(space, domain, options.family), domain, nullptr, 1.0,
                                 M, rng, options, exact, label);
  OfflineResult out;
  out.k = k;
  out.M = M;
  out.points_id = label;
  out.levels.push_back(diag);
  return out;
}

EmpiricalMResult empirical_M(const PolynomialSpace& space, const Domain& domain, double c_star,
                             std::int64_t M0, double growth, Rng& rng, std::int64_t cap,
                             const AlgorithmOptions& options) {
  if (!(c_star > 1.0)) throw std::invalid_argument("c_star must exceed 1");
  if (!(growth > 1.0)) throw std::invalid_argument("growth factor must exceed 1");
  const int n = space.size();
  const ReferenceBasis reference = make_reference(space, domain, options.family);
  std::int64_t M = std::max<std::int64_t>(M0, n);
  EmpiricalMResult out;
  while (true) {
    if (M > cap) throw std::runtime_error("empirical M search diverged");
    const Points y = sample_uniform(domain, M, rng);
    Points z = sample_uniform(domain, M, rng);
    double cond = std::numeric_limits<double>::infinity();
    try {
      const OrthonormalBasis ly = orthonormalize_discrete(reference, DiscreteInnerProduct::unit(y, "y"));
      WeightedSample zs;
      zs.points = z;
      zs.weights = Eigen::VectorXd::Ones(M);
      cond = gramian(zs, ly).condition;
    } catch (const std::runtime_error&) {
      // y does not determine V_n yet; keep growing.
    }
    out.history.emplace_back(M, cond);
    if (cond <= c_star) {
      ExactBasisCache exact(domain, options);
      const auto t0 = Clock::now();
      LevelDiagnostics diag;
      diag.n = n;
      diag.M = M;
      const DiscreteInnerProduct ip = DiscreteInnerProduct::unit(std::move(z), points_label("empirical", 1, M));
      auto k = std::make_shared<ChristoffelEvaluator>(orthonormalize_discrete(reference, ip));
      attach_exact_diagnostics(diag, ip.points, ip.weights, exact.get(space));
      attach_alpha(diag, *k, domain, options, rng);
      diag.seconds = seconds_since(t0);
      out.M = M;
      out.condition_T = cond;
      out.offline.k = k;
      out.offline.M = M;
      out.offline.points_id = ip.sample_id;
      out.offline.levels.push_back(diag);
      return out;
    }
    M = static_cast<std::int64_t>(std::ceil(growth * static_cast<double>(M)));
  }
}

OfflineResult algorithm2_multilevel(const LevelSchedule& schedule, const Domain& domain, Rng& rng,
                                    const AlgorithmOptions& options) {
  schedule.validate(false);
  const PolynomialSpace top = PolynomialSpace::first_n(domain.dimension(), schedule.dims.back());
  const ReferenceBasis reference = make_reference(top, domain, options.family);
  ExactBasisCache exact(domain, options);
  OfflineResult out;
  if (schedule.levels() > 1 && options.alpha_samples <= 0) {
    throw std::invalid_argument("multilevel construction needs alpha_samples > 0");
  }
  std::shared_ptr<ChristoffelEvaluator> prev;
  double prev_alpha = 1.0;
  for (int p = 0; p < schedule.levels(); ++p) {
    const std::int64_t M = schedule.offline[static_cast<std::size_t>(p)];
    auto [k, diag] = offline_level(reference.prefix(schedule.dims[static_cast<std::size_t>(p)]), domain,
                                   prev, prev_alpha, M, rng, options, exact,
                                   "level " + std::to_string(p + 1));
    prev = k;
    prev_alpha = diag.alpha;
    out.levels.push_back(diag);
    out.M += M;
    out.points_id = points_label("a2", p + 1, M);
  }
  out.k = prev;
  return out;
}

// --- hierarchical sampling ------------------------------------------------------

HierarchicalSampleState::HierarchicalSampleState(LevelSchedule schedule, const Domain& domain,
                                                 AlgorithmOptions options)
    : schedule_(std::move(schedule)), domain_(&domain), options_(std::move(options)) {
  schedule_.validate(true);
  if (options_.alpha_samples <= 0) {
    throw std::invalid_argument("hierarchical sampling needs alpha_samples > 0");
  }
  points_.resize(0, domain.dimension());
}

Eigen::VectorXd HierarchicalSampleState::unnormalized_density(int level, const Points& pts) const {
  const auto& lv = levels_.at(static_cast<std::size_t>(level));
  const Eigen::MatrixXd vals = lv.k->basis().evaluate(pts);
  Eigen::VectorXd f = (static_cast<double>(lv.m) / lv.n) * vals.rowwise().squaredNorm();
  if (level > 0) {
    const auto& prev = levels_[static_cast<std::size_t>(level - 1)];
    f -= (static_cast<double>(prev.m) / prev.n) * vals.leftCols(prev.n).rowwise().squaredNorm();
  }
  return f;
}

Eigen::VectorXd HierarchicalSampleState::density(int level, const Points& pts) const {
  const auto& lv = levels_.at(static_cast<std::size_t>(level));
  const std::int64_t prev_m = level > 0 ? levels_[static_cast<std::size_t>(level - 1)].m : 0;
  return lv.alpha / static_cast<double>(lv.m - prev_m) * unnormalized_density(level, pts);
}

Eigen::VectorXd HierarchicalSampleState::weights(const Points& pts, int through) const {
  if (through < 0 || through >= completed()) throw std::out_of_range("level not completed");
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(pts.rows());
  for (int p = 0; p <= through; ++p) {
    inv += levels_[static_cast<std::size_t>(p)].alpha * unnormalized_density(p, pts);
  }
  const double m = static_cast<double>(levels_[static_cast<std::size_t>(through)].m);
  return m * inv.cwiseInverse();
}

WeightedSample HierarchicalSampleState::sample(std::optional<int> through) const {
  const int p = through.value_or(completed() - 1);
  if (p < 0 || p >= completed()) throw std::out_of_range("level not completed");
  const auto m = static_cast<Eigen::Index>(levels_[static_cast<std::size_t>(p)].m);
  WeightedSample out;
  out.points = points_.topRows(m);
  out.weights = weights(out.points, p);
  out.measure = "hierarchical";
  out.levels.assign(point_levels_.begin(), point_levels_.begin() + m);
  return out;
}

void HierarchicalSampleState::advance(Rng& rng) {
  if (done()) throw std::logic_error("all levels already completed");
  const int p = completed();
  const auto pi = static_cast<std::size_t>(p);
  const PolynomialSpace top = PolynomialSpace::first_n(domain_->dimension(), schedule_.dims.back());
  const ReferenceBasis reference = ReferenceBasis(top, options_.family, domain_->bbox()).prefix(schedule_.dims[pi]);
  ExactBasisCache exact(*domain_, options_);

  // Offline stage as in the multilevel construction.
  std::shared_ptr<ChristoffelEvaluator> prev = p > 0 ? levels_[pi - 1].k : nullptr;
  const double prev_alpha = p > 0 ? levels_[pi - 1].offline.alpha : 1.0;
  const std::string label = "level " + std::to_string(p + 1);
  auto [k, diag] = offline_level(reference, *domain_, prev, prev_alpha, schedule_.offline[pi], rng,
                                 options_, exact, label);
  offline_total_ += schedule_.offline[pi];

  HierarchicalLevel lv;
  lv.n = schedule_.dims[pi];
  lv.m = schedule_.online[pi];
  lv.k = k;
  lv.offline = diag;
  levels_.push_back(lv);

  // Non-negativity on mu-probes and the registered extreme points.
  Points probes = sample_uniform(*domain_, options_.probe_count, rng);
  if (auto b = domain_->builtin()) {
    const Points extreme = extreme_points(*b);
    Points all(probes.rows() + extreme.rows(), probes.cols());
    all << probes, extreme;
    probes = std::move(all);
  }
  const Eigen::VectorXd f_probe = unnormalized_density(p, probes);
  levels_.back().min_probe = f_probe.minCoeff();
  if (levels_.back().min_probe < -1e-10) {
    levels_.pop_back();
    throw std::runtime_error("schedule violates m_p/n_p monotonicity");
  }

  // alpha_p makes rho_p a probability measure.
  const std::int64_t prev_m = p > 0 ? levels_[pi - 1].m : 0;
  const Eigen::VectorXd f_mc = unnormalized_density(p, sample_uniform(*domain_, options_.alpha_samples, rng));
  const double mean = f_mc.mean();
  const double sd = std::sqrt((f_mc.array() - mean).square().sum() / static_cast<double>(f_mc.size() - 1));
  levels_.back().alpha = static_cast<double>(lv.m - prev_m) / mean;
  levels_.back().alpha_se = levels_.back().alpha * sd / std::sqrt(static_cast<double>(f_mc.size())) / mean;

  const HierarchicalSampleState* self = this;
  EnvelopeSampler sampler(*domain_, [self, p](const Points& pts) -> Eigen::VectorXd {
    return self->unnormalized_density(p, pts).cwiseMax(0.0);
  });
  const Points fresh = sampler.sample(lv.m - prev_m, rng);
  Points grown(points_.rows() + fresh.rows(), domain_->dimension());
  grown << points_, fresh;
  points_ = std::move(grown);
  point_levels_.insert(point_levels_.end(), static_cast<std::size_t>(fresh.rows()), p + 1);
}

HierarchicalSampleState algorithm3_hierarchical(const LevelSchedule& schedule, const Domain& domain,
                                                Rng& rng, const AlgorithmOptions& options) {
  HierarchicalSampleState state(schedule, domain, options);
  while (!state.done()) state.advance(rng);
  return state;
}

}  // namespace optsample
