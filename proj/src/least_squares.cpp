#include "optsample/least_squares.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace optsample {

RankDeficientError::RankDeficientError(Eigen::Index rank, Eigen::Index n)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "least-squares matrix has numerical rank " << rank << " < " << n;
        return msg.str();
      }()),
      rank_(rank) {}

namespace {

// Rows sqrt(w_i / m) * L(x_i).
Eigen::MatrixXd scaled_collocation(const WeightedSample& sample, const OrthonormalBasis& basis) {
  const Eigen::Index m = sample.size();
  if (m < 1) throw std::invalid_argument("sample must contain at least one point");
  if (sample.weights.size() != m) throw std::invalid_argument("weights and points differ in length");
  if (!sample.weights.allFinite() || (sample.weights.array() <= 0.0).any()) {
    throw std::invalid_argument("weights must be finite and positive");
  }
  const Eigen::VectorXd scale = (sample.weights / static_cast<double>(m)).array().sqrt();
  return scale.asDiagonal() * basis.evaluate(sample.points);
}

GramianDiagnostics diagnostics_from(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.cols();
  GramianDiagnostics out;
  out.gram = Eigen::MatrixXd::Zero(n, n);
  out.gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  out.gram = out.gram.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.gram, Eigen::EigenvaluesOnly);
  out.lambda_min = eig.eigenvalues().minCoeff();
  out.lambda_max = eig.eigenvalues().maxCoeff();
  out.deviation = std::max(std::abs(out.lambda_max - 1.0), std::abs(1.0 - out.lambda_min));
  out.condition = out.lambda_min > 0.0 ? out.lambda_max / out.lambda_min
                                       : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

GramianDiagnostics gramian(const WeightedSample& sample, const OrthonormalBasis& basis) {
  return diagnostics_from(scaled_collocation(sample, basis));
}

FitResult fit(const WeightedSample& sample, const Eigen::VectorXd& values,
              const OrthonormalBasis& basis, std::optional<bool> with_diagnostics) {
  if (values.size() != sample.size()) throw std::invalid_argument("values and sample differ in length");
  const Eigen::MatrixXd a = scaled_collocation(sample, basis);
  const Eigen::VectorXd scale = (sample.weights / static_cast<double>(sample.size())).array().sqrt();
  const Eigen::VectorXd b = scale.cwiseProduct(values);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-13);
  if (qr.rank() < a.cols()) throw RankDeficientError(qr.rank(), a.cols());

  FitResult out;
  out.coefficients = qr.solve(b);
  out.basis = basis;
  const bool diag = with_diagnostics.value_or(basis.provenance().kind == Provenance::Kind::Exact);
  if (diag) out.diagnostics = diagnostics_from(a);
  return out;
}

double evaluate_fit(const FitResult& fit, std::span<const double> x) {
  return fit.basis.evaluate(x).dot(fit.coefficients);
}

Eigen::VectorXd evaluate_fit(const FitResult& fit, const Points& pts) {
  return fit.basis.evaluate(pts) * fit.coefficients;
}

double truncate(double y, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("truncation level must be positive");
  return std::copysign(std::min(tau, std::abs(y)), y);
}

TruncatedEstimator::TruncatedEstimator(FitResult fit, double tau) : fit_(std::move(fit)), tau_(tau) {
  if (!(tau_ > 0.0)) throw std::invalid_argument("truncation level must be positive");
}

double TruncatedEstimator::operator()(std::span<const double> x) const {
  return truncate(evaluate_fit(fit_, x), tau_);
}

TruncatedEstimator estimate_truncated(const FitResult& fit, double tau) {
  return TruncatedEstimator(fit, tau);
}

FitResult estimate_conditioned(const FitResult& fit) {
  if (!fit.diagnostics) {
    throw std::invalid_argument("conditioned estimator requires exact reference basis");
  }
  FitResult out = fit;
  if (fit.diagnostics->deviation > 0.5) {
    out.coefficients.setZero();
    out.conditioned_zeroed = true;
  }
  return out;
}

ValuesOracle with_noise(ValuesOracle oracle, double sigma, std::uint64_t seed) {
  if (sigma == 0.0) return oracle;
  auto rng = std::make_shared<Rng>(seed);
  return [oracle = std::move(oracle), sigma, rng](const Points& pts) {
    Eigen::VectorXd v = oracle(pts);
    std::normal_distribution<double> noise(0.0, sigma);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += noise(*rng);
    return v;
  };
}

FitResult fit_with_redraw(MeasureSampler& sampler, std::int64_t m, const ValuesOracle& values,
                          const OrthonormalBasis& basis, int max_redraws, Rng& rng) {
  double last = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt <= max_redraws; ++attempt) {
    WeightedSample sample = sampler.sample(m, rng);
    last = gramian(sample, basis).deviation;
    if (last <= 0.5) {
      FitResult out = fit(sample, values(sample.points), basis, true);
      out.redraws_used = attempt;
      return out;
    }
  }
  std::ostringstream msg;
  msg << "redraw budget exhausted after " << max_redraws << " redraws; last ||G - I||_2 = " << last;
  throw std::runtime_error(msg.str());
}

Eigen::VectorXd SyntheticTarget::values(const Points& pts) const {
  Eigen::VectorXd c(inner.size() + tail.size());
  c << inner, tail;
  return full_basis.evaluate(pts) * c;
}

SyntheticTarget make_synthetic_target(const OrthonormalBasis& full_basis, int n, double tail_energy,
                                      std::optional<double> sup_k_full) {
  const int total = full_basis.size();
  if (n < 1 || n >= total) throw std::invalid_argument("target needs 1 <= n < basis size");
  if (!(tail_energy > 0.0)) throw std::invalid_argument("tail energy must be positive");
  SyntheticTarget t;
  t.full_basis = full_basis;
  t.inner.resize(n);
  for (int j = 0; j < n; ++j) t.inner[j] = 1.0 / (j + 1.0);
  t.tail.resize(total - n);
  for (int j = n; j < total; ++j) t.tail[j - n] = 1.0 / (j + 1.0);
  t.tail *= std::sqrt(tail_energy / t.tail.squaredNorm());
  if (sup_k_full) t.tau = std::sqrt((t.inner.squaredNorm() + t.tail.squaredNorm()) * *sup_k_full);
  return t;
}

double exact_l2_error(const FitResult& fit, const SyntheticTarget& target) {
  const int n = target.n();
  if (fit.basis.size() != n || fit.coefficients.size() != n ||
      !(fit.basis.space() == target.full_basis.space().prefix(n)) ||
      fit.basis.transform() != target.full_basis.transform().topLeftCorner(n, n)) {
    throw std::invalid_argument("fit basis does not match the target basis");
  }
  return (target.inner - fit.coefficients).squaredNorm() + target.tail_energy();
}

}  // namespace optsample
