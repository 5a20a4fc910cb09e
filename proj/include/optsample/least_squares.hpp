// Weighted least-squares fitting, Gramian diagnostics and the estimator
// variants built on top of a fit (truncated, conditioned, redraw).

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>

#include "optsample/christoffel.hpp"
#include "optsample/polyspace.hpp"

namespace optsample {

struct GramianDiagnostics {
  Eigen::MatrixXd gram;      // (<L_j, L_k>_m)
  double deviation = 0.0;    // ||G - I||_2
  double condition = 0.0;    // lambda_max / lambda_min (inf when singular)
  double lambda_min = 0.0;
  double lambda_max = 0.0;

  // Norm equivalence (1 - delta)||v||^2 <= ||v||_m^2 <= (1 + delta)||v||^2.
  [[nodiscard]] double lower_frame() const { return 1.0 - deviation; }
  [[nodiscard]] double upper_frame() const { return 1.0 + deviation; }
};

struct FitResult {
  Eigen::VectorXd coefficients;
  OrthonormalBasis basis;  // fitting basis
  std::optional<GramianDiagnostics> diagnostics;
  bool conditioned_zeroed = false;
  int redraws_used = 0;
};

class RankDeficientError : public std::runtime_error {
 public:
  RankDeficientError(Eigen::Index rank, Eigen::Index n);
  [[nodiscard]] Eigen::Index rank() const { return rank_; }

 private:
  Eigen::Index rank_;
};

// Gramian of the sample in the given basis, assembled in one pass.
GramianDiagnostics gramian(const WeightedSample& sample, const OrthonormalBasis& basis);

// Minimizer of sum_i w_i |values_i - v(x_i)|^2 over the span of `basis`,
// through QR of the sqrt(w)-scaled collocation matrix. Diagnostics are
// attached when the basis is exactly orthonormal (or when forced).
FitResult fit(const WeightedSample& sample, const Eigen::VectorXd& values,
              const OrthonormalBasis& basis, std::optional<bool> with_diagnostics = std::nullopt);

// Evaluates the fitted expansion.
double evaluate_fit(const FitResult& fit, std::span<const double> x);
Eigen::VectorXd evaluate_fit(const FitResult& fit, const Points& pts);

// T_tau(y) = min(tau, |y|) sgn(y).
double truncate(double y, double tau);

class TruncatedEstimator {
 public:
  TruncatedEstimator(FitResult fit, double tau);
  double operator()(std::span<const double> x) const;

 private:
  FitResult fit_;
  double tau_;
};

TruncatedEstimator estimate_truncated(const FitResult& fit, double tau);

// Zeroes the coefficients when ||G - I||_2 > 1/2. Requires diagnostics.
FitResult estimate_conditioned(const FitResult& fit);

using ValuesOracle = std::function<Eigen::VectorXd(const Points&)>;

// Additive Gaussian noise on top of an oracle; sigma = 0 returns it unchanged.
ValuesOracle with_noise(ValuesOracle oracle, double sigma, std::uint64_t seed);

// Redraws the sample until ||G - I||_2 <= 1/2 (G against `basis`), at most
// `max_redraws` times; the oracle only sees the accepted sample.
FitResult fit_with_redraw(MeasureSampler& sampler, std::int64_t m, const ValuesOracle& values,
                          const OrthonormalBasis& basis, int max_redraws, Rng& rng);

// u = sum_{j<=n} c_j L_j + sum_{j>n} c_j L_j in an exact orthonormal basis.
struct SyntheticTarget {
  OrthonormalBasis full_basis;  // n + t functions
  Eigen::VectorXd inner;        // c_1..c_n
  Eigen::VectorXd tail;         // c_{n+1}..c_{n+t}
  double tau = std::numeric_limits<double>::infinity();

  [[nodiscard]] int n() const { return static_cast<int>(inner.size()); }
  [[nodiscard]] double tail_energy() const { return tail.squaredNorm(); }
  [[nodiscard]] Eigen::VectorXd values(const Points& pts) const;
};

// Inner coefficients c_j = 1/j, tail coefficients proportional to 1/j and
// rescaled to the requested energy. tau = ||c|| sqrt(sup_k_full) when given.
SyntheticTarget make_synthetic_target(const OrthonormalBasis& full_basis, int n, double tail_energy,
                                      std::optional<double> sup_k_full = std::nullopt);

// ||u - u_fit||^2 by Parseval. Throws when the fit basis is not the first n
// functions of the target basis.
double exact_l2_error(const FitResult& fit, const SyntheticTarget& target);

}  // namespace optsample
