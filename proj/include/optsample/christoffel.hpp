// Inverse Christoffel functions k_n(x) = sum_j |L_j(x)|^2, their sup norms,
// the sampling measures (k_n/n) dmu, and rejection sampling from densities
// with respect to the uniform measure of a domain.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "optsample/geometry.hpp"
#include "optsample/polyspace.hpp"

namespace optsample {

class ChristoffelEvaluator {
 public:
  ChristoffelEvaluator() = default;
  explicit ChristoffelEvaluator(OrthonormalBasis basis);

  [[nodiscard]] int n() const { return basis_.size(); }
  [[nodiscard]] const OrthonormalBasis& basis() const { return basis_; }
  [[nodiscard]] const Provenance& provenance() const { return basis_.provenance(); }

  [[nodiscard]] double operator()(std::span<const double> x) const;
  [[nodiscard]] Eigen::VectorXd operator()(const Points& pts) const;

  // Estimated K_n = sup k_n; NaN until set.
  [[nodiscard]] double sup_estimate() const { return sup_estimate_; }
  void set_sup_estimate(double v) { sup_estimate_ = v; }

  // k_m for the first m basis functions (m <= n).
  [[nodiscard]] ChristoffelEvaluator prefix(int m) const;

 private:
  OrthonormalBasis basis_;
  double sup_estimate_ = std::numeric_limits<double>::quiet_NaN();
};

double evaluate_k(const ChristoffelEvaluator& ev, std::span<const double> x);

struct SupEstimate {
  double value = 0.0;          // reported estimate of K_n
  double sampled_max = 0.0;    // max of k over probes, before the safety factor
  std::optional<double> bound; // theoretical B(n), when supplied
  bool bound_used = false;     // true when min(1.2 * sampled_max, B(n)) = B(n)
};

inline constexpr double kSupSafetyFactor = 1.2;

// Max of k over `probe_count` mu-samples and the registered extreme points of
// a built-in domain, times 1.2, and capped by `bound` when given.
SupEstimate estimate_sup(const ChristoffelEvaluator& ev, const Domain& domain, int probe_count,
                         Rng& rng, std::optional<double> bound = std::nullopt);

// Default theoretical bound for exact bases on built-ins; nullopt when no
// constant is known (cusp).
std::optional<double> builtin_sup_bound(BuiltinDomain domain, int n);

// Integral of k against mu through the exact Gram matrix of the basis; equals
// n for an exactly orthonormal basis.
double integral_check(const ChristoffelEvaluator& ev, const Domain& domain);

struct AlphaEstimate {
  double alpha = 1.0;
  double standard_error = 0.0;
  std::int64_t samples = 0;
};

// alpha = n / E_mu[k]; Monte-Carlo mean over fresh mu-samples.
AlphaEstimate estimate_alpha(const ChristoffelEvaluator& ev, const Domain& domain,
                             std::int64_t samples, Rng& rng);

// --- rejection sampling ----------------------------------------------------

// Unnormalized density with respect to mu, evaluated on a batch of points.
using Density = std::function<Eigen::VectorXd(const Points&)>;

struct RejectionStats {
  std::int64_t proposals = 0;
  std::int64_t accepted = 0;
  std::int64_t envelope_doublings = 0;
  std::int64_t restarts = 0;
};

// Piecewise-constant envelope on adaptively refined cells over the bbox.
// A cell is split while it straddles the boundary or the density varies by
// more than a factor 2 across its probe lattice. Leaf values are a safety
// factor times the max probe density; leaves with no interior probe inherit
// the value of their parent. An accepted proposal with density above its cell
// value doubles that cell and restarts the draw, so accepted draws are exact
// for the final envelope.
class EnvelopeSampler {
 public:
  EnvelopeSampler(const Domain& domain, Density density, int cells_per_axis = 0,
                  int probes_per_cell = 2, double safety = 1.5, int max_depth = -1);

  Points sample(std::int64_t count, Rng& rng, Eigen::VectorXd* density_values = nullptr);

  [[nodiscard]] const RejectionStats& stats() const { return stats_; }
  [[nodiscard]] double max_envelope() const;
  [[nodiscard]] int cell_count() const { return static_cast<int>(cells_.size()); }

 private:
  struct Cell {
    std::vector<double> lower;
    std::vector<double> width;
    double envelope = 0.0;
    double volume = 0.0;
  };

  const Domain* domain_;
  Density density_;
  std::vector<Cell> cells_;
  RejectionStats stats_;
};

// Evaluation points with their least-squares weights.
struct WeightedSample {
  Points points;
  Eigen::VectorXd weights;
  std::string measure = "mu";
  std::vector<int> levels;  // level at which each point was drawn (hierarchical sampling)

  [[nodiscard]] Eigen::Index size() const { return points.rows(); }
};

enum class MeasureKind { Mu, OptimalSigma, PerturbedSigma };

std::string to_string(MeasureKind k);

struct SamplingMeasure {
  MeasureKind kind = MeasureKind::Mu;
  std::shared_ptr<const ChristoffelEvaluator> k;  // absent for Mu
  double envelope = 1.0;                          // bound on the density ratio vs mu

  static SamplingMeasure mu();
  // Envelope initialized from the evaluator's sup estimate (or estimated).
  static SamplingMeasure optimal(std::shared_ptr<const ChristoffelEvaluator> k);
  static SamplingMeasure perturbed(std::shared_ptr<const ChristoffelEvaluator> k);
};

// Draws `count` points of the measure. Weights are n/k(x) for the sigma
// measures (PerturbedSigma up to the common factor 1/alpha) and 1 for mu.
WeightedSample sample_measure(const SamplingMeasure& m, const Domain& domain, std::int64_t count,
                              Rng& rng, RejectionStats* stats = nullptr);

// Reusable sampler for repeated draws from the same measure; keeps the
// refined envelope across calls.
class MeasureSampler {
 public:
  MeasureSampler(SamplingMeasure m, const Domain& domain);

  WeightedSample sample(std::int64_t count, Rng& rng);
  [[nodiscard]] const SamplingMeasure& measure() const { return measure_; }
  [[nodiscard]] const RejectionStats& stats() const;

 private:
  SamplingMeasure measure_;
  const Domain* domain_;
  std::optional<EnvelopeSampler> sampler_;
  RejectionStats mu_stats_;
};

}  // namespace optsample
