// Offline constructions of the perturbed Christoffel function (single draw,
// empirical choice of M, multilevel) and hierarchical online sampling.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "optsample/christoffel.hpp"
#include "optsample/least_squares.hpp"
#include "optsample/polyspace.hpp"

namespace optsample {

struct AlgorithmOptions {
  ReferenceFamily family = ReferenceFamily::Legendre;
  std::int64_t alpha_samples = 100000;  // 0 skips the alpha estimate
  int probe_count = 10000;              // non-negativity probes (hierarchical)
  bool exact_diagnostics = true;        // kappa(G_M) when the domain has moments
  std::shared_ptr<const OrthonormalBasis> exact_basis;  // reused when it spans the space
};

struct LevelDiagnostics {
  int n = 0;
  std::int64_t M = 0;
  std::optional<double> condition;  // kappa(G_p) against the exact basis
  std::optional<double> deviation;  // ||G_p - I||_2
  double alpha = 1.0;
  double alpha_se = 0.0;
  double seconds = 0.0;
};

struct OfflineResult {
  std::shared_ptr<ChristoffelEvaluator> k;  // k~_n
  std::int64_t M = 0;                       // total offline points
  std::string points_id;
  std::vector<LevelDiagnostics> levels;     // one entry for a single draw

  [[nodiscard]] std::optional<double> condition() const { return levels.back().condition; }
  [[nodiscard]] std::optional<double> deviation() const { return levels.back().deviation; }
  [[nodiscard]] double alpha() const { return levels.back().alpha; }
};

struct LevelSchedule {
  std::vector<int> dims;                   // n_1 < ... < n_q
  std::vector<std::int64_t> offline;       // M_p
  std::vector<double> eps;                 // eps_p
  double kappa = 2.0;
  std::vector<double> deltas;              // delta_p (hierarchical only)
  std::vector<std::int64_t> online;        // m_p (hierarchical only)

  [[nodiscard]] int levels() const { return static_cast<int>(dims.size()); }
  void validate(bool hierarchical) const;

  // M_p = ceil(3 kappa gamma n_p ln(2 n_p / eps_p)), eps_p = eps / q.
  static LevelSchedule multilevel_preset(std::vector<int> dims, double eps, double kappa = 2.0);
  // M_p = ceil(2 kappa c_{delta_p} n_p ln(2 n_p / eps_p)), delta_p = delta / q,
  // m_p = ceil(gamma / (1 - 2 delta) n_p ln(2 n_p / eps)).
  static LevelSchedule hierarchical_preset(std::vector<int> dims, double eps, double delta,
                                           double kappa = 2.0);
};

// ceil(gamma B(n) ln(2n/eps)).
std::int64_t sufficient_M(int n, double Bn, double eps);

// ((1 + delta) ln(1 + delta) - delta)^{-1}.
double c_delta(double delta);

// Spectrum summary of a symmetric matrix.
struct SymmetricSpectrum {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  [[nodiscard]] double condition() const;
  [[nodiscard]] double deviation() const;  // ||A - I||_2
};
SymmetricSpectrum symmetric_spectrum(const Eigen::MatrixXd& a);

OfflineResult algorithm1_offline(const PolynomialSpace& space, const Domain& domain, std::int64_t M,
                                 Rng& rng, const AlgorithmOptions& options = {});

struct EmpiricalMResult {
  std::int64_t M = 0;
  double condition_T = 0.0;
  std::vector<std::pair<std::int64_t, double>> history;  // (M, kappa(T))
  OfflineResult offline;
};

EmpiricalMResult empirical_M(const PolynomialSpace& space, const Domain& domain, double c_star,
                             std::int64_t M0, double growth, Rng& rng,
                             std::int64_t cap = 10'000'000, const AlgorithmOptions& options = {});

OfflineResult algorithm2_multilevel(const LevelSchedule& schedule, const Domain& domain, Rng& rng,
                                    const AlgorithmOptions& options = {});

struct HierarchicalLevel {
  int n = 0;
  std::int64_t m = 0;
  std::shared_ptr<ChristoffelEvaluator> k;  // basis L^{n_p}
  LevelDiagnostics offline;
  double alpha = 1.0;                       // mixture normalization
  double alpha_se = 0.0;
  double min_probe = 0.0;                   // min of the unnormalized density on probes
};

// Points, per-level bases and mixture weights of the hierarchical sampler.
// Each call to advance() runs the offline stage of the next level and draws
// its m_p - m_{p-1} new points; earlier points are never touched.
class HierarchicalSampleState {
 public:
  HierarchicalSampleState(LevelSchedule schedule, const Domain& domain,
                          AlgorithmOptions options = {});

  void advance(Rng& rng);
  [[nodiscard]] bool done() const { return completed() == schedule_.levels(); }
  [[nodiscard]] int completed() const { return static_cast<int>(levels_.size()); }

  [[nodiscard]] const LevelSchedule& schedule() const { return schedule_; }
  [[nodiscard]] const std::vector<HierarchicalLevel>& levels() const { return levels_; }
  [[nodiscard]] const Points& points() const { return points_; }
  [[nodiscard]] const std::vector<int>& point_levels() const { return point_levels_; }

  // (m_p/n_p) sum_{j<=n_p} |L_j^{n_p}|^2 - (m_{p-1}/n_{p-1}) sum_{j<=n_{p-1}} |L_j^{n_p}|^2.
  [[nodiscard]] Eigen::VectorXd unnormalized_density(int level, const Points& pts) const;
  // d rho_p / d mu (level is 0-based).
  [[nodiscard]] Eigen::VectorXd density(int level, const Points& pts) const;
  // Cumulative weight w after `through` + 1 levels.
  [[nodiscard]] Eigen::VectorXd weights(const Points& pts, int through) const;
  // The first m_p points with weights w of that level (default: last completed).
  [[nodiscard]] WeightedSample sample(std::optional<int> through = std::nullopt) const;

 private:
  LevelSchedule schedule_;
  const Domain* domain_;
  AlgorithmOptions options_;
  std::vector<HierarchicalLevel> levels_;
  Points points_;
  std::vector<int> point_levels_;
  std::int64_t offline_total_ = 0;
};

HierarchicalSampleState algorithm3_hierarchical(const LevelSchedule& schedule, const Domain& domain,
                                                Rng& rng, const AlgorithmOptions& options = {});

}  // namespace optsample
