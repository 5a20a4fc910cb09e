// Config-driven experiments: conditioning of the offline and online
// Gramians, empirical choice of M, reconstruction error against a synthetic
// target, Christoffel heatmaps and the acceptance suite.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "optsample/algorithms.hpp"
#include "optsample/geometry.hpp"

namespace optsample {

// A built-in name, or a custom domain given by constraints over x1..xd.
struct DomainSpec {
  std::string builtin;  // empty for custom domains
  std::string name = "custom";
  int dimension = 2;
  Box bbox;
  std::vector<std::string> constraints;
  std::int64_t area_samples = 1'000'000;

  static DomainSpec from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  [[nodiscard]] std::string label() const { return builtin.empty() ? name : builtin; }
};

Domain make_domain(const DomainSpec& spec, std::uint64_t seed);

enum class ExperimentKind { Heatmap, OfflinePhase, EmpiricalPhase, OnlinePhase, ErrorBudget, Acceptance };

std::string to_string(ExperimentKind k);
ExperimentKind experiment_from_string(const std::string& s);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::OnlinePhase;
  DomainSpec domain;
  std::vector<int> degrees;
  std::vector<std::int64_t> M_grid;      // offline point counts
  std::vector<std::int64_t> m_grid;      // online point counts
  std::vector<double> m_factors;         // online counts as multiples of n
  std::vector<std::string> measures{"optimal"};  // mu | optimal | perturbed
  int trials = 100;
  std::uint64_t seed = 1;
  double eps = 0.01;
  double c_star = 3.0;
  double growth = 1.5;
  double tail_energy = 1e-4;
  int grid = 400;
  std::string offline_algorithm = "empirical";  // a1 | a2 | empirical, for perturbed
  std::optional<std::int64_t> offline_M;        // a1 only
  std::vector<int> criteria;                     // acceptance subset, empty = all
  std::filesystem::path output = "out";
  int threads = 0;  // 0: hardware concurrency

  static ExperimentConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  void validate() const;
  // Online counts for dimension n: m_grid followed by ceil(f n).
  [[nodiscard]] std::vector<std::int64_t> online_counts(int n) const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct MetricStats {
  std::string name;
  int count = 0;  // finite values
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct CellStats {
  std::vector<std::pair<std::string, std::string>> keys;
  int trials = 0;
  int failures = 0;
  std::vector<MetricStats> metrics;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct RunRecord {
  std::string experiment;
  std::string domain;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<CellStats> cells;
  std::vector<CriterionResult> criteria;  // acceptance runs
  std::vector<std::filesystem::path> files;
  double seconds = 0.0;

  [[nodiscard]] bool passed() const;
  [[nodiscard]] nlohmann::json to_json() const;
};

// Writes <output>/<experiment>_<domain>.csv (one row per trial per cell),
// <output>/<experiment>_<domain>_summary.csv and <output>/<experiment>_<domain>.json.
RunRecord run_experiment(const ExperimentConfig& cfg);

// Markdown tables, one per record.
std::string summarize(const std::vector<RunRecord>& records);

// FNV-1a of the canonical JSON dump.
std::string config_hash(const nlohmann::json& j);
std::string artifact_version();

// CSV rows (x1, x2, k_n/n) on a grid x grid lattice of the bbox; k is empty
// outside the domain. Returns the largest k_n on the grid.
double write_heatmap(const ChristoffelEvaluator& k, const Domain& domain, int grid,
                   const std::filesystem::path& path);

// Christoffel evaluator of the total-degree space: exact on domains with
// moments, otherwise Algorithm 1 with M points.
ChristoffelEvaluator christoffel_for(const Domain& domain, int degree, std::int64_t M, Rng& rng);

// Perturbed Christoffel function by the configured offline algorithm.
OfflineResult build_perturbed(const Domain& domain, int degree, const std::string& algorithm,
                              double eps, double c_star, double growth,
                              std::optional<std::int64_t> M, Rng& rng,
                              const AlgorithmOptions& options = {});

// Acceptance criteria 1..10.
struct AcceptanceOptions {
  std::uint64_t seed = 1;
  int threads = 0;
};
std::vector<int> all_criteria();
CriterionResult run_criterion(int id, const AcceptanceOptions& options);

}  // namespace optsample
