#include "optsample/expcli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "optsample/bounds.hpp"
#include "optsample/expression.hpp"
#include "optsample/least_squares.hpp"
#include "optsample/parallel.hpp"

#ifndef OPTSAMPLE_VERSION
#define OPTSAMPLE_VERSION "unknown"
#endif

namespace optsample {

using nlohmann::json;

// --- configuration ---------------------------------------------------------------

DomainSpec DomainSpec::from_json(const json& j) {
  DomainSpec s;
  if (j.is_string()) {
    s.builtin = j.get<std::string>();
    builtin_from_string(s.builtin);
    return s;
  }
  if (j.contains("builtin")) {
    s.builtin = j.at("builtin").get<std::string>();
    builtin_from_string(s.builtin);
    return s;
  }
  s.name = j.value("name", "custom");
  s.dimension = j.value("dimension", 2);
  s.bbox.lower = j.at("bbox").at("lower").get<std::vector<double>>();
  s.bbox.upper = j.at("bbox").at("upper").get<std::vector<double>>();
  s.constraints = j.at("constraints").get<std::vector<std::string>>();
  s.area_samples = j.value("area_samples", s.area_samples);
  if (static_cast<int>(s.bbox.lower.size()) != s.dimension ||
      static_cast<int>(s.bbox.upper.size()) != s.dimension) {
    throw std::invalid_argument("custom domain bbox does not match its dimension");
  }
  return s;
}

json DomainSpec::to_json() const {
  if (!builtin.empty()) return builtin;
  return {{"name", name},
          {"dimension", dimension},
          {"bbox", {{"lower", bbox.lower}, {"upper", bbox.upper}}},
          {"constraints", constraints},
          {"area_samples", area_samples}};
}

Domain make_domain(const DomainSpec& spec, std::uint64_t seed) {
  if (!spec.builtin.empty()) return Domain::make_builtin(builtin_from_string(spec.builtin));
  return Domain::make_custom(spec.name, spec.bbox, parse_constraints(spec.constraints, spec.dimension),
                             spec.area_samples, seed);
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Heatmap: return "heatmap";
    case ExperimentKind::OfflinePhase: return "offline_phase";
    case ExperimentKind::EmpiricalPhase: return "empirical_phase";
    case ExperimentKind::OnlinePhase: return "online_phase";
    case ExperimentKind::ErrorBudget: return "error_budget";
    case ExperimentKind::Acceptance: return "acceptance";
  }
  return "unknown";
}

ExperimentKind experiment_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::Heatmap, ExperimentKind::OfflinePhase, ExperimentKind::EmpiricalPhase,
                 ExperimentKind::OnlinePhase, ExperimentKind::ErrorBudget, ExperimentKind::Acceptance}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown experiment '" + s + "'");
}

namespace {

std::vector<int> parse_degrees(const json& j) {
  if (j.is_number_integer()) return {j.get<int>()};
  if (j.is_array()) return j.get<std::vector<int>>();
  std::vector<int> out;
  const int from = j.at("from").get<int>();
  const int to = j.at("to").get<int>();
  const int step = j.value("step", 1);
  if (step < 1) throw std::invalid_argument("degree step must be positive");
  for (int l = from; l <= to; l += step) out.push_back(l);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  c.experiment = experiment_from_string(j.at("experiment").get<std::string>());
  if (j.contains("domain")) c.domain = DomainSpec::from_json(j.at("domain"));
  else c.domain.builtin = "disc";
  if (j.contains("degrees")) c.degrees = parse_degrees(j.at("degrees"));
  c.M_grid = j.value("M", c.M_grid);
  c.m_grid = j.value("m", c.m_grid);
  c.m_factors = j.value("m_factors", c.m_factors);
  c.measures = j.value("measures", c.measures);
  c.trials = j.value("trials", c.experiment == ExperimentKind::ErrorBudget ? 25 : c.trials);
  c.seed = j.value("seed", c.seed);
  c.eps = j.value("eps", c.eps);
  c.c_star = j.value("c_star", c.c_star);
  c.growth = j.value("growth", c.growth);
  c.tail_energy = j.value("tail_energy", c.tail_energy);
  c.grid = j.value("grid", c.grid);
  c.offline_algorithm = j.value("offline_algorithm", c.offline_algorithm);
  if (j.contains("offline_M")) c.offline_M = j.at("offline_M").get<std::int64_t>();
  c.criteria = j.value("criteria", c.criteria);
  c.output = j.value("output", c.output.string());
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["experiment"] = to_string(experiment);
  j["domain"] = domain.to_json();
  j["degrees"] = degrees;
  j["M"] = M_grid;
  j["m"] = m_grid;
  j["m_factors"] = m_factors;
  j["measures"] = measures;
  j["trials"] = trials;
  j["seed"] = seed;
  j["eps"] = eps;
  j["c_star"] = c_star;
  j["growth"] = growth;
  j["tail_energy"] = tail_energy;
  j["grid"] = grid;
  j["offline_algorithm"] = offline_algorithm;
  if (offline_M) j["offline_M"] = *offline_M;
  j["criteria"] = criteria;
  return j;
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0, 1)");
  if (!(c_star > 1.0)) throw std::invalid_argument("c_star must exceed 1");
  if (!(growth > 1.0)) throw std::invalid_argument("growth must exceed 1");
  if (!(tail_energy > 0.0)) throw std::invalid_argument("tail_energy must be positive");
  if (grid < 2) throw std::invalid_argument("grid must be at least 2");
  if (offline_algorithm != "a1" && offline_algorithm != "a2" && offline_algorithm != "empirical") {
    throw std::invalid_argument("offline_algorithm must be a1, a2 or empirical");
  }
  for (const auto& m : measures) {
    if (m != "mu" && m != "optimal" && m != "perturbed") {
      throw std::invalid_argument("unknown measure '" + m + "'");
    }
  }
  for (int id : criteria) {
    if (id < 1 || id > 10) throw std::invalid_argument("acceptance criteria are numbered 1..10");
  }
  if (experiment == ExperimentKind::Acceptance) return;
  if (degrees.empty()) throw std::invalid_argument("degree grid must not be empty");
  for (int l : degrees) {
    if (l < 0) throw std::invalid_argument("degrees must be non-negative");
  }
  switch (experiment) {
    case ExperimentKind::OfflinePhase:
      if (M_grid.empty()) throw std::invalid_argument("offline_phase needs a non-empty M grid");
      break;
    case ExperimentKind::OnlinePhase:
    case ExperimentKind::ErrorBudget:
      if (m_grid.empty() && m_factors.empty()) {
        throw std::invalid_argument("online counts need a non-empty m or m_factors grid");
      }
      if (measures.empty()) throw std::invalid_argument("measure list must not be empty");
      break;
    default: break;
  }
  for (auto M : M_grid) {
    if (M < 1) throw std::invalid_argument("M values must be positive");
  }
  for (auto m : m_grid) {
    if (m < 1) throw std::invalid_argument("m values must be positive");
  }
  for (double f : m_factors) {
    if (!(f > 0.0)) throw std::invalid_argument("m factors must be positive");
  }
}

std::vector<std::int64_t> ExperimentConfig::online_counts(int n) const {
  std::vector<std::int64_t> out = m_grid;
  for (double f : m_factors) out.push_back(static_cast<std::int64_t>(std::ceil(f * n)));
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  return ExperimentConfig::from_json(json::parse(in));
}

std::string config_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string artifact_version() { return OPTSAMPLE_VERSION; }

// --- records -----------------------------------------------------------------------

bool RunRecord::passed() const {
  return std::all_of(criteria.begin(), criteria.end(), [](const CriterionResult& c) { return c.passed; });
}

json RunRecord::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["domain"] = domain;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["seed"] = seed;
  j["trials"] = trials;
  j["seconds"] = seconds;
  json cells_j = json::array();
  for (const auto& c : cells) {
    json cj;
    for (const auto& [k, v] : c.keys) cj["keys"][k] = v;
    cj["trials"] = c.trials;
    cj["failures"] = c.failures;
    for (const auto& m : c.metrics) {
      cj["metrics"][m.name] = {{"count", m.count}, {"mean", m.mean}, {"median", m.median},
                               {"min", m.min}, {"max", m.max}};
    }
    cells_j.push_back(cj);
  }
  j["cells"] = cells_j;
  json crit = json::array();
  for (const auto& c : criteria) {
    crit.push_back({{"id", c.id}, {"title", c.title}, {"passed", c.passed}, {"detail", c.detail},
                    {"seconds", c.seconds}});
  }
  j["criteria"] = crit;
  json files_j = json::array();
  for (const auto& f : files) files_j.push_back(f.string());
  j["files"] = files_j;
  return j;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct TrialRow {
  std::vector<double> metrics;
  bool failed = false;
};

struct Cell {
  std::vector<std::string> keys;
  std::uint64_t stream = 0;
  std::vector<TrialRow> rows;
};

// Long-format and aggregated tables of one run.
class Table {
 public:
  Table(std::vector<std::string> key_names, std::vector<std::string> metric_names)
      : key_names_(std::move(key_names)), metric_names_(std::move(metric_names)) {}

  void add(Cell cell) { cells_.push_back(std::move(cell)); }

  void write(const std::filesystem::path& long_path, const std::filesystem::path& summary_path,
             const std::string& experiment, const std::string& domain, std::uint64_t seed) const {
    std::ofstream out(long_path);
    if (!out) throw std::runtime_error("cannot write " + long_path.string());
    out << "experiment,domain";
    for (const auto& k : key_names_) out << ',' << k;
    out << ",seed,stream,trial";
    for (const auto& m : metric_names_) out << ',' << m;
    out << ",failed\n";
    for (const auto& c : cells_) {
      for (std::size_t t = 0; t < c.rows.size(); ++t) {
        out << experiment << ',' << domain;
        for (const auto& k : c.keys) out << ',' << k;
        out << ',' << seed << ',' << c.stream << ',' << t;
        for (double v : c.rows[t].metrics) out << ',' << fmt(v);
        out << ',' << (c.rows[t].failed ? 1 : 0) << '\n';
      }
    }
    std::ofstream sum(summary_path);
    if (!sum) throw std::runtime_error("cannot write " + summary_path.string());
    sum << "experiment,domain";
    for (const auto& k : key_names_) sum << ',' << k;
    sum << ",seed,stream,trials,failures";
    for (const auto& m : metric_names_) sum << ',' << m << "_mean," << m << "_median";
    sum << '\n';
    for (const auto& c : cells_) {
      const CellStats s = stats(c);
      sum << experiment << ',' << domain;
      for (const auto& k : c.keys) sum << ',' << k;
      sum << ',' << seed << ',' << c.stream << ',' << s.trials << ',' << s.failures;
      for (const auto& m : s.metrics) sum << ',' << fmt(m.mean) << ',' << fmt(m.median);
      sum << '\n';
    }
  }

  [[nodiscard]] CellStats stats(const Cell& c) const {
    CellStats s;
    for (std::size_t i = 0; i < key_names_.size(); ++i) s.keys.emplace_back(key_names_[i], c.keys[i]);
    s.trials = static_cast<int>(c.rows.size());
    for (const auto& r : c.rows) s.failures += r.failed ? 1 : 0;
    for (std::size_t m = 0; m < metric_names_.size(); ++m) {
      std::vector<double> v;
      for (const auto& r : c.rows) {
        if (std::isfinite(r.metrics[m])) v.push_back(r.metrics[m]);
      }
      MetricStats ms;
      ms.name = metric_names_[m];
      ms.count = static_cast<int>(v.size());
      if (v.empty()) {
        ms.mean = ms.median = ms.min = ms.max = std::numeric_limits<double>::quiet_NaN();
      } else {
        std::sort(v.begin(), v.end());
        double total = 0.0;
        for (double x : v) total += x;
        ms.mean = total / static_cast<double>(v.size());
        const std::size_t h = v.size() / 2;
        ms.median = v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        ms.min = v.front();
        ms.max = v.back();
      }
      s.metrics.push_back(ms);
    }
    return s;
  }

  [[nodiscard]] std::vector<CellStats> all_stats() const {
    std::vector<CellStats> out;
    for (const auto& c : cells_) out.push_back(stats(c));
    return out;
  }

 private:
  std::vector<std::string> key_names_;
  std::vector<std::string> metric_names_;
  std::vector<Cell> cells_;
};

std::string int_key(std::int64_t v) { return std::to_string(v); }

constexpr std::int64_t kDefaultReferenceM = 200000;

// Orthonormal basis used as the reference for diagnostics: exact when the
// domain has moments, otherwise a large Algorithm 1 draw.
OrthonormalBasis reference_basis(const Domain& domain, int degree, std::int64_t M, Rng& rng) {
  const PolynomialSpace space = PolynomialSpace::total_degree(domain.dimension(), degree);
  if (domain.has_moments()) return orthonormalize_exact(space, domain);
  AlgorithmOptions opt;
  opt.alpha_samples = 0;
  opt.exact_diagnostics = false;
  return algorithm1_offline(space, domain, std::max<std::int64_t>(M, space.size()), rng, opt).k->basis();
}

std::optional<double> sup_bound_for(const Domain& domain, int n) {
  if (auto b = domain.builtin()) return builtin_sup_bound(*b, n);
  return std::nullopt;
}

}  // namespace

ChristoffelEvaluator christoffel_for(const Domain& domain, int degree, std::int64_t M, Rng& rng) {
  return ChristoffelEvaluator(reference_basis(domain, degree, M, rng));
}

OfflineResult build_perturbed(const Domain& domain, int degree, const std::string& algorithm,
                              double eps, double c_star, double growth,
                              std::optional<std::int64_t> M, Rng& rng, const AlgorithmOptions& options) {
  const PolynomialSpace space = PolynomialSpace::total_degree(domain.dimension(), degree);
  const int n = space.size();
  if (algorithm == "a1") {
    std::int64_t count = 0;
    if (M) {
      count = *M;
    } else if (auto b = sup_bound_for(domain, n)) {
      count = sufficient_M(n, *b, eps);
    } else {
      throw std::invalid_argument("a1 on a domain without a known bound needs offline_M");
    }
    return algorithm1_offline(space, domain, count, rng, options);
  }
  if (algorithm == "a2") {
    std::vector<int> dims;
    for (int l = 0; l <= degree; ++l) dims.push_back(static_cast<int>(space_dimension(domain.dimension(), l)));
    return algorithm2_multilevel(LevelSchedule::multilevel_preset(dims, eps), domain, rng, options);
  }
  if (algorithm == "empirical") {
    return empirical_M(space, domain, c_star, n, growth, rng, 10'000'000, options).offline;
  }
  throw std::invalid_argument("unknown offline algorithm '" + algorithm + "'");
}

double write_heatmap(const ChristoffelEvaluator& k, const Domain& domain, int grid,
                     const std::filesystem::path& path) {
  if (domain.dimension() != 2) throw std::invalid_argument("heatmap needs a two-dimensional domain");
  if (grid < 2) throw std::invalid_argument("grid must be at least 2");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const Box& box = domain.bbox();
  out << "x1,x2,k_over_n\n";
  const double n = k.n();
  std::vector<double> x(2);
  double top = 0.0;
  for (int i = 0; i < grid; ++i) {
    Points row(grid, 2);
    std::vector<bool> inside(static_cast<std::size_t>(grid));
    for (int j = 0; j < grid; ++j) {
      row(j, 0) = box.lower[0] + (box.upper[0] - box.lower[0]) * j / (grid - 1.0);
      row(j, 1) = box.lower[1] + (box.upper[1] - box.lower[1]) * i / (grid - 1.0);
      x[0] = row(j, 0);
      x[1] = row(j, 1);
      inside[static_cast<std::size_t>(j)] = domain.contains(x);
    }
    const Eigen::VectorXd v = k(row);
    for (int j = 0; j < grid; ++j) {
      out << fmt(row(j, 0)) << ',' << fmt(row(j, 1)) << ',';
      if (inside[static_cast<std::size_t>(j)]) {
        out << fmt(v[j] / n);
        top = std::max(top, v[j]);
      }
      out << '\n';
    }
  }
  return top;
}

// --- experiments -----------------------------------------------------------------

namespace {

Table run_heatmap(const ExperimentConfig& cfg, const Domain& domain, const std::string& label,
                  std::vector<std::filesystem::path>& files) {
  Table table({"degree", "n"}, {"max_k_over_n", "mean_k_over_n", "sandwich_lower", "sandwich_upper"});
  std::uint64_t stream = 0;
  for (int l : cfg.degrees) {
    Rng rng = make_rng(cfg.seed, 0, stream);
    const ChristoffelEvaluator k = christoffel_for(domain, l, cfg.offline_M.value_or(kDefaultReferenceM), rng);
    std::ostringstream name;
    name << "heatmap_" << label << "_l" << l << ".csv";
    const auto path = cfg.output / name.str();
    const double grid_max = write_heatmap(k, domain, cfg.grid, path);
    files.push_back(path);
    const double n = k.n();
    const double mean = k(sample_uniform(domain, 100000, rng)).mean() / n;
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = lower;
    bool failed = false;
    if (domain.builtin() == BuiltinDomain::Disc) {
      // Ball sandwich for K_n / n.
      lower = std::exp(-1.0) * std::sqrt(n);
      upper = 3.0 * std::sqrt(n);
      failed = grid_max / n < lower || grid_max / n > upper;
    }
    table.add(Cell{{int_key(l), int_key(k.n())}, stream, {TrialRow{{grid_max / n, mean, lower, upper}, failed}}});
    ++stream;
  }
  return table;
}

Table run_offline_phase(const ExperimentConfig& cfg, const Domain& domain) {
  if (!domain.has_moments()) throw std::invalid_argument("offline_phase needs a domain with exact moments");
  Table table({"degree", "n", "M"}, {"condition", "deviation"});
  std::uint64_t stream = 0;
  for (int l : cfg.degrees) {
    const PolynomialSpace space = PolynomialSpace::total_degree(domain.dimension(), l);
    AlgorithmOptions opt;
    opt.alpha_samples = 0;
    opt.exact_basis = std::make_shared<OrthonormalBasis>(orthonormalize_exact(space, domain));
    for (std::int64_t M : cfg.M_grid) {
      if (M < space.size()) continue;
      Cell cell{{int_key(l), int_key(space.size()), int_key(M)}, stream, {}};
      cell.rows = parallel_map(cfg.trials, cfg.threads, [&](int t) {
        Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(t), stream);
        try {
          const OfflineResult r = algorithm1_offline(space, domain, M, rng, opt);
          return TrialRow{{*r.condition(), *r.deviation()}, *r.deviation() > 0.5};
        } catch (const std::runtime_error&) {
          const double inf = std::numeric_limits<double>::infinity();
          return TrialRow{{inf, inf}, true};
        }
      });
      table.add(std::move(cell));
      ++stream;
    }
  }
  return table;
}

Table run_empirical_phase(const ExperimentConfig& cfg, const Domain& domain) {
  Table table({"degree", "n", "M"}, {"M_value", "kappa_T", "kappa_G"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  std::uint64_t stream = 0;
  for (int l : cfg.degrees) {
    const PolynomialSpace space = PolynomialSpace::total_degree(domain.dimension(), l);
    const ReferenceBasis reference(space, ReferenceFamily::Legendre, domain.bbox());
    std::shared_ptr<OrthonormalBasis> exact;
    if (domain.has_moments()) exact = std::make_shared<OrthonormalBasis>(orthonormalize_exact(space, domain));
    for (std::int64_t M : cfg.M_grid) {
      if (M < space.size()) continue;
      Cell cell{{int_key(l), int_key(space.size()), int_key(M)}, stream, {}};
      cell.rows = parallel_map(cfg.trials, cfg.threads, [&](int t) {
        Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(t), stream);
        const Points y = sample_uniform(domain, M, rng);
        WeightedSample z{sample_uniform(domain, M, rng), Eigen::VectorXd::Ones(M), "mu", {}};
        double kt = inf;
        try {
          kt = gramian(z, orthonormalize_discrete(reference, DiscreteInnerProduct::unit(y, "y"))).condition;
        } catch (const std::runtime_error&) {
        }
        double kg = nan;
        if (exact) kg = gramian(WeightedSample{y, Eigen::VectorXd::Ones(M), "mu", {}}, *exact).condition;
        const bool failed = kt <= cfg.c_star && kg > cfg.c_star * cfg.c_star;
        return TrialRow{{static_cast<double>(M), kt, kg}, failed};
      });
      table.add(std::move(cell));
      ++stream;
    }
    // The empirical choice itself.
    AlgorithmOptions opt;
    opt.alpha_samples = 0;
    opt.exact_basis = exact;
    opt.exact_diagnostics = static_cast<bool>(exact);
    Cell cell{{int_key(l), int_key(space.size()), "empirical"}, stream, {}};
    cell.rows = parallel_map(cfg.trials, cfg.threads, [&](int t) {
      Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(t), stream);
      const EmpiricalMResult e = empirical_M(space, domain, cfg.c_star, space.size(), cfg.growth, rng,
                                             10'000'000, opt);
      const double kg = e.offline.condition().value_or(nan);
      return TrialRow{{static_cast<double>(e.M), e.condition_T, kg}, kg > cfg.c_star * cfg.c_star};
    });
    table.add(std::move(cell));
    ++stream;
  }
  return table;
}

// Sampler for one measure with the weights normalized so that the Gramian
// of an orthonormal basis has expectation I.
struct PreparedMeasure {
  std::string name;
  std::optional<MeasureSampler> sampler;
  double weight_scale = 1.0;
};

PreparedMeasure prepare_measure(const std::string& name, const ExperimentConfig& cfg, const Domain& domain,
                                int degree, const std::shared_ptr<ChristoffelEvaluator>& k_exact,
                                std::uint64_t stream) {
  PreparedMeasure pm;
  pm.name = name;
  if (name == "mu") {
    pm.sampler.emplace(SamplingMeasure::mu(), domain);
  } else if (name == "optimal") {
    pm.sampler.emplace(SamplingMeasure::optimal(k_exact), domain);
  } else {
    Rng rng = make_rng(cfg.seed, 1'000'000, stream);
    AlgorithmOptions opt;
    opt.exact_diagnostics = false;
    const OfflineResult r = build_perturbed(domain, degree, cfg.offline_algorithm, cfg.eps, cfg.c_star,
                                            cfg.growth, cfg.offline_M, rng, opt);
    pm.sampler.emplace(SamplingMeasure::perturbed(r.k), domain);
    pm.weight_scale = 1.0 / r.alpha();
  }
  return pm;
}

Table run_online_phase(const ExperimentConfig& cfg, const Domain& domain) {
  Table table({"measure", "degree", "n", "m"}, {"deviation", "condition"});
  std::uint64_t stream = 0;
  for (int l : cfg.degrees) {
    Rng ref_rng = make_rng(cfg.seed, 2'000'000, static_cast<std::uint64_t>(l));
    auto k = std::make_shared<ChristoffelEvaluator>(
        reference_basis(domain, l, cfg.offline_M.value_or(kDefaultReferenceM), ref_rng));
    const int n = k->n();
    for (const auto& name : cfg.measures) {
      const PreparedMeasure pm = prepare_measure(name, cfg, domain, l, k, stream);
      for (std::int64_t m : cfg.online_counts(n)) {
        Cell cell{{name, int_key(l), int_key(n), int_key(m)}, stream, {}};
        cell.rows = parallel_map(cfg.trials, cfg.threads, [&](int t) {
          Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(t), stream);
          MeasureSampler sampler = *pm.sampler;
          WeightedSample s = sampler.sample(m, rng);
          s.weights *= pm.weight_scale;
          const GramianDiagnostics g = gramian(s, k->basis());
          return TrialRow{{g.deviation, g.condition}, g.deviation > 0.5};
        });
        table.add(std::move(cell));
        ++stream;
      }
    }
  }
  return table;
}

Table run_error_budget(const ExperimentConfig& cfg, const Domain& domain) {
  Table table({"measure", "degree", "n", "m"}, {"error", "deviation"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t stream = 0;
  for (int l : cfg.degrees) {
    Rng ref_rng = make_rng(cfg.seed, 2'000'000, static_cast<std::uint64_t>(l));
    const OrthonormalBasis full = reference_basis(domain, l + 1, cfg.offline_M.value_or(kDefaultReferenceM), ref_rng);
    const int n = static_cast<int>(space_dimension(domain.dimension(), l));
    const SyntheticTarget target = make_synthetic_target(full, n, cfg.tail_energy);
    const OrthonormalBasis basis = full.prefix(n);
    auto k = std::make_shared<ChristoffelEvaluator>(basis);
    for (const auto& name : cfg.measures) {
      const PreparedMeasure pm = prepare_measure(name, cfg, domain, l, k, stream);
      for (std::int64_t m : cfg.online_counts(n)) {
        Cell cell{{name, int_key(l), int_key(n), int_key(m)}, stream, {}};
        cell.rows = parallel_map(cfg.trials, cfg.threads, [&](int t) {
          Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(t), stream);
          MeasureSampler sampler = *pm.sampler;
          WeightedSample s = sampler.sample(m, rng);
          s.weights *= pm.weight_scale;
          try {
            const FitResult f = fit(s, target.values(s.points), basis, true);
            return TrialRow{{exact_l2_error(f, target), f.diagnostics->deviation}, false};
          } catch (const RankDeficientError&) {
            return TrialRow{{nan, nan}, true};
          }
        });
        table.add(std::move(cell));
        ++stream;
      }
    }
  }
  return table;
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  RunRecord rec;
  rec.experiment = to_string(cfg.experiment);
  rec.domain = cfg.domain.label();
  rec.config_hash = config_hash(cfg.to_json());
  rec.version = artifact_version();
  rec.seed = cfg.seed;
  rec.trials = cfg.trials;
  std::filesystem::create_directories(cfg.output);
  const std::string stem = rec.experiment + "_" + rec.domain;

  if (cfg.experiment == ExperimentKind::Acceptance) {
    AcceptanceOptions opt;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    const std::vector<int> ids = cfg.criteria.empty() ? all_criteria() : cfg.criteria;
    Table table({"criterion"}, {"seconds"});
    for (int id : ids) {
      CriterionResult r = run_criterion(id, opt);
      table.add(Cell{{int_key(id)}, static_cast<std::uint64_t>(id), {TrialRow{{r.seconds}, !r.passed}}});
      rec.criteria.push_back(std::move(r));
    }
    rec.cells = table.all_stats();
  } else {
    const Domain domain = make_domain(cfg.domain, cfg.seed);
    std::optional<Table> table;
    switch (cfg.experiment) {
      case ExperimentKind::Heatmap: table = run_heatmap(cfg, domain, rec.domain, rec.files); break;
      case ExperimentKind::OfflinePhase: table = run_offline_phase(cfg, domain); break;
      case ExperimentKind::EmpiricalPhase: table = run_empirical_phase(cfg, domain); break;
      case ExperimentKind::OnlinePhase: table = run_online_phase(cfg, domain); break;
      case ExperimentKind::ErrorBudget: table = run_error_budget(cfg, domain); break;
      case ExperimentKind::Acceptance: break;
    }
    const auto long_path = cfg.output / (stem + ".csv");
    const auto summary_path = cfg.output / (stem + "_summary.csv");
    table->write(long_path, summary_path, rec.experiment, rec.domain, cfg.seed);
    rec.files.push_back(long_path);
    rec.files.push_back(summary_path);
    rec.cells = table->all_stats();
  }
  rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  const auto record_path = cfg.output / (stem + ".json");
  std::ofstream out(record_path);
  if (!out) throw std::runtime_error("cannot write " + record_path.string());
  json j = rec.to_json();
  j["config"] = cfg.to_json();
  out << j.dump(1) << '\n';
  rec.files.push_back(record_path);
  return rec;
}

std::string summarize(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const RunRecord& rec = records[r];
    if (r > 0) out << '\n';
    out << "## " << rec.experiment << " on " << rec.domain << "\n\n";
    out << "seed " << rec.seed << ", config " << rec.config_hash << ", version " << rec.version << "\n\n";
    if (!rec.criteria.empty()) {
      out << "| criterion | title | result | detail |\n|---|---|---|---|\n";
      for (const auto& c : rec.criteria) {
        out << "| " << c.id << " | " << c.title << " | " << (c.passed ? "PASS" : "FAIL") << " | " << c.detail
            << " |\n";
      }
      continue;
    }
    if (rec.cells.empty()) continue;
    const CellStats& first = rec.cells.front();
    out << '|';
    for (const auto& [k, v] : first.keys) out << ' ' << k << " |";
    out << " trials | failures |";
    for (const auto& m : first.metrics) out << ' ' << m.name << " mean | " << m.name << " median |";
    out << "\n|";
    const std::size_t cols = first.keys.size() + 2 + 2 * first.metrics.size();
    for (std::size_t i = 0; i < cols; ++i) out << "---|";
    out << '\n';
    for (const auto& c : rec.cells) {
      out << '|';
      for (const auto& [k, v] : c.keys) out << ' ' << v << " |";
      out << ' ' << c.trials << " | " << c.failures << " |";
      for (const auto& m : c.metrics) out << ' ' << short_fmt(m.mean) << " | " << short_fmt(m.median) << " |";
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace optsample
