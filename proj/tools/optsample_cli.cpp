// Command-line front end: heatmaps, offline constructions, online and error
// experiments, bound tables and the acceptance suite.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optsample/algorithms.hpp"
#include "optsample/bounds.hpp"
#include "optsample/expcli.hpp"
#include "optsample/io.hpp"

using namespace optsample;
using nlohmann::json;

namespace {

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  std::string config;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "base seed");
  app->add_option("--out", c.out, "output path");
  app->add_option("--threads", c.threads, "worker threads (0: all cores)");
  app->add_option("--config", c.config, "JSON config file")->check(CLI::ExistingFile);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return json::parse(in);
}

// Config file contents with the command-line overrides applied.
json merged_config(const Common& c, json base) {
  if (!c.config.empty()) base.update(read_json(c.config));
  if (c.seed) base["seed"] = *c.seed;
  if (c.out) base["output"] = *c.out;
  if (c.threads) base["threads"] = *c.threads;
  return base;
}

int run_config(const Common& c, const std::string& experiment) {
  json j = merged_config(c, json::object());
  if (j.contains("experiment") && j["experiment"] != experiment) {
    throw std::invalid_argument("config describes '" + j["experiment"].get<std::string>() + "', expected '" +
                                experiment + "'");
  }
  j["experiment"] = experiment;
  const RunRecord rec = run_experiment(ExperimentConfig::from_json(j));
  std::cout << summarize({rec});
  for (const auto& f : rec.files) std::cerr << "wrote " << f.string() << '\n';
  return 0;
}

json level_json(const LevelDiagnostics& lv) {
  json j{{"n", lv.n}, {"M", lv.M}, {"alpha", lv.alpha}, {"alpha_se", lv.alpha_se}, {"seconds", lv.seconds}};
  j["condition"] = lv.condition ? json(*lv.condition) : json(nullptr);
  j["deviation"] = lv.deviation ? json(*lv.deviation) : json(nullptr);
  return j;
}

std::vector<int> ladder(int d, int degree) {
  std::vector<int> dims;
  for (int l = 0; l <= degree; ++l) dims.push_back(static_cast<int>(space_dimension(d, l)));
  return dims;
}

LevelSchedule schedule_from_json(const json& s) {
  LevelSchedule out;
  out.dims = s.at("dims").get<std::vector<int>>();
  out.offline = s.at("offline").get<std::vector<std::int64_t>>();
  out.eps = s.at("eps").get<std::vector<double>>();
  out.kappa = s.value("kappa", 2.0);
  out.deltas = s.value("deltas", std::vector<double>{});
  out.online = s.value("online", std::vector<std::int64_t>{});
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal weighted least-squares sampling on general domains"};
  app.require_subcommand(1);

  // grid
  Common grid_c;
  std::string grid_domain = "disc";
  int grid_degree = 20;
  int grid_size = 400;
  auto* grid = app.add_subcommand("grid", "k_n/n on a grid over the bounding box (CSV)");
  add_common(grid, grid_c);
  grid->add_option("--domain", grid_domain, "built-in domain");
  grid->add_option("--degree", grid_degree, "total degree");
  grid->add_option("--grid", grid_size, "points per axis");

  // offline
  Common off_c;
  std::string off_domain = "disc";
  std::string algorithm = "a1";
  int off_degree = 10;
  std::optional<std::int64_t> off_M;
  double off_eps = 0.01;
  double off_delta = 0.25;
  double c_star = 3.0;
  std::string basis_out;
  auto* offline = app.add_subcommand("offline", "offline construction of the perturbed Christoffel function (JSON)");
  add_common(offline, off_c);
  offline->add_option("--algorithm", algorithm, "a1 | a2 | a3 | empirical")
      ->check(CLI::IsMember({"a1", "a2", "a3", "empirical"}));
  offline->add_option("--domain", off_domain, "built-in domain (or 'domain' in the config)");
  offline->add_option("--degree", off_degree, "total degree");
  offline->add_option("-M", off_M, "offline points for a1 (default: sufficient M)");
  offline->add_option("--eps", off_eps, "failure probability");
  offline->add_option("--delta", off_delta, "hierarchical delta (a3)");
  offline->add_option("--c-star", c_star, "empirical threshold on kappa(T)");
  offline->add_option("--basis-out", basis_out, "also export the final basis");

  // online / error
  Common online_c;
  auto* online = app.add_subcommand("online", "conditioning of the online Gramian (config: online_phase)");
  add_common(online, online_c);
  Common error_c;
  auto* error = app.add_subcommand("error", "reconstruction error against a synthetic target (config: error_budget)");
  add_common(error, error_c);
  Common run_c;
  auto* run = app.add_subcommand("run", "any experiment described by --config");
  add_common(run, run_c);

  // bounds
  Common bounds_c;
  std::string bounds_domain = "disc";
  std::string degrees = "1..20";
  double bounds_eps = 0.01;
  double bounds_c_factor = 1.0;
  double cusp_constant = 1.0;
  auto* bounds = app.add_subcommand("bounds", "table of n, B(n), M_suf(n), m(n) (CSV)");
  add_common(bounds, bounds_c);
  bounds->add_option("--domain", bounds_domain, "built-in domain");
  bounds->add_option("--degrees", degrees, "range a..b");
  bounds->add_option("--eps", bounds_eps, "failure probability");
  bounds->add_option("-c", bounds_c_factor, "online constant c >= 1");
  bounds->add_option("--cusp-constant", cusp_constant, "C in B(n) = C n^3 for the cusp");

  // accept
  Common accept_c;
  std::vector<int> criteria;
  auto* accept = app.add_subcommand("accept", "acceptance suite; exit code 1 when a criterion fails");
  add_common(accept, accept_c);
  accept->add_option("--criterion", criteria, "criterion ids (default: all)")->check(CLI::Range(1, 10));

  CLI11_PARSE(app, argc, argv);

  try {
    if (grid->parsed()) {
      const json j = merged_config(grid_c, {{"domain", grid_domain}});
      const DomainSpec spec = DomainSpec::from_json(j.at("domain"));
      const Domain dom = make_domain(spec, j.value("seed", 1));
      Rng rng = make_rng(j.value("seed", 1));
      const ChristoffelEvaluator k = christoffel_for(dom, grid_degree, j.value("offline_M", 200000), rng);
      const std::string path = grid_c.out.value_or("k.csv");
      write_heatmap(k, dom, grid_size, path);
      std::cerr << "wrote " << path << '\n';
      return 0;
    }
    if (offline->parsed()) {
      const json j = merged_config(off_c, {{"domain", off_domain}});
      const DomainSpec spec = DomainSpec::from_json(j.at("domain"));
      const std::uint64_t seed = j.value("seed", 1);
      const Domain dom = make_domain(spec, seed);
      Rng rng = make_rng(seed);
      const int d = dom.dimension();
      const int degree = j.value("degree", off_degree);
      json out{{"algorithm", algorithm}, {"domain", spec.label()}, {"degree", degree}, {"seed", seed}};
      std::shared_ptr<ChristoffelEvaluator> final_k;
      if (algorithm == "a3") {
        const LevelSchedule s = j.contains("schedule")
                                    ? schedule_from_json(j["schedule"])
                                    : LevelSchedule::hierarchical_preset(ladder(d, degree), off_eps, off_delta);
        const HierarchicalSampleState st = algorithm3_hierarchical(s, dom, rng);
        json levels = json::array();
        for (const auto& lv : st.levels()) {
          json lj = level_json(lv.offline);
          lj["m"] = lv.m;
          lj["mixture_alpha"] = lv.alpha;
          lj["mixture_alpha_se"] = lv.alpha_se;
          lj["min_probe"] = lv.min_probe;
          levels.push_back(lj);
        }
        out["levels"] = levels;
        out["points"] = st.points().rows();
        final_k = st.levels().back().k;
      } else {
        OfflineResult r;
        if (algorithm == "a2" && j.contains("schedule")) {
          r = algorithm2_multilevel(schedule_from_json(j["schedule"]), dom, rng);
        } else {
          const std::optional<std::int64_t> M = j.contains("offline_M")
                                                    ? std::optional<std::int64_t>(j["offline_M"].get<std::int64_t>())
                                                    : off_M;
          r = build_perturbed(dom, degree, algorithm, off_eps, c_star, j.value("growth", 1.5), M, rng);
        }
        json levels = json::array();
        for (const auto& lv : r.levels) levels.push_back(level_json(lv));
        out["levels"] = levels;
        out["M_total"] = r.M;
        out["points_id"] = r.points_id;
        final_k = r.k;
      }
      if (!basis_out.empty()) {
        save_basis(final_k->basis(), basis_out);
        out["basis"] = basis_out;
      }
      const std::string text = out.dump(1);
      if (off_c.out) {
        std::ofstream f(*off_c.out);
        f << text << '\n';
      } else {
        std::cout << text << '\n';
      }
      return 0;
    }
    if (online->parsed()) return run_config(online_c, "online_phase");
    if (error->parsed()) return run_config(error_c, "error_budget");
    if (run->parsed()) {
      const RunRecord rec = run_experiment(ExperimentConfig::from_json(merged_config(run_c, json::object())));
      std::cout << summarize({rec});
      return rec.passed() ? 0 : 1;
    }
    if (bounds->parsed()) {
      const auto dots = degrees.find("..");
      if (dots == std::string::npos) throw std::invalid_argument("--degrees expects a..b");
      const int from = std::stoi(degrees.substr(0, dots));
      const int to = std::stoi(degrees.substr(dots + 2));
      const BuiltinDomain b = builtin_from_string(bounds_domain);
      std::ostringstream csv;
      csv << "degree,n,B,M_suf,m\n";
      for (int l = from; l <= to; ++l) {
        const int n = static_cast<int>(space_dimension(2, l));
        const double B = b == BuiltinDomain::CuspDomain
                             ? bound_B(DomainClass::r_alpha({0.5}, 1.0, cusp_constant), 2, n)
                             : *builtin_sup_bound(b, n);
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", B);
        csv << l << ',' << n << ',' << buf << ',' << sufficient_M(n, B, bounds_eps) << ','
            << online_budget(n, bounds_c_factor, bounds_eps) << '\n';
      }
      if (bounds_c.out) {
        std::ofstream f(*bounds_c.out);
        f << csv.str();
      } else {
        std::cout << csv.str();
      }
      return 0;
    }
    if (accept->parsed()) {
      json j = merged_config(accept_c, json::object());
      j["experiment"] = "acceptance";
      if (!criteria.empty()) j["criteria"] = criteria;
      if (!j.contains("output")) j["output"] = "acceptance_out";
      const RunRecord rec = run_experiment(ExperimentConfig::from_json(j));
      for (const auto& c : rec.criteria) {
        std::cout << (c.passed ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.title << " [" << c.detail
                  << "] (" << c.seconds << " s)" << std::endl;
      }
      return rec.passed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
