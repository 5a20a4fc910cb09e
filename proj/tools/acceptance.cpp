// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit code 1 when any selected criterion fails.

#include <iostream>
#include <vector>

#include <CLI11.hpp>

#include "optsample/expcli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::vector<int> criteria;
  optsample::AcceptanceOptions opt;
  app.add_option("--criterion", criteria, "criterion ids (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--seed", opt.seed, "base seed");
  app.add_option("--threads", opt.threads, "worker threads (0: all cores)");
  CLI11_PARSE(app, argc, argv);
  if (criteria.empty()) criteria = optsample::all_criteria();

  bool ok = true;
  for (int id : criteria) {
    try {
      const optsample::CriterionResult r = optsample::run_criterion(id, opt);
      ok = ok && r.passed;
      std::cout << (r.passed ? "PASS" : "FAIL") << " criterion " << r.id << ": " << r.title << " [" << r.detail
                << "] (" << r.seconds << " s)" << std::endl;
    } catch (const std::exception& e) {
      ok = false;
      std::cout << "FAIL criterion " << id << ": error: " << e.what() << std::endl;
    }
  }
  return ok ? 0 : 1;
}
