// Runs every acceptance criterion and prints one line per criterion.
// Exit status is non-zero when any criterion fails.
//
//   acceptance            all criteria
//   acceptance 2 4 5      a subset

#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include <spdlog/spdlog.h>

#include "support/criteria.hpp"

int main(int argc, char** argv) {
  using namespace gde::checks;
  spdlog::set_level(spdlog::level::warn);
  const std::map<int, std::function<CriterionResult()>> criteria{
      {1, [] { return gradient_suite(); }},
      {2, [] { return solver_orders(); }},
      {3, [] { return particle_experiment(); }},
      {4, [] { return hybrid_flow_off(); }},
      {5, [] { return gcgru_zero_parameters(); }},
      {6, [] { return undersampling_statistics(); }},
      {7, [] { return node_classification(); }},
      {8, [] { return property_suites(); }},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto r = run();
    std::printf("criterion %d [%s] %s: %s\n", r.id, r.passed ? "PASS" : "FAIL", r.title.c_str(), r.detail.c_str());
    std::fflush(stdout);
    if (!r.passed) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
