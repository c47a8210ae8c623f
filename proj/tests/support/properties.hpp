#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gde::checks {

struct PropertyResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  // Largest deviation seen, in the units of the property's tolerance.
  double worst = 0.0;
  double tolerance = 0.0;
  // First failing trial, if any.
  std::string detail;

  bool passed() const { return trials > 0 && failures == 0; }
};

// gcde/gmde/gade fields commute with node permutations (1e-10).
PropertyResult permutation_equivariance(int trials, std::uint64_t seed);
// f_ij = -f_ji to 1e-12 on random states and constants.
PropertyResult force_antisymmetry(int trials, std::uint64_t seed);
// Undirected adjacency, its normalization and particle interaction graphs
// are symmetric (1e-12); interaction graphs have a zero diagonal.
PropertyResult adjacency_symmetry(int trials, std::uint64_t seed);
// Non-negativity, zero on perfect predictions, scale invariance of MAPE,
// mape <= mape_abs, RMSE at T = 1 is the mean absolute error, RMSE is
// invariant under reordering time.
PropertyResult metric_identities(int trials, std::uint64_t seed);
// Adam with lr = 0 leaves parameters bit-identical, with and without weight
// decay.
PropertyResult adam_zero_lr_fixpoint(int trials, std::uint64_t seed);
// Solving F/2 on [0, 2] equals solving F on [0, 1] (rk2, rk4, dopri5).
PropertyResult time_rescaling(int trials, std::uint64_t seed);

std::vector<PropertyResult> all_properties(int trials, std::uint64_t seed);

}  // namespace gde::checks
