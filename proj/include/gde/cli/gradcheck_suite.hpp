#pragma once

#include <cstdint>
#include <vector>

#include "gde/autodiff/gradcheck.hpp"

namespace gde::cli {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  // Adds a case whose backward pass is deliberately wrong; it must fail.
  bool negative_control = false;
};

// Finite-difference checks over every primitive op and every composed
// model: fields, cells, heads, solver unrolls and the hybrid rollout.
// Primitive and single-evaluation cases use tolerance 1e-4, full solver
// unrolls 1e-3.
std::vector<ad::GradcheckResult> run_gradcheck_suite(const GradcheckOptions& opts = {});

// x^2 with a backward pass that is 10% too large.
ad::Tensor corrupted_square(const ad::Tensor& x);

}  // namespace gde::cli
