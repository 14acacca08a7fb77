#pragma once

// The finite-difference suites shared by the unit tests, the acceptance
// binary and the `gradcheck` CLI verb.

#include <string>
#include <vector>

#include "dragan/gradcheck.hpp"

namespace dragan {

enum class GradcheckScope { ops, blocks, gp, generator };

/// Throws std::invalid_argument on an unknown name.
GradcheckScope parse_gradcheck_scope(const std::string& name);
std::string to_string(GradcheckScope scope);

/// Tolerance the suite is judged against: 1e-5 for ops and blocks, 1e-4 for
/// the penalty and the end-to-end generator.
double gradcheck_tolerance(GradcheckScope scope);

std::vector<GradcheckResult> run_gradcheck_suite(GradcheckScope scope, uint64_t seed = 7);

}  // namespace dragan
