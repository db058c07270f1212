#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace evogcn {

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 1e-4;
  bool pass = false;
};

// Central-difference verification of every registered tape operation plus
// end-to-end losses (2-layer models over a 3-step window on a small random
// graph), all at eps 1e-5 and tolerance 1e-4.
std::vector<GradCheckResult> run_gradcheck_suite(std::uint64_t seed = 7);

}  // namespace evogcn
