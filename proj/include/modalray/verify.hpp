/**
 * @file verify.hpp
 * @brief Built-in invariant checks across all modules.
 */
#ifndef MODALRAY_VERIFY_HPP
#define MODALRAY_VERIFY_HPP

#include "modalray/config.hpp"

#include <string>
#include <vector>

namespace modalray {

struct CheckResult {
  std::string suite;
  std::string name;
  double value = 0.0;      ///< measured error or defect
  double tolerance = 0.0;
  bool pass = false;
};

/// Runs the invariant suites on the configuration's first alpha and mu1.
std::vector<CheckResult> run_invariants(const RunConfig& cfg, unsigned threads);

}  // namespace modalray

#endif
