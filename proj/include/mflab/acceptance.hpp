#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace mflab {

struct CriterionResult {
  int number = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double runtime_seconds = 0.0;
};

/// Run the full acceptance suite (one row per criterion), printing one
/// pass/fail line per criterion to the log stream. Returns all results.
std::vector<CriterionResult> run_acceptance(std::uint64_t seed,
                                            std::ostream& log);

}  // namespace mflab
