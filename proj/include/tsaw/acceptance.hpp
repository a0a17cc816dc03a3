#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace tsaw::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string measured;   // the quantities the decision used
  std::string threshold;  // the pinned tolerance
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::uint64_t master_seed = 1;  // each criterion derives its own stream from this
  int threads = 1;
  std::vector<int> only;          // empty: all criteria
};

constexpr int kCriterionCount = 15;

CriterionResult run_criterion(int id, const AcceptanceOptions& opt);
// Runs the selected criteria in order; progress is called after each one.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opt,
                                            const std::function<void(const CriterionResult&)>& progress = {});
// "PASS  3  MC vs exact ruin: ..." style line
std::string format_line(const CriterionResult& r);

}  // namespace tsaw::acceptance
