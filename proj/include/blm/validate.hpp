#pragma once

#include <string>
#include <vector>

#include "blm/dataset.hpp"

namespace blm {

struct CheckResult {
  std::string check;
  std::string instance;
  bool pass = true;
  std::string message;

  friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

struct ValidationReport {
  std::vector<CheckResult> results;

  bool pass() const;
  std::vector<CheckResult> failures() const;
};

// Re-runs every stored invariant of the dataset from scratch: grammar,
// shape, surface faithfulness both directions, E-consistency, label
// faithfulness, single-solution, and augmentation constraints. Stripped
// datasets get the surface-level subset.
ValidationReport validate_dataset(const DatasetFile& ds);

std::string format_report(const ValidationReport& report);

}  // namespace blm
