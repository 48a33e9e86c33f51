#pragma once

#include <map>
#include <string>

#include "blm/dataset.hpp"

namespace blm {

struct GenerationStats {
  int instances = 0;
  int verified = 0;
  std::map<std::string, int> labelCounts;
};

// Builds, realizes, and verifies cfg.count instances. Every instance is
// gated by the solver; a non-unique answer set aborts with
// VerificationFailed and the offending seed.
DatasetFile generate_dataset(const GenerationConfig& cfg);

GenerationStats dataset_stats(const DatasetFile& ds);
std::string format_stats(const GenerationStats& stats);

}  // namespace blm
