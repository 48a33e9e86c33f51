#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blm/grammar.hpp"
#include "blm/template_matrix.hpp"

namespace blm {

struct HypothesisBounds {
  int maxPeriod = 4;
  int maxBlockSize = 0;  // 0 means the context length
};

// One consistent explanation of the context: an alternation rule per
// independent cell, an optional count progression, and the match rules the
// cells were tied together with.
struct RuleHypothesis {
  std::vector<AlternationSpec> perCell;
  std::optional<ProgressionSpec> countRule;
  std::vector<GrammarRule> eRules;

  int description_length() const;

  friend bool operator==(const RuleHypothesis&, const RuleHypothesis&) = default;
};

enum class Confidence { Exact, Ambiguous };

struct Solution {
  int chosenIndex = -1;
  RuleHypothesis hypothesis;
  Confidence confidence = Confidence::Exact;
  std::vector<int> coConsistent;
  TemplateRow prediction;
};

struct VerifyResult {
  bool pass = false;
  std::string reason;
};

// All bounded hypotheses consistent with every context row, ordered by
// description length, ties broken lexicographically.
std::vector<RuleHypothesis> enumerate_hypotheses(const std::vector<TemplateRow>& context,
                                                 const PhenomenonGrammar& g,
                                                 const HypothesisBounds& bounds = {});

TemplateRow predict_row(const PhenomenonGrammar& g, const RuleHypothesis& h, int rowIndex);

Solution solve(const std::vector<TemplateRow>& context, const std::vector<TemplateRow>& options,
               const PhenomenonGrammar& g, const HypothesisBounds& bounds = {});

VerifyResult verify_unique(const PhenomenonGrammar& g, const std::vector<TemplateRow>& context,
                           const std::vector<TemplateRow>& options, int correctIndex,
                           const HypothesisBounds& bounds = {});

}  // namespace blm
