#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "blm/grammar.hpp"
#include "blm/realize.hpp"
#include "blm/rng.hpp"
#include "blm/template_matrix.hpp"

namespace blm {

enum class ViolationKind { Correct, ViolationE, ViolationI, ViolationR, WrongStructure };

std::string violation_kind_name(ViolationKind kind);
ViolationKind violation_kind_from(const std::string& name);

struct ViolationLabel {
  ViolationKind kind = ViolationKind::Correct;
  std::string detail;

  bool operator==(const ViolationLabel&) const = default;
};

struct AnswerOption {
  RealizedItem item;
  ViolationLabel label;

  bool operator==(const AnswerOption&) const = default;
};

struct AnswerSet {
  std::vector<AnswerOption> options;
  int correctIndex = -1;

  bool operator==(const AnswerSet&) const = default;
};

// Answer composition, one entry per option. Repeated kinds perturb successive
// countable occurrences.
struct AnswerConfig {
  std::vector<ViolationKind> composition = {
      ViolationKind::Correct,    ViolationKind::WrongStructure, ViolationKind::ViolationR,
      ViolationKind::ViolationE, ViolationKind::ViolationI,     ViolationKind::ViolationI};
  bool matchedLexicalization = false;
  int retryBound = 64;
};

struct Perturbation {
  TemplateRow row;
  ViolationLabel label;
};

// Abstract-level perturbation of the correct row. `ordinal` selects among
// same-kind entries in a composition (1-based).
Perturbation make_perturbation(const PhenomenonGrammar& g, const TemplateRow& correct,
                               ViolationKind kind, int ordinal = 1);

AnswerOption make_correct(const PhenomenonGrammar& g, const TemplateMatrix& t, SplitMix64& rng,
                          const RealizeOptions& opts = {},
                          const SharedLexicalization* shared = nullptr);

AnswerOption make_violation(const PhenomenonGrammar& g, const TemplateMatrix& t,
                            ViolationKind kind, SplitMix64& rng, int ordinal = 1,
                            const RealizeOptions& opts = {},
                            const SharedLexicalization* shared = nullptr);

AnswerSet build_answer_set(const PhenomenonGrammar& g, const TemplateMatrix& t,
                           std::uint64_t seed, const AnswerConfig& cfg = {},
                           const RealizeOptions& opts = {},
                           const SharedLexicalization* shared = nullptr);

// Independent re-derivation of an option's label from its abstract row.
ViolationLabel classify_option(const PhenomenonGrammar& g, const TemplateRow& correct,
                               const TemplateRow& option);

}  // namespace blm
