#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "blm/answer_set.hpp"
#include "blm/grammar.hpp"
#include "blm/realize.hpp"
#include "blm/template_matrix.hpp"

namespace blm {

struct GenerationConfig {
  std::string phenomenonPath;
  Shape shape{8, 20};
  std::vector<std::string> operators;
  // Violation kind names, one per option; empty selects the default
  // composition from AnswerConfig.
  std::vector<std::string> composition;
  int count = 1;
  std::uint64_t seed = 0;
  bool sharedLexicalization = false;
  bool matchedLexicalization = false;

  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

struct InstanceAnswers {
  int correctIndex = -1;
  // Aligned with the instance's options.
  std::vector<ViolationLabel> labels;

  friend bool operator==(const InstanceAnswers&, const InstanceAnswers&) = default;
};

struct SubstitutionRecord {
  int item = 0;
  std::string object;
  int occurrence = 1;
  std::string surface;
  int rank = 0;
  double phraseScore = 0.0;
  double sentenceScore = 0.0;
  double baseScore = 0.0;
  bool accepted = false;
  // Which constraint rejected the candidate: rank, bundle, epsilon, length,
  // or reparse. Empty when accepted.
  std::string reason;

  friend bool operator==(const SubstitutionRecord&, const SubstitutionRecord&) = default;
};

struct AugmentationRecord {
  std::string base;
  std::string review = "pending";
  double epsilon = 1.0;
  int window = 10;
  // Index into candidates of the substitution this instance applies.
  int applied = -1;
  std::vector<SubstitutionRecord> candidates;

  friend bool operator==(const AugmentationRecord&, const AugmentationRecord&) = default;
};

struct BlmInstance {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<RealizedItem> context;
  std::vector<RealizedItem> options;
  std::optional<InstanceAnswers> answers;
  std::optional<AugmentationRecord> augmentation;

  friend bool operator==(const BlmInstance&, const BlmInstance&) = default;
};

struct DatasetFile {
  std::string phenomenonId;
  // Canonical serialization of the phenomenon; makes the file re-verifiable
  // without the original .blm input.
  std::string phenomenonSource;
  GenerationConfig config;
  bool stripped = false;
  std::vector<BlmInstance> instances;

  friend bool operator==(const DatasetFile&, const DatasetFile&) = default;
};

std::string instance_id(const std::string& phenomenonId, int index);

nlohmann::json dataset_to_json(const DatasetFile& ds);
DatasetFile dataset_from_json(const nlohmann::json& j);

void save_dataset(const DatasetFile& ds, const std::string& path);
DatasetFile load_dataset(const std::string& path);

// Evaluation view: context and option surfaces only, answers and any
// fields an answer could be reconstructed from removed.
DatasetFile strip_answers(const DatasetFile& ds);

PhenomenonGrammar dataset_grammar(const DatasetFile& ds);

}  // namespace blm
