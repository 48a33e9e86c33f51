#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "blm/grammar.hpp"

namespace blm {

struct Shape {
  int n = 2;
  int l = 1;

  friend bool operator==(const Shape&, const Shape&) = default;
};

struct AlternationSpec {
  std::string object;
  int occurrence = 1;
  std::string attribute;
  std::vector<std::string> cycle;
  int period = 1;
  int phase = 0;

  friend bool operator==(const AlternationSpec&, const AlternationSpec&) = default;
};

enum class ProgressionTarget { Count, Attribute };

struct ProgressionSpec {
  ProgressionTarget target = ProgressionTarget::Count;
  std::string object;
  int occurrence = 1;
  std::string attribute;
  int start = 1;
  int step = 1;
  int blockSize = 1;

  friend bool operator==(const ProgressionSpec&, const ProgressionSpec&) = default;
};

using OperatorSpec = std::variant<AlternationSpec, ProgressionSpec>;

// Declared for forward compatibility; parsing one of these reports
// UnsupportedOperator.
enum class ReservedOperator { Conjunction, Disjunction, ExclusiveOr };

struct TemplateCell {
  std::string object;
  int occurrence = 1;
  Bundle values;

  std::string display_name() const { return occurrence_display_name(object, occurrence); }

  friend bool operator==(const TemplateCell&, const TemplateCell&) = default;
};

enum class RowStructure { Plain, Coordination };

struct TemplateRow {
  std::vector<TemplateCell> cells;
  RowStructure structure = RowStructure::Plain;
  // Index of the row in the exhaustive matrix it was built from; provenance
  // only, not part of row identity.
  int sourceIndex = 0;

  const TemplateCell* find_cell(const std::string& object, int occurrence) const;

  friend bool operator==(const TemplateRow& a, const TemplateRow& b) {
    return a.cells == b.cells && a.structure == b.structure;
  }
};

struct TemplateMatrix {
  Shape shape;
  std::vector<TemplateRow> rows;
  std::vector<OperatorSpec> rules;

  friend bool operator==(const TemplateMatrix&, const TemplateMatrix&) = default;
};

std::string value_at(const AlternationSpec& op, int rowIndex);
int value_at(const PhenomenonGrammar& g, const ProgressionSpec& op, int rowIndex);

TemplateMatrix build_template(const PhenomenonGrammar& g, const Shape& shape,
                              const std::vector<OperatorSpec>& ops);

// Seeded subset selection after exhaustive construction; keeps row order and
// records original indices in sourceIndex.
TemplateMatrix sample_rows(const TemplateMatrix& t, int k, std::uint64_t seed);

OperatorSpec parse_operator_spec(const PhenomenonGrammar& g, const std::string& text);
std::vector<OperatorSpec> parse_operator_specs(const PhenomenonGrammar& g,
                                               const std::vector<std::string>& texts);
std::string operator_to_string(const OperatorSpec& op);

nlohmann::json cell_to_json(const TemplateCell& cell);
TemplateCell cell_from_json(const nlohmann::json& j);
nlohmann::json row_to_json(const TemplateRow& row);
TemplateRow row_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const TemplateMatrix& t);
TemplateMatrix matrix_from_json(const nlohmann::json& j);

}  // namespace blm
