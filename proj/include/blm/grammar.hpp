#pragma once

#include <map>
#include <string>
#include <vector>

namespace blm {

enum class AttributeKind { Categorical, Ordinal };

struct AttributeDef {
  std::string name;
  AttributeKind kind = AttributeKind::Categorical;
  std::vector<std::string> values;

  friend bool operator==(const AttributeDef&, const AttributeDef&) = default;
};

enum class Optionality { Required, Countable };

struct ObjectDef {
  std::string name;
  std::string category;
  std::vector<std::string> attributes;
  Optionality optionality = Optionality::Required;
  int maxCount = 1;

  friend bool operator==(const ObjectDef&, const ObjectDef&) = default;
};

enum class RuleClass { E, I };
enum class RuleOperation { Match, Become, Change };

struct RuleParticipant {
  std::string object;
  std::string attribute;

  friend bool operator==(const RuleParticipant&, const RuleParticipant&) = default;
};

struct GrammarRule {
  RuleClass ruleClass = RuleClass::E;
  RuleOperation operation = RuleOperation::Match;
  std::vector<RuleParticipant> participants;
  std::string tag;
  std::string description;

  friend bool operator==(const GrammarRule&, const GrammarRule&) = default;
};

// Full attribute-value assignment for one object occurrence,
// keyed by attribute name.
using Bundle = std::map<std::string, std::string>;

struct LexiconEntry {
  std::string category;
  Bundle bundle;
  std::vector<std::string> forms;

  friend bool operator==(const LexiconEntry&, const LexiconEntry&) = default;
};

struct GlueDef {
  std::string slot;
  std::vector<std::string> words;

  friend bool operator==(const GlueDef&, const GlueDef&) = default;
};

// Surface rewrite applied where a glue word meets the determiner of the
// following form, e.g. de + les -> des.
struct ContractionRule {
  std::string glue;
  std::string determiner;
  std::string replacement;

  friend bool operator==(const ContractionRule&, const ContractionRule&) = default;
};

struct Lexicon {
  std::vector<LexiconEntry> entries;
  std::vector<GlueDef> glue;
  std::string coordinator;
  std::vector<ContractionRule> contractions;

  const std::vector<std::string>* find_forms(const std::string& category,
                                             const Bundle& bundle) const;
  const std::vector<std::string>& forms_for(const std::string& category,
                                            const Bundle& bundle) const;
  const std::vector<std::string>* find_glue(const std::string& slot) const;

  friend bool operator==(const Lexicon&, const Lexicon&) = default;
};

struct PhenomenonGrammar {
  std::string id;
  std::vector<AttributeDef> attributes;
  std::vector<ObjectDef> objects;
  std::vector<GrammarRule> rulesE;
  std::vector<GrammarRule> rulesI;
  Lexicon lexicon;

  const AttributeDef* find_attribute(const std::string& name) const;
  const ObjectDef* find_object(const std::string& name) const;
  const ObjectDef* countable_object() const;

  friend bool operator==(const PhenomenonGrammar&, const PhenomenonGrammar&) = default;
};

// Every legal attribute-value assignment for the object, in lexicographic
// order of the declared value lists.
std::vector<Bundle> legal_bundles(const PhenomenonGrammar& g, const ObjectDef& obj);

// Occurrence 1 of NP2 displays as NP2, occurrence 2 as NP3; names without
// a trailing integer fall back to name#k.
std::string occurrence_display_name(const std::string& objectName, int occurrence);

void validate_grammar(const PhenomenonGrammar& g);

PhenomenonGrammar parse_phenomenon(const std::string& source);
PhenomenonGrammar parse_phenomenon_file(const std::string& path);
std::string serialize_phenomenon(const PhenomenonGrammar& g);

std::string bundle_to_string(const Bundle& bundle);

}  // namespace blm
