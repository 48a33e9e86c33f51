#include "blm/answer_set.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <utility>

#include "blm/errors.hpp"

namespace blm {

namespace {

std::vector<std::size_t> countable_cells(const PhenomenonGrammar& g, const TemplateRow& row) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    const ObjectDef* obj = g.find_object(row.cells[i].object);
    if (obj && obj->optionality == Optionality::Countable) out.push_back(i);
  }
  return out;
}

std::string flip_value(const PhenomenonGrammar& g, const std::string& attrName,
                       const std::string& current) {
  const AttributeDef* attr = g.find_attribute(attrName);
  if (!attr || attr->values.size() < 2)
    throw BlmError(ErrorCode::NotPerturbable,
                   "attribute '" + attrName + "' has no alternative value");
  for (std::size_t i = 0; i < attr->values.size(); ++i)
    if (attr->values[i] == current) return attr->values[(i + 1) % attr->values.size()];
  throw BlmError(ErrorCode::NotPerturbable,
                 "value '" + current + "' is not declared for attribute '" + attrName + "'");
}

// First E match rule whose participants carry more than one distinct value.
const GrammarRule* violated_e_rule(const PhenomenonGrammar& g, const TemplateRow& row) {
  for (const GrammarRule& rule : g.rulesE) {
    if (rule.operation != RuleOperation::Match) continue;
    std::set<std::string> seen;
    for (const RuleParticipant& p : rule.participants) {
      for (const TemplateCell& cell : row.cells) {
        if (cell.object != p.object) continue;
        auto it = cell.values.find(p.attribute);
        if (it != cell.values.end()) seen.insert(it->second);
      }
    }
    if (seen.size() > 1) return &rule;
  }
  return nullptr;
}

const TemplateCell* find_cell(const TemplateRow& row, const std::string& object, int occurrence) {
  for (const TemplateCell& cell : row.cells)
    if (cell.object == object && cell.occurrence == occurrence) return &cell;
  return nullptr;
}

}  // namespace

std::string violation_kind_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Correct: return "correct";
    case ViolationKind::ViolationE: return "violation-e";
    case ViolationKind::ViolationI: return "violation-i";
    case ViolationKind::ViolationR: return "violation-r";
    case ViolationKind::WrongStructure: return "wrong-structure";
  }
  throw BlmError(ErrorCode::SchemaError, "unknown violation kind");
}

ViolationKind violation_kind_from(const std::string& name) {
  if (name == "correct") return ViolationKind::Correct;
  if (name == "violation-e") return ViolationKind::ViolationE;
  if (name == "violation-i") return ViolationKind::ViolationI;
  if (name == "violation-r") return ViolationKind::ViolationR;
  if (name == "wrong-structure") return ViolationKind::WrongStructure;
  throw BlmError(ErrorCode::SchemaError, "unknown violation kind '" + name + "'");
}

Perturbation make_perturbation(const PhenomenonGrammar& g, const TemplateRow& correct,
                               ViolationKind kind, int ordinal) {
  if (ordinal < 1) throw BlmError(ErrorCode::ConfigError, "perturbation ordinal must be positive");
  Perturbation out{correct, {kind, ""}};

  switch (kind) {
    case ViolationKind::Correct:
      return out;

    case ViolationKind::WrongStructure: {
      if (g.lexicon.coordinator.empty())
        throw BlmError(ErrorCode::NotPerturbable, "no coordinator declared");
      if (countable_cells(g, correct).empty())
        throw BlmError(ErrorCode::NotPerturbable, "no countable occurrence to coordinate");
      out.row.structure = RowStructure::Coordination;
      out.label.detail = "coordination";
      return out;
    }

    case ViolationKind::ViolationR: {
      std::vector<std::size_t> cc = countable_cells(g, correct);
      if (cc.empty()) throw BlmError(ErrorCode::NotPerturbable, "count is already zero");
      out.row.cells.erase(out.row.cells.begin() + static_cast<long>(cc.back()));
      out.label.detail = "count";
      return out;
    }

    case ViolationKind::ViolationE: {
      if (g.rulesE.empty()) throw BlmError(ErrorCode::NotPerturbable, "no E rule to violate");
      const RuleParticipant& target = g.rulesE.front().participants.back();
      for (TemplateCell& cell : out.row.cells) {
        if (cell.object != target.object) continue;
        auto it = cell.values.find(target.attribute);
        if (it == cell.values.end()) continue;
        it->second = flip_value(g, target.attribute, it->second);
        out.label.detail = cell.display_name() + "." + target.attribute;
        return out;
      }
      throw BlmError(ErrorCode::NotPerturbable, "E participant absent from the row");
    }

    case ViolationKind::ViolationI: {
      std::vector<std::size_t> cc = countable_cells(g, correct);
      if (static_cast<int>(cc.size()) < ordinal)
        throw BlmError(ErrorCode::NotPerturbable,
                       "row has fewer countable occurrences than requested");
      TemplateCell& cell = out.row.cells[cc[static_cast<std::size_t>(ordinal - 1)]];
      const ObjectDef* obj = g.find_object(cell.object);
      if (!obj || obj->attributes.empty())
        throw BlmError(ErrorCode::NotPerturbable, "countable object carries no attribute");
      const std::string& attr = obj->attributes.front();
      cell.values[attr] = flip_value(g, attr, cell.values.at(attr));
      if (violated_e_rule(g, out.row))
        throw BlmError(ErrorCode::NotPerturbable, "flip would break an E rule");
      out.label.detail = cell.display_name() + "." + attr;
      return out;
    }
  }
  throw BlmError(ErrorCode::ConfigError, "unknown violation kind");
}

AnswerOption make_correct(const PhenomenonGrammar& g, const TemplateMatrix& t, SplitMix64& rng,
                          const RealizeOptions& opts, const SharedLexicalization* shared) {
  if (t.rows.empty()) throw BlmError(ErrorCode::ConfigError, "template has no rows");
  return {realize_row(g, t.rows.back(), t.shape.l, rng, opts, shared),
          {ViolationKind::Correct, ""}};
}

AnswerOption make_violation(const PhenomenonGrammar& g, const TemplateMatrix& t,
                            ViolationKind kind, SplitMix64& rng, int ordinal,
                            const RealizeOptions& opts, const SharedLexicalization* shared) {
  if (t.rows.empty()) throw BlmError(ErrorCode::ConfigError, "template has no rows");
  Perturbation p = make_perturbation(g, t.rows.back(), kind, ordinal);
  return {realize_row(g, p.row, t.shape.l, rng, opts, shared), p.label};
}

AnswerSet build_answer_set(const PhenomenonGrammar& g, const TemplateMatrix& t,
                           std::uint64_t seed, const AnswerConfig& cfg,
                           const RealizeOptions& opts, const SharedLexicalization* shared) {
  if (t.rows.empty()) throw BlmError(ErrorCode::ConfigError, "template has no rows");
  long correctCount =
      std::count(cfg.composition.begin(), cfg.composition.end(), ViolationKind::Correct);
  if (correctCount != 1)
    throw BlmError(ErrorCode::ConfigError, "composition must contain exactly one correct option");
  const TemplateRow& correct = t.rows.back();

  std::vector<Perturbation> perts;
  std::map<ViolationKind, int> ordinals;
  for (ViolationKind kind : cfg.composition)
    perts.push_back(make_perturbation(g, correct, kind, ++ordinals[kind]));

  bool lengthFailure = false;
  for (int attempt = 0; attempt < std::max(1, cfg.retryBound); ++attempt) {
    SplitMix64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    RealizedItem correctItem = realize_row(g, correct, t.shape.l, rng, opts, shared);

    std::map<std::pair<std::string, int>, CellChoice> byCell;
    for (std::size_t i = 0; i < correct.cells.size(); ++i)
      byCell[{correct.cells[i].object, correct.cells[i].occurrence}] = correctItem.choices[i];

    std::vector<AnswerOption> options;
    bool ok = true;
    for (std::size_t ci = 0; ci < cfg.composition.size() && ok; ++ci) {
      if (cfg.composition[ci] == ViolationKind::Correct) {
        options.push_back({correctItem, perts[ci].label});
        continue;
      }
      const Perturbation& p = perts[ci];
      RealizedItem item;
      if (cfg.matchedLexicalization) {
        std::vector<CellChoice> choices;
        for (const TemplateCell& cell : p.row.cells) {
          const ObjectDef* obj = g.find_object(cell.object);
          const std::vector<std::string>& forms =
              g.lexicon.forms_for(obj->category, cell.values);
          auto it = byCell.find({cell.object, cell.occurrence});
          CellChoice c;
          if (it != byCell.end()) {
            c = it->second;
            c.entryIndex = static_cast<int>(c.entryIndex % static_cast<int>(forms.size()));
          } else {
            c.entryIndex = static_cast<int>(rng.below(forms.size()));
            if (const std::vector<std::string>* glue = g.lexicon.find_glue(cell.display_name()))
              c.glueIndex = static_cast<int>(rng.below(glue->size()));
          }
          choices.push_back(c);
        }
        auto [surface, tokens] = render_surface(g, p.row, choices);
        if (tokens > t.shape.l) {
          ok = false;
          lengthFailure = true;
          break;
        }
        item = {surface, p.row, std::move(choices), tokens};
      } else {
        item = realize_row(g, p.row, t.shape.l, rng, opts, shared);
      }
      options.push_back({std::move(item), p.label});
    }
    if (!ok) continue;

    std::set<std::string> surfaces;
    for (const AnswerOption& o : options)
      if (!surfaces.insert(o.item.surface).second) ok = false;
    if (!ok) continue;

    AnswerSet set;
    set.options = std::move(options);
    for (std::size_t i = set.options.size(); i > 1; --i)
      std::swap(set.options[i - 1], set.options[rng.below(i)]);
    for (std::size_t i = 0; i < set.options.size(); ++i)
      if (set.options[i].label.kind == ViolationKind::Correct)
        set.correctIndex = static_cast<int>(i);
    return set;
  }

  if (lengthFailure)
    throw BlmError(ErrorCode::LengthExceeded,
                   "matched option exceeds the token budget in every attempt");
  throw BlmError(ErrorCode::DuplicateSurface,
                 "could not draw " + std::to_string(cfg.composition.size()) +
                     " distinct option surfaces in " + std::to_string(cfg.retryBound) +
                     " attempts");
}

ViolationLabel classify_option(const PhenomenonGrammar& g, const TemplateRow& correct,
                               const TemplateRow& option) {
  if (option.structure == RowStructure::Coordination &&
      correct.structure != RowStructure::Coordination)
    return {ViolationKind::WrongStructure, "coordination"};

  if (const GrammarRule* rule = violated_e_rule(g, option)) {
    const RuleParticipant& p = rule->participants.back();
    return {ViolationKind::ViolationE, p.object + "." + p.attribute};
  }

  if (countable_cells(g, correct).size() != countable_cells(g, option).size())
    return {ViolationKind::ViolationR, "count"};

  for (const TemplateCell& cell : option.cells) {
    const TemplateCell* base = find_cell(correct, cell.object, cell.occurrence);
    if (!base) return {ViolationKind::WrongStructure, "cells"};
    for (const auto& [attr, value] : cell.values) {
      auto it = base->values.find(attr);
      if (it == base->values.end() || it->second != value)
        return {ViolationKind::ViolationI, cell.display_name() + "." + attr};
    }
  }
  if (option.cells.size() != correct.cells.size())
    return {ViolationKind::WrongStructure, "cells"};
  return {ViolationKind::Correct, ""};
}

}  // namespace blm
