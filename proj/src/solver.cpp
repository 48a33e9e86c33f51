#include "blm/solver.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <utility>

#include "blm/errors.hpp"

namespace blm {

namespace {

using ENode = std::pair<std::string, std::string>;  // object, attribute

struct EGroups {
  std::map<ENode, ENode> parent;

  ENode find(ENode n) {
    auto it = parent.find(n);
    if (it == parent.end() || it->second == n) return n;
    ENode root = find(it->second);
    parent[n] = root;
    return root;
  }

  void merge(const ENode& a, const ENode& b) {
    ENode ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  bool grouped(ENode n) {
    if (parent.count(n)) return true;
    for (const auto& [child, par] : parent)
      if (par == n) return true;
    return false;
  }
};

EGroups build_groups(const std::vector<GrammarRule>& rules) {
  EGroups groups;
  for (const GrammarRule& rule : rules) {
    if (rule.operation != RuleOperation::Match || rule.participants.size() < 2) continue;
    ENode first{rule.participants.front().object, rule.participants.front().attribute};
    for (std::size_t i = 1; i < rule.participants.size(); ++i)
      groups.merge(first, {rule.participants[i].object, rule.participants[i].attribute});
  }
  return groups;
}

std::vector<GrammarRule> match_rules(const PhenomenonGrammar& g) {
  std::vector<GrammarRule> out;
  for (const GrammarRule& rule : g.rulesE)
    if (rule.operation == RuleOperation::Match && rule.participants.size() >= 2)
      out.push_back(rule);
  return out;
}

int object_index(const PhenomenonGrammar& g, const std::string& name) {
  for (std::size_t i = 0; i < g.objects.size(); ++i)
    if (g.objects[i].name == name) return static_cast<int>(i);
  throw BlmError(ErrorCode::UnknownSymbol, "row cell references undeclared object '" + name + "'");
}

using Observation = std::vector<std::pair<int, std::string>>;  // rowIndex, value

// All ordered tuples of distinct domain values, length 1..|domain|.
std::vector<std::vector<std::string>> all_cycles(const std::vector<std::string>& domain) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> pick;
  std::vector<bool> used(domain.size(), false);
  std::function<void()> rec = [&] {
    if (!pick.empty()) out.push_back(pick);
    if (pick.size() == domain.size()) return;
    for (std::size_t i = 0; i < domain.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      pick.push_back(domain[i]);
      rec();
      pick.pop_back();
      used[i] = false;
    }
  };
  rec();
  return out;
}

std::vector<AlternationSpec> cell_candidates(const PhenomenonGrammar& g,
                                             const std::string& object, int occurrence,
                                             const std::string& attribute, const Observation& obs,
                                             int maxPeriod) {
  const AttributeDef* attr = g.find_attribute(attribute);
  if (!attr)
    throw BlmError(ErrorCode::UnknownSymbol, "row cell uses undeclared attribute '" + attribute + "'");

  auto consistent = [&](const AlternationSpec& cand) {
    for (const auto& [row, value] : obs)
      if (value_at(cand, row) != value) return false;
    return true;
  };

  std::vector<AlternationSpec> out;
  for (const std::vector<std::string>& cycle : all_cycles(attr->values)) {
    AlternationSpec cand{object, occurrence, attribute, cycle, 1, 0};
    if (cycle.size() == 1) {
      // Constant sequences get a single canonical form.
      if (consistent(cand)) out.push_back(cand);
      continue;
    }
    for (int period = 1; period <= maxPeriod; ++period) {
      cand.period = period;
      for (int phase = 0; phase < period * static_cast<int>(cycle.size()); ++phase) {
        cand.phase = phase;
        if (consistent(cand)) out.push_back(cand);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const AlternationSpec& a, const AlternationSpec& b) {
    return std::tie(a.period, a.phase, a.cycle) < std::tie(b.period, b.phase, b.cycle);
  });
  return out;
}

std::vector<ProgressionSpec> count_candidates(const ObjectDef& countable,
                                              const std::vector<int>& counts, int maxBlock) {
  int start = counts.front();
  auto consistent = [&](int step, int block) {
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i] != start + step * (static_cast<int>(i) / block)) return false;
    return true;
  };

  std::vector<ProgressionSpec> out;
  ProgressionSpec base{ProgressionTarget::Count, countable.name, 1, "", start, 0, 1};
  if (consistent(0, 1)) out.push_back(base);
  for (int step : {-1, 1}) {
    for (int block = 1; block <= maxBlock; ++block) {
      if (!consistent(step, block)) continue;
      base.step = step;
      base.blockSize = block;
      out.push_back(base);
    }
  }
  return out;
}

bool hypothesis_less(const RuleHypothesis& a, const RuleHypothesis& b) {
  int da = a.description_length(), db = b.description_length();
  if (da != db) return da < db;
  for (std::size_t i = 0; i < a.perCell.size() && i < b.perCell.size(); ++i) {
    const AlternationSpec& x = a.perCell[i];
    const AlternationSpec& y = b.perCell[i];
    auto tx = std::tie(x.period, x.phase, x.cycle);
    auto ty = std::tie(y.period, y.phase, y.cycle);
    if (tx != ty) return tx < ty;
  }
  if (a.countRule.has_value() != b.countRule.has_value()) return b.countRule.has_value();
  if (a.countRule) {
    auto ta = std::make_tuple(std::abs(a.countRule->step), a.countRule->step,
                              a.countRule->blockSize, a.countRule->start);
    auto tb = std::make_tuple(std::abs(b.countRule->step), b.countRule->step,
                              b.countRule->blockSize, b.countRule->start);
    if (ta != tb) return ta < tb;
  }
  return false;
}

}  // namespace

int RuleHypothesis::description_length() const {
  int dl = 0;
  for (const AlternationSpec& rule : perCell) dl += rule.period;
  if (countRule) dl += 1 + std::abs(countRule->step);
  return dl;
}

std::vector<RuleHypothesis> enumerate_hypotheses(const std::vector<TemplateRow>& context,
                                                 const PhenomenonGrammar& g,
                                                 const HypothesisBounds& bounds) {
  if (context.size() < 2)
    throw BlmError(ErrorCode::ConfigError, "hypothesis induction needs at least two context rows");
  int maxBlock = bounds.maxBlockSize > 0 ? bounds.maxBlockSize : static_cast<int>(context.size());

  std::vector<GrammarRule> eRules = match_rules(g);
  EGroups groups = build_groups(eRules);

  // Observed value sequences. Grouped cells collapse onto their group root.
  using CellKey = std::tuple<int, int, std::string>;  // object index, occurrence, attribute
  std::map<CellKey, Observation> cellObs;
  std::map<ENode, Observation> groupObs;
  std::vector<int> counts(context.size(), 0);
  const ObjectDef* countable = g.countable_object();

  for (std::size_t i = 0; i < context.size(); ++i) {
    std::map<ENode, std::string> groupValue;
    for (const TemplateCell& cell : context[i].cells) {
      int obj = object_index(g, cell.object);
      if (countable && cell.object == countable->name) ++counts[i];
      for (const auto& [attr, value] : cell.values) {
        ENode node{cell.object, attr};
        ENode root = groups.find(node);
        if (root != node || groups.grouped(node)) {
          auto it = groupValue.find(root);
          if (it != groupValue.end() && it->second != value)
            throw BlmError(ErrorCode::NoConsistentHypothesis,
                           "row " + std::to_string(i) + " violates the assumed match on " +
                               root.first + "." + root.second);
          groupValue[root] = value;
        } else {
          cellObs[{obj, cell.occurrence, attr}].push_back({static_cast<int>(i), value});
        }
      }
    }
    for (const auto& [root, value] : groupValue)
      groupObs[root].push_back({static_cast<int>(i), value});
  }

  // Enumeration cells in declared order: group roots use occurrence 1.
  struct Cell {
    CellKey key;
    std::string object;
    int occurrence;
    std::string attribute;
    const Observation* obs;
  };
  std::vector<Cell> cells;
  for (const auto& [root, obs] : groupObs) {
    int obj = object_index(g, root.first);
    cells.push_back({{obj, 1, root.second}, root.first, 1, root.second, &obs});
  }
  for (const auto& [key, obs] : cellObs) {
    const auto& [obj, occ, attr] = key;
    cells.push_back({key, g.objects[static_cast<std::size_t>(obj)].name, occ, attr, &obs});
  }
  std::sort(cells.begin(), cells.end(),
            [](const Cell& a, const Cell& b) { return a.key < b.key; });

  std::vector<std::vector<AlternationSpec>> candidates;
  for (const Cell& cell : cells) {
    candidates.push_back(
        cell_candidates(g, cell.object, cell.occurrence, cell.attribute, *cell.obs,
                        bounds.maxPeriod));
    if (candidates.back().empty())
      throw BlmError(ErrorCode::NoConsistentHypothesis,
                     "no bounded rule reproduces " +
                         occurrence_display_name(cell.object, cell.occurrence) + "." +
                         cell.attribute);
  }

  std::vector<ProgressionSpec> countCands;
  if (countable) {
    countCands = count_candidates(*countable, counts, maxBlock);
    if (countCands.empty())
      throw BlmError(ErrorCode::NoConsistentHypothesis,
                     "no bounded progression reproduces the " + countable->name + " counts");
  }

  std::vector<RuleHypothesis> out;
  std::vector<std::size_t> pick(cells.size(), 0);
  std::size_t countPicks = countable ? countCands.size() : 1;
  for (std::size_t c = 0; c < countPicks; ++c) {
    std::fill(pick.begin(), pick.end(), 0);
    while (true) {
      RuleHypothesis h;
      for (std::size_t i = 0; i < cells.size(); ++i) h.perCell.push_back(candidates[i][pick[i]]);
      if (countable) h.countRule = countCands[c];
      h.eRules = eRules;
      out.push_back(std::move(h));

      std::size_t i = cells.size();
      while (i > 0 && ++pick[i - 1] == candidates[i - 1].size()) pick[--i] = 0;
      if (i == 0) break;
    }
  }

  std::sort(out.begin(), out.end(), hypothesis_less);
  return out;
}

TemplateRow predict_row(const PhenomenonGrammar& g, const RuleHypothesis& h, int rowIndex) {
  EGroups groups = build_groups(h.eRules);

  auto rule_for = [&](const std::string& object, int occurrence,
                      const std::string& attribute) -> const AlternationSpec& {
    ENode node{object, attribute};
    ENode root = groups.find(node);
    bool inGroup = root != node || groups.grouped(node);
    for (const AlternationSpec& rule : h.perCell) {
      if (inGroup) {
        if (groups.find({rule.object, rule.attribute}) == root) return rule;
      } else if (rule.object == object && rule.occurrence == occurrence &&
                 rule.attribute == attribute) {
        return rule;
      }
    }
    throw BlmError(ErrorCode::NoConsistentHypothesis,
                   "hypothesis has no rule for " + occurrence_display_name(object, occurrence) +
                       "." + attribute);
  };

  const ObjectDef* countable = g.countable_object();
  int count = 0;
  if (h.countRule) count = value_at(g, *h.countRule, rowIndex);

  TemplateRow row;
  for (const ObjectDef& obj : g.objects) {
    int occurrences = 1;
    if (countable && obj.name == countable->name) occurrences = count;
    for (int k = 1; k <= occurrences; ++k) {
      TemplateCell cell{obj.name, k, {}};
      for (const std::string& attr : obj.attributes)
        cell.values[attr] = value_at(rule_for(obj.name, k, attr), rowIndex);
      row.cells.push_back(std::move(cell));
    }
  }
  return row;
}

Solution solve(const std::vector<TemplateRow>& context, const std::vector<TemplateRow>& options,
               const PhenomenonGrammar& g, const HypothesisBounds& bounds) {
  std::vector<RuleHypothesis> hyps = enumerate_hypotheses(context, g, bounds);
  int minDl = hyps.front().description_length();
  int target = static_cast<int>(context.size());

  std::vector<TemplateRow> predictions;
  for (const RuleHypothesis& h : hyps) {
    if (h.description_length() != minDl) break;
    try {
      TemplateRow row = predict_row(g, h, target);
      if (std::find(predictions.begin(), predictions.end(), row) == predictions.end())
        predictions.push_back(std::move(row));
    } catch (const BlmError&) {
      // A minimal hypothesis that cannot extend to the target row predicts nothing.
    }
  }
  if (predictions.empty())
    throw BlmError(ErrorCode::NoMatchingOption, "no minimal hypothesis extends to the target row");

  Solution solution;
  solution.hypothesis = hyps.front();
  solution.prediction = predictions.front();
  for (std::size_t i = 0; i < options.size(); ++i)
    for (const TemplateRow& row : predictions)
      if (options[i] == row) {
        solution.coConsistent.push_back(static_cast<int>(i));
        break;
      }
  if (solution.coConsistent.empty())
    throw BlmError(ErrorCode::NoMatchingOption, "no option matches the predicted row");
  solution.chosenIndex = solution.coConsistent.front();
  solution.confidence =
      solution.coConsistent.size() == 1 ? Confidence::Exact : Confidence::Ambiguous;
  return solution;
}

VerifyResult verify_unique(const PhenomenonGrammar& g, const std::vector<TemplateRow>& context,
                           const std::vector<TemplateRow>& options, int correctIndex,
                           const HypothesisBounds& bounds) {
  Solution solution;
  try {
    solution = solve(context, options, g, bounds);
  } catch (const BlmError& e) {
    return {false, e.what()};
  }
  if (solution.confidence != Confidence::Exact) {
    std::string joined;
    for (int i : solution.coConsistent) joined += (joined.empty() ? "" : ", ") + std::to_string(i);
    return {false, "ambiguous: options {" + joined + "} all match a minimal prediction"};
  }
  if (solution.chosenIndex != correctIndex)
    return {false, "solver chose option " + std::to_string(solution.chosenIndex) +
                       " but the stored answer is " + std::to_string(correctIndex)};
  return {true, ""};
}

}  // namespace blm
