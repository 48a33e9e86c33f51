#include "blm/template_matrix.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "blm/errors.hpp"
#include "blm/rng.hpp"

namespace blm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void config_error(const std::string& msg) {
  throw BlmError(ErrorCode::ConfigError, msg);
}

using CellSite = std::tuple<std::string, int, std::string>;
using ENode = std::pair<std::string, std::string>;

// Union-find over (object, attribute) nodes linked by E match rules.
struct EGroups {
  std::map<ENode, ENode> parent;

  void add(const ENode& n) { parent.emplace(n, n); }

  bool contains(const ENode& n) const { return parent.count(n) != 0; }

  ENode find(const ENode& n) {
    ENode root = n;
    while (parent.at(root) != root) root = parent.at(root);
    ENode cur = n;
    while (cur != root) cur = std::exchange(parent.at(cur), root);
    return root;
  }

  void unite(const ENode& a, const ENode& b) {
    add(a);
    add(b);
    parent.at(find(a)) = find(b);
  }
};

EGroups e_groups_of(const PhenomenonGrammar& g) {
  EGroups groups;
  for (const GrammarRule& rule : g.rulesE) {
    if (rule.operation != RuleOperation::Match) continue;
    const RuleParticipant& head = rule.participants.front();
    for (std::size_t i = 1; i < rule.participants.size(); ++i)
      groups.unite({head.object, head.attribute},
                   {rule.participants[i].object, rule.participants[i].attribute});
  }
  return groups;
}

std::pair<const ObjectDef*, int> resolve_slot(const PhenomenonGrammar& g,
                                              const std::string& name) {
  for (const ObjectDef& o : g.objects) {
    int occurrences = o.optionality == Optionality::Countable ? o.maxCount : 1;
    for (int k = 1; k <= occurrences; ++k) {
      if (occurrence_display_name(o.name, k) == name) return {&o, k};
    }
  }
  throw BlmError(ErrorCode::UnknownSymbol,
                 "operator target '" + name + "' matches no object occurrence");
}

const AttributeDef* attribute_on_object(const PhenomenonGrammar& g, const ObjectDef& obj,
                                        const std::string& attrName,
                                        const std::string& context) {
  if (std::find(obj.attributes.begin(), obj.attributes.end(), attrName) == obj.attributes.end())
    throw BlmError(ErrorCode::UnknownSymbol, context + " references attribute '" + attrName +
                                                 "' not declared on object '" + obj.name + "'");
  return g.find_attribute(attrName);
}

void check_alternation(const PhenomenonGrammar& g, const AlternationSpec& a) {
  const ObjectDef* obj = g.find_object(a.object);
  if (!obj)
    throw BlmError(ErrorCode::UnknownSymbol, "alternation targets undeclared object '" + a.object + "'");
  int maxOcc = obj->optionality == Optionality::Countable ? obj->maxCount : 1;
  if (a.occurrence < 1 || a.occurrence > maxOcc)
    throw BlmError(ErrorCode::UnknownSymbol,
                   "alternation targets occurrence " + std::to_string(a.occurrence) +
                       " of object '" + a.object + "'");
  const AttributeDef* attr = attribute_on_object(g, *obj, a.attribute, "alternation");
  if (a.cycle.empty()) config_error("alternation cycle is empty");
  for (const std::string& v : a.cycle) {
    if (std::find(attr->values.begin(), attr->values.end(), v) == attr->values.end())
      throw BlmError(ErrorCode::UnknownSymbol,
                     "alternation cycle value '" + v + "' is not declared for '" + a.attribute + "'");
  }
  if (a.period < 1) config_error("alternation period must be >= 1");
  if (a.phase < 0 || a.phase >= a.period * static_cast<int>(a.cycle.size()))
    config_error("alternation phase must satisfy 0 <= phase < period * cycle size");
}

void check_progression(const PhenomenonGrammar& g, const ProgressionSpec& p) {
  const ObjectDef* obj = g.find_object(p.object);
  if (!obj)
    throw BlmError(ErrorCode::UnknownSymbol, "progression targets undeclared object '" + p.object + "'");
  if (p.blockSize < 1) config_error("progression block size must be >= 1");
  if (p.target == ProgressionTarget::Count) {
    if (obj->optionality != Optionality::Countable)
      config_error("count progression target '" + p.object + "' is not countable");
  } else {
    int maxOcc = obj->optionality == Optionality::Countable ? obj->maxCount : 1;
    if (p.occurrence < 1 || p.occurrence > maxOcc)
      throw BlmError(ErrorCode::UnknownSymbol,
                     "progression targets occurrence " + std::to_string(p.occurrence) +
                         " of object '" + p.object + "'");
    const AttributeDef* attr = attribute_on_object(g, *obj, p.attribute, "progression");
    if (attr->kind != AttributeKind::Ordinal)
      config_error("progression needs an ordinal attribute, '" + p.attribute + "' is categorical");
  }
}

std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw BlmError(ErrorCode::SyntaxError, "bad integer '" + s + "' for " + what);
  }
}

}  // namespace

const TemplateCell* TemplateRow::find_cell(const std::string& object, int occurrence) const {
  for (const TemplateCell& cell : cells) {
    if (cell.object == object && cell.occurrence == occurrence) return &cell;
  }
  return nullptr;
}

std::string value_at(const AlternationSpec& op, int rowIndex) {
  if (op.period < 1 || op.cycle.empty()) config_error("malformed alternation spec");
  int idx = ((rowIndex + op.phase) / op.period) % static_cast<int>(op.cycle.size());
  return op.cycle[idx];
}

int value_at(const PhenomenonGrammar& g, const ProgressionSpec& op, int rowIndex) {
  if (op.blockSize < 1) config_error("malformed progression spec");
  int value = op.start + op.step * (rowIndex / op.blockSize);
  const ObjectDef* obj = g.find_object(op.object);
  if (!obj)
    throw BlmError(ErrorCode::UnknownSymbol, "progression targets undeclared object '" + op.object + "'");
  if (op.target == ProgressionTarget::Count) {
    if (value < 0 || value > obj->maxCount)
      throw BlmError(ErrorCode::DomainExceeded,
                     "count " + std::to_string(value) + " for object '" + op.object +
                         "' leaves [0, " + std::to_string(obj->maxCount) + "] at row " +
                         std::to_string(rowIndex));
  } else {
    const AttributeDef* attr = g.find_attribute(op.attribute);
    if (!attr)
      throw BlmError(ErrorCode::UnknownSymbol, "progression targets undeclared attribute '" + op.attribute + "'");
    if (value < 0 || value >= static_cast<int>(attr->values.size()))
      throw BlmError(ErrorCode::DomainExceeded,
                     "ordinal position " + std::to_string(value) + " leaves the domain of '" +
                         op.attribute + "' at row " + std::to_string(rowIndex));
  }
  return value;
}

TemplateMatrix build_template(const PhenomenonGrammar& g, const Shape& shape,
                              const std::vector<OperatorSpec>& ops) {
  if (shape.n < 2) config_error("shape needs n >= 2");
  if (shape.l < 1) config_error("shape needs l >= 1");

  const ProgressionSpec* countOp = nullptr;
  std::set<CellSite> targetedSites;
  for (const OperatorSpec& op : ops) {
    if (const auto* alt = std::get_if<AlternationSpec>(&op)) {
      check_alternation(g, *alt);
      if (!targetedSites.insert({alt->object, alt->occurrence, alt->attribute}).second)
        throw BlmError(ErrorCode::ConflictingOperators,
                       "two operators target " + alt->object + "." + alt->attribute);
    } else {
      const auto& prog = std::get<ProgressionSpec>(op);
      check_progression(g, prog);
      if (prog.target == ProgressionTarget::Count) {
        if (countOp)
          throw BlmError(ErrorCode::ConflictingOperators, "two progressions target the object count");
        countOp = &prog;
      } else if (!targetedSites.insert({prog.object, prog.occurrence, prog.attribute}).second) {
        throw BlmError(ErrorCode::ConflictingOperators,
                       "two operators target " + prog.object + "." + prog.attribute);
      }
    }
  }

  std::vector<int> counts(shape.n, 0);
  if (countOp) {
    for (int i = 0; i < shape.n; ++i) counts[i] = value_at(g, *countOp, i);
  }

  EGroups groups = e_groups_of(g);

  TemplateMatrix out;
  out.shape = shape;
  out.rules = ops;
  for (int i = 0; i < shape.n; ++i) {
    std::map<CellSite, std::string> assigned;
    for (const OperatorSpec& op : ops) {
      if (const auto* alt = std::get_if<AlternationSpec>(&op)) {
        assigned[{alt->object, alt->occurrence, alt->attribute}] = value_at(*alt, i);
      } else {
        const auto& prog = std::get<ProgressionSpec>(op);
        if (prog.target == ProgressionTarget::Attribute) {
          int pos = value_at(g, prog, i);
          assigned[{prog.object, prog.occurrence, prog.attribute}] =
              g.find_attribute(prog.attribute)->values[pos];
        }
      }
    }

    std::map<ENode, std::string> groupValue;
    for (const auto& [site, value] : assigned) {
      ENode node{std::get<0>(site), std::get<2>(site)};
      if (!groups.contains(node)) continue;
      ENode root = groups.find(node);
      auto it = groupValue.find(root);
      if (it != groupValue.end() && it->second != value)
        throw BlmError(ErrorCode::EConflict,
                       "operator assigns '" + value + "' to " + node.first + "." + node.second +
                           " but an E rule forces '" + it->second + "' at row " + std::to_string(i));
      groupValue.emplace(root, value);
    }

    TemplateRow row;
    row.sourceIndex = i;
    for (const ObjectDef& obj : g.objects) {
      int occurrences = obj.optionality == Optionality::Countable ? counts[i] : 1;
      for (int k = 1; k <= occurrences; ++k) {
        TemplateCell cell;
        cell.object = obj.name;
        cell.occurrence = k;
        for (const std::string& attrName : obj.attributes) {
          auto direct = assigned.find({obj.name, k, attrName});
          if (direct != assigned.end()) {
            cell.values[attrName] = direct->second;
            continue;
          }
          ENode node{obj.name, attrName};
          if (groups.contains(node)) {
            auto it = groupValue.find(groups.find(node));
            if (it != groupValue.end()) {
              cell.values[attrName] = it->second;
              continue;
            }
          }
          cell.values[attrName] = g.find_attribute(attrName)->values.front();
        }
        row.cells.push_back(std::move(cell));
      }
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

TemplateMatrix sample_rows(const TemplateMatrix& t, int k, std::uint64_t seed) {
  int n = static_cast<int>(t.rows.size());
  if (k < 2 || k > n) config_error("sample size must lie in [2, " + std::to_string(n) + "]");
  std::vector<int> indices(n);
  std::iota(indices.begin(), indices.end(), 0);
  SplitMix64 rng(seed);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(indices[i], indices[j]);
  }
  std::vector<int> chosen(indices.begin(), indices.begin() + k);
  std::sort(chosen.begin(), chosen.end());

  TemplateMatrix out;
  out.shape = Shape{k, t.shape.l};
  out.rules = t.rules;
  for (int index : chosen) out.rows.push_back(t.rows[index]);
  return out;
}

OperatorSpec parse_operator_spec(const PhenomenonGrammar& g, const std::string& text) {
  std::string t = trim(text);
  std::size_t open = t.find('(');
  if (open == std::string::npos || t.empty() || t.back() != ')')
    throw BlmError(ErrorCode::SyntaxError, "operator spec must look like name(target, key=value, ...)");
  std::string name = trim(t.substr(0, open));
  std::vector<std::string> args = split_top_level(t.substr(open + 1, t.size() - open - 2));
  if (name == "conjunction" || name == "disjunction" || name == "xor")
    throw BlmError(ErrorCode::UnsupportedOperator, "operator '" + name + "' is reserved but not implemented");
  if (name != "alternation" && name != "progression")
    throw BlmError(ErrorCode::SyntaxError, "unknown operator '" + name + "'");
  if (args.empty() || args[0].empty())
    throw BlmError(ErrorCode::SyntaxError, "operator '" + name + "' needs a target");

  std::string target = args[0];
  std::string objName = target;
  std::string attrName;
  std::size_t dot = target.find('.');
  if (dot != std::string::npos) {
    objName = trim(target.substr(0, dot));
    attrName = trim(target.substr(dot + 1));
  }

  if (name == "alternation") {
    auto [obj, occurrence] = resolve_slot(g, objName);
    if (attrName.empty()) {
      if (obj->attributes.size() != 1)
        throw BlmError(ErrorCode::SyntaxError,
                       "alternation target '" + objName + "' needs an explicit attribute");
      attrName = obj->attributes.front();
    }
    const AttributeDef* attr = attribute_on_object(g, *obj, attrName, "alternation");
    AlternationSpec spec;
    spec.object = obj->name;
    spec.occurrence = occurrence;
    spec.attribute = attrName;
    for (std::size_t i = 1; i < args.size(); ++i) {
      const std::string& arg = args[i];
      if (arg.rfind("period=", 0) == 0) spec.period = parse_int(arg.substr(7), "period");
      else if (arg.rfind("phase=", 0) == 0) spec.phase = parse_int(arg.substr(6), "phase");
      else if (arg.rfind("cycle=", 0) == 0) {
        std::string list = trim(arg.substr(6));
        if (list.size() < 2 || list.front() != '[' || list.back() != ']')
          throw BlmError(ErrorCode::SyntaxError, "cycle must be a [v1, v2] list");
        spec.cycle.clear();
        for (const std::string& v : split_top_level(list.substr(1, list.size() - 2)))
          spec.cycle.push_back(v);
      } else {
        throw BlmError(ErrorCode::SyntaxError, "unknown alternation argument '" + arg + "'");
      }
    }
    if (spec.cycle.empty()) spec.cycle = attr->values;
    return spec;
  }

  ProgressionSpec spec;
  if (target == "count") {
    const ObjectDef* countable = g.countable_object();
    if (!countable)
      throw BlmError(ErrorCode::UnknownSymbol, "progression target 'count' needs a countable object");
    spec.object = countable->name;
  } else {
    auto [obj, occurrence] = resolve_slot(g, objName);
    spec.object = obj->name;
    spec.occurrence = occurrence;
    if (attrName.empty()) {
      if (obj->optionality != Optionality::Countable)
        throw BlmError(ErrorCode::ConfigError,
                       "progression on non-countable object '" + objName + "' needs an attribute");
    } else {
      spec.target = ProgressionTarget::Attribute;
      spec.attribute = attrName;
      spec.start = 0;
      attribute_on_object(g, *obj, attrName, "progression");
    }
  }
  for (std::size_t i = 1; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg.rfind("start=", 0) == 0) spec.start = parse_int(arg.substr(6), "start");
    else if (arg.rfind("step=", 0) == 0) spec.step = parse_int(arg.substr(5), "step");
    else if (arg.rfind("block=", 0) == 0) spec.blockSize = parse_int(arg.substr(6), "block");
    else throw BlmError(ErrorCode::SyntaxError, "unknown progression argument '" + arg + "'");
  }
  return spec;
}

std::vector<OperatorSpec> parse_operator_specs(const PhenomenonGrammar& g,
                                               const std::vector<std::string>& texts) {
  std::vector<OperatorSpec> out;
  out.reserve(texts.size());
  for (const std::string& text : texts) out.push_back(parse_operator_spec(g, text));
  return out;
}

std::string operator_to_string(const OperatorSpec& op) {
  std::ostringstream out;
  if (const auto* alt = std::get_if<AlternationSpec>(&op)) {
    out << "alternation(" << occurrence_display_name(alt->object, alt->occurrence) << "."
        << alt->attribute << ", period=" << alt->period << ", phase=" << alt->phase << ", cycle=[";
    for (std::size_t i = 0; i < alt->cycle.size(); ++i) out << (i ? ", " : "") << alt->cycle[i];
    out << "])";
  } else {
    const auto& prog = std::get<ProgressionSpec>(op);
    out << "progression(";
    if (prog.target == ProgressionTarget::Count)
      out << "count";
    else
      out << occurrence_display_name(prog.object, prog.occurrence) << "." << prog.attribute;
    out << ", start=" << prog.start << ", step=" << prog.step << ", block=" << prog.blockSize << ")";
  }
  return out.str();
}

nlohmann::json cell_to_json(const TemplateCell& cell) {
  return nlohmann::json{{"object", cell.object},
                        {"occurrence", cell.occurrence},
                        {"slot", cell.display_name()},
                        {"values", cell.values}};
}

TemplateCell cell_from_json(const nlohmann::json& j) {
  try {
    TemplateCell cell;
    cell.object = j.at("object").get<std::string>();
    cell.occurrence = j.at("occurrence").get<int>();
    cell.values = j.at("values").get<Bundle>();
    return cell;
  } catch (const nlohmann::json::exception& e) {
    throw BlmError(ErrorCode::SchemaError, std::string("bad template cell: ") + e.what());
  }
}

nlohmann::json row_to_json(const TemplateRow& row) {
  nlohmann::json cells = nlohmann::json::array();
  for (const TemplateCell& cell : row.cells) cells.push_back(cell_to_json(cell));
  return nlohmann::json{
      {"cells", std::move(cells)},
      {"structure", row.structure == RowStructure::Plain ? "plain" : "coordination"},
      {"source_index", row.sourceIndex}};
}

TemplateRow row_from_json(const nlohmann::json& j) {
  try {
    TemplateRow row;
    for (const nlohmann::json& cell : j.at("cells")) row.cells.push_back(cell_from_json(cell));
    std::string structure = j.at("structure").get<std::string>();
    if (structure == "plain") row.structure = RowStructure::Plain;
    else if (structure == "coordination") row.structure = RowStructure::Coordination;
    else throw BlmError(ErrorCode::SchemaError, "unknown row structure '" + structure + "'");
    row.sourceIndex = j.value("source_index", 0);
    return row;
  } catch (const nlohmann::json::exception& e) {
    throw BlmError(ErrorCode::SchemaError, std::string("bad template row: ") + e.what());
  }
}

nlohmann::json matrix_to_json(const TemplateMatrix& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const TemplateRow& row : t.rows) rows.push_back(row_to_json(row));
  nlohmann::json rules = nlohmann::json::array();
  for (const OperatorSpec& op : t.rules) {
    if (const auto* alt = std::get_if<AlternationSpec>(&op)) {
      rules.push_back(nlohmann::json{{"kind", "alternation"},
                                     {"object", alt->object},
                                     {"occurrence", alt->occurrence},
                                     {"attribute", alt->attribute},
                                     {"cycle", alt->cycle},
                                     {"period", alt->period},
                                     {"phase", alt->phase}});
    } else {
      const auto& prog = std::get<ProgressionSpec>(op);
      rules.push_back(nlohmann::json{
          {"kind", "progression"},
          {"target", prog.target == ProgressionTarget::Count ? "count" : "attribute"},
          {"object", prog.object},
          {"occurrence", prog.occurrence},
          {"attribute", prog.attribute},
          {"start", prog.start},
          {"step", prog.step},
          {"block", prog.blockSize}});
    }
  }
  return nlohmann::json{{"shape", {{"n", t.shape.n}, {"l", t.shape.l}}},
                        {"rows", std::move(rows)},
                        {"rules", std::move(rules)}};
}

TemplateMatrix matrix_from_json(const nlohmann::json& j) {
  try {
    TemplateMatrix t;
    t.shape.n = j.at("shape").at("n").get<int>();
    t.shape.l = j.at("shape").at("l").get<int>();
    for (const nlohmann::json& row : j.at("rows")) t.rows.push_back(row_from_json(row));
    for (const nlohmann::json& rule : j.at("rules")) {
      std::string kind = rule.at("kind").get<std::string>();
      if (kind == "alternation") {
        AlternationSpec alt;
        alt.object = rule.at("object").get<std::string>();
        alt.occurrence = rule.at("occurrence").get<int>();
        alt.attribute = rule.at("attribute").get<std::string>();
        alt.cycle = rule.at("cycle").get<std::vector<std::string>>();
        alt.period = rule.at("period").get<int>();
        alt.phase = rule.at("phase").get<int>();
        t.rules.emplace_back(std::move(alt));
      } else if (kind == "progression") {
        ProgressionSpec prog;
        prog.target = rule.at("target").get<std::string>() == "count"
                          ? ProgressionTarget::Count
                          : ProgressionTarget::Attribute;
        prog.object = rule.at("object").get<std::string>();
        prog.occurrence = rule.at("occurrence").get<int>();
        prog.attribute = rule.at("attribute").get<std::string>();
        prog.start = rule.at("start").get<int>();
        prog.step = rule.at("step").get<int>();
        prog.blockSize = rule.at("block").get<int>();
        t.rules.emplace_back(std::move(prog));
      } else {
        throw BlmError(ErrorCode::SchemaError, "unknown rule kind '" + kind + "'");
      }
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw BlmError(ErrorCode::SchemaError, std::string("bad template matrix: ") + e.what());
  }
}

}  // namespace blm
