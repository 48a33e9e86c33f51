#include "blm/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "blm/errors.hpp"

namespace blm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_trim(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

[[noreturn]] void syntax_error(int line, const std::string& msg) {
  throw BlmError(ErrorCode::SyntaxError, "line " + std::to_string(line) + ": " + msg);
}

[[noreturn]] void unknown_symbol(const std::string& msg) {
  throw BlmError(ErrorCode::UnknownSymbol, msg);
}

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

// "[a, b, c]" -> {"a","b","c"}; returns rest of the line after ']'.
std::vector<std::string> parse_bracket_list(const std::string& text, int line,
                                            std::string* rest) {
  std::string t = trim(text);
  if (t.empty() || t.front() != '[') syntax_error(line, "expected '[' list");
  std::size_t close = t.find(']');
  if (close == std::string::npos) syntax_error(line, "unterminated '[' list");
  std::string inner = trim(t.substr(1, close - 1));
  *rest = trim(t.substr(close + 1));
  if (inner.empty()) return {};
  return split_trim(inner, ',');
}

struct LineParser {
  enum class Section { None, Phenomenon, Attributes, Objects, RulesE, RulesI, Lexicon };

  PhenomenonGrammar g;
  Section section = Section::None;

  void feed(const std::string& rawLine, int lineNo) {
    std::string line = rawLine;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) return;

    if (consume_section_header(line, lineNo)) return;
    switch (section) {
      case Section::None:
        syntax_error(lineNo, "content before any section header");
      case Section::Phenomenon:
        syntax_error(lineNo, "unexpected content after phenomenon id");
      case Section::Attributes:
        parse_attribute(line, lineNo);
        break;
      case Section::Objects:
        parse_object(line, lineNo);
        break;
      case Section::RulesE:
        g.rulesE.push_back(parse_rule(line, lineNo, RuleClass::E));
        break;
      case Section::RulesI:
        g.rulesI.push_back(parse_rule(line, lineNo, RuleClass::I));
        break;
      case Section::Lexicon:
        parse_lexicon_line(line, lineNo);
        break;
    }
  }

 private:
  bool consume_section_header(const std::string& line, int lineNo) {
    static const std::vector<std::pair<std::string, Section>> kSections = {
        {"phenomenon", Section::Phenomenon}, {"attributes", Section::Attributes},
        {"objects", Section::Objects},       {"rules-E", Section::RulesE},
        {"rules-I", Section::RulesI},        {"lexicon", Section::Lexicon},
    };
    for (const auto& [name, sec] : kSections) {
      if (line.size() >= name.size() + 1 && line.compare(0, name.size(), name) == 0 &&
          line[name.size()] == ':') {
        std::string rest = trim(line.substr(name.size() + 1));
        if (sec == Section::Phenomenon) {
          if (rest.empty()) syntax_error(lineNo, "phenomenon id missing");
          if (!is_identifier(rest)) syntax_error(lineNo, "phenomenon id is not an identifier");
          g.id = rest;
        } else if (!rest.empty()) {
          syntax_error(lineNo, "unexpected content after section header '" + name + ":'");
        }
        section = sec;
        return true;
      }
    }
    return false;
  }

  void parse_attribute(const std::string& line, int lineNo) {
    std::size_t colon = line.find(':');
    if (colon == std::string::npos) syntax_error(lineNo, "expected 'name: kind [values]'");
    AttributeDef def;
    def.name = trim(line.substr(0, colon));
    if (!is_identifier(def.name)) syntax_error(lineNo, "attribute name is not an identifier");
    std::string rest = trim(line.substr(colon + 1));
    std::size_t sp = rest.find_first_of(" \t[");
    std::string kind = sp == std::string::npos ? rest : rest.substr(0, sp);
    if (kind == "categorical") def.kind = AttributeKind::Categorical;
    else if (kind == "ordinal") def.kind = AttributeKind::Ordinal;
    else syntax_error(lineNo, "attribute kind must be categorical or ordinal");
    std::string tail;
    def.values = parse_bracket_list(rest.substr(kind.size()), lineNo, &tail);
    if (!tail.empty()) syntax_error(lineNo, "unexpected trailing text '" + tail + "'");
    if (def.values.empty()) syntax_error(lineNo, "attribute needs at least one value");
    g.attributes.push_back(std::move(def));
  }

  void parse_object(const std::string& line, int lineNo) {
    std::size_t colon = line.find(':');
    if (colon == std::string::npos) syntax_error(lineNo, "expected 'name: category [attrs]'");
    ObjectDef def;
    def.name = trim(line.substr(0, colon));
    if (!is_identifier(def.name)) syntax_error(lineNo, "object name is not an identifier");
    std::string rest = trim(line.substr(colon + 1));
    std::size_t sp = rest.find_first_of(" \t[");
    def.category = sp == std::string::npos ? rest : trim(rest.substr(0, sp));
    if (!is_identifier(def.category)) syntax_error(lineNo, "object category is not an identifier");
    std::string tail = sp == std::string::npos ? "" : trim(rest.substr(sp));
    if (!tail.empty() && tail.front() == '[') {
      def.attributes = parse_bracket_list(tail, lineNo, &tail);
    }
    if (!tail.empty()) {
      std::istringstream in(tail);
      std::string word;
      in >> word;
      if (word != "countable") syntax_error(lineNo, "unexpected trailing text '" + tail + "'");
      def.optionality = Optionality::Countable;
      std::string maxWord;
      in >> maxWord;
      if (maxWord.rfind("max=", 0) != 0)
        syntax_error(lineNo, "countable object needs 'max=<k>'");
      try {
        def.maxCount = std::stoi(maxWord.substr(4));
      } catch (const std::exception&) {
        syntax_error(lineNo, "bad max count '" + maxWord + "'");
      }
      if (def.maxCount < 1) syntax_error(lineNo, "max count must be >= 1");
      std::string extra;
      if (in >> extra) syntax_error(lineNo, "unexpected trailing text '" + extra + "'");
    }
    g.objects.push_back(std::move(def));
  }

  GrammarRule parse_rule(const std::string& line, int lineNo, RuleClass cls) {
    GrammarRule rule;
    rule.ruleClass = cls;
    std::string head = line;
    std::size_t sep = head.find("::");
    if (sep != std::string::npos) {
      rule.description = trim(head.substr(sep + 2));
      head = trim(head.substr(0, sep));
    }
    std::size_t open = head.find('(');
    std::size_t close = head.find(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
      syntax_error(lineNo, "expected 'op(obj.attr, ...)'");
    std::string op = trim(head.substr(0, open));
    if (op == "match") rule.operation = RuleOperation::Match;
    else if (op == "become") rule.operation = RuleOperation::Become;
    else if (op == "change") rule.operation = RuleOperation::Change;
    else syntax_error(lineNo, "rule operation must be match, become or change");
    for (const std::string& arg : split_trim(head.substr(open + 1, close - open - 1), ',')) {
      std::size_t dot = arg.find('.');
      if (dot == std::string::npos) syntax_error(lineNo, "participant must be 'object.attribute'");
      RuleParticipant p{trim(arg.substr(0, dot)), trim(arg.substr(dot + 1))};
      if (!is_identifier(p.object) || !is_identifier(p.attribute))
        syntax_error(lineNo, "participant must be 'object.attribute'");
      rule.participants.push_back(std::move(p));
    }
    std::string tail = trim(head.substr(close + 1));
    if (!tail.empty()) {
      if (tail.rfind("tag=", 0) != 0) syntax_error(lineNo, "unexpected trailing text '" + tail + "'");
      rule.tag = trim(tail.substr(4));
      if (!is_identifier(rule.tag)) syntax_error(lineNo, "rule tag is not an identifier");
    }
    return rule;
  }

  void parse_lexicon_line(const std::string& line, int lineNo) {
    if (line.rfind("form ", 0) == 0) {
      std::size_t colon = line.find(':');
      if (colon == std::string::npos) syntax_error(lineNo, "expected 'form category attr=val: forms'");
      std::istringstream head(line.substr(5, colon - 5));
      LexiconEntry entry;
      head >> entry.category;
      if (!is_identifier(entry.category)) syntax_error(lineNo, "form category is not an identifier");
      std::string assign;
      while (head >> assign) {
        std::size_t eq = assign.find('=');
        if (eq == std::string::npos) syntax_error(lineNo, "expected attr=value in form header");
        std::string attr = assign.substr(0, eq);
        std::string value = assign.substr(eq + 1);
        if (!is_identifier(attr) || !is_identifier(value))
          syntax_error(lineNo, "bad attr=value in form header");
        if (entry.bundle.count(attr)) syntax_error(lineNo, "duplicate attribute in form header");
        entry.bundle[attr] = value;
      }
      for (const std::string& form : split_trim(line.substr(colon + 1), ',')) {
        if (form.empty()) syntax_error(lineNo, "empty surface form");
        entry.forms.push_back(form);
      }
      if (entry.forms.empty()) syntax_error(lineNo, "form line lists no surface forms");
      g.lexicon.entries.push_back(std::move(entry));
    } else if (line.rfind("glue ", 0) == 0) {
      std::size_t colon = line.find(':');
      if (colon == std::string::npos) syntax_error(lineNo, "expected 'glue slot: words'");
      GlueDef def;
      def.slot = trim(line.substr(5, colon - 5));
      if (!is_identifier(def.slot)) syntax_error(lineNo, "glue slot is not an identifier");
      for (const std::string& word : split_trim(line.substr(colon + 1), ',')) {
        if (word.empty()) syntax_error(lineNo, "empty glue word");
        def.words.push_back(word);
      }
      if (def.words.empty()) syntax_error(lineNo, "glue line lists no words");
      g.lexicon.glue.push_back(std::move(def));
    } else if (line.rfind("coordinator:", 0) == 0) {
      g.lexicon.coordinator = trim(line.substr(12));
      if (g.lexicon.coordinator.empty()) syntax_error(lineNo, "coordinator missing");
    } else if (line.rfind("contraction:", 0) == 0) {
      std::string rest = trim(line.substr(12));
      std::size_t arrow = rest.find("->");
      std::size_t plus = rest.find('+');
      if (arrow == std::string::npos || plus == std::string::npos || plus > arrow)
        syntax_error(lineNo, "expected 'contraction: glue + det -> result'");
      ContractionRule rule;
      rule.glue = trim(rest.substr(0, plus));
      rule.determiner = trim(rest.substr(plus + 1, arrow - plus - 1));
      rule.replacement = trim(rest.substr(arrow + 2));
      if (rule.glue.empty() || rule.determiner.empty() || rule.replacement.empty())
        syntax_error(lineNo, "expected 'contraction: glue + det -> result'");
      g.lexicon.contractions.push_back(std::move(rule));
    } else {
      syntax_error(lineNo, "lexicon line must start with form, glue, coordinator or contraction");
    }
  }
};

void check_no_separator(const std::string& s, const std::string& what) {
  if (s != trim(s) || s.empty())
    throw BlmError(ErrorCode::SyntaxError, what + " must be nonempty without outer whitespace: '" + s + "'");
  if (s.find(',') != std::string::npos || s.find('\n') != std::string::npos ||
      s.find('#') != std::string::npos)
    throw BlmError(ErrorCode::SyntaxError, what + " contains a reserved character: '" + s + "'");
}

}  // namespace

const std::vector<std::string>* Lexicon::find_forms(const std::string& category,
                                                    const Bundle& bundle) const {
  for (const LexiconEntry& e : entries) {
    if (e.category == category && e.bundle == bundle) return &e.forms;
  }
  return nullptr;
}

const std::vector<std::string>& Lexicon::forms_for(const std::string& category,
                                                   const Bundle& bundle) const {
  const std::vector<std::string>* forms = find_forms(category, bundle);
  if (!forms)
    throw BlmError(ErrorCode::MissingEntry,
                   "no lexicon entry for category '" + category + "' bundle {" +
                       bundle_to_string(bundle) + "}");
  return *forms;
}

const std::vector<std::string>* Lexicon::find_glue(const std::string& slot) const {
  for (const GlueDef& def : glue) {
    if (def.slot == slot) return &def.words;
  }
  return nullptr;
}

const AttributeDef* PhenomenonGrammar::find_attribute(const std::string& name) const {
  for (const AttributeDef& a : attributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

const ObjectDef* PhenomenonGrammar::find_object(const std::string& name) const {
  for (const ObjectDef& o : objects) {
    if (o.name == name) return &o;
  }
  return nullptr;
}

const ObjectDef* PhenomenonGrammar::countable_object() const {
  for (const ObjectDef& o : objects) {
    if (o.optionality == Optionality::Countable) return &o;
  }
  return nullptr;
}

std::vector<Bundle> legal_bundles(const PhenomenonGrammar& g, const ObjectDef& obj) {
  std::vector<Bundle> out{Bundle{}};
  for (const std::string& attrName : obj.attributes) {
    const AttributeDef* attr = g.find_attribute(attrName);
    if (!attr) unknown_symbol("object '" + obj.name + "' references undeclared attribute '" + attrName + "'");
    std::vector<Bundle> next;
    next.reserve(out.size() * attr->values.size());
    for (const Bundle& base : out) {
      for (const std::string& value : attr->values) {
        Bundle b = base;
        b[attrName] = value;
        next.push_back(std::move(b));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::string occurrence_display_name(const std::string& objectName, int occurrence) {
  if (occurrence <= 1) return objectName;
  std::size_t pos = objectName.size();
  while (pos > 0 && std::isdigit(static_cast<unsigned char>(objectName[pos - 1]))) --pos;
  if (pos == objectName.size()) return objectName + "#" + std::to_string(occurrence);
  long base = std::stol(objectName.substr(pos));
  return objectName.substr(0, pos) + std::to_string(base + occurrence - 1);
}

std::string bundle_to_string(const Bundle& bundle) {
  std::string out;
  for (const auto& [attr, value] : bundle) {
    if (!out.empty()) out += " ";
    out += attr + "=" + value;
  }
  return out;
}

void validate_grammar(const PhenomenonGrammar& g) {
  if (g.id.empty()) throw BlmError(ErrorCode::SyntaxError, "phenomenon id missing");

  std::set<std::string> attrNames;
  for (const AttributeDef& a : g.attributes) {
    if (!attrNames.insert(a.name).second)
      throw BlmError(ErrorCode::SyntaxError, "duplicate attribute '" + a.name + "'");
    if (a.values.empty())
      throw BlmError(ErrorCode::SyntaxError, "attribute '" + a.name + "' has no values");
    std::set<std::string> vals(a.values.begin(), a.values.end());
    if (vals.size() != a.values.size())
      throw BlmError(ErrorCode::SyntaxError, "attribute '" + a.name + "' repeats a value");
    if (a.kind == AttributeKind::Ordinal && a.values.size() < 2)
      throw BlmError(ErrorCode::SyntaxError, "ordinal attribute '" + a.name + "' needs >= 2 values");
    for (const std::string& v : a.values) check_no_separator(v, "attribute value");
  }

  std::set<std::string> objNames;
  int countables = 0;
  for (const ObjectDef& o : g.objects) {
    if (!objNames.insert(o.name).second)
      throw BlmError(ErrorCode::SyntaxError, "duplicate object '" + o.name + "'");
    for (const std::string& attr : o.attributes) {
      if (!attrNames.count(attr))
        unknown_symbol("object '" + o.name + "' references undeclared attribute '" + attr + "'");
    }
    if (o.optionality == Optionality::Countable) {
      ++countables;
      if (o.maxCount < 1)
        throw BlmError(ErrorCode::SyntaxError, "countable object '" + o.name + "' needs max >= 1");
    }
  }
  if (countables > 1)
    throw BlmError(ErrorCode::SyntaxError, "at most one object may be countable");

  auto check_rules = [&](const std::vector<GrammarRule>& rules, const char* cls) {
    for (const GrammarRule& r : rules) {
      if (r.participants.empty())
        throw BlmError(ErrorCode::SyntaxError, std::string(cls) + " rule has no participants");
      for (const RuleParticipant& p : r.participants) {
        const ObjectDef* obj = g.find_object(p.object);
        if (!obj) unknown_symbol(std::string(cls) + " rule references undeclared object '" + p.object + "'");
        if (std::find(obj->attributes.begin(), obj->attributes.end(), p.attribute) ==
            obj->attributes.end())
          unknown_symbol(std::string(cls) + " rule references attribute '" + p.attribute +
                         "' not declared on object '" + p.object + "'");
      }
      if (r.operation == RuleOperation::Match) {
        if (r.participants.size() < 2)
          throw BlmError(ErrorCode::SyntaxError, "match rule needs >= 2 participants");
        for (const RuleParticipant& p : r.participants) {
          if (p.attribute != r.participants.front().attribute)
            throw BlmError(ErrorCode::SyntaxError, "match rule participants must share one attribute");
        }
      }
    }
  };
  check_rules(g.rulesE, "E");
  check_rules(g.rulesI, "I");

  std::set<std::string> categories;
  for (const ObjectDef& o : g.objects) categories.insert(o.category);
  std::set<std::pair<std::string, std::string>> seenEntries;
  for (const LexiconEntry& e : g.lexicon.entries) {
    if (!categories.count(e.category))
      unknown_symbol("lexicon entry references unused category '" + e.category + "'");
    for (const auto& [attr, value] : e.bundle) {
      const AttributeDef* def = g.find_attribute(attr);
      if (!def) unknown_symbol("lexicon entry references undeclared attribute '" + attr + "'");
      if (std::find(def->values.begin(), def->values.end(), value) == def->values.end())
        unknown_symbol("lexicon entry uses undeclared value '" + value + "' for attribute '" + attr + "'");
    }
    if (!seenEntries.insert({e.category, bundle_to_string(e.bundle)}).second)
      throw BlmError(ErrorCode::SyntaxError, "duplicate lexicon entry for category '" + e.category +
                                                 "' bundle {" + bundle_to_string(e.bundle) + "}");
    if (e.forms.empty())
      throw BlmError(ErrorCode::SyntaxError, "lexicon entry for category '" + e.category + "' lists no forms");
    for (const std::string& form : e.forms) check_no_separator(form, "surface form");
  }

  std::set<std::string> slotNames;
  for (const ObjectDef& o : g.objects) {
    int occurrences = o.optionality == Optionality::Countable ? o.maxCount : 1;
    for (int k = 1; k <= occurrences; ++k) slotNames.insert(occurrence_display_name(o.name, k));
  }
  std::set<std::string> seenSlots;
  for (const GlueDef& def : g.lexicon.glue) {
    if (!slotNames.count(def.slot))
      unknown_symbol("glue slot '" + def.slot + "' matches no object occurrence");
    if (!seenSlots.insert(def.slot).second)
      throw BlmError(ErrorCode::SyntaxError, "duplicate glue slot '" + def.slot + "'");
    for (const std::string& word : def.words) check_no_separator(word, "glue word");
  }
  if (!g.lexicon.coordinator.empty()) check_no_separator(g.lexicon.coordinator, "coordinator");
  for (const ContractionRule& c : g.lexicon.contractions) {
    check_no_separator(c.glue, "contraction glue");
    check_no_separator(c.determiner, "contraction determiner");
    check_no_separator(c.replacement, "contraction replacement");
  }

  if (g.rulesE.empty()) throw BlmError(ErrorCode::EmptyRuleSet, "grammar declares no E rule");

  for (const ObjectDef& o : g.objects) {
    for (const Bundle& bundle : legal_bundles(g, o)) {
      const std::vector<std::string>* forms = g.lexicon.find_forms(o.category, bundle);
      if (!forms || forms->empty())
        throw BlmError(ErrorCode::IncompleteLexicon,
                       "object '" + o.name + "' has no surface form for category '" + o.category +
                           "' bundle {" + bundle_to_string(bundle) + "}");
    }
  }
}

PhenomenonGrammar parse_phenomenon(const std::string& source) {
  LineParser parser;
  std::istringstream in(source);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) parser.feed(line, ++lineNo);
  validate_grammar(parser.g);
  return std::move(parser.g);
}

PhenomenonGrammar parse_phenomenon_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BlmError(ErrorCode::ConfigError, "cannot open phenomenon file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_phenomenon(buf.str());
}

std::string serialize_phenomenon(const PhenomenonGrammar& g) {
  std::ostringstream out;
  out << "phenomenon: " << g.id << "\n\n";

  out << "attributes:\n";
  for (const AttributeDef& a : g.attributes) {
    out << "  " << a.name << ": "
        << (a.kind == AttributeKind::Categorical ? "categorical" : "ordinal") << " [";
    for (std::size_t i = 0; i < a.values.size(); ++i)
      out << (i ? ", " : "") << a.values[i];
    out << "]\n";
  }

  out << "\nobjects:\n";
  for (const ObjectDef& o : g.objects) {
    out << "  " << o.name << ": " << o.category;
    if (!o.attributes.empty()) {
      out << " [";
      for (std::size_t i = 0; i < o.attributes.size(); ++i)
        out << (i ? ", " : "") << o.attributes[i];
      out << "]";
    }
    if (o.optionality == Optionality::Countable) out << " countable max=" << o.maxCount;
    out << "\n";
  }

  auto emit_rules = [&out](const std::vector<GrammarRule>& rules, const char* header) {
    out << "\n" << header << "\n";
    for (const GrammarRule& r : rules) {
      const char* op = r.operation == RuleOperation::Match    ? "match"
                       : r.operation == RuleOperation::Become ? "become"
                                                              : "change";
      out << "  " << op << "(";
      for (std::size_t i = 0; i < r.participants.size(); ++i)
        out << (i ? ", " : "") << r.participants[i].object << "." << r.participants[i].attribute;
      out << ")";
      if (!r.tag.empty()) out << " tag=" << r.tag;
      if (!r.description.empty()) out << " :: " << r.description;
      out << "\n";
    }
  };
  emit_rules(g.rulesE, "rules-E:");
  emit_rules(g.rulesI, "rules-I:");

  out << "\nlexicon:\n";
  for (const LexiconEntry& e : g.lexicon.entries) {
    out << "  form " << e.category;
    for (const auto& [attr, value] : e.bundle) out << " " << attr << "=" << value;
    out << ": ";
    for (std::size_t i = 0; i < e.forms.size(); ++i) out << (i ? ", " : "") << e.forms[i];
    out << "\n";
  }
  for (const GlueDef& def : g.lexicon.glue) {
    out << "  glue " << def.slot << ": ";
    for (std::size_t i = 0; i < def.words.size(); ++i) out << (i ? ", " : "") << def.words[i];
    out << "\n";
  }
  if (!g.lexicon.coordinator.empty()) out << "  coordinator: " << g.lexicon.coordinator << "\n";
  for (const ContractionRule& c : g.lexicon.contractions)
    out << "  contraction: " << c.glue << " + " << c.determiner << " -> " << c.replacement << "\n";

  return out.str();
}

}  // namespace blm
