#include "blm/validate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "blm/errors.hpp"
#include "blm/solver.hpp"

namespace blm {

namespace {

int count_tokens(const std::string& s) {
  std::istringstream in(s);
  std::string token;
  int n = 0;
  while (in >> token) ++n;
  return n;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool well_formed_id(const std::string& id, const std::string& phenomenonId) {
  if (id.size() <= phenomenonId.size() || id.compare(0, phenomenonId.size(), phenomenonId) != 0)
    return false;
  std::string rest = id.substr(phenomenonId.size());
  if (rest.size() < 7 || rest[0] != '-') return false;
  std::string index = rest.substr(1, 6);
  if (!all_digits(index)) return false;
  std::string tail = rest.substr(7);
  if (tail.empty()) return true;
  return tail.size() == 7 && tail.compare(0, 4, "-aug") == 0 && all_digits(tail.substr(4));
}

// A row satisfies an E match rule when all values its participants expose
// agree. Distractor rows are exempt; they are checked against their labels.
std::string e_conflict(const PhenomenonGrammar& g, const TemplateRow& row) {
  for (const GrammarRule& rule : g.rulesE) {
    if (rule.operation != RuleOperation::Match) continue;
    std::set<std::string> values;
    for (const RuleParticipant& p : rule.participants)
      for (const TemplateCell& cell : row.cells)
        if (cell.object == p.object && cell.values.count(p.attribute))
          values.insert(cell.values.at(p.attribute));
    if (values.size() > 1) {
      std::string detail;
      for (const RuleParticipant& p : rule.participants)
        detail += (detail.empty() ? "" : ", ") + p.object + "." + p.attribute;
      return "match(" + detail + ") broken";
    }
  }
  return "";
}

class Checker {
 public:
  explicit Checker(const DatasetFile& ds) : ds_(ds) {}

  ValidationReport run() {
    check_grammar();
    check_schema();
    check_token_length();
    check_surface_distinct();
    if (!ds_.stripped && grammarOk_) {
      check_faithful("context-faithful", &BlmInstance::context);
      check_faithful("option-faithful", &BlmInstance::options);
      check_e_consistency();
      check_labels();
      check_single_solution();
      check_augmentation();
    }
    return report_;
  }

 private:
  void fail(const std::string& check, const std::string& instance, const std::string& message) {
    report_.results.push_back({check, instance, false, message});
    ++failures_[check];
  }

  void done(const std::string& check) {
    if (!failures_.count(check)) report_.results.push_back({check, "", true, ""});
  }

  void check_grammar() {
    try {
      grammar_ = dataset_grammar(ds_);
      grammarOk_ = true;
    } catch (const BlmError& e) {
      fail("grammar", "", e.what());
    }
    done("grammar");
  }

  void check_schema() {
    std::set<std::string> seen;
    const std::size_t contextSize = static_cast<std::size_t>(ds_.config.shape.n) - 1;
    for (const BlmInstance& inst : ds_.instances) {
      if (!well_formed_id(inst.id, ds_.phenomenonId))
        fail("schema", inst.id, "malformed instance id");
      if (!seen.insert(inst.id).second) fail("schema", inst.id, "duplicate instance id");
      if (inst.context.size() != contextSize)
        fail("schema", inst.id,
             "expected " + std::to_string(contextSize) + " context items, found " +
                 std::to_string(inst.context.size()));
      if (inst.options.empty()) fail("schema", inst.id, "no options");
    }
    done("schema");
  }

  void check_token_length() {
    for (const BlmInstance& inst : ds_.instances) {
      auto within = [&](const RealizedItem& item, const std::string& what) {
        const int actual = count_tokens(item.surface);
        if (item.tokenLength != actual)
          fail("token-length", inst.id,
               what + " declares " + std::to_string(item.tokenLength) + " tokens but has " +
                   std::to_string(actual));
        else if (actual > ds_.config.shape.l)
          fail("token-length", inst.id,
               what + " exceeds the length budget: " + std::to_string(actual) + " > " +
                   std::to_string(ds_.config.shape.l));
      };
      for (std::size_t i = 0; i < inst.context.size(); ++i)
        within(inst.context[i], "context item " + std::to_string(i));
      for (std::size_t i = 0; i < inst.options.size(); ++i)
        within(inst.options[i], "option " + std::to_string(i));
    }
    done("token-length");
  }

  void check_surface_distinct() {
    for (const BlmInstance& inst : ds_.instances) {
      std::set<std::string> surfaces;
      for (const RealizedItem& option : inst.options)
        if (!surfaces.insert(option.surface).second)
          fail("surface-distinct", inst.id, "duplicate option surface: " + option.surface);
    }
    done("surface-distinct");
  }

  void check_faithful(const std::string& check, std::vector<RealizedItem> BlmInstance::* items) {
    for (const BlmInstance& inst : ds_.instances) {
      const std::vector<RealizedItem>& list = inst.*items;
      for (std::size_t i = 0; i < list.size(); ++i) {
        const RealizedItem& item = list[i];
        const std::string what = "item " + std::to_string(i);
        try {
          auto [surface, tokens] = render_surface(grammar_, item.abstract, item.choices);
          if (surface != item.surface)
            fail(check, inst.id, what + " does not render its stored surface");
          else if (tokens != item.tokenLength)
            fail(check, inst.id, what + " renders a different token count");
          else if (recover_abstract(grammar_, item.surface) != item.abstract)
            fail(check, inst.id, what + " surface parses to a different abstract row");
        } catch (const BlmError& e) {
          fail(check, inst.id, what + ": " + e.what());
        }
      }
    }
    done(check);
  }

  void check_e_consistency() {
    for (const BlmInstance& inst : ds_.instances) {
      for (std::size_t i = 0; i < inst.context.size(); ++i) {
        std::string conflict = e_conflict(grammar_, inst.context[i].abstract);
        if (!conflict.empty())
          fail("e-consistency", inst.id, "context item " + std::to_string(i) + ": " + conflict);
      }
      if (inst.answers && inst.answers->correctIndex >= 0 &&
          inst.answers->correctIndex < static_cast<int>(inst.options.size())) {
        std::string conflict =
            e_conflict(grammar_, inst.options[inst.answers->correctIndex].abstract);
        if (!conflict.empty()) fail("e-consistency", inst.id, "correct option: " + conflict);
      }
    }
    done("e-consistency");
  }

  void check_labels() {
    for (const BlmInstance& inst : ds_.instances) {
      if (!inst.answers) {
        fail("labels", inst.id, "missing answers section");
        continue;
      }
      const InstanceAnswers& a = *inst.answers;
      if (a.labels.size() != inst.options.size()) {
        fail("labels", inst.id, "labels do not align with options");
        continue;
      }
      if (a.correctIndex < 0 || a.correctIndex >= static_cast<int>(inst.options.size())) {
        fail("labels", inst.id, "correctIndex out of range");
        continue;
      }
      int correctCount = 0;
      for (const ViolationLabel& label : a.labels)
        if (label.kind == ViolationKind::Correct) ++correctCount;
      if (correctCount != 1) {
        fail("labels", inst.id, std::to_string(correctCount) + " options labeled correct");
        continue;
      }
      if (a.labels[a.correctIndex].kind != ViolationKind::Correct) {
        fail("labels", inst.id, "correctIndex does not point at the correct label");
        continue;
      }
      const TemplateRow& correct = inst.options[a.correctIndex].abstract;
      for (std::size_t i = 0; i < inst.options.size(); ++i) {
        try {
          ViolationLabel derived = classify_option(grammar_, correct, inst.options[i].abstract);
          if (!(derived == a.labels[i]))
            fail("labels", inst.id,
                 "option " + std::to_string(i) + " reclassifies as " +
                     violation_kind_name(derived.kind) +
                     (derived.detail.empty() ? "" : " (" + derived.detail + ")"));
        } catch (const BlmError& e) {
          fail("labels", inst.id, "option " + std::to_string(i) + ": " + e.what());
        }
      }
    }
    done("labels");
  }

  void check_single_solution() {
    for (const BlmInstance& inst : ds_.instances) {
      if (!inst.answers) continue;
      std::vector<TemplateRow> context, options;
      for (const RealizedItem& item : inst.context) context.push_back(item.abstract);
      for (const RealizedItem& item : inst.options) options.push_back(item.abstract);
      VerifyResult check = verify_unique(grammar_, context, options, inst.answers->correctIndex);
      if (!check.pass) fail("single-solution", inst.id, check.reason);
    }
    done("single-solution");
  }

  void check_augmentation() {
    for (const BlmInstance& inst : ds_.instances) {
      if (!inst.augmentation) continue;
      const AugmentationRecord& rec = *inst.augmentation;
      const BlmInstance* base = nullptr;
      for (const BlmInstance& other : ds_.instances)
        if (other.id == rec.base) base = &other;
      if (!base) {
        fail("augmentation", inst.id, "base instance '" + rec.base + "' is not in the dataset");
        continue;
      }
      if (rec.review != "pending" && rec.review != "approved")
        fail("augmentation", inst.id, "unknown review status '" + rec.review + "'");
      for (std::size_t i = 0; i < rec.candidates.size(); ++i) {
        const SubstitutionRecord& c = rec.candidates[i];
        const std::string what = "candidate " + std::to_string(i);
        if (c.accepted) {
          if (!c.reason.empty()) fail("augmentation", inst.id, what + " accepted with a reason");
          if (c.rank < 1 || c.rank > rec.window)
            fail("augmentation", inst.id, what + " accepted outside the rank window");
          if (!(std::fabs(c.sentenceScore - c.baseScore) <= rec.epsilon))
            fail("augmentation", inst.id, what + " accepted outside the score bound");
        } else if (c.reason.empty()) {
          fail("augmentation", inst.id, what + " rejected without a reason");
        }
      }
      if (rec.applied < 0 || rec.applied >= static_cast<int>(rec.candidates.size())) {
        fail("augmentation", inst.id, "applied does not index a candidate");
        continue;
      }
      const SubstitutionRecord& applied = rec.candidates[rec.applied];
      if (!applied.accepted) fail("augmentation", inst.id, "applied candidate was rejected");
      if (applied.item < 0 || applied.item >= static_cast<int>(inst.context.size())) {
        fail("augmentation", inst.id, "applied candidate targets a missing context item");
        continue;
      }
      if (inst.context.size() != base->context.size() || inst.options != base->options) {
        fail("augmentation", inst.id, "does not share the base instance's shape");
        continue;
      }
      for (std::size_t i = 0; i < inst.context.size(); ++i) {
        const bool slot = static_cast<int>(i) == applied.item;
        if (!slot && !(inst.context[i] == base->context[i]))
          fail("augmentation", inst.id,
               "context item " + std::to_string(i) + " drifted from the base instance");
        if (row_to_json(inst.context[i].abstract).dump() !=
            row_to_json(base->context[i].abstract).dump())
          fail("augmentation", inst.id,
               "abstract row " + std::to_string(i) + " differs from the base instance");
      }
      const TemplateRow& row = inst.context[applied.item].abstract;
      const TemplateCell* cell = row.find_cell(applied.object, applied.occurrence);
      const ObjectDef* obj = grammar_.find_object(applied.object);
      if (!cell || !obj) {
        fail("augmentation", inst.id, "applied slot is not a cell of its row");
        continue;
      }
      const std::vector<std::string>* forms = grammar_.lexicon.find_forms(obj->category, cell->values);
      if (!forms || std::find(forms->begin(), forms->end(), applied.surface) == forms->end())
        fail("augmentation", inst.id, "applied surface does not preserve the slot's bundle");
    }
    done("augmentation");
  }

  const DatasetFile& ds_;
  PhenomenonGrammar grammar_;
  bool grammarOk_ = false;
  ValidationReport report_;
  std::map<std::string, int> failures_;
};

}  // namespace

bool ValidationReport::pass() const {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass; });
}

std::vector<CheckResult> ValidationReport::failures() const {
  std::vector<CheckResult> out;
  for (const CheckResult& r : results)
    if (!r.pass) out.push_back(r);
  return out;
}

ValidationReport validate_dataset(const DatasetFile& ds) { return Checker(ds).run(); }

std::string format_report(const ValidationReport& report) {
  std::ostringstream out;
  for (const CheckResult& r : report.results) {
    if (r.pass) {
      out << "ok " << r.check << "\n";
    } else {
      out << "FAIL " << r.check;
      if (!r.instance.empty()) out << " [" << r.instance << "]";
      out << ": " << r.message << "\n";
    }
  }
  return out.str();
}

}  // namespace blm
