#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "blm/errors.hpp"
#include "blm/grammar.hpp"
#include "blm/rng.hpp"
#include "blm/template_matrix.hpp"

namespace {

blm::PhenomenonGrammar agreement() {
  return blm::parse_phenomenon_file(FIXTURES_DIR "/agreement_fr.blm");
}

std::vector<blm::OperatorSpec> agreement_ops(const blm::PhenomenonGrammar& g) {
  return blm::parse_operator_specs(g, {"alternation(NP1, period=1)",
                                       "alternation(NP2, period=2)",
                                       "progression(count, start=1, step=1, block=4)"});
}

struct CellLit {
  const char* object;
  int occurrence;
  const char* number;
};

blm::TemplateRow make_row(const std::vector<CellLit>& cells) {
  blm::TemplateRow row;
  for (const CellLit& lit : cells) {
    blm::TemplateCell cell;
    cell.object = lit.object;
    cell.occurrence = lit.occurrence;
    cell.values["number"] = lit.number;
    row.cells.push_back(std::move(cell));
  }
  return row;
}

// The eight-row agreement table, written out literally so the builder is
// checked against an independent source.
const std::vector<std::vector<CellLit>> kAgreementTable = {
    {{"NP1", 1, "s"}, {"NP2", 1, "s"}, {"V", 1, "s"}},
    {{"NP1", 1, "p"}, {"NP2", 1, "s"}, {"V", 1, "p"}},
    {{"NP1", 1, "s"}, {"NP2", 1, "p"}, {"V", 1, "s"}},
    {{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"V", 1, "p"}},
    {{"NP1", 1, "s"}, {"NP2", 1, "s"}, {"NP2", 2, "s"}, {"V", 1, "s"}},
    {{"NP1", 1, "p"}, {"NP2", 1, "s"}, {"NP2", 2, "s"}, {"V", 1, "p"}},
    {{"NP1", 1, "s"}, {"NP2", 1, "p"}, {"NP2", 2, "s"}, {"V", 1, "s"}},
    {{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"NP2", 2, "s"}, {"V", 1, "p"}},
};

blm::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const blm::BlmError& e) {
    return e.code();
  }
  FAIL("expected a BlmError");
  return blm::ErrorCode::ConfigError;
}

}  // namespace

TEST_CASE("alternation follows its cycle, period and phase") {
  blm::AlternationSpec period1{"NP1", 1, "number", {"s", "p"}, 1, 0};
  std::string got;
  for (int i = 0; i < 8; ++i) got += blm::value_at(period1, i);
  CHECK(got == "spspspsp");

  blm::AlternationSpec period2{"NP2", 1, "number", {"s", "p"}, 2, 0};
  got.clear();
  for (int i = 0; i < 8; ++i) got += blm::value_at(period2, i);
  CHECK(got == "ssppsspp");

  blm::AlternationSpec constant{"NP2", 2, "number", {"s"}, 3, 0};
  got.clear();
  for (int i = 0; i < 8; ++i) got += blm::value_at(constant, i);
  CHECK(got == "ssssssss");

  blm::AlternationSpec shifted{"NP1", 1, "number", {"s", "p"}, 2, 1};
  got.clear();
  for (int i = 0; i < 8; ++i) got += blm::value_at(shifted, i);
  CHECK(got == "sppsspps");
}

TEST_CASE("count progression steps once per block") {
  blm::PhenomenonGrammar g = agreement();
  blm::ProgressionSpec count{blm::ProgressionTarget::Count, "NP2", 1, "", 1, 1, 4};
  std::vector<int> got;
  for (int i = 0; i < 8; ++i) got.push_back(blm::value_at(g, count, i));
  CHECK(got == std::vector<int>{1, 1, 1, 1, 2, 2, 2, 2});

  blm::ProgressionSpec down{blm::ProgressionTarget::Count, "NP2", 1, "", 2, -1, 4};
  got.clear();
  for (int i = 0; i < 8; ++i) got.push_back(blm::value_at(g, down, i));
  CHECK(got == std::vector<int>{2, 2, 2, 2, 1, 1, 1, 1});

  blm::ProgressionSpec overflow{blm::ProgressionTarget::Count, "NP2", 1, "", 1, 1, 2};
  CHECK(code_of([&] { blm::value_at(g, overflow, 6); }) == blm::ErrorCode::DomainExceeded);
}

TEST_CASE("the shipped agreement config builds the eight-row table exactly") {
  blm::PhenomenonGrammar g = agreement();
  blm::TemplateMatrix t = blm::build_template(g, blm::Shape{8, 20}, agreement_ops(g));

  REQUIRE(t.rows.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CAPTURE(i);
    CHECK(t.rows[i] == make_row(kAgreementTable[i]));
    CHECK(t.rows[i].sourceIndex == static_cast<int>(i));
  }

  const blm::TemplateRow& last = t.rows[7];
  REQUIRE(last.cells.size() == 4);
  CHECK(last.cells[0].values.at("number") == "p");
  CHECK(last.cells[1].values.at("number") == "p");
  CHECK(last.cells[2].values.at("number") == "s");
  CHECK(last.cells[3].values.at("number") == "p");
}

TEST_CASE("each count block enumerates every subject and attractor combination") {
  blm::PhenomenonGrammar g = agreement();
  blm::TemplateMatrix t = blm::build_template(g, blm::Shape{8, 20}, agreement_ops(g));
  for (int block = 0; block < 2; ++block) {
    std::set<std::pair<std::string, std::string>> combos;
    for (int i = block * 4; i < block * 4 + 4; ++i) {
      combos.insert({t.rows[i].find_cell("NP1", 1)->values.at("number"),
                     t.rows[i].find_cell("NP2", 1)->values.at("number")});
    }
    CHECK(combos.size() == 4);
  }
}

TEST_CASE("an empty operator set yields identical default rows") {
  blm::PhenomenonGrammar g = agreement();
  blm::TemplateMatrix t = blm::build_template(g, blm::Shape{5, 20}, {});
  REQUIRE(t.rows.size() == 5);
  for (const blm::TemplateRow& row : t.rows) {
    CHECK(row == t.rows[0]);
    REQUIRE(row.cells.size() == 2);
    CHECK(row.cells[0].object == "NP1");
    CHECK(row.cells[0].values.at("number") == "s");
    CHECK(row.cells[1].object == "V");
    CHECK(row.cells[1].values.at("number") == "s");
  }
}

TEST_CASE("conflicting and inconsistent operators are rejected") {
  blm::PhenomenonGrammar g = agreement();

  CHECK(code_of([&] {
          blm::build_template(g, blm::Shape{8, 20},
                              blm::parse_operator_specs(g, {"alternation(NP1, period=1)",
                                                            "alternation(NP1, period=2)"}));
        }) == blm::ErrorCode::ConflictingOperators);

  CHECK(code_of([&] {
          blm::build_template(g, blm::Shape{8, 20},
                              blm::parse_operator_specs(
                                  g, {"alternation(NP1, period=1, cycle=[s, p])",
                                      "alternation(V, period=1, cycle=[p, s])"}));
        }) == blm::ErrorCode::EConflict);

  CHECK(code_of([&] {
          blm::build_template(g, blm::Shape{12, 20}, agreement_ops(g));
        }) == blm::ErrorCode::DomainExceeded);
}

TEST_CASE("operator spec strings parse, render and reparse") {
  blm::PhenomenonGrammar g = agreement();
  for (const blm::OperatorSpec& op : agreement_ops(g)) {
    CAPTURE(blm::operator_to_string(op));
    CHECK(blm::parse_operator_spec(g, blm::operator_to_string(op)) == op);
  }

  blm::OperatorSpec occ2 = blm::parse_operator_spec(g, "alternation(NP3, period=1)");
  const auto& alt = std::get<blm::AlternationSpec>(occ2);
  CHECK(alt.object == "NP2");
  CHECK(alt.occurrence == 2);
  CHECK(alt.cycle == std::vector<std::string>{"s", "p"});

  CHECK(code_of([&] { blm::parse_operator_spec(g, "xor(NP1, NP2)"); }) ==
        blm::ErrorCode::UnsupportedOperator);
  CHECK(code_of([&] { blm::parse_operator_spec(g, "waltz(NP1)"); }) ==
        blm::ErrorCode::SyntaxError);
  CHECK(code_of([&] { blm::parse_operator_spec(g, "alternation(NP9, period=1)"); }) ==
        blm::ErrorCode::UnknownSymbol);
  blm::OperatorSpec badPhase = blm::parse_operator_spec(g, "alternation(NP1, period=1, phase=9)");
  CHECK(std::get<blm::AlternationSpec>(badPhase).phase == 9);
  CHECK(code_of([&] {
          blm::build_template(g, blm::Shape{8, 20},
                              {blm::parse_operator_spec(g, "alternation(NP1, period=1, phase=9)")});
        }) == blm::ErrorCode::ConfigError);
}

TEST_CASE("matrices serialize to json and back") {
  blm::PhenomenonGrammar g = agreement();
  blm::TemplateMatrix t = blm::build_template(g, blm::Shape{8, 20}, agreement_ops(g));
  nlohmann::json j = blm::matrix_to_json(t);
  CHECK(blm::matrix_from_json(j) == t);
  CHECK(j.dump() == blm::matrix_to_json(t).dump());

  nlohmann::json bad = j;
  bad["rows"][0]["structure"] = "spiral";
  CHECK(code_of([&] { blm::matrix_from_json(bad); }) == blm::ErrorCode::SchemaError);
}

TEST_CASE("sampling keeps row order and provenance") {
  blm::PhenomenonGrammar g = agreement();
  blm::TemplateMatrix t = blm::build_template(g, blm::Shape{8, 20}, agreement_ops(g));
  blm::TemplateMatrix s1 = blm::sample_rows(t, 4, 99);
  blm::TemplateMatrix s2 = blm::sample_rows(t, 4, 99);
  CHECK(s1 == s2);
  REQUIRE(s1.rows.size() == 4);
  int prev = -1;
  for (const blm::TemplateRow& row : s1.rows) {
    CHECK(row.sourceIndex > prev);
    prev = row.sourceIndex;
    CHECK(row == t.rows[row.sourceIndex]);
  }
  CHECK(code_of([&] { blm::sample_rows(t, 1, 7); }) == blm::ErrorCode::ConfigError);
  CHECK(code_of([&] { blm::sample_rows(t, 9, 7); }) == blm::ErrorCode::ConfigError);
}

TEST_CASE("randomized operator sets reproduce closed-form cell values") {
  blm::SplitMix64 rng(0x5eedf00dULL);
  int built = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    CAPTURE(iter);
    blm::PhenomenonGrammar g;
    g.id = "rand";
    blm::AttributeDef a;
    a.name = "a";
    int nVals = 2 + static_cast<int>(rng.below(2));
    for (int v = 0; v < nVals; ++v) a.values.push_back("a" + std::to_string(v));
    g.attributes.push_back(a);
    bool hasB = rng.below(2) == 0;
    if (hasB) {
      blm::AttributeDef b;
      b.name = "b";
      b.kind = blm::AttributeKind::Ordinal;
      b.values = {"b0", "b1", "b2"};
      g.attributes.push_back(b);
    }

    blm::ObjectDef x{"X", "np", {"a"}, blm::Optionality::Required, 1};
    blm::ObjectDef y{"Y", "np", {"a"}, blm::Optionality::Required, 1};
    if (hasB && rng.below(2) == 0) y.attributes.push_back("b");
    bool countable = rng.below(2) == 0;
    if (countable) {
      y.optionality = blm::Optionality::Countable;
      y.maxCount = 2 + static_cast<int>(rng.below(2));
    }
    blm::ObjectDef z{"Z", "vp", {"a"}, blm::Optionality::Required, 1};
    g.objects = {x, y, z};
    g.rulesE.push_back({blm::RuleClass::E,
                        blm::RuleOperation::Match,
                        {{"X", "a"}, {"Z", "a"}},
                        "",
                        ""});
    std::set<std::pair<std::string, std::string>> seen;
    for (const blm::ObjectDef& obj : g.objects) {
      for (const blm::Bundle& bundle : blm::legal_bundles(g, obj)) {
        if (!seen.insert({obj.category, blm::bundle_to_string(bundle)}).second) continue;
        g.lexicon.entries.push_back(
            {obj.category, bundle, {obj.category + " " + blm::bundle_to_string(bundle)}});
      }
    }
    blm::validate_grammar(g);

    int n = 4 + static_cast<int>(rng.below(5));
    auto random_alternation = [&](const std::string& object, int occurrence,
                                  const std::string& attr) {
      const blm::AttributeDef* def = g.find_attribute(attr);
      std::vector<std::string> cycle = def->values;
      for (std::size_t i = cycle.size(); i > 1; --i)
        std::swap(cycle[i - 1], cycle[rng.below(i)]);
      cycle.resize(1 + rng.below(cycle.size()));
      int period = 1 + static_cast<int>(rng.below(4));
      int phase = static_cast<int>(rng.below(static_cast<std::uint64_t>(period) * cycle.size()));
      return blm::AlternationSpec{object, occurrence, attr, cycle, period, phase};
    };

    std::vector<blm::OperatorSpec> ops;
    ops.push_back(random_alternation("X", 1, "a"));
    if (rng.below(2) == 0) ops.push_back(random_alternation("Y", 1, "a"));
    if (countable && rng.below(2) == 0) {
      int block = 1 + static_cast<int>(rng.below(4));
      int start = static_cast<int>(rng.below(y.maxCount + 1));
      int step = static_cast<int>(rng.below(3)) - 1;
      ops.push_back(blm::ProgressionSpec{blm::ProgressionTarget::Count, "Y", 1, "", start, step,
                                         block});
    }
    if (std::find(y.attributes.begin(), y.attributes.end(), "b") != y.attributes.end() &&
        rng.below(2) == 0) {
      int block = 1 + static_cast<int>(rng.below(4));
      ops.push_back(blm::ProgressionSpec{blm::ProgressionTarget::Attribute, "Y", 1, "b",
                                         static_cast<int>(rng.below(3)), rng.below(2) == 0 ? 1 : -1,
                                         block});
    }

    blm::TemplateMatrix t;
    try {
      t = blm::build_template(g, blm::Shape{n, 32}, ops);
    } catch (const blm::BlmError& e) {
      CHECK(e.code() == blm::ErrorCode::DomainExceeded);
      continue;
    }
    ++built;

    CHECK(blm::build_template(g, blm::Shape{n, 32}, ops) == t);

    for (int i = 0; i < n; ++i) {
      const blm::TemplateRow& row = t.rows[i];
      for (const blm::OperatorSpec& op : ops) {
        if (const auto* alt = std::get_if<blm::AlternationSpec>(&op)) {
          const blm::TemplateCell* cell = row.find_cell(alt->object, alt->occurrence);
          if (cell) CHECK(cell->values.at(alt->attribute) == blm::value_at(*alt, i));
        } else {
          const auto& prog = std::get<blm::ProgressionSpec>(op);
          if (prog.target == blm::ProgressionTarget::Count) {
            int occurrences = 0;
            for (const blm::TemplateCell& cell : row.cells)
              if (cell.object == prog.object) ++occurrences;
            CHECK(occurrences == blm::value_at(g, prog, i));
          } else {
            const blm::TemplateCell* cell = row.find_cell(prog.object, prog.occurrence);
            if (cell)
              CHECK(cell->values.at(prog.attribute) ==
                    g.find_attribute(prog.attribute)->values[blm::value_at(g, prog, i)]);
          }
        }
      }
      for (const blm::GrammarRule& rule : g.rulesE) {
        if (rule.operation != blm::RuleOperation::Match) continue;
        std::set<std::string> values;
        for (const blm::RuleParticipant& p : rule.participants) {
          for (const blm::TemplateCell& cell : row.cells)
            if (cell.object == p.object) values.insert(cell.values.at(p.attribute));
        }
        CHECK(values.size() <= 1);
      }
    }
  }
  CHECK(built >= 500);
}
