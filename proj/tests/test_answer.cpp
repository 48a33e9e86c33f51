#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <string>
#include <vector>

#include "blm/answer_set.hpp"
#include "blm/errors.hpp"
#include "blm/grammar.hpp"
#include "blm/realize.hpp"
#include "blm/rng.hpp"
#include "blm/template_matrix.hpp"

namespace {

blm::PhenomenonGrammar agreement_fr() {
  return blm::parse_phenomenon_file(FIXTURES_DIR "/agreement_fr.blm");
}

blm::TemplateMatrix agreement_template(const blm::PhenomenonGrammar& g) {
  return blm::build_template(g, blm::Shape{8, 20},
                             blm::parse_operator_specs(g, {"alternation(NP1, period=1)",
                                                           "alternation(NP2, period=2)",
                                                           "progression(count, start=1, step=1, block=4)"}));
}

blm::TemplateRow make_row(std::vector<std::tuple<std::string, int, std::string>> cells,
                          blm::RowStructure structure = blm::RowStructure::Plain) {
  blm::TemplateRow row;
  for (auto& [object, occurrence, number] : cells)
    row.cells.push_back({object, occurrence, {{"number", number}}});
  row.structure = structure;
  return row;
}

const blm::AnswerOption& find_option(const blm::AnswerSet& s, blm::ViolationKind kind,
                                     const std::string& detail = "") {
  for (const blm::AnswerOption& o : s.options)
    if (o.label.kind == kind && (detail.empty() || o.label.detail == detail)) return o;
  FAIL("no option labeled ", blm::violation_kind_name(kind), " ", detail);
  return s.options.front();
}

int cell_diffs(const blm::TemplateRow& a, const blm::TemplateRow& b) {
  int diffs = 0;
  for (const blm::TemplateCell& cell : a.cells) {
    const blm::TemplateCell* other = nullptr;
    for (const blm::TemplateCell& c : b.cells)
      if (c.object == cell.object && c.occurrence == cell.occurrence) other = &c;
    if (!other || other->values != cell.values) ++diffs;
  }
  for (const blm::TemplateCell& cell : b.cells) {
    bool found = false;
    for (const blm::TemplateCell& c : a.cells)
      if (c.object == cell.object && c.occurrence == cell.occurrence) found = true;
    if (!found) ++diffs;
  }
  return diffs;
}

template <typename Fn>
blm::ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const blm::BlmError& e) {
    return e.code();
  }
  FAIL("expected a BlmError");
  return blm::ErrorCode::ConfigError;
}

}  // namespace

TEST_CASE("violation kind names round-trip") {
  for (blm::ViolationKind kind :
       {blm::ViolationKind::Correct, blm::ViolationKind::ViolationE, blm::ViolationKind::ViolationI,
        blm::ViolationKind::ViolationR, blm::ViolationKind::WrongStructure})
    CHECK(blm::violation_kind_from(blm::violation_kind_name(kind)) == kind);
  CHECK(code_of([] { blm::violation_kind_from("violation-x"); }) == blm::ErrorCode::SchemaError);
}

TEST_CASE("the default composition yields the six expected abstracts") {
  blm::PhenomenonGrammar g = agreement_fr();
  blm::TemplateMatrix t = agreement_template(g);
  blm::TemplateRow correct = make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"NP2", 2, "s"}, {"V", 1, "p"}});
  REQUIRE(t.rows.back() == correct);

  blm::AnswerSet set = blm::build_answer_set(g, t, 77);
  REQUIRE(set.options.size() == 6);
  CHECK(set.options[set.correctIndex].label.kind == blm::ViolationKind::Correct);

  CHECK(find_option(set, blm::ViolationKind::Correct).item.abstract == correct);
  CHECK(find_option(set, blm::ViolationKind::WrongStructure).item.abstract ==
        make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"NP2", 2, "s"}, {"V", 1, "p"}},
                 blm::RowStructure::Coordination));
  CHECK(find_option(set, blm::ViolationKind::ViolationR).item.abstract ==
        make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"V", 1, "p"}}));
  CHECK(find_option(set, blm::ViolationKind::ViolationE).item.abstract ==
        make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"NP2", 2, "s"}, {"V", 1, "s"}}));
  CHECK(find_option(set, blm::ViolationKind::ViolationI, "NP2.number").item.abstract ==
        make_row({{"NP1", 1, "p"}, {"NP2", 1, "s"}, {"NP2", 2, "s"}, {"V", 1, "p"}}));
  CHECK(find_option(set, blm::ViolationKind::ViolationI, "NP3.number").item.abstract ==
        make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"NP2", 2, "p"}, {"V", 1, "p"}}));
  CHECK(find_option(set, blm::ViolationKind::ViolationE).label.detail == "V.number");
  CHECK(find_option(set, blm::ViolationKind::ViolationR).label.detail == "count");
  CHECK(find_option(set, blm::ViolationKind::WrongStructure).label.detail == "coordination");

  std::set<std::string> surfaces;
  int correctLabels = 0;
  for (const blm::AnswerOption& o : set.options) {
    CHECK(surfaces.insert(o.item.surface).second);
    CHECK(o.item.tokenLength <= 20);
    CHECK(o.item.surface.back() == '.');
    if (o.label.kind == blm::ViolationKind::Correct) ++correctLabels;
    CHECK(blm::classify_option(g, correct, o.item.abstract) == o.label);
    CHECK(blm::recover_abstract(g, o.item.surface) == o.item.abstract);
  }
  CHECK(correctLabels == 1);
}

TEST_CASE("answer sets are deterministic and shuffled by seed") {
  blm::PhenomenonGrammar g = agreement_fr();
  blm::TemplateMatrix t = agreement_template(g);

  blm::AnswerSet a = blm::build_answer_set(g, t, 5);
  blm::AnswerSet b = blm::build_answer_set(g, t, 5);
  CHECK(a == b);

  std::set<int> correctPositions;
  for (std::uint64_t seed = 0; seed < 40; ++seed)
    correctPositions.insert(blm::build_answer_set(g, t, seed).correctIndex);
  CHECK(correctPositions.size() > 1);

  blm::AnswerConfig singleton;
  singleton.composition = {blm::ViolationKind::Correct};
  blm::AnswerSet solo = blm::build_answer_set(g, t, 5, singleton);
  CHECK(solo.options.size() == 1);
  CHECK(solo.correctIndex == 0);
}

TEST_CASE("every perturbation differs in exactly one declared respect") {
  blm::PhenomenonGrammar g = agreement_fr();
  blm::TemplateMatrix t = agreement_template(g);
  const blm::TemplateRow& correct = t.rows.back();

  blm::Perturbation coord = blm::make_perturbation(g, correct, blm::ViolationKind::WrongStructure);
  CHECK(cell_diffs(correct, coord.row) == 0);
  CHECK(coord.row.structure == blm::RowStructure::Coordination);

  for (auto [kind, ordinal] : std::vector<std::pair<blm::ViolationKind, int>>{
           {blm::ViolationKind::ViolationR, 1},
           {blm::ViolationKind::ViolationE, 1},
           {blm::ViolationKind::ViolationI, 1},
           {blm::ViolationKind::ViolationI, 2}}) {
    blm::Perturbation p = blm::make_perturbation(g, correct, kind, ordinal);
    CAPTURE(p.label.detail);
    CHECK(cell_diffs(correct, p.row) == 1);
    CHECK(p.row.structure == blm::RowStructure::Plain);
  }
}

TEST_CASE("classification applies a fixed precedence order") {
  blm::PhenomenonGrammar g = agreement_fr();
  blm::TemplateRow correct =
      make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"NP2", 2, "s"}, {"V", 1, "p"}});

  blm::TemplateRow coordAndFlip =
      make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"NP2", 2, "s"}, {"V", 1, "s"}},
               blm::RowStructure::Coordination);
  CHECK(blm::classify_option(g, correct, coordAndFlip).kind == blm::ViolationKind::WrongStructure);

  blm::TemplateRow flipAndDrop = make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"V", 1, "s"}});
  CHECK(blm::classify_option(g, correct, flipAndDrop).kind == blm::ViolationKind::ViolationE);

  blm::TemplateRow dropOnly = make_row({{"NP1", 1, "p"}, {"NP2", 1, "p"}, {"V", 1, "p"}});
  CHECK(blm::classify_option(g, correct, dropOnly).kind == blm::ViolationKind::ViolationR);

  CHECK(blm::classify_option(g, correct, correct) ==
        blm::ViolationLabel{blm::ViolationKind::Correct, ""});
}

TEST_CASE("rows without countable occurrences are not perturbable") {
  blm::PhenomenonGrammar g = agreement_fr();
  blm::TemplateMatrix t =
      blm::build_template(g, blm::Shape{4, 20},
                          blm::parse_operator_specs(g, {"alternation(NP1, period=1)"}));
  const blm::TemplateRow& correct = t.rows.back();

  for (blm::ViolationKind kind : {blm::ViolationKind::WrongStructure, blm::ViolationKind::ViolationR,
                                  blm::ViolationKind::ViolationI})
    CHECK(code_of([&] { blm::make_perturbation(g, correct, kind); }) ==
          blm::ErrorCode::NotPerturbable);

  CHECK(code_of([&] { blm::build_answer_set(g, t, 1); }) == blm::ErrorCode::NotPerturbable);

  blm::SplitMix64 rng(1);
  blm::AnswerOption e = blm::make_violation(g, t, blm::ViolationKind::ViolationE, rng);
  CHECK(e.label.detail == "V.number");
}

TEST_CASE("compositions must contain exactly one correct option") {
  blm::PhenomenonGrammar g = agreement_fr();
  blm::TemplateMatrix t = agreement_template(g);

  blm::AnswerConfig none;
  none.composition = {blm::ViolationKind::ViolationE};
  CHECK(code_of([&] { blm::build_answer_set(g, t, 1, none); }) == blm::ErrorCode::ConfigError);

  blm::AnswerConfig two;
  two.composition = {blm::ViolationKind::Correct, blm::ViolationKind::Correct};
  CHECK(code_of([&] { blm::build_answer_set(g, t, 1, two); }) == blm::ErrorCode::ConfigError);
}

TEST_CASE("colliding option surfaces are rejected after retries") {
  const std::string src =
      "phenomenon: toy\n"
      "attributes:\n"
      "  number: categorical [s, p]\n"
      "objects:\n"
      "  S: np [number]\n"
      "  N: np [number] countable max=1\n"
      "  V: vp [number]\n"
      "rules-E:\n"
      "  match(S.number, V.number)\n"
      "lexicon:\n"
      "  form np number=s: the sheep\n"
      "  form np number=p: the sheep\n"
      "  form vp number=s: grazes\n"
      "  form vp number=p: graze\n"
      "  glue N: near\n";
  blm::PhenomenonGrammar g = blm::parse_phenomenon(src);

  blm::TemplateMatrix t;
  t.shape = {2, 20};
  t.rows.push_back(make_row({{"S", 1, "s"}, {"V", 1, "s"}}));
  t.rows.push_back(make_row({{"S", 1, "s"}, {"N", 1, "s"}, {"V", 1, "s"}}));

  blm::AnswerConfig cfg;
  cfg.composition = {blm::ViolationKind::Correct, blm::ViolationKind::ViolationI};
  cfg.retryBound = 8;
  CHECK(code_of([&] { blm::build_answer_set(g, t, 3, cfg); }) ==
        blm::ErrorCode::DuplicateSurface);
}

TEST_CASE("matched lexicalization reuses the correct option's draws") {
  blm::PhenomenonGrammar g = agreement_fr();
  blm::TemplateMatrix t = agreement_template(g);
  blm::AnswerConfig cfg;
  cfg.matchedLexicalization = true;

  blm::AnswerSet set = blm::build_answer_set(g, t, 11, cfg);
  const blm::AnswerOption& correct = find_option(set, blm::ViolationKind::Correct);
  for (const blm::AnswerOption& o : set.options) {
    for (std::size_t i = 0; i < o.item.abstract.cells.size(); ++i) {
      const blm::TemplateCell& cell = o.item.abstract.cells[i];
      for (std::size_t j = 0; j < correct.item.abstract.cells.size(); ++j) {
        const blm::TemplateCell& base = correct.item.abstract.cells[j];
        if (base.object == cell.object && base.occurrence == cell.occurrence) {
          CHECK(o.item.choices[i].entryIndex == correct.item.choices[j].entryIndex);
          CHECK(o.item.choices[i].glueIndex == correct.item.choices[j].glueIndex);
        }
      }
    }
  }

  blm::AnswerSet again = blm::build_answer_set(g, t, 11, cfg);
  CHECK(set == again);
}
