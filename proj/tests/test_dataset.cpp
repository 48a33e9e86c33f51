#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "blm/dataset.hpp"
#include "blm/errors.hpp"
#include "blm/generate.hpp"
#include "blm/validate.hpp"

namespace {

blm::GenerationConfig agreement_config(int count, std::uint64_t seed) {
  blm::GenerationConfig cfg;
  cfg.phenomenonPath = FIXTURES_DIR "/agreement_fr.blm";
  cfg.operators = {"alternation(NP1, period=1)", "alternation(NP2, period=2)",
                   "progression(count, start=1, step=1, block=4)"};
  cfg.count = count;
  cfg.seed = seed;
  return cfg;
}

std::string temp_path(const std::string& name) {
  return std::string(BUILD_DIR "/") + name;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
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

TEST_CASE("generated datasets carry verified instances with aligned answers") {
  blm::DatasetFile ds = blm::generate_dataset(agreement_config(3, 42));
  CHECK(ds.phenomenonId == "agreement-fr");
  CHECK(!ds.stripped);
  REQUIRE(ds.instances.size() == 3);

  for (int i = 0; i < 3; ++i) {
    const blm::BlmInstance& inst = ds.instances[i];
    CHECK(inst.id == blm::instance_id("agreement-fr", i));
    CHECK(inst.context.size() == 7);
    REQUIRE(inst.options.size() == 6);
    REQUIRE(inst.answers.has_value());
    CHECK(inst.answers->labels.size() == 6);
    CHECK(inst.answers->correctIndex >= 0);
    CHECK(inst.answers->labels[inst.answers->correctIndex].kind == blm::ViolationKind::Correct);
  }
  CHECK(ds.instances[0].seed != ds.instances[1].seed);

  blm::GenerationStats stats = blm::dataset_stats(ds);
  CHECK(stats.instances == 3);
  CHECK(stats.verified == 3);
  CHECK(stats.labelCounts.at("correct") == 3);
  CHECK(stats.labelCounts.at("wrong-structure") == 3);
  CHECK(stats.labelCounts.at("violation-r") == 3);
  CHECK(stats.labelCounts.at("violation-e") == 3);
  CHECK(stats.labelCounts.at("violation-i") == 6);
  CHECK(blm::format_stats(stats) ==
        "3 instances, 3 verified unique; options: correct=3 violation-e=3 violation-i=6 "
        "violation-r=3 wrong-structure=3");
}

TEST_CASE("instance ids are zero padded") {
  CHECK(blm::instance_id("agreement-fr", 0) == "agreement-fr-000000");
  CHECK(blm::instance_id("agreement-fr", 41) == "agreement-fr-000041");
  CHECK(blm::instance_id("x", 999999) == "x-999999");
}

TEST_CASE("datasets survive a save and load round trip") {
  blm::DatasetFile ds = blm::generate_dataset(agreement_config(2, 7));
  const std::string path = temp_path("roundtrip.json");
  blm::save_dataset(ds, path);
  blm::DatasetFile back = blm::load_dataset(path);
  CHECK(back == ds);
  CHECK(back.config == ds.config);
  CHECK(blm::dataset_grammar(back) ==
        blm::parse_phenomenon_file(FIXTURES_DIR "/agreement_fr.blm"));
  std::remove(path.c_str());
}

TEST_CASE("generation is deterministic and prefix stable") {
  blm::DatasetFile a = blm::generate_dataset(agreement_config(5, 99));
  blm::DatasetFile b = blm::generate_dataset(agreement_config(5, 99));
  CHECK(blm::dataset_to_json(a).dump(2) == blm::dataset_to_json(b).dump(2));

  blm::DatasetFile shorter = blm::generate_dataset(agreement_config(4, 99));
  for (int i = 0; i < 4; ++i) CHECK(shorter.instances[i] == a.instances[i]);

  blm::DatasetFile reseeded = blm::generate_dataset(agreement_config(5, 100));
  CHECK(reseeded.instances[0].context[0].surface != a.instances[0].context[0].surface);
}

TEST_CASE("an empty dataset is still a valid file") {
  blm::DatasetFile ds = blm::generate_dataset(agreement_config(0, 1));
  CHECK(ds.instances.empty());
  const std::string path = temp_path("empty.json");
  blm::save_dataset(ds, path);
  blm::DatasetFile back = blm::load_dataset(path);
  CHECK(back == ds);
  CHECK(blm::validate_dataset(back).pass());
  std::remove(path.c_str());
}

TEST_CASE("a fresh dataset passes every validation check") {
  blm::DatasetFile ds = blm::generate_dataset(agreement_config(2, 5));
  blm::ValidationReport report = blm::validate_dataset(ds);
  CHECK(report.pass());
  std::vector<std::string> ran;
  for (const blm::CheckResult& r : report.results) ran.push_back(r.check);
  for (const char* check :
       {"grammar", "schema", "token-length", "surface-distinct", "context-faithful",
        "option-faithful", "e-consistency", "labels", "single-solution", "augmentation"})
    CHECK(std::count(ran.begin(), ran.end(), check) == 1);
}

TEST_CASE("stripping removes every answer bearing field") {
  blm::DatasetFile ds = blm::generate_dataset(agreement_config(2, 13));
  blm::DatasetFile stripped = blm::strip_answers(ds);
  CHECK(stripped.stripped);
  for (const blm::BlmInstance& inst : stripped.instances) {
    CHECK(!inst.answers.has_value());
    for (const blm::RealizedItem& item : inst.context) CHECK(item.choices.empty());
    for (const blm::RealizedItem& item : inst.options) CHECK(item.abstract.cells.empty());
  }

  const std::string dump = blm::dataset_to_json(stripped).dump(2);
  for (const char* needle : {"correctIndex", "labels", "abstract", "choices", "answers", "kind"})
    CHECK(dump.find(needle) == std::string::npos);

  const std::string path = temp_path("stripped.json");
  blm::save_dataset(stripped, path);
  blm::DatasetFile back = blm::load_dataset(path);
  CHECK(back == stripped);
  CHECK(blm::validate_dataset(back).pass());
  std::remove(path.c_str());

  // Surfaces are identical to the unstripped export, so evaluation results
  // transfer back verbatim.
  for (std::size_t i = 0; i < ds.instances.size(); ++i)
    for (std::size_t k = 0; k < ds.instances[i].options.size(); ++k)
      CHECK(stripped.instances[i].options[k].surface == ds.instances[i].options[k].surface);
}

TEST_CASE("shared lexicalization pins noun lemmas across rows") {
  blm::GenerationConfig cfg = agreement_config(2, 21);
  cfg.sharedLexicalization = true;
  blm::DatasetFile ds = blm::generate_dataset(cfg);
  for (const blm::BlmInstance& inst : ds.instances) {
    const int np1Entry = inst.context[0].choices[0].entryIndex;
    for (const blm::RealizedItem& item : inst.context) CHECK(item.choices[0].entryIndex == np1Entry);
    for (const blm::RealizedItem& item : inst.options) CHECK(item.choices[0].entryIndex == np1Entry);
  }
  CHECK(blm::validate_dataset(ds).pass());
}

TEST_CASE("matched lexicalization reuses the correct option's choices") {
  blm::GenerationConfig cfg = agreement_config(2, 23);
  cfg.matchedLexicalization = true;
  blm::DatasetFile ds = blm::generate_dataset(cfg);
  for (const blm::BlmInstance& inst : ds.instances) {
    const blm::RealizedItem& correct = inst.options[inst.answers->correctIndex];
    for (std::size_t i = 0; i < inst.options.size(); ++i) {
      const blm::RealizedItem& option = inst.options[i];
      CHECK(option.choices[0].entryIndex == correct.choices[0].entryIndex);
    }
  }
  CHECK(blm::validate_dataset(ds).pass());
}

TEST_CASE("custom compositions flow through config into answers") {
  blm::GenerationConfig cfg = agreement_config(1, 3);
  cfg.composition = {"correct", "violation-e", "violation-i"};
  blm::DatasetFile ds = blm::generate_dataset(cfg);
  REQUIRE(ds.instances[0].options.size() == 3);
  blm::GenerationStats stats = blm::dataset_stats(ds);
  CHECK(stats.labelCounts.at("correct") == 1);
  CHECK(stats.labelCounts.at("violation-e") == 1);
  CHECK(stats.labelCounts.at("violation-i") == 1);

  cfg.composition = {"correct", "no-such-kind"};
  CHECK(code_of([&] { blm::generate_dataset(cfg); }) == blm::ErrorCode::ConfigError);
}

TEST_CASE("generation failures name the failing instance and seed") {
  blm::GenerationConfig cfg = agreement_config(1, 3);
  cfg.shape.l = 3;
  try {
    blm::generate_dataset(cfg);
    FAIL("expected a BlmError");
  } catch (const blm::BlmError& e) {
    CHECK(e.code() == blm::ErrorCode::LengthExceeded);
    CHECK(std::string(e.what()).find("agreement-fr-000000 (seed ") != std::string::npos);
  }
}

TEST_CASE("loading rejects malformed dataset files") {
  CHECK(code_of([] { blm::load_dataset(BUILD_DIR "/no-such-file.json"); }) ==
        blm::ErrorCode::ConfigError);

  const std::string path = temp_path("malformed.json");
  auto write = [&](const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
  };

  write("{not json");
  CHECK(code_of([&] { blm::load_dataset(path); }) == blm::ErrorCode::SchemaError);

  blm::DatasetFile ds = blm::generate_dataset(agreement_config(1, 2));
  nlohmann::json good = blm::dataset_to_json(ds);

  nlohmann::json bad = good;
  bad["format"] = "not-a-dataset";
  write(bad.dump());
  CHECK(code_of([&] { blm::load_dataset(path); }) == blm::ErrorCode::SchemaError);

  bad = good;
  bad["version"] = 99;
  write(bad.dump());
  CHECK(code_of([&] { blm::load_dataset(path); }) == blm::ErrorCode::SchemaError);

  bad = good;
  bad["instances"][0].erase("seed");
  write(bad.dump());
  CHECK(code_of([&] { blm::load_dataset(path); }) == blm::ErrorCode::SchemaError);

  bad = good;
  bad["instances"][0]["answers"]["labels"][0]["kind"] = "nonsense";
  write(bad.dump());
  CHECK(code_of([&] { blm::load_dataset(path); }) == blm::ErrorCode::SchemaError);

  std::remove(path.c_str());
}

TEST_CASE("abstract rows round trip through json") {
  blm::PhenomenonGrammar g = blm::parse_phenomenon_file(FIXTURES_DIR "/agreement_fr.blm");
  blm::TemplateMatrix t = blm::build_template(
      g, blm::Shape{8, 20},
      blm::parse_operator_specs(g, {"alternation(NP1, period=1)", "alternation(NP2, period=2)",
                                    "progression(count, start=1, step=1, block=4)"}));
  for (const blm::TemplateRow& row : t.rows)
    CHECK(blm::row_from_json(blm::row_to_json(row)) == row);

  blm::TemplateRow coordinated = t.rows[7];
  coordinated.structure = blm::RowStructure::Coordination;
  CHECK(blm::row_from_json(blm::row_to_json(coordinated)).structure ==
        blm::RowStructure::Coordination);
}

TEST_CASE("the committed demo dataset still validates and solves") {
  blm::DatasetFile ds = blm::load_dataset(DATA_DIR "/agreement_fr_demo.json");
  REQUIRE(ds.instances.size() == 6);
  blm::ValidationReport report = blm::validate_dataset(ds);
  CHECK_MESSAGE(report.pass(), blm::format_report(report));
  int augmented = 0;
  for (const blm::BlmInstance& inst : ds.instances)
    if (inst.augmentation) ++augmented;
  CHECK(augmented == 3);
}
