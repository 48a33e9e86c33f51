#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "blm/augment.hpp"
#include "blm/dataset.hpp"
#include "blm/generate.hpp"
#include "blm/grammar.hpp"
#include "blm/realize.hpp"
#include "blm/template_matrix.hpp"

namespace blmtest {

// One single-field corruption of a serialized dataset together with the
// validation check expected to reject it.
struct Mutation {
  std::string name;
  std::string expect;
  std::function<void(nlohmann::json&)> apply;
};

// Two base instances, each followed by one augmentation.
inline blm::DatasetFile mutation_fixture() {
  blm::GenerationConfig cfg;
  cfg.phenomenonPath = FIXTURES_DIR "/agreement_fr.blm";
  cfg.operators = {"alternation(NP1, period=1)", "alternation(NP2, period=2)",
                   "progression(count, start=1, step=1, block=4)"};
  cfg.count = 2;
  cfg.seed = 99;
  blm::DatasetFile ds = blm::generate_dataset(cfg);
  blm::PhenomenonGrammar g = blm::dataset_grammar(ds);
  blm::StubScorer scorer = blm::StubScorer::from_file(FIXTURES_DIR "/stub_scores_fr.tsv", &g);
  blm::AugmentOptions opts;
  opts.seed = 5;
  return blm::augment_dataset(ds, scorer, opts);
}

inline std::vector<Mutation> dataset_mutations(const blm::DatasetFile& ds) {
  using nlohmann::json;
  blm::PhenomenonGrammar g = blm::dataset_grammar(ds);

  auto correct_of = [](const json& j) {
    return j["instances"][0]["answers"]["correctIndex"].get<int>();
  };
  auto wrong_of = [correct_of](const json& j) { return (correct_of(j) + 1) % 6; };
  auto cell_index = [](const json& item, const std::string& object) {
    const json& cells = item["abstract"]["cells"];
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i]["object"] == object) return static_cast<int>(i);
    return -1;
  };
  auto replace_first_word = [](json& item) {
    std::string surface = item["surface"].get<std::string>();
    std::size_t space = surface.find(' ');
    item["surface"] = "Zzz" + (space == std::string::npos ? "" : surface.substr(space));
  };

  // A second faithful realization of instance 0's correct option, every
  // lexical choice shifted by one entry.
  const blm::BlmInstance& base = ds.instances[0];
  const blm::RealizedItem& correctItem = base.options[base.answers->correctIndex];
  json twin;
  {
    std::vector<blm::CellChoice> shifted = correctItem.choices;
    for (std::size_t i = 0; i < shifted.size(); ++i) {
      const blm::TemplateCell& cell = correctItem.abstract.cells[i];
      const blm::ObjectDef* obj = g.find_object(cell.object);
      const std::vector<std::string>& forms = g.lexicon.forms_for(obj->category, cell.values);
      shifted[i].entryIndex = (shifted[i].entryIndex + 1) % static_cast<int>(forms.size());
    }
    auto [surface, tokens] = blm::render_surface(g, correctItem.abstract, shifted);
    json choices = json::array();
    for (const blm::CellChoice& c : shifted) choices.push_back({{"entry", c.entryIndex}, {"glue", c.glueIndex}});
    twin = {{"abstract", blm::row_to_json(correctItem.abstract)},
            {"choices", choices},
            {"surface", surface},
            {"tokens", tokens}};
  }

  std::vector<Mutation> out;
  auto add = [&out](std::string name, std::string expect, std::function<void(json&)> apply) {
    out.push_back({std::move(name), std::move(expect), std::move(apply)});
  };

  add("label-kind-flip", "labels", [correct_of](json& j) {
    j["instances"][0]["answers"]["labels"][correct_of(j)]["kind"] = "violation-e";
  });
  add("label-detail-edit", "labels", [wrong_of](json& j) {
    j["instances"][0]["answers"]["labels"][wrong_of(j)]["detail"] = "bogus";
  });
  add("correct-index-shift", "labels", [wrong_of](json& j) {
    j["instances"][0]["answers"]["correctIndex"] = wrong_of(j);
  });
  add("correct-index-range", "labels", [](json& j) {
    j["instances"][0]["answers"]["correctIndex"] = 17;
  });
  add("duplicate-correct-abstract", "single-solution", [twin, wrong_of](json& j) {
    j["instances"][0]["options"][wrong_of(j)] = twin;
  });
  add("context-surface-edit", "context-faithful", [replace_first_word](json& j) {
    replace_first_word(j["instances"][0]["context"][0]);
  });
  add("context-abstract-flip", "e-consistency", [](json& j) {
    json& values = j["instances"][0]["context"][0]["abstract"]["cells"][0]["values"];
    values["number"] = values["number"] == "s" ? "p" : "s";
  });
  add("option-surface-edit", "option-faithful", [replace_first_word, wrong_of](json& j) {
    replace_first_word(j["instances"][0]["options"][wrong_of(j)]);
  });
  add("cell-removal", "context-faithful", [](json& j) {
    json& cells = j["instances"][0]["context"][4]["abstract"]["cells"];
    cells.erase(2);
  });
  add("cell-addition", "context-faithful", [](json& j) {
    json& cells = j["instances"][0]["context"][0]["abstract"]["cells"];
    json extra = cells[1];
    extra["occurrence"] = 3;
    cells.push_back(extra);
  });
  add("tokens-off-by-one", "token-length", [](json& j) {
    json& tokens = j["instances"][0]["context"][0]["tokens"];
    tokens = tokens.get<int>() + 1;
  });
  add("labels-shuffle", "labels", [](json& j) {
    json& labels = j["instances"][0]["answers"]["labels"];
    json front = labels[0];
    labels.erase(0);
    labels.push_back(front);
  });
  add("labels-truncate", "labels", [](json& j) {
    json& labels = j["instances"][0]["answers"]["labels"];
    labels.erase(labels.size() - 1);
  });
  add("duplicate-instance-id", "schema", [](json& j) {
    j["instances"][2]["id"] = j["instances"][0]["id"];
  });
  add("structure-flip", "option-faithful", [](json& j) {
    json& inst = j["instances"][0];
    for (std::size_t i = 0; i < inst["options"].size(); ++i) {
      if (inst["answers"]["labels"][i]["kind"] == "wrong-structure") {
        inst["options"][i]["abstract"]["structure"] = "plain";
        return;
      }
    }
  });
  add("v-number-flip", "e-consistency", [correct_of, cell_index](json& j) {
    json& option = j["instances"][0]["options"][correct_of(j)];
    json& values = option["abstract"]["cells"][cell_index(option, "V")]["values"];
    values["number"] = values["number"] == "s" ? "p" : "s";
  });
  add("phenomenon-source-corruption", "grammar", [](json& j) {
    j["phenomenon"]["source"] = "phenomenon: broken\n";
  });
  add("context-item-deletion", "schema", [](json& j) {
    json& context = j["instances"][0]["context"];
    context.erase(context.size() - 1);
  });
  add("augment-rank-overflow", "augmentation", [](json& j) {
    json& rec = j["instances"][1]["augmentation"];
    rec["candidates"][rec["applied"].get<int>()]["rank"] = 99;
  });
  add("augment-score-drift", "augmentation", [](json& j) {
    json& rec = j["instances"][1]["augmentation"];
    json& cand = rec["candidates"][rec["applied"].get<int>()];
    cand["sentenceScore"] = cand["baseScore"].get<double>() + rec["epsilon"].get<double>() + 5.0;
  });

  return out;
}

}  // namespace blmtest
