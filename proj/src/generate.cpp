#include "blm/generate.hpp"

#include <sstream>
#include <utility>

#include "blm/errors.hpp"
#include "blm/rng.hpp"
#include "blm/solver.hpp"

namespace blm {

namespace {

AnswerConfig answer_config(const GenerationConfig& cfg) {
  AnswerConfig acfg;
  if (!cfg.composition.empty()) {
    acfg.composition.clear();
    for (const std::string& name : cfg.composition) {
      try {
        acfg.composition.push_back(violation_kind_from(name));
      } catch (const BlmError&) {
        throw BlmError(ErrorCode::ConfigError, "unknown violation kind in composition: " + name);
      }
    }
  }
  acfg.matchedLexicalization = cfg.matchedLexicalization;
  return acfg;
}

}  // namespace

DatasetFile generate_dataset(const GenerationConfig& cfg) {
  if (cfg.count < 0)
    throw BlmError(ErrorCode::ConfigError, "instance count must be non-negative");
  PhenomenonGrammar g = parse_phenomenon_file(cfg.phenomenonPath);
  TemplateMatrix t = build_template(g, cfg.shape, parse_operator_specs(g, cfg.operators));
  const AnswerConfig acfg = answer_config(cfg);
  const RealizeOptions ropts{cfg.sharedLexicalization, 64};
  const std::vector<TemplateRow> contextRows(t.rows.begin(), t.rows.end() - 1);

  DatasetFile ds;
  ds.phenomenonId = g.id;
  ds.phenomenonSource = serialize_phenomenon(g);
  ds.config = cfg;

  for (int i = 0; i < cfg.count; ++i) {
    const std::uint64_t instanceSeed = mix_seed(cfg.seed, static_cast<std::uint64_t>(i));
    SharedLexicalization draws;
    const SharedLexicalization* shared = nullptr;
    if (ropts.sharedLexicalization) {
      draws = make_shared_draws(g, mix_seed(instanceSeed, 2));
      shared = &draws;
    }

    BlmInstance inst;
    inst.id = instance_id(g.id, i);
    inst.seed = instanceSeed;
    try {
      ContextSequence ctx = realize_context(g, t, mix_seed(instanceSeed, 0), ropts, shared);
      AnswerSet set = build_answer_set(g, t, mix_seed(instanceSeed, 1), acfg, ropts, shared);

      std::vector<TemplateRow> optionRows;
      InstanceAnswers answers;
      answers.correctIndex = set.correctIndex;
      for (AnswerOption& option : set.options) {
        optionRows.push_back(option.item.abstract);
        answers.labels.push_back(option.label);
        inst.options.push_back(std::move(option.item));
      }
      VerifyResult check = verify_unique(g, contextRows, optionRows, set.correctIndex);
      if (!check.pass) throw BlmError(ErrorCode::VerificationFailed, check.reason);

      inst.context = std::move(ctx.items);
      inst.answers = std::move(answers);
    } catch (const BlmError& e) {
      throw BlmError(e.code(), inst.id + " (seed " + std::to_string(instanceSeed) + "): " + e.what());
    }
    ds.instances.push_back(std::move(inst));
  }
  return ds;
}

GenerationStats dataset_stats(const DatasetFile& ds) {
  GenerationStats stats;
  stats.instances = static_cast<int>(ds.instances.size());
  for (const BlmInstance& inst : ds.instances) {
    if (!inst.answers) continue;
    ++stats.verified;
    for (const ViolationLabel& label : inst.answers->labels)
      ++stats.labelCounts[violation_kind_name(label.kind)];
  }
  return stats;
}

std::string format_stats(const GenerationStats& stats) {
  std::ostringstream out;
  out << stats.instances << " instance" << (stats.instances == 1 ? "" : "s") << ", "
      << stats.verified << " verified unique";
  if (!stats.labelCounts.empty()) {
    out << "; options:";
    for (const auto& [kind, count] : stats.labelCounts) out << " " << kind << "=" << count;
  }
  return out.str();
}

}  // namespace blm
