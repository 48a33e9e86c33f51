#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "blm/answer_set.hpp"
#include "blm/augment.hpp"
#include "blm/dataset.hpp"
#include "blm/errors.hpp"
#include "blm/generate.hpp"
#include "blm/realize.hpp"
#include "blm/solver.hpp"
#include "blm/validate.hpp"
#include "blm/version.hpp"

namespace {

int exit_code_for(blm::ErrorCode code) {
  switch (code) {
    case blm::ErrorCode::ProviderUnavailable:
    case blm::ErrorCode::MalformedProviderResponse:
      return 3;
    case blm::ErrorCode::SchemaError:
    case blm::ErrorCode::VerificationFailed:
    case blm::ErrorCode::NoAcceptableCandidates:
      return 2;
    default:
      return 4;
  }
}

double parse_epsilon(const std::string& text) {
  if (text == "inf" || text == "infinity")
    return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return value;
  } catch (const std::exception&) {
    throw blm::BlmError(blm::ErrorCode::ConfigError,
                        "epsilon must be a number or 'inf', got '" + text + "'");
  }
}

std::string percent(int num, int den) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", den == 0 ? 0.0 : 100.0 * num / den);
  return buf;
}

int cmd_generate(const blm::GenerationConfig& cfg, const std::string& out) {
  blm::DatasetFile ds = blm::generate_dataset(cfg);
  blm::save_dataset(ds, out);
  std::cout << blm::format_stats(blm::dataset_stats(ds)) << "\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_validate(const std::string& path) {
  blm::ValidationReport report = blm::validate_dataset(blm::load_dataset(path));
  std::cout << blm::format_report(report);
  return report.pass() ? 0 : 2;
}

int cmd_solve(const std::string& path, bool stripCheck) {
  blm::DatasetFile ds = blm::load_dataset(path);
  blm::PhenomenonGrammar g = blm::dataset_grammar(ds);
  const bool fromSurfaces = stripCheck || ds.stripped;

  int exact = 0;
  int ambiguous = 0;
  int errors = 0;
  int answered = 0;
  int correct = 0;
  std::map<std::string, int> chosenKinds;
  std::map<std::string, int> coConsistentKinds;

  for (const blm::BlmInstance& inst : ds.instances) {
    try {
      std::vector<blm::TemplateRow> context;
      std::vector<blm::TemplateRow> options;
      if (fromSurfaces) {
        for (const blm::RealizedItem& item : inst.context)
          context.push_back(blm::recover_abstract(g, item.surface));
        for (const blm::RealizedItem& item : inst.options)
          options.push_back(blm::recover_abstract(g, item.surface));
      } else {
        for (const blm::RealizedItem& item : inst.context) context.push_back(item.abstract);
        for (const blm::RealizedItem& item : inst.options) options.push_back(item.abstract);
      }
      blm::Solution sol = blm::solve(context, options, g);
      if (sol.confidence == blm::Confidence::Exact) ++exact;
      else ++ambiguous;

      if (inst.answers) {
        ++answered;
        const blm::InstanceAnswers& a = *inst.answers;
        if (sol.chosenIndex >= 0 && sol.chosenIndex < static_cast<int>(a.labels.size()))
          ++chosenKinds[blm::violation_kind_name(a.labels[sol.chosenIndex].kind)];
        if (sol.confidence == blm::Confidence::Exact && sol.chosenIndex == a.correctIndex) {
          ++correct;
        } else {
          std::cout << "instance " << inst.id << ": chose option " << sol.chosenIndex
                    << (sol.confidence == blm::Confidence::Exact ? "" : " (ambiguous)")
                    << ", stored answer is " << a.correctIndex << "\n";
          for (int i : sol.coConsistent)
            if (i != a.correctIndex && i >= 0 && i < static_cast<int>(a.labels.size()))
              ++coConsistentKinds[blm::violation_kind_name(a.labels[i].kind)];
        }
      } else {
        std::cout << "instance " << inst.id << ": option " << sol.chosenIndex << "\n";
      }
    } catch (const blm::BlmError& e) {
      ++errors;
      std::cout << "instance " << inst.id << ": " << e.what() << "\n";
    }
  }

  const int total = static_cast<int>(ds.instances.size());
  std::cout << "solved " << (total - errors) << "/" << total << " instances (" << exact
            << " exact, " << ambiguous << " ambiguous, " << errors << " errors)\n";
  if (answered > 0) {
    std::cout << "accuracy: " << correct << "/" << answered << " (" << percent(correct, answered)
              << "%)\n";
    std::cout << "chosen kinds:";
    for (const auto& [kind, n] : chosenKinds) std::cout << " " << kind << "=" << n;
    std::cout << "\n";
    if (!coConsistentKinds.empty()) {
      std::cout << "co-consistent kinds:";
      for (const auto& [kind, n] : coConsistentKinds) std::cout << " " << kind << "=" << n;
      std::cout << "\n";
    }
    return (correct == answered && errors == 0) ? 0 : 2;
  }
  return errors == 0 ? 0 : 2;
}

int cmd_augment(const std::string& path, const std::string& out, const std::string& providerSpec,
                const blm::AugmentOptions& opts) {
  blm::DatasetFile ds = blm::load_dataset(path);
  blm::PhenomenonGrammar g = blm::dataset_grammar(ds);
  std::unique_ptr<blm::ScoreProvider> provider = blm::make_provider(providerSpec, &g);
  blm::DatasetFile augmented = blm::augment_dataset(ds, *provider, opts);
  blm::save_dataset(augmented, out);
  std::cout << "augmented " << ds.instances.size() << " instances with "
            << (augmented.instances.size() - ds.instances.size())
            << " new instances pending review\n";
  std::cout << "wrote " << out << "\n";
  return 0;
}

blm::DatasetFile subset(const blm::DatasetFile& ds, const std::vector<bool>& keep) {
  blm::DatasetFile out = ds;
  out.instances.clear();
  for (std::size_t i = 0; i < ds.instances.size(); ++i)
    if (keep[i]) out.instances.push_back(ds.instances[i]);
  return out;
}

int cmd_export(const std::string& path, const std::string& out, bool strip, bool splitByLex) {
  blm::DatasetFile ds = blm::load_dataset(path);
  if (!splitByLex) {
    blm::DatasetFile exported = strip ? blm::strip_answers(ds) : ds;
    blm::save_dataset(exported, out);
    std::cout << "wrote " << out << " (" << exported.instances.size() << " instances)\n";
    return 0;
  }

  if (ds.stripped)
    throw blm::BlmError(blm::ErrorCode::ConfigError,
                        "cannot split a stripped dataset by lexicalization");
  std::map<std::string, const blm::BlmInstance*> byId;
  for (const blm::BlmInstance& inst : ds.instances) byId[inst.id] = &inst;
  std::vector<bool> test(ds.instances.size(), false);
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const blm::BlmInstance* root = &ds.instances[i];
    if (root->augmentation) {
      auto it = byId.find(root->augmentation->base);
      if (it == byId.end())
        throw blm::BlmError(blm::ErrorCode::ConfigError,
                            ds.instances[i].id + " references a base outside the dataset");
      root = it->second;
    }
    if (root->context.empty() || root->context[0].choices.empty())
      throw blm::BlmError(blm::ErrorCode::ConfigError,
                          root->id + " carries no lexical choices to split by");
    test[i] = root->context[0].choices[0].entryIndex % 5 == 0;
  }

  std::vector<bool> train = test;
  train.flip();
  blm::DatasetFile trainDs = subset(ds, train);
  blm::DatasetFile testDs = subset(ds, test);
  if (strip) {
    trainDs = blm::strip_answers(trainDs);
    testDs = blm::strip_answers(testDs);
  }
  blm::save_dataset(trainDs, out + ".train.json");
  blm::save_dataset(testDs, out + ".test.json");
  std::cout << "wrote " << out << ".train.json (" << trainDs.instances.size()
            << " instances) and " << out << ".test.json (" << testDs.instances.size()
            << " instances)\n";
  return 0;
}

int cmd_review(const std::string& path, const std::string& out, bool approveAll,
               const std::vector<std::string>& ids) {
  if (!approveAll && ids.empty())
    throw blm::BlmError(blm::ErrorCode::ConfigError,
                        "nothing to do; pass --approve <id> or --approve-all");
  blm::DatasetFile ds = blm::load_dataset(path);
  int changed = blm::approve_reviews(ds, approveAll ? std::vector<std::string>{} : ids);
  const std::string target = out.empty() ? path : out;
  blm::save_dataset(ds, target);
  std::cout << "approved " << changed << " records\n";
  std::cout << "wrote " << target << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blackbird Language Matrices toolchain"};
  app.set_version_flag("--version", std::string(blm::kToolName) + " " + blm::kToolVersion);
  app.require_subcommand(1);

  blm::GenerationConfig cfg;
  std::string genOut;
  CLI::App* generate = app.add_subcommand("generate", "Build a verified dataset from a phenomenon spec");
  generate->add_option("--phenomenon", cfg.phenomenonPath, "Phenomenon .blm file")->required();
  generate->add_option("--out", genOut, "Output dataset path")->required();
  generate->add_option("--count", cfg.count, "Number of instances");
  generate->add_option("--seed", cfg.seed, "Master seed");
  generate->add_option("--shape-n", cfg.shape.n, "Rows per matrix, answer row included");
  generate->add_option("--shape-l", cfg.shape.l, "Token budget per sentence");
  generate->add_option("--operator", cfg.operators, "Generating operator spec, repeatable");
  generate->add_option("--composition", cfg.composition,
                       "Answer-set violation kinds, repeatable");
  generate->add_flag("--shared-lexicalization", cfg.sharedLexicalization,
                     "Reuse one noun-phrase draw across all context rows");
  generate->add_flag("--matched-lexicalization", cfg.matchedLexicalization,
                     "Reuse the correct option's lexical draw across all options");

  std::string validatePath;
  CLI::App* validate = app.add_subcommand("validate", "Re-check every dataset invariant");
  validate->add_option("dataset", validatePath, "Dataset path")->required();

  std::string solvePath;
  bool stripCheck = false;
  CLI::App* solve = app.add_subcommand("solve", "Run the rule-induction solver over a dataset");
  solve->add_option("dataset", solvePath, "Dataset path")->required();
  solve->add_flag("--strip-check", stripCheck,
                  "Ignore stored abstracts and solve from surfaces alone");

  std::string augPath, augOut, providerSpec, epsilonText = "1";
  blm::AugmentOptions augOpts;
  CLI::App* augment = app.add_subcommand("augment", "Derive lexical variants under review");
  augment->add_option("dataset", augPath, "Dataset path")->required();
  augment->add_option("--out", augOut, "Output dataset path")->required();
  augment->add_option("--provider", providerSpec,
                      "Score provider: stub:<table>, cmd:<command>, or url:<endpoint>")
      ->required();
  augment->add_option("--epsilon", epsilonText, "Sentence score tolerance, or 'inf'");
  augment->add_option("--window", augOpts.window, "Candidate rank window");
  augment->add_option("--budget", augOpts.budget, "Augmented instances per base instance");
  augment->add_option("--seed", augOpts.seed, "Slot shuffle seed");

  std::string exportPath, exportOut;
  bool stripAnswers = false;
  bool splitByLex = false;
  CLI::App* exportCmd = app.add_subcommand("export", "Re-emit a dataset for distribution");
  exportCmd->add_option("dataset", exportPath, "Dataset path")->required();
  exportCmd->add_option("--out", exportOut, "Output path, or prefix when splitting")->required();
  exportCmd->add_flag("--strip-answers", stripAnswers,
                      "Drop answers, abstracts, and choices from the export");
  exportCmd->add_flag("--split-by-lexicalization", splitByLex,
                      "Experimental: write .train/.test splits keyed on the first "
                      "noun-phrase draw");

  std::string reviewPath, reviewOut;
  bool approveAll = false;
  std::vector<std::string> approveIds;
  CLI::App* review = app.add_subcommand("review", "Approve pending augmentation records");
  review->add_option("dataset", reviewPath, "Dataset path")->required();
  review->add_option("--approve", approveIds, "Instance id to approve, repeatable");
  review->add_flag("--approve-all", approveAll, "Approve every pending record");
  review->add_option("--out", reviewOut, "Output path (defaults to the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 4;
  }

  try {
    if (generate->parsed()) return cmd_generate(cfg, genOut);
    if (validate->parsed()) return cmd_validate(validatePath);
    if (solve->parsed()) return cmd_solve(solvePath, stripCheck);
    if (augment->parsed()) {
      augOpts.epsilon = parse_epsilon(epsilonText);
      return cmd_augment(augPath, augOut, providerSpec, augOpts);
    }
    if (exportCmd->parsed()) return cmd_export(exportPath, exportOut, stripAnswers, splitByLex);
    if (review->parsed()) return cmd_review(reviewPath, reviewOut, approveAll, approveIds);
  } catch (const blm::BlmError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return 4;
}
