#include "blm/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "blm/errors.hpp"
#include "blm/version.hpp"

namespace blm {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
  throw BlmError(ErrorCode::SchemaError, where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema_fail(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_fail(where, std::string("missing field '") + key + "'");
  return *it;
}

std::string get_string(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_string()) schema_fail(where, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

int get_int(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_integer()) schema_fail(where, std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

std::uint64_t get_seed(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    schema_fail(where, std::string("field '") + key + "' must be an unsigned integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_boolean()) schema_fail(where, std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

const json& get_array(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_array()) schema_fail(where, std::string("field '") + key + "' must be an array");
  return v;
}

std::vector<std::string> get_string_list(const json& j, const char* key, const std::string& where) {
  std::vector<std::string> out;
  for (const json& v : get_array(j, key, where)) {
    if (!v.is_string()) schema_fail(where, std::string("field '") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

json item_to_json(const RealizedItem& item, bool stripped) {
  json j;
  j["surface"] = item.surface;
  j["tokens"] = item.tokenLength;
  if (stripped) return j;
  j["abstract"] = row_to_json(item.abstract);
  json choices = json::array();
  for (const CellChoice& c : item.choices) choices.push_back({{"entry", c.entryIndex}, {"glue", c.glueIndex}});
  j["choices"] = choices;
  return j;
}

RealizedItem item_from_json(const json& j, bool stripped, const std::string& where) {
  RealizedItem item;
  item.surface = get_string(j, "surface", where);
  item.tokenLength = get_int(j, "tokens", where);
  if (stripped) return item;
  item.abstract = row_from_json(field(j, "abstract", where));
  for (const json& c : get_array(j, "choices", where)) {
    CellChoice choice;
    choice.entryIndex = get_int(c, "entry", where + " choice");
    choice.glueIndex = get_int(c, "glue", where + " choice");
    item.choices.push_back(choice);
  }
  return item;
}

json label_to_json(const ViolationLabel& label) {
  return {{"detail", label.detail}, {"kind", violation_kind_name(label.kind)}};
}

ViolationLabel label_from_json(const json& j, const std::string& where) {
  ViolationLabel label;
  label.kind = violation_kind_from(get_string(j, "kind", where));
  label.detail = get_string(j, "detail", where);
  return label;
}

json epsilon_to_json(double epsilon) {
  if (std::isfinite(epsilon)) return epsilon;
  return nullptr;
}

double epsilon_from_json(const json& j, const std::string& where) {
  const json& v = field(j, "epsilon", where);
  if (v.is_null()) return std::numeric_limits<double>::infinity();
  if (!v.is_number()) schema_fail(where, "field 'epsilon' must be a number or null");
  return v.get<double>();
}

json augmentation_to_json(const AugmentationRecord& rec) {
  json candidates = json::array();
  for (const SubstitutionRecord& c : rec.candidates) {
    candidates.push_back({{"accepted", c.accepted},
                          {"baseScore", c.baseScore},
                          {"item", c.item},
                          {"object", c.object},
                          {"occurrence", c.occurrence},
                          {"phraseScore", c.phraseScore},
                          {"rank", c.rank},
                          {"reason", c.reason},
                          {"sentenceScore", c.sentenceScore},
                          {"surface", c.surface}});
  }
  return {{"applied", rec.applied},
          {"base", rec.base},
          {"candidates", candidates},
          {"epsilon", epsilon_to_json(rec.epsilon)},
          {"review", rec.review},
          {"window", rec.window}};
}

AugmentationRecord augmentation_from_json(const json& j, const std::string& where) {
  AugmentationRecord rec;
  rec.base = get_string(j, "base", where);
  rec.review = get_string(j, "review", where);
  if (rec.review != "pending" && rec.review != "approved")
    schema_fail(where, "review must be 'pending' or 'approved'");
  rec.epsilon = epsilon_from_json(j, where);
  rec.window = get_int(j, "window", where);
  rec.applied = get_int(j, "applied", where);
  for (const json& c : get_array(j, "candidates", where)) {
    SubstitutionRecord s;
    const std::string sub = where + " candidate";
    s.item = get_int(c, "item", sub);
    s.object = get_string(c, "object", sub);
    s.occurrence = get_int(c, "occurrence", sub);
    s.surface = get_string(c, "surface", sub);
    s.rank = get_int(c, "rank", sub);
    const json& phrase = field(c, "phraseScore", sub);
    const json& sentence = field(c, "sentenceScore", sub);
    const json& base = field(c, "baseScore", sub);
    if (!phrase.is_number() || !sentence.is_number() || !base.is_number())
      schema_fail(sub, "scores must be numbers");
    s.phraseScore = phrase.get<double>();
    s.sentenceScore = sentence.get<double>();
    s.baseScore = base.get<double>();
    s.accepted = get_bool(c, "accepted", sub);
    s.reason = get_string(c, "reason", sub);
    rec.candidates.push_back(s);
  }
  if (rec.applied < 0 || rec.applied >= static_cast<int>(rec.candidates.size()))
    schema_fail(where, "applied must index a candidate");
  return rec;
}

json config_to_json(const GenerationConfig& cfg) {
  return {{"composition", cfg.composition},
          {"count", cfg.count},
          {"matchedLexicalization", cfg.matchedLexicalization},
          {"operators", cfg.operators},
          {"phenomenon", cfg.phenomenonPath},
          {"seed", cfg.seed},
          {"shape", {{"l", cfg.shape.l}, {"n", cfg.shape.n}}},
          {"sharedLexicalization", cfg.sharedLexicalization}};
}

GenerationConfig config_from_json(const json& j) {
  GenerationConfig cfg;
  const std::string where = "config";
  cfg.composition = get_string_list(j, "composition", where);
  cfg.count = get_int(j, "count", where);
  cfg.matchedLexicalization = get_bool(j, "matchedLexicalization", where);
  cfg.operators = get_string_list(j, "operators", where);
  cfg.phenomenonPath = get_string(j, "phenomenon", where);
  cfg.seed = get_seed(j, "seed", where);
  const json& shape = field(j, "shape", where);
  cfg.shape.l = get_int(shape, "l", "config shape");
  cfg.shape.n = get_int(shape, "n", "config shape");
  cfg.sharedLexicalization = get_bool(j, "sharedLexicalization", where);
  return cfg;
}

json instance_to_json(const BlmInstance& inst, bool stripped) {
  json j;
  j["id"] = inst.id;
  j["seed"] = inst.seed;
  json context = json::array();
  for (const RealizedItem& item : inst.context) context.push_back(item_to_json(item, stripped));
  j["context"] = context;
  json options = json::array();
  for (const RealizedItem& item : inst.options) options.push_back(item_to_json(item, stripped));
  j["options"] = options;
  if (!stripped && inst.answers) {
    json labels = json::array();
    for (const ViolationLabel& label : inst.answers->labels) labels.push_back(label_to_json(label));
    j["answers"] = {{"correctIndex", inst.answers->correctIndex}, {"labels", labels}};
  }
  if (!stripped && inst.augmentation) j["augmentation"] = augmentation_to_json(*inst.augmentation);
  return j;
}

BlmInstance instance_from_json(const json& j, bool stripped) {
  BlmInstance inst;
  inst.id = get_string(j, "id", "instance");
  const std::string where = "instance " + inst.id;
  inst.seed = get_seed(j, "seed", where);
  for (const json& item : get_array(j, "context", where))
    inst.context.push_back(item_from_json(item, stripped, where + " context item"));
  for (const json& item : get_array(j, "options", where))
    inst.options.push_back(item_from_json(item, stripped, where + " option"));
  if (j.contains("answers")) {
    if (stripped) schema_fail(where, "a stripped dataset cannot carry answers");
    const json& answers = field(j, "answers", where);
    InstanceAnswers a;
    a.correctIndex = get_int(answers, "correctIndex", where + " answers");
    for (const json& label : get_array(answers, "labels", where + " answers"))
      a.labels.push_back(label_from_json(label, where + " label"));
    inst.answers = std::move(a);
  }
  if (j.contains("augmentation")) {
    if (stripped) schema_fail(where, "a stripped dataset cannot carry augmentation records");
    inst.augmentation = augmentation_from_json(field(j, "augmentation", where), where + " augmentation");
  }
  return inst;
}

}  // namespace

std::string instance_id(const std::string& phenomenonId, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return phenomenonId + "-" + buf;
}

nlohmann::json dataset_to_json(const DatasetFile& ds) {
  json instances = json::array();
  for (const BlmInstance& inst : ds.instances) instances.push_back(instance_to_json(inst, ds.stripped));
  return {{"config", config_to_json(ds.config)},
          {"format", "blm-dataset"},
          {"instances", instances},
          {"phenomenon", {{"id", ds.phenomenonId}, {"source", ds.phenomenonSource}}},
          {"stripped", ds.stripped},
          {"tool", std::string(kToolName) + " " + kToolVersion},
          {"version", kDatasetFormatVersion}};
}

DatasetFile dataset_from_json(const nlohmann::json& j) {
  const std::string where = "dataset";
  if (get_string(j, "format", where) != "blm-dataset")
    schema_fail(where, "format must be 'blm-dataset'");
  const int version = get_int(j, "version", where);
  if (version != kDatasetFormatVersion)
    schema_fail(where, "unsupported format version " + std::to_string(version));
  DatasetFile ds;
  const json& phenomenon = field(j, "phenomenon", where);
  ds.phenomenonId = get_string(phenomenon, "id", "phenomenon");
  ds.phenomenonSource = get_string(phenomenon, "source", "phenomenon");
  ds.config = config_from_json(field(j, "config", where));
  ds.stripped = get_bool(j, "stripped", where);
  for (const json& inst : get_array(j, "instances", where))
    ds.instances.push_back(instance_from_json(inst, ds.stripped));
  return ds;
}

void save_dataset(const DatasetFile& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw BlmError(ErrorCode::ConfigError, "cannot write dataset file: " + path);
  out << dataset_to_json(ds).dump(2) << "\n";
  if (!out) throw BlmError(ErrorCode::ConfigError, "write failed: " + path);
}

DatasetFile load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BlmError(ErrorCode::ConfigError, "cannot read dataset file: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  json j = json::parse(text.str(), nullptr, false);
  if (j.is_discarded())
    throw BlmError(ErrorCode::SchemaError, "dataset is not valid JSON: " + path);
  return dataset_from_json(j);
}

DatasetFile strip_answers(const DatasetFile& ds) {
  DatasetFile out = ds;
  out.stripped = true;
  for (BlmInstance& inst : out.instances) {
    inst.answers.reset();
    inst.augmentation.reset();
    for (RealizedItem& item : inst.context) {
      item.abstract = {};
      item.choices.clear();
    }
    for (RealizedItem& item : inst.options) {
      item.abstract = {};
      item.choices.clear();
    }
  }
  return out;
}

PhenomenonGrammar dataset_grammar(const DatasetFile& ds) {
  PhenomenonGrammar g = parse_phenomenon(ds.phenomenonSource);
  if (g.id != ds.phenomenonId)
    throw BlmError(ErrorCode::SchemaError, "phenomenon id '" + ds.phenomenonId +
                                               "' does not match its source ('" + g.id + "')");
  return g;
}

}  // namespace blm
