#include "blm/augment.hpp"

#include <algorithm>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <utility>

#include <sys/wait.h>
#include <unistd.h>

#include "httplib.h"

#include "blm/errors.hpp"
#include "blm/rng.hpp"
#include "blm/solver.hpp"

namespace blm {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string normalize_token(std::string t) {
  const std::string punct = ".,;:!?";
  while (!t.empty() && punct.find(t.back()) != std::string::npos) t.pop_back();
  while (!t.empty() && punct.find(t.front()) != std::string::npos) t.erase(0, 1);
  return uncapitalize_first(t);
}

json request_json(const std::string& sentence, std::size_t begin, std::size_t length, int k) {
  return {{"k", k},
          {"sentence", sentence},
          {"slot", {{"begin", begin}, {"length", length}}}};
}

ProviderReply parse_reply(const std::string& text, const std::string& who) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw BlmError(ErrorCode::MalformedProviderResponse, who + " returned invalid JSON");
  if (!j.is_object() || !j.contains("score") || !j["score"].is_number() ||
      !j.contains("candidates") || !j["candidates"].is_array())
    throw BlmError(ErrorCode::MalformedProviderResponse,
                   who + " reply needs a numeric 'score' and a 'candidates' array");
  ProviderReply reply;
  reply.sentenceScore = j["score"].get<double>();
  for (const json& c : j["candidates"]) {
    if (!c.is_object() || !c.contains("surface") || !c["surface"].is_string() ||
        !c.contains("score") || !c["score"].is_number())
      throw BlmError(ErrorCode::MalformedProviderResponse,
                     who + " candidates need 'surface' and 'score'");
    reply.candidates.push_back({c["surface"].get<std::string>(), c["score"].get<double>()});
  }
  return reply;
}

void ignore_sigpipe() {
  static std::once_flag flag;
  std::call_once(flag, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

StubScorer::StubScorer(const std::string& tableText, const PhenomenonGrammar* grammar)
    : grammar_(grammar) {
  std::istringstream in(tableText);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const std::string where = "score table line " + std::to_string(lineNo);
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos)
      throw BlmError(ErrorCode::ConfigError, where + " has no tab separator");
    std::string surface = trim(line.substr(0, tab));
    std::string scoreText = trim(line.substr(tab + 1));
    if (surface.empty()) throw BlmError(ErrorCode::ConfigError, where + " has an empty surface");
    double score = 0.0;
    try {
      std::size_t used = 0;
      score = std::stod(scoreText, &used);
      if (used != scoreText.size()) throw std::invalid_argument(scoreText);
    } catch (const std::exception&) {
      throw BlmError(ErrorCode::ConfigError, where + " has a malformed score '" + scoreText + "'");
    }
    if (!table_.emplace(surface, score).second)
      throw BlmError(ErrorCode::ConfigError, where + " repeats surface '" + surface + "'");
  }
}

StubScorer StubScorer::from_file(const std::string& path, const PhenomenonGrammar* grammar) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BlmError(ErrorCode::ConfigError, "cannot read score table: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return StubScorer(text.str(), grammar);
}

double StubScorer::sentence_score(const std::string& sentence) const {
  std::istringstream in(sentence);
  std::string token;
  double total = 0.0;
  while (in >> token) {
    auto it = table_.find(normalize_token(token));
    if (it != table_.end()) total += it->second;
  }
  return total;
}

ProviderReply StubScorer::query(const std::string& sentence, std::size_t begin,
                                std::size_t length, int k) {
  ProviderReply reply;
  reply.sentenceScore = sentence_score(sentence);
  if (k <= 0) return reply;

  const std::vector<std::string>* allowed = nullptr;
  if (grammar_ && begin + length <= sentence.size()) {
    std::string slot = sentence.substr(begin, length);
    if (begin == 0) slot = uncapitalize_first(slot);
    auto lookup = [&](const std::string& text) -> const std::vector<std::string>* {
      for (const LexiconEntry& entry : grammar_->lexicon.entries)
        if (std::find(entry.forms.begin(), entry.forms.end(), text) != entry.forms.end())
          return &entry.forms;
      return nullptr;
    };
    allowed = lookup(slot);
    if (!allowed) {
      for (const ContractionRule& rule : grammar_->lexicon.contractions) {
        if (slot == rule.replacement ||
            slot.compare(0, rule.replacement.size() + 1, rule.replacement + " ") == 0) {
          allowed = lookup(rule.determiner + slot.substr(rule.replacement.size()));
          if (allowed) break;
        }
      }
    }
  }

  std::vector<ScoredCandidate> pool;
  for (const auto& [surface, score] : table_) {
    if (allowed && std::find(allowed->begin(), allowed->end(), surface) == allowed->end())
      continue;
    pool.push_back({surface, score});
  }
  std::sort(pool.begin(), pool.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.surface < b.surface;
  });
  if (static_cast<int>(pool.size()) > k) pool.resize(static_cast<std::size_t>(k));
  reply.candidates = std::move(pool);
  return reply;
}

CommandProvider::CommandProvider(const std::string& command) : command_(command) {}

CommandProvider::~CommandProvider() {
  if (in_ >= 0) close(in_);
  if (out_ >= 0) close(out_);
  if (pid_ > 0) waitpid(static_cast<pid_t>(pid_), nullptr, 0);
}

void CommandProvider::spawn() {
  ignore_sigpipe();
  int toChild[2];
  int fromChild[2];
  if (pipe(toChild) != 0)
    throw BlmError(ErrorCode::ProviderUnavailable, "cannot create provider pipes");
  if (pipe(fromChild) != 0) {
    close(toChild[0]);
    close(toChild[1]);
    throw BlmError(ErrorCode::ProviderUnavailable, "cannot create provider pipes");
  }
  pid_t pid = fork();
  if (pid < 0) {
    close(toChild[0]);
    close(toChild[1]);
    close(fromChild[0]);
    close(fromChild[1]);
    throw BlmError(ErrorCode::ProviderUnavailable, "cannot fork provider process");
  }
  if (pid == 0) {
    dup2(toChild[0], 0);
    dup2(fromChild[1], 1);
    close(toChild[0]);
    close(toChild[1]);
    close(fromChild[0]);
    close(fromChild[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(toChild[0]);
  close(fromChild[1]);
  in_ = toChild[1];
  out_ = fromChild[0];
  pid_ = pid;
}

ProviderReply CommandProvider::query(const std::string& sentence, std::size_t begin,
                                     std::size_t length, int k) {
  if (pid_ < 0) spawn();
  const std::string request = request_json(sentence, begin, length, k).dump() + "\n";
  std::size_t sent = 0;
  while (sent < request.size()) {
    ssize_t n = write(in_, request.data() + sent, request.size() - sent);
    if (n <= 0)
      throw BlmError(ErrorCode::ProviderUnavailable, "provider stopped reading requests");
    sent += static_cast<std::size_t>(n);
  }
  std::string line;
  char c = 0;
  for (;;) {
    ssize_t n = read(out_, &c, 1);
    if (n <= 0)
      throw BlmError(ErrorCode::ProviderUnavailable, "provider closed its output");
    if (c == '\n') break;
    line.push_back(c);
  }
  return parse_reply(line, "command provider");
}

HttpProvider::HttpProvider(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos)
    throw BlmError(ErrorCode::ConfigError, "provider url needs a scheme: " + url);
  std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) {
    base_ = url;
    path_ = "/";
  } else {
    base_ = url.substr(0, slash);
    path_ = url.substr(slash);
  }
}

ProviderReply HttpProvider::query(const std::string& sentence, std::size_t begin,
                                  std::size_t length, int k) {
  httplib::Client client(base_);
  client.set_connection_timeout(5);
  client.set_read_timeout(15);
  auto res = client.Post(path_, request_json(sentence, begin, length, k).dump(),
                         "application/json");
  if (!res)
    throw BlmError(ErrorCode::ProviderUnavailable,
                   "no response from " + base_ + path_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw BlmError(ErrorCode::ProviderUnavailable,
                   "provider returned HTTP " + std::to_string(res->status));
  return parse_reply(res->body, "http provider");
}

std::unique_ptr<ScoreProvider> make_provider(const std::string& spec,
                                             const PhenomenonGrammar* grammar) {
  if (spec.rfind("stub:", 0) == 0)
    return std::make_unique<StubScorer>(StubScorer::from_file(spec.substr(5), grammar));
  if (spec.rfind("cmd:", 0) == 0) return std::make_unique<CommandProvider>(spec.substr(4));
  if (spec.rfind("url:", 0) == 0) return std::make_unique<HttpProvider>(spec.substr(4));
  throw BlmError(ErrorCode::ConfigError,
                 "provider spec must start with stub:, cmd:, or url: (got '" + spec + "')");
}

std::vector<SlotRef> np_slots(const PhenomenonGrammar& g, const BlmInstance& inst) {
  std::vector<SlotRef> slots;
  for (std::size_t i = 0; i < inst.context.size(); ++i) {
    const TemplateRow& row = inst.context[i].abstract;
    for (std::size_t c = 0; c < row.cells.size(); ++c) {
      const ObjectDef* obj = g.find_object(row.cells[c].object);
      if (obj && obj->category == "np")
        slots.push_back({static_cast<int>(i), static_cast<int>(c), row.cells[c].object,
                         row.cells[c].occurrence});
    }
  }
  return slots;
}

std::vector<SubstitutionRecord> propose_candidates(const PhenomenonGrammar& g,
                                                   const RealizedItem& item, const SlotRef& slot,
                                                   ScoreProvider& provider, int k) {
  const CellSpan span = cell_spans(g, item.abstract, item.choices).at(slot.cell);
  ProviderReply reply = provider.query(item.surface, span.begin, span.length, k);
  std::vector<SubstitutionRecord> out;
  for (std::size_t i = 0; i < reply.candidates.size(); ++i) {
    SubstitutionRecord r;
    r.item = slot.item;
    r.object = slot.object;
    r.occurrence = slot.occurrence;
    r.surface = reply.candidates[i].surface;
    r.rank = static_cast<int>(i) + 1;
    r.phraseScore = reply.candidates[i].score;
    r.baseScore = reply.sentenceScore;
    out.push_back(std::move(r));
  }
  return out;
}

Acceptance accept_candidate(const PhenomenonGrammar& g, const RealizedItem& base,
                            const SlotRef& slot, SubstitutionRecord cand, ScoreProvider& provider,
                            const AugmentOptions& opts, int maxTokens) {
  Acceptance out;
  out.record = std::move(cand);
  SubstitutionRecord& r = out.record;
  auto reject = [&](const char* reason) -> Acceptance&& {
    r.accepted = false;
    r.reason = reason;
    return std::move(out);
  };

  if (r.rank < 1 || r.rank > opts.window) return reject("rank");

  const TemplateCell& cell = base.abstract.cells.at(static_cast<std::size_t>(slot.cell));
  const ObjectDef* obj = g.find_object(slot.object);
  const std::vector<std::string>* forms =
      obj ? g.lexicon.find_forms(obj->category, cell.values) : nullptr;
  if (!forms) return reject("bundle");
  auto it = std::find(forms->begin(), forms->end(), r.surface);
  if (it == forms->end()) return reject("bundle");

  std::vector<CellChoice> choices = base.choices;
  choices.at(static_cast<std::size_t>(slot.cell)).entryIndex =
      static_cast<int>(it - forms->begin());
  std::string surface;
  int tokens = 0;
  try {
    std::tie(surface, tokens) = render_surface(g, base.abstract, choices);
  } catch (const BlmError&) {
    return reject("render");
  }
  if (tokens > maxTokens) return reject("length");

  const CellSpan span = cell_spans(g, base.abstract, choices).at(slot.cell);
  r.sentenceScore = provider.query(surface, span.begin, span.length, 0).sentenceScore;
  if (!(std::fabs(r.sentenceScore - r.baseScore) <= opts.epsilon)) return reject("epsilon");

  try {
    if (!(recover_abstract(g, surface) == base.abstract)) return reject("reparse");
  } catch (const BlmError&) {
    return reject("reparse");
  }

  r.accepted = true;
  out.item = RealizedItem{std::move(surface), base.abstract, std::move(choices), tokens};
  return out;
}

std::vector<BlmInstance> augment_instance(const PhenomenonGrammar& g, const BlmInstance& inst,
                                          ScoreProvider& provider, const AugmentOptions& opts,
                                          int maxTokens) {
  if (opts.budget < 1) throw BlmError(ErrorCode::ConfigError, "augmentation budget must be >= 1");
  for (const RealizedItem& item : inst.context)
    if (item.choices.size() != item.abstract.cells.size())
      throw BlmError(ErrorCode::ConfigError,
                     "instance " + inst.id + " carries no lexical choices; was it stripped?");

  std::vector<SlotRef> slots = np_slots(g, inst);
  if (slots.empty())
    throw BlmError(ErrorCode::NoAcceptableCandidates,
                   "instance " + inst.id + " has no noun-phrase slots");
  SplitMix64 rng(mix_seed(opts.seed, 1));
  for (std::size_t i = slots.size(); i > 1; --i)
    std::swap(slots[i - 1], slots[rng.below(i)]);

  std::vector<BlmInstance> out;
  for (const SlotRef& slot : slots) {
    const RealizedItem& item = inst.context.at(static_cast<std::size_t>(slot.item));
    std::vector<SubstitutionRecord> proposed =
        propose_candidates(g, item, slot, provider, opts.window);

    std::vector<SubstitutionRecord> evaluated;
    std::vector<std::pair<int, RealizedItem>> accepted;
    for (SubstitutionRecord& cand : proposed) {
      Acceptance acc = accept_candidate(g, item, slot, std::move(cand), provider, opts, maxTokens);
      if (acc.record.accepted)
        accepted.push_back({static_cast<int>(evaluated.size()), std::move(*acc.item)});
      evaluated.push_back(std::move(acc.record));
    }

    for (auto& [index, newItem] : accepted) {
      if (static_cast<int>(out.size()) >= opts.budget) break;
      BlmInstance aug = inst;
      char buf[8];
      std::snprintf(buf, sizeof buf, "%03d", static_cast<int>(out.size()));
      aug.id = inst.id + "-aug" + buf;
      aug.context[static_cast<std::size_t>(slot.item)] = std::move(newItem);
      AugmentationRecord rec;
      rec.base = inst.id;
      rec.epsilon = opts.epsilon;
      rec.window = opts.window;
      rec.applied = index;
      rec.candidates = evaluated;
      aug.augmentation = std::move(rec);

      if (inst.answers) {
        std::vector<TemplateRow> context, options;
        for (const RealizedItem& it : aug.context) context.push_back(it.abstract);
        for (const RealizedItem& it : aug.options) options.push_back(it.abstract);
        VerifyResult check = verify_unique(g, context, options, inst.answers->correctIndex);
        if (!check.pass)
          throw BlmError(ErrorCode::VerificationFailed, aug.id + ": " + check.reason);
      }
      out.push_back(std::move(aug));
    }
    if (static_cast<int>(out.size()) >= opts.budget) break;
  }

  if (out.empty())
    throw BlmError(ErrorCode::NoAcceptableCandidates,
                   "every candidate at every slot of " + inst.id + " was rejected");
  return out;
}

DatasetFile augment_dataset(const DatasetFile& ds, ScoreProvider& provider,
                            const AugmentOptions& opts) {
  if (ds.stripped)
    throw BlmError(ErrorCode::ConfigError, "cannot augment a stripped dataset");
  PhenomenonGrammar g = dataset_grammar(ds);
  std::set<std::string> alreadyAugmented;
  for (const BlmInstance& inst : ds.instances)
    if (inst.augmentation) alreadyAugmented.insert(inst.augmentation->base);
  DatasetFile out = ds;
  out.instances.clear();
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const BlmInstance& inst = ds.instances[i];
    out.instances.push_back(inst);
    if (inst.augmentation || alreadyAugmented.count(inst.id)) continue;
    AugmentOptions per = opts;
    per.seed = mix_seed(opts.seed, i);
    for (BlmInstance& aug : augment_instance(g, inst, provider, per, ds.config.shape.l))
      out.instances.push_back(std::move(aug));
  }
  return out;
}

int approve_reviews(DatasetFile& ds, const std::vector<std::string>& ids) {
  int changed = 0;
  if (ids.empty()) {
    for (BlmInstance& inst : ds.instances) {
      if (inst.augmentation && inst.augmentation->review == "pending") {
        inst.augmentation->review = "approved";
        ++changed;
      }
    }
    return changed;
  }
  for (const std::string& id : ids) {
    auto it = std::find_if(ds.instances.begin(), ds.instances.end(),
                           [&](const BlmInstance& inst) { return inst.id == id; });
    if (it == ds.instances.end())
      throw BlmError(ErrorCode::ConfigError, "no instance with id '" + id + "'");
    if (!it->augmentation)
      throw BlmError(ErrorCode::ConfigError, "instance '" + id + "' has no augmentation record");
    if (it->augmentation->review == "pending") {
      it->augmentation->review = "approved";
      ++changed;
    }
  }
  return changed;
}

}  // namespace blm
