#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blm/dataset.hpp"
#include "blm/grammar.hpp"
#include "blm/realize.hpp"

namespace blm {

struct ScoredCandidate {
  std::string surface;
  double score = 0.0;

  friend bool operator==(const ScoredCandidate&, const ScoredCandidate&) = default;
};

struct ProviderReply {
  double sentenceScore = 0.0;
  std::vector<ScoredCandidate> candidates;
};

// Boundary to whatever scores sentences and proposes slot alternatives.
// k is the maximum number of candidates wanted; k = 0 asks for the
// sentence score alone.
class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual ProviderReply query(const std::string& sentence, std::size_t begin, std::size_t length,
                              int k) = 0;
};

// Deterministic scorer backed by a phrase table (lines of
// `surface<TAB>score`). Sentence score is the sum of per-token scores;
// unknown tokens score zero. When built with a grammar it restricts the
// candidate list to table rows that realize the slot's attribute bundle.
class StubScorer final : public ScoreProvider {
 public:
  StubScorer(const std::string& tableText, const PhenomenonGrammar* grammar);
  static StubScorer from_file(const std::string& path, const PhenomenonGrammar* grammar);

  ProviderReply query(const std::string& sentence, std::size_t begin, std::size_t length,
                      int k) override;
  double sentence_score(const std::string& sentence) const;
  const std::map<std::string, double>& table() const { return table_; }

 private:
  std::map<std::string, double> table_;
  const PhenomenonGrammar* grammar_;
};

// Speaks the line-delimited JSON protocol with a child process: one
// request object per line on its stdin, one reply object per line on its
// stdout. See docs/provider.md.
class CommandProvider final : public ScoreProvider {
 public:
  explicit CommandProvider(const std::string& command);
  ~CommandProvider() override;
  CommandProvider(const CommandProvider&) = delete;
  CommandProvider& operator=(const CommandProvider&) = delete;

  ProviderReply query(const std::string& sentence, std::size_t begin, std::size_t length,
                      int k) override;

 private:
  void spawn();
  std::string command_;
  int in_ = -1;
  int out_ = -1;
  long pid_ = -1;
};

// Same request and reply objects, POSTed to an HTTP endpoint.
class HttpProvider final : public ScoreProvider {
 public:
  explicit HttpProvider(const std::string& url);

  ProviderReply query(const std::string& sentence, std::size_t begin, std::size_t length,
                      int k) override;

 private:
  std::string base_;
  std::string path_;
};

// spec is one of stub:<table path>, cmd:<command line>, url:<http url>.
std::unique_ptr<ScoreProvider> make_provider(const std::string& spec,
                                             const PhenomenonGrammar* grammar);

struct SlotRef {
  int item = 0;
  int cell = 0;
  std::string object;
  int occurrence = 1;
};

struct AugmentOptions {
  double epsilon = 1.0;
  int window = 10;
  int budget = 1;
  std::uint64_t seed = 0;
};

// Noun-phrase cells of the instance's context items, in row order.
std::vector<SlotRef> np_slots(const PhenomenonGrammar& g, const BlmInstance& inst);

std::vector<SubstitutionRecord> propose_candidates(const PhenomenonGrammar& g,
                                                   const RealizedItem& item, const SlotRef& slot,
                                                   ScoreProvider& provider, int k);

struct Acceptance {
  SubstitutionRecord record;
  // The substituted item, present only when accepted.
  std::optional<RealizedItem> item;
};

Acceptance accept_candidate(const PhenomenonGrammar& g, const RealizedItem& base,
                            const SlotRef& slot, SubstitutionRecord cand, ScoreProvider& provider,
                            const AugmentOptions& opts, int maxTokens);

std::vector<BlmInstance> augment_instance(const PhenomenonGrammar& g, const BlmInstance& inst,
                                          ScoreProvider& provider, const AugmentOptions& opts,
                                          int maxTokens);

// Appends augmentations after each base instance. Augmented instances and
// bases whose derived instances are already present are kept untouched, so
// running the pass twice is a no-op.
DatasetFile augment_dataset(const DatasetFile& ds, ScoreProvider& provider,
                            const AugmentOptions& opts);

// Flips review status to approved. Empty ids approves every pending
// record; unknown ids are an error. Returns how many records changed.
int approve_reviews(DatasetFile& ds, const std::vector<std::string>& ids);

}  // namespace blm
