#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "blm/grammar.hpp"
#include "blm/rng.hpp"
#include "blm/template_matrix.hpp"

namespace blm {

struct CellChoice {
  int entryIndex = 0;
  int glueIndex = -1;

  friend bool operator==(const CellChoice&, const CellChoice&) = default;
};

struct RealizedItem {
  std::string surface;
  TemplateRow abstract;
  std::vector<CellChoice> choices;
  int tokenLength = 0;

  friend bool operator==(const RealizedItem&, const RealizedItem&) = default;
};

struct ContextSequence {
  std::vector<RealizedItem> items;
  std::string templateRef;
  std::uint64_t seed = 0;
};

struct RealizeOptions {
  bool sharedLexicalization = false;
  int lengthRetryBound = 64;
};

// Raw draws pinned per (object, occurrence); entry lists for the bundles of
// one object must be lemma-aligned (same index, same lemma) for the pin to
// keep the lemma stable across rows.
struct SharedLexicalization {
  std::map<std::pair<std::string, int>, std::uint64_t> draws;
};

SharedLexicalization make_shared_draws(const PhenomenonGrammar& g, std::uint64_t seed);

std::pair<std::string, int> render_surface(const PhenomenonGrammar& g, const TemplateRow& row,
                                           const std::vector<CellChoice>& choices);

// Character span of each cell's replaceable fragment in the rendered
// surface. Glue and coordinator words sit outside their cell's span, except
// where a contraction merged the glue into the form.
struct CellSpan {
  std::size_t begin = 0;
  std::size_t length = 0;

  friend bool operator==(const CellSpan&, const CellSpan&) = default;
};

std::vector<CellSpan> cell_spans(const PhenomenonGrammar& g, const TemplateRow& row,
                                 const std::vector<CellChoice>& choices);

RealizedItem realize_row(const PhenomenonGrammar& g, const TemplateRow& row, int maxTokens,
                         SplitMix64& rng, const RealizeOptions& opts = {},
                         const SharedLexicalization* shared = nullptr);

// Realizes rows 1..n-1; the final row stays withheld as the answer target.
ContextSequence realize_context(const PhenomenonGrammar& g, const TemplateMatrix& t,
                                std::uint64_t seed, const RealizeOptions& opts = {},
                                const SharedLexicalization* shared = nullptr);

// Inverse lexicon lookup: reparse a rendered sentence into its abstract row.
TemplateRow recover_abstract(const PhenomenonGrammar& g, const std::string& surface);

std::string capitalize_first(const std::string& s);
std::string uncapitalize_first(const std::string& s);
std::string apply_contraction(const Lexicon& lex, const std::string& glueWord,
                              const std::string& form);

}  // namespace blm
