#include "blm/realize.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "blm/errors.hpp"

namespace blm {

namespace {

const std::pair<const char*, const char*> kUppercase[] = {
    {"à", "À"}, {"â", "Â"}, {"é", "É"}, {"è", "È"},
    {"ê", "Ê"}, {"î", "Î"}, {"ô", "Ô"}, {"û", "Û"},
    {"ç", "Ç"}, {"œ", "Œ"},
};

std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

int count_tokens(const std::string& s) { return static_cast<int>(tokenize(s).size()); }

const ObjectDef& object_of(const PhenomenonGrammar& g, const TemplateCell& cell) {
  const ObjectDef* obj = g.find_object(cell.object);
  if (!obj)
    throw BlmError(ErrorCode::UnknownSymbol, "row cell references undeclared object '" + cell.object + "'");
  return *obj;
}

// Index of the last cell belonging to the countable object, or -1.
int last_countable_cell(const PhenomenonGrammar& g, const TemplateRow& row) {
  int last = -1;
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    if (object_of(g, row.cells[i]).optionality == Optionality::Countable)
      last = static_cast<int>(i);
  }
  return last;
}

int shortest_form_index(const std::vector<std::string>& forms) {
  int best = 0;
  int bestLen = count_tokens(forms[0]);
  for (std::size_t i = 1; i < forms.size(); ++i) {
    int len = count_tokens(forms[i]);
    if (len < bestLen) {
      best = static_cast<int>(i);
      bestLen = len;
    }
  }
  return best;
}

std::vector<CellChoice> draw_choices(const PhenomenonGrammar& g, const TemplateRow& row,
                                     SplitMix64& rng, const SharedLexicalization* shared) {
  std::vector<CellChoice> choices;
  choices.reserve(row.cells.size());
  for (const TemplateCell& cell : row.cells) {
    const ObjectDef& obj = object_of(g, cell);
    const std::vector<std::string>& forms = g.lexicon.forms_for(obj.category, cell.values);
    CellChoice choice;
    if (shared && obj.category == "np") {
      auto it = shared->draws.find({cell.object, cell.occurrence});
      if (it != shared->draws.end()) {
        choice.entryIndex = static_cast<int>(it->second % forms.size());
      } else {
        choice.entryIndex = static_cast<int>(rng.below(forms.size()));
      }
    } else {
      choice.entryIndex = static_cast<int>(rng.below(forms.size()));
    }
    if (const std::vector<std::string>* glue = g.lexicon.find_glue(cell.display_name()))
      choice.glueIndex = static_cast<int>(rng.below(glue->size()));
    choices.push_back(choice);
  }
  return choices;
}

std::vector<CellChoice> shortest_choices(const PhenomenonGrammar& g, const TemplateRow& row) {
  std::vector<CellChoice> choices;
  for (const TemplateCell& cell : row.cells) {
    const ObjectDef& obj = object_of(g, cell);
    const std::vector<std::string>& forms = g.lexicon.forms_for(obj.category, cell.values);
    CellChoice choice;
    choice.entryIndex = shortest_form_index(forms);
    if (g.lexicon.find_glue(cell.display_name())) choice.glueIndex = 0;
    choices.push_back(choice);
  }
  return choices;
}

}  // namespace

SharedLexicalization make_shared_draws(const PhenomenonGrammar& g, std::uint64_t seed) {
  SharedLexicalization shared;
  SplitMix64 rng(seed);
  for (const ObjectDef& obj : g.objects) {
    int occurrences = obj.optionality == Optionality::Countable ? obj.maxCount : 1;
    for (int k = 1; k <= occurrences; ++k) shared.draws[{obj.name, k}] = rng.next();
  }
  return shared;
}

std::string capitalize_first(const std::string& s) {
  if (s.empty()) return s;
  if (s[0] >= 'a' && s[0] <= 'z') {
    std::string out = s;
    out[0] = static_cast<char>(s[0] - 'a' + 'A');
    return out;
  }
  for (const auto& [lower, upper] : kUppercase) {
    std::string lo(lower);
    if (s.compare(0, lo.size(), lo) == 0) return std::string(upper) + s.substr(lo.size());
  }
  return s;
}

std::string uncapitalize_first(const std::string& s) {
  if (s.empty()) return s;
  if (s[0] >= 'A' && s[0] <= 'Z') {
    std::string out = s;
    out[0] = static_cast<char>(s[0] - 'A' + 'a');
    return out;
  }
  for (const auto& [lower, upper] : kUppercase) {
    std::string up(upper);
    if (s.compare(0, up.size(), up) == 0) return std::string(lower) + s.substr(up.size());
  }
  return s;
}

std::string apply_contraction(const Lexicon& lex, const std::string& glueWord,
                              const std::string& form) {
  std::size_t space = form.find(' ');
  std::string head = space == std::string::npos ? form : form.substr(0, space);
  for (const ContractionRule& rule : lex.contractions) {
    if (rule.glue == glueWord && rule.determiner == head)
      return rule.replacement + (space == std::string::npos ? "" : form.substr(space));
  }
  return glueWord + " " + form;
}

namespace {

struct Piece {
  std::string text;
  // Extent of the replaceable form within text; glue merged by a
  // contraction stays inside it.
  std::size_t formOffset = 0;
  std::size_t formLength = 0;
};

std::vector<Piece> assemble_pieces(const PhenomenonGrammar& g, const TemplateRow& row,
                                   const std::vector<CellChoice>& choices) {
  if (choices.size() != row.cells.size())
    throw BlmError(ErrorCode::ConfigError, "choice record does not match the row's cells");
  int coordinated = row.structure == RowStructure::Coordination ? last_countable_cell(g, row) : -1;
  if (row.structure == RowStructure::Coordination) {
    if (coordinated < 0)
      throw BlmError(ErrorCode::ConfigError, "coordination needs a countable occurrence");
    if (g.lexicon.coordinator.empty())
      throw BlmError(ErrorCode::ConfigError, "coordination needs a declared coordinator");
  }

  std::vector<Piece> pieces;
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    const TemplateCell& cell = row.cells[i];
    const ObjectDef& obj = object_of(g, cell);
    const std::vector<std::string>& forms = g.lexicon.forms_for(obj.category, cell.values);
    if (choices[i].entryIndex < 0 || choices[i].entryIndex >= static_cast<int>(forms.size()))
      throw BlmError(ErrorCode::ConfigError,
                     "entry index out of range for " + cell.display_name());
    const std::string& form = forms[choices[i].entryIndex];

    Piece piece;
    const std::vector<std::string>* glue = g.lexicon.find_glue(cell.display_name());
    if (static_cast<int>(i) == coordinated) {
      piece.text = g.lexicon.coordinator + " " + form;
      piece.formOffset = g.lexicon.coordinator.size() + 1;
      piece.formLength = form.size();
    } else if (glue) {
      if (choices[i].glueIndex < 0 || choices[i].glueIndex >= static_cast<int>(glue->size()))
        throw BlmError(ErrorCode::ConfigError,
                       "glue index out of range for " + cell.display_name());
      const std::string& word = (*glue)[choices[i].glueIndex];
      piece.text = apply_contraction(g.lexicon, word, form);
      if (piece.text == word + " " + form) {
        piece.formOffset = word.size() + 1;
        piece.formLength = form.size();
      } else {
        piece.formLength = piece.text.size();
      }
    } else {
      piece.text = form;
      piece.formLength = form.size();
    }
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

}  // namespace

std::pair<std::string, int> render_surface(const PhenomenonGrammar& g, const TemplateRow& row,
                                           const std::vector<CellChoice>& choices) {
  std::string surface;
  for (const Piece& piece : assemble_pieces(g, row, choices)) {
    if (!surface.empty()) surface += " ";
    surface += piece.text;
  }
  surface = capitalize_first(surface) + ".";
  return {surface, count_tokens(surface)};
}

std::vector<CellSpan> cell_spans(const PhenomenonGrammar& g, const TemplateRow& row,
                                 const std::vector<CellChoice>& choices) {
  std::vector<CellSpan> spans;
  std::size_t offset = 0;
  for (const Piece& piece : assemble_pieces(g, row, choices)) {
    spans.push_back({offset + piece.formOffset, piece.formLength});
    offset += piece.text.size() + 1;
  }
  return spans;
}

RealizedItem realize_row(const PhenomenonGrammar& g, const TemplateRow& row, int maxTokens,
                         SplitMix64& rng, const RealizeOptions& opts,
                         const SharedLexicalization* shared) {
  const SharedLexicalization* pin = opts.sharedLexicalization ? shared : nullptr;
  for (int attempt = 0; attempt < std::max(1, opts.lengthRetryBound); ++attempt) {
    std::vector<CellChoice> choices = draw_choices(g, row, rng, pin);
    auto [surface, tokens] = render_surface(g, row, choices);
    if (tokens <= maxTokens) return {surface, row, std::move(choices), tokens};
  }
  std::vector<CellChoice> choices = shortest_choices(g, row);
  auto [surface, tokens] = render_surface(g, row, choices);
  if (tokens <= maxTokens) return {surface, row, std::move(choices), tokens};
  throw BlmError(ErrorCode::LengthExceeded,
                 "no lexical choice fits " + std::to_string(maxTokens) + " tokens (best was " +
                     std::to_string(tokens) + ")");
}

ContextSequence realize_context(const PhenomenonGrammar& g, const TemplateMatrix& t,
                                std::uint64_t seed, const RealizeOptions& opts,
                                const SharedLexicalization* shared) {
  ContextSequence out;
  out.templateRef = g.id;
  out.seed = seed;
  for (std::size_t i = 0; i + 1 < t.rows.size(); ++i) {
    SplitMix64 rng(mix_seed(seed, i));
    try {
      out.items.push_back(realize_row(g, t.rows[i], t.shape.l, rng, opts, shared));
    } catch (const BlmError& e) {
      throw BlmError(e.code(), "row " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

TemplateRow recover_abstract(const PhenomenonGrammar& g, const std::string& surface) {
  std::string text = surface;
  if (!text.empty() && text.back() == '.') text.pop_back();
  std::vector<std::string> tokens = tokenize(text);
  if (!tokens.empty()) tokens[0] = uncapitalize_first(tokens[0]);

  std::vector<TemplateRow> parses;

  auto matches_at = [&tokens](std::size_t pos, const std::vector<std::string>& piece) {
    if (pos + piece.size() > tokens.size()) return false;
    for (std::size_t i = 0; i < piece.size(); ++i)
      if (tokens[pos + i] != piece[i]) return false;
    return true;
  };

  std::function<void(std::size_t, std::size_t, TemplateRow&)> matchObject =
      [&](std::size_t objIndex, std::size_t pos, TemplateRow& cur) {
        if (objIndex == g.objects.size()) {
          if (pos == tokens.size()) parses.push_back(cur);
          return;
        }
        const ObjectDef& obj = g.objects[objIndex];

        auto try_forms = [&](std::size_t at, int occurrence, const std::string& prefixGlue,
                             bool coordinated, auto&& next) {
          for (const LexiconEntry& entry : g.lexicon.entries) {
            if (entry.category != obj.category) continue;
            if (entry.bundle.size() != obj.attributes.size()) continue;
            bool bundleFits = true;
            for (const std::string& attr : obj.attributes)
              if (!entry.bundle.count(attr)) bundleFits = false;
            if (!bundleFits) continue;
            for (const std::string& form : entry.forms) {
              std::string piece = form;
              if (coordinated) piece = g.lexicon.coordinator + " " + form;
              else if (!prefixGlue.empty()) piece = apply_contraction(g.lexicon, prefixGlue, form);
              std::vector<std::string> pieceTokens = tokenize(piece);
              if (!matches_at(at, pieceTokens)) continue;
              TemplateCell cell;
              cell.object = obj.name;
              cell.occurrence = occurrence;
              cell.values = entry.bundle;
              cur.cells.push_back(cell);
              if (coordinated) cur.structure = RowStructure::Coordination;
              next(at + pieceTokens.size());
              if (coordinated) cur.structure = RowStructure::Plain;
              cur.cells.pop_back();
            }
          }
        };

        if (obj.optionality == Optionality::Required) {
          const std::vector<std::string>* glue = g.lexicon.find_glue(obj.name);
          if (glue) {
            for (const std::string& word : *glue)
              try_forms(pos, 1, word, false,
                        [&](std::size_t p) { matchObject(objIndex + 1, p, cur); });
          } else {
            try_forms(pos, 1, "", false, [&](std::size_t p) { matchObject(objIndex + 1, p, cur); });
          }
          return;
        }

        std::function<void(int, std::size_t)> matchOccurrence = [&](int k, std::size_t p) {
          matchObject(objIndex + 1, p, cur);
          if (k > obj.maxCount) return;
          std::string slot = occurrence_display_name(obj.name, k);
          const std::vector<std::string>* glue = g.lexicon.find_glue(slot);
          auto continueSame = [&](std::size_t q) { matchOccurrence(k + 1, q); };
          auto stopHere = [&](std::size_t q) { matchObject(objIndex + 1, q, cur); };
          if (glue) {
            for (const std::string& word : *glue) try_forms(p, k, word, false, continueSame);
          } else {
            try_forms(p, k, "", false, continueSame);
          }
          if (!g.lexicon.coordinator.empty()) try_forms(p, k, "", true, stopHere);
        };
        matchOccurrence(1, pos);
      };

  TemplateRow cur;
  matchObject(0, 0, cur);

  std::vector<TemplateRow> distinct;
  for (const TemplateRow& row : parses) {
    if (std::find(distinct.begin(), distinct.end(), row) == distinct.end())
      distinct.push_back(row);
  }
  if (distinct.empty())
    throw BlmError(ErrorCode::MissingEntry, "surface does not parse against the lexicon: " + surface);
  if (distinct.size() > 1)
    throw BlmError(ErrorCode::AmbiguousSurface,
                   "surface has " + std::to_string(distinct.size()) + " distinct parses: " + surface);
  return distinct.front();
}

}  // namespace blm
