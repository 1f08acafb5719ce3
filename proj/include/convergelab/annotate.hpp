// annotate.hpp -- tokenization, proper-noun tagging, and LIWC-style
// word-class counting for single utterances.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace convergelab {

enum class LiwcClass : int {
  personal_pronouns = 0,
  impersonal_pronouns,
  articles,
  conjunctions,
  prepositions,
  auxiliary_verbs,
  adverbs,
  negations,
  quantifiers,
};

inline constexpr int kNumLiwcClasses = 9;

using LiwcCounts = std::array<int, kNumLiwcClasses>;

// Bit i set = class with enum value i.
using ClassSet = std::uint16_t;

const char* liwc_class_name(LiwcClass c);

// Accepts canonical names and the .dic aliases
// (ppron, ipron, article, conj, preps, auxverb, adverb, negate, quant).
std::optional<LiwcClass> parse_liwc_class(std::string_view name);

class AnnotateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Case-preserved token with its position class, kept for PROPN tagging.
struct CaseToken {
  std::string text;
  bool sentence_start = false;
};

struct TokenStream {
  std::vector<std::string> tokens;      // lowercased
  std::vector<CaseToken> case_tokens;   // parallel, case preserved
};

// Maximal runs of letters/digits/apostrophes form tokens; punctuation is
// dropped. UTF-8 input; U+2019 is normalized to '\''. `tokens` is
// ASCII-lowercased, `case_tokens` preserves case and flags tokens that
// open a sentence (first token or first after . ! ? or an ellipsis).
TokenStream tokenize(std::string_view text);

enum class PropnMode { heuristic, external };

// Heuristic mode: capitalized tokens that are not sentence-initial, minus a
// stop-list of capitalized function words (I, I'm, I'll, I've, I'd).
// External mode returns the sidecar annotations verbatim; a missing sidecar
// is an AnnotateError. Result is sorted and deduplicated, case preserved.
std::vector<std::string> tag_propn(const std::vector<CaseToken>& case_tokens,
                                   PropnMode mode,
                                   const std::vector<std::string>* sidecar = nullptr);

// Word-class lexicon with literal entries and prefix patterns ("hundred*").
// Lookup resolution is deterministic: an exact literal match wins over any
// prefix match; among prefix matches the longest stem wins.
class LiwcDictionary {
 public:
  ClassSet lookup(const std::string& token) const;

  void add_literal(std::string word, ClassSet classes);
  void add_prefix(std::string stem, ClassSet classes);

  std::size_t size() const { return literal_.size() + prefix_.size(); }

 private:
  std::unordered_map<std::string, ClassSet> literal_;
  std::unordered_map<std::string, ClassSet> prefix_;
  std::size_t max_prefix_len_ = 0;
};

// Loads the .dic format: a header delimited by lines containing only "%"
// with `class_id<TAB>class_name` rows, then `pattern<TAB>id[<TAB>id...]`
// body rows. Class names outside the nine known ones are ignored; a body
// row referencing an id absent from the header is a load error, as is a
// missing or malformed header. '*' may appear only as a pattern's final
// character.
LiwcDictionary load_liwc_dict(const std::string& path);

struct AnnotatedUtterance {
  std::vector<std::string> tokens;       // lowercased, in order
  int token_count = 0;
  std::vector<std::string> propn_set;    // sorted unique, case preserved
  LiwcCounts liwc_counts{};
};

// tokenize + tag_propn + per-token dictionary lookup. A token matching a
// pattern mapped to k classes increments all k counters.
AnnotatedUtterance annotate_utterance(std::string_view text,
                                      const LiwcDictionary& dict,
                                      PropnMode mode,
                                      const std::vector<std::string>* sidecar = nullptr);

}  // namespace convergelab
