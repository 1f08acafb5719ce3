// corpus.hpp -- dialogue corpus model, parsing, and preprocessing.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace convergelab {

enum class Provenance { human, model, random_control };

// One contiguous contribution by a single speaker.
struct Turn {
  int index = 0;                 // 1-based, reassigned after merging
  std::string speaker;           // "X"/"Y" once normalize_speakers has run
  std::string raw_speaker;       // label as found in the source file
  std::string text;
  Provenance provenance = Provenance::human;
  bool has_propn_sidecar = false;
  std::vector<std::string> propn_sidecar;  // pre-tagged proper nouns, optional
};

struct Conversation {
  std::string id;
  std::string dataset;
  std::vector<Turn> turns;
};

struct CorpusStats {
  std::size_t conversation_count = 0;
  double avg_turns = 0.0;
  double avg_turn_length = 0.0;  // tokens per turn, pooled over all turns
  std::size_t replaced_turn_count = 0;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads one conversation per JSONL line:
//   {"id": str, "dataset": str, "turns": [{"speaker": str, "text": str}, ...]}
// Turns may carry an optional "propn" array of pre-tagged proper nouns.
// Malformed lines and duplicate ids raise CorpusError with the line number.
std::vector<Conversation> parse_corpus(const std::string& path);

// Collapses adjacent same-speaker turns into one, joining texts with a
// single space. Indices are reassigned 1..n. Idempotent.
Conversation merge_consecutive_turns(const Conversation& c);

// Keeps conversations with >= min_turns turns and exactly two speakers.
// Input must already be merged; order is preserved.
std::vector<Conversation> filter_conversations(const std::vector<Conversation>& cs,
                                               int min_turns = 6);

// Labels the first speaker X and the other Y, so the speaker of turn 6 is Y.
// Requires exactly two speakers in strict alternation.
Conversation normalize_speakers(Conversation c);

// merge -> filter -> normalize, the standard ingest path.
std::vector<Conversation> preprocess_corpus(const std::vector<Conversation>& raw,
                                            int min_turns = 6);

// Uniform sample without replacement of at most `cap` conversations,
// keeping the original relative order. Identity when |cs| <= cap.
// Deterministic for a fixed seed: indices are chosen by a partial
// Fisher-Yates shuffle driven by std::mt19937_64(seed), drawing
// j = i + rng() % (n - i) at step i, then sorted ascending.
std::vector<Conversation> downsample(const std::vector<Conversation>& cs,
                                     std::size_t cap, std::uint64_t seed);

// Turn positions the model takes over: {m+1, m+3, ...} clipped to |turns|.
// With m = 5 these are 6, 8, 10, ... -- speaker Y at and after turn m+1.
std::vector<int> replaced_turn_indices(const Conversation& c, int m = 5);

// Corpus-level statistics; turn lengths are measured with annotate's
// tokenizer, pooled over all turns.
CorpusStats compute_corpus_stats(const std::vector<Conversation>& cs, int m = 5);

// Writes the canonical JSONL form (speaker, text, and propn when present).
void write_corpus(const std::vector<Conversation>& cs, const std::string& path);

}  // namespace convergelab
