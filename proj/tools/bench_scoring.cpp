// Benchmarks the record-assembly kernels: serial reference vs the OpenMP
// path, on a synthetic corpus. Also cross-checks that both paths emit
// identical records, which is the invariant the tests rely on.

#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "convergelab/analysis.hpp"

using namespace convergelab;

namespace {

const char* kVocab[] = {
    "the",   "a",     "and",   "but",  "i",     "you",   "he",    "she",
    "it",    "they",  "we",    "is",   "was",   "were",  "have",  "has",
    "had",   "will",  "would", "can",  "could", "not",   "never", "no",
    "very",  "really", "quite", "some", "many",  "few",   "all",   "most",
    "in",    "on",    "at",    "with", "from",  "about", "over",  "under",
    "this",  "that",  "these", "those", "what",  "which", "house", "garden",
    "coffee", "train", "maybe", "morning", "ticket", "flower", "window", "river",
};
constexpr std::size_t kVocabSize = sizeof(kVocab) / sizeof(kVocab[0]);

std::vector<Conversation> synthetic_corpus(std::size_t n_convs, std::mt19937_64& rng) {
  std::vector<Conversation> cs;
  cs.reserve(n_convs);
  for (std::size_t i = 0; i < n_convs; ++i) {
    Conversation c;
    c.id = "bench-" + std::to_string(i);
    c.dataset = "bench";
    std::size_t n_turns = 6 + rng() % 4;
    for (std::size_t t = 0; t < n_turns; ++t) {
      Turn turn;
      turn.index = static_cast<int>(t) + 1;
      turn.speaker = (t % 2 == 0) ? "X" : "Y";
      turn.raw_speaker = turn.speaker;
      std::size_t len = 5 + rng() % 21;
      for (std::size_t w = 0; w < len; ++w) {
        if (w > 0) turn.text += " ";
        turn.text += kVocab[rng() % kVocabSize];
      }
      turn.text += ".";
      c.turns.push_back(std::move(turn));
    }
    cs.push_back(std::move(c));
  }
  return cs;
}

LiwcDictionary bench_dict() {
  LiwcDictionary d;
  auto bit = [](LiwcClass c) { return static_cast<ClassSet>(1u << static_cast<int>(c)); };
  for (const char* w : {"i", "you", "he", "she", "it", "they", "we"}) {
    d.add_literal(w, bit(LiwcClass::personal_pronouns));
  }
  for (const char* w : {"this", "that", "these", "those", "what", "which"}) {
    d.add_literal(w, bit(LiwcClass::impersonal_pronouns));
  }
  for (const char* w : {"the", "a"}) d.add_literal(w, bit(LiwcClass::articles));
  for (const char* w : {"and", "but"}) d.add_literal(w, bit(LiwcClass::conjunctions));
  for (const char* w : {"in", "on", "at", "with", "from", "about", "over", "under"}) {
    d.add_literal(w, bit(LiwcClass::prepositions));
  }
  for (const char* w : {"is", "was", "were", "have", "has", "had", "will", "would",
                        "can", "could"}) {
    d.add_literal(w, bit(LiwcClass::auxiliary_verbs));
  }
  for (const char* w : {"very", "really", "quite"}) {
    d.add_literal(w, bit(LiwcClass::adverbs));
  }
  for (const char* w : {"not", "never", "no"}) d.add_literal(w, bit(LiwcClass::negations));
  for (const char* w : {"some", "many", "few", "all", "most"}) {
    d.add_literal(w, bit(LiwcClass::quantifiers));
  }
  d.add_prefix("mayb", bit(LiwcClass::adverbs));
  return d;
}

bool records_equal(const std::vector<ConvergenceRecord>& a,
                   const std::vector<ConvergenceRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].conversation_id != b[i].conversation_id || a[i].turn != b[i].turn ||
        a[i].utterance_length_lsm != b[i].utterance_length_lsm ||
        a[i].liwc_mean != b[i].liwc_mean ||
        a[i].propn_overlap != b[i].propn_overlap ||
        a[i].token_novelty != b[i].token_novelty ||
        a[i].liwc_per_class != b[i].liwc_per_class) {
      return false;
    }
  }
  return true;
}

template <class Fn>
double best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t n_convs = 2000;
  if (argc > 1) n_convs = static_cast<std::size_t>(std::stoul(argv[1]));

  std::mt19937_64 rng(7);
  std::vector<Conversation> cs = synthetic_corpus(n_convs, rng);
  LiwcDictionary dict = bench_dict();

  AssemblyResult serial_h, parallel_h, serial_r, parallel_r;
  double ts_h = best_of(3, [&] {
    serial_h = human_baseline_records(cs, dict, PropnMode::heuristic, 5,
                                      Execution::serial);
  });
  double tp_h = best_of(3, [&] {
    parallel_h = human_baseline_records(cs, dict, PropnMode::heuristic, 5,
                                        Execution::parallel);
  });
  double ts_r = best_of(3, [&] {
    serial_r = random_baseline_records(cs, dict, PropnMode::heuristic, 42, 5,
                                       Execution::serial);
  });
  double tp_r = best_of(3, [&] {
    parallel_r = random_baseline_records(cs, dict, PropnMode::heuristic, 42, 5,
                                         Execution::parallel);
  });

  if (!records_equal(serial_h.records, parallel_h.records) ||
      !records_equal(serial_r.records, parallel_r.records)) {
    std::fprintf(stderr, "FATAL: serial and parallel kernels disagree\n");
    return 1;
  }

  std::size_t slots = serial_h.records.size();
  std::printf("%zu conversations, %zu record slots\n", cs.size(), slots);
  std::printf("%-22s %10s %10s %8s\n", "kernel", "serial", "parallel", "speedup");
  std::printf("%-22s %9.1fms %9.1fms %7.2fx\n", "human_baseline", ts_h * 1e3,
              tp_h * 1e3, ts_h / tp_h);
  std::printf("%-22s %9.1fms %9.1fms %7.2fx\n", "random_baseline", ts_r * 1e3,
              tp_r * 1e3, ts_r / tp_r);
  std::printf("serial throughput: %.0f pairs/s\n",
              static_cast<double>(slots) / ts_h);
  return 0;
}
