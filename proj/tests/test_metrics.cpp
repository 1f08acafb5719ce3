#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "convergelab/metrics.hpp"
#include "testutil.hpp"

using namespace convergelab;

namespace {

AnnotatedUtterance annotated(const std::string& text, const LiwcDictionary& dict) {
  return annotate_utterance(text, dict, PropnMode::heuristic);
}

}  // namespace

TEST_CASE("lsm matches the closed form and its fixed points") {
  CHECK(lsm(0.0, 0.0) == 1.0);
  CHECK(lsm(3.0, 3.0) == 1.0);  // exact, |a-b| is exactly zero
  CHECK(lsm(25.0, 25.0) == 1.0);
  CHECK(lsm(10.0, 5.0) == doctest::Approx(1.0 - 5.0 / 15.0001).epsilon(1e-15));
  CHECK(lsm(0.0, 8.0) == doctest::Approx(1.0 - 8.0 / 8.0001).epsilon(1e-15));
  CHECK(lsm(2.0, 4.0, 0.5) == doctest::Approx(1.0 - 2.0 / 6.5).epsilon(1e-15));
}

TEST_CASE("lsm is symmetric, bounded, and tighter for closer inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(0.0, 100.0);
  for (int i = 0; i < 200; ++i) {
    double a = dist(rng), b = dist(rng);
    double s = lsm(a, b);
    CAPTURE(a);
    CAPTURE(b);
    CHECK(s == lsm(b, a));
    CHECK(s > 0.0);
    CHECK(s <= 1.0);
    // moving b toward a cannot lower the score
    double closer = lsm(a, (a + b) / 2.0);
    CHECK(closer >= s - 1e-12);
  }
}

TEST_CASE("utterance_length_convergence runs lsm over token counts") {
  auto dict = testutil::tiny_dict();
  auto u = annotated("one two three four five", dict);     // 5 tokens
  auto ref = annotated("just a couple of words here now", dict);  // 7 tokens
  CHECK(utterance_length_convergence(u, ref) ==
        doctest::Approx(1.0 - 2.0 / 12.0001).epsilon(1e-15));
  CHECK(utterance_length_convergence(u, u) == 1.0);

  auto empty = annotated("", dict);
  CHECK_THROWS_AS(utterance_length_convergence(empty, ref), DegenerateUtterance);
  CHECK_THROWS_AS(utterance_length_convergence(u, empty), DegenerateUtterance);
}

TEST_CASE("liwc_agreement compares percentage usage rates per class") {
  auto dict = testutil::tiny_dict();
  // u: 4 tokens, 1 personal pronoun -> 25%; ref: 5 tokens, 1 -> 20%
  auto u = annotated("we met them there", dict);
  auto ref = annotated("i saw nobody else around", dict);
  auto agree = liwc_agreement(u, ref);

  int ppron = static_cast<int>(LiwcClass::personal_pronouns);
  CHECK(agree.per_class[ppron] == doctest::Approx(1.0 - 5.0 / 45.0001).epsilon(1e-15));

  // classes absent on both sides contribute a perfect 1
  int art = static_cast<int>(LiwcClass::articles);
  CHECK(agree.per_class[art] == 1.0);

  double sum = 0.0;
  for (double v : agree.per_class) sum += v;
  CHECK(agree.mean == doctest::Approx(sum / 9.0).epsilon(1e-15));

  CHECK(liwc_agreement(u, u).mean == 1.0);
  auto empty = annotated("...", dict);
  CHECK_THROWS_AS(liwc_agreement(u, empty), DegenerateUtterance);
}

TEST_CASE("propn_overlap is a case-folded jaccard index") {
  auto dict = testutil::tiny_dict();
  auto u = annotated("we saw Anna and Boston today", dict);
  auto both = annotated("yes anna was here", dict);  // lowercase, no propn tags

  AnnotatedUtterance a, b;
  a.propn_set = {"Anna", "Boston"};
  b.propn_set = {"anna"};
  CHECK(propn_overlap(a, b) == doctest::Approx(0.5));  // {anna} / {anna, boston}

  b.propn_set = {"ANNA", "BOSTON"};
  CHECK(propn_overlap(a, b) == 1.0);

  b.propn_set = {"Carol"};
  CHECK(propn_overlap(a, b) == 0.0);

  b.propn_set.clear();
  CHECK(propn_overlap(a, b) == 0.0);
  a.propn_set.clear();
  CHECK(propn_overlap(a, b) == 0.0);  // both empty pins to zero

  CHECK(propn_overlap(u, both) == 0.0);  // heuristic finds none in `both`
}

TEST_CASE("token_novelty is the fraction of new types in the response") {
  auto dict = testutil::tiny_dict();
  auto u = annotated("alpha beta alpha gamma", dict);  // types alpha beta gamma
  auto ref = annotated("alpha delta", dict);
  CHECK(token_novelty(u, ref) == doctest::Approx(2.0 / 3.0));

  CHECK(token_novelty(u, u) == 0.0);
  auto far = annotated("zeta eta", dict);
  CHECK(token_novelty(far, u) == 1.0);

  // asymmetric by construction
  auto small = annotated("alpha", dict);
  auto big = annotated("alpha beta gamma delta", dict);
  CHECK(token_novelty(small, big) == 0.0);
  CHECK(token_novelty(big, small) == doctest::Approx(0.75));

  auto empty = annotated("", dict);
  CHECK_THROWS_AS(token_novelty(empty, u), DegenerateUtterance);
  CHECK(token_novelty(u, empty) == 1.0);  // nothing to share with
}

TEST_CASE("score_pair carries metadata and all four metrics") {
  auto dict = testutil::tiny_dict();
  PairMeta meta;
  meta.conversation_id = "c9";
  meta.turn = 6;
  meta.condition = Condition::model;
  meta.model_name = "demo";

  auto rec = score_pair("We will see Anna now", "so where is Anna now", dict,
                        PropnMode::heuristic, meta);
  CHECK(rec.conversation_id == "c9");
  CHECK(rec.turn == 6);
  CHECK(rec.condition == Condition::model);
  CHECK(rec.model_name == "demo");
  CHECK(rec.utterance_length_lsm == 1.0);  // 5 tokens each
  CHECK(rec.propn_overlap == 1.0);         // {anna} on both sides

  // the text overload is exactly annotate + score
  auto u = annotated("We will see Anna now", dict);
  auto ref = annotated("so where is Anna now", dict);
  auto rec2 = score_pair(u, ref, meta);
  CHECK(rec.utterance_length_lsm == rec2.utterance_length_lsm);
  CHECK(rec.liwc_mean == rec2.liwc_mean);
  CHECK(rec.propn_overlap == rec2.propn_overlap);
  CHECK(rec.token_novelty == rec2.token_novelty);
  for (int k = 0; k < kNumLiwcClasses; ++k)
    CHECK(rec.liwc_per_class[k] == rec2.liwc_per_class[k]);
}

TEST_CASE("metric direction table") {
  CHECK(metric_higher_is_convergent("utterance_length"));
  CHECK(metric_higher_is_convergent("liwc_mean"));
  CHECK(metric_higher_is_convergent("propn_overlap"));
  CHECK(metric_higher_is_convergent("personal_pronouns"));
  CHECK_FALSE(metric_higher_is_convergent("token_novelty"));
}

TEST_CASE("condition names used in reports") {
  CHECK(std::string(condition_name(Condition::human)) == "human");
  CHECK(std::string(condition_name(Condition::random_control)) == "random");
  CHECK(std::string(condition_name(Condition::model)) == "model");
}

// Independent recomputation of every metric from raw token lists, written
// against std::set instead of the library's hash-based internals.
namespace oracle {

double olsm(double a, double b) {
  if (a == 0.0 && b == 0.0) return 1.0;
  return 1.0 - std::fabs(a - b) / (a + b + 0.0001);
}

double length_score(const std::vector<std::string>& u,
                    const std::vector<std::string>& r) {
  return olsm(static_cast<double>(u.size()), static_cast<double>(r.size()));
}

double novelty(const std::vector<std::string>& u, const std::vector<std::string>& r) {
  std::set<std::string> ut(u.begin(), u.end());
  std::set<std::string> rt(r.begin(), r.end());
  int fresh = 0;
  for (const auto& w : ut)
    if (!rt.count(w)) ++fresh;
  return static_cast<double>(fresh) / static_cast<double>(ut.size());
}

double jaccard_folded(std::vector<std::string> a, std::vector<std::string> b) {
  auto fold = [](std::vector<std::string>& v) {
    for (auto& s : v)
      for (auto& ch : s) ch = static_cast<char>(std::tolower((unsigned char)ch));
  };
  fold(a);
  fold(b);
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  if (sa.empty() && sb.empty()) return 0.0;
  int inter = 0;
  for (const auto& w : sa)
    if (sb.count(w)) ++inter;
  return static_cast<double>(inter) /
         static_cast<double>(sa.size() + sb.size() - inter);
}

double liwc_mean(const std::vector<std::string>& u, const std::vector<std::string>& r,
                 const std::map<std::string, ClassSet>& lits,
                 const std::map<std::string, ClassSet>& prefs) {
  auto classes_of = [&](const std::string& tok) -> ClassSet {
    auto it = lits.find(tok);
    if (it != lits.end()) return it->second;
    std::size_t best_len = 0;
    ClassSet best = 0;
    for (const auto& [stem, cs] : prefs) {
      if (stem.size() > best_len && tok.compare(0, stem.size(), stem) == 0) {
        best_len = stem.size();
        best = cs;
      }
    }
    return best;
  };
  auto rates = [&](const std::vector<std::string>& toks) {
    std::array<double, kNumLiwcClasses> r100{};
    for (const auto& t : toks) {
      ClassSet cs = classes_of(t);
      for (int k = 0; k < kNumLiwcClasses; ++k)
        if (cs & (1u << k)) r100[k] += 1.0;
    }
    for (auto& v : r100) v = 100.0 * v / static_cast<double>(toks.size());
    return r100;
  };
  auto ru = rates(u), rr = rates(r);
  double sum = 0.0;
  for (int k = 0; k < kNumLiwcClasses; ++k) sum += olsm(ru[k], rr[k]);
  return sum / kNumLiwcClasses;
}

}  // namespace oracle

TEST_CASE("metric kernels agree with an independent oracle on random pairs") {
  std::mt19937_64 rng(29);
  auto vocab = testutil::word_pool(50, "v");

  LiwcDictionary dict;
  std::map<std::string, ClassSet> lits, prefs;
  for (int i = 0; i < 30; ++i) {
    const std::string& w = vocab[rng() % vocab.size()];
    ClassSet cs = static_cast<ClassSet>(1u << (rng() % kNumLiwcClasses));
    if (i % 3 == 0) {
      std::string stem = w.substr(0, 2);
      dict.add_prefix(stem, cs);
      prefs[stem] |= cs;
    } else {
      dict.add_literal(w, cs);
      lits[w] |= cs;
    }
  }

  const std::vector<std::string> names = {"Anna", "Boston", "Carol", "Delhi"};
  for (int i = 0; i < 1000; ++i) {
    std::vector<std::string> uw, rw;
    std::size_t ul = 1 + rng() % 12, rl = 1 + rng() % 12;
    for (std::size_t k = 0; k < ul; ++k) uw.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t k = 0; k < rl; ++k) rw.push_back(vocab[rng() % vocab.size()]);
    // mid-sentence proper names so the overlap metric sees non-empty sets
    if (rng() % 3 == 0) uw.push_back(names[rng() % names.size()]);
    if (rng() % 3 == 0) rw.push_back(names[rng() % names.size()]);

    auto u = annotate_utterance(testutil::join_words(uw), dict, PropnMode::heuristic);
    auto ref = annotate_utterance(testutil::join_words(rw), dict, PropnMode::heuristic);

    CAPTURE(i);
    CHECK(utterance_length_convergence(u, ref) ==
          doctest::Approx(oracle::length_score(uw, rw)).epsilon(1e-12));
    CHECK(token_novelty(u, ref) == oracle::novelty(uw, rw));  // exact
    CHECK(propn_overlap(u, ref) ==
          oracle::jaccard_folded(u.propn_set, ref.propn_set));  // exact
    CHECK(liwc_agreement(u, ref).mean ==
          doctest::Approx(oracle::liwc_mean(uw, rw, lits, prefs)).epsilon(1e-12));
  }
}
