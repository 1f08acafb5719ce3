// Acceptance gate: one pass/fail line per criterion, exit code = number of
// failures. Criterion 8 needs real data and is skipped (not failed) when the
// fixture environment variables are unset.
//
// usage: acceptance <data_dir> <cli_path>

#include <sys/wait.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "convergelab/analysis.hpp"
#include "convergelab/annotate.hpp"
#include "convergelab/corpus.hpp"
#include "convergelab/genharness.hpp"
#include "convergelab/metrics.hpp"
#include "convergelab/report.hpp"
#include "convergelab/stats.hpp"
#include "testutil.hpp"

using namespace convergelab;

namespace {

std::string g_data_dir;
std::string g_cli;

int run_cli(const std::string& args) {
  std::string cmd = g_cli + " " + args + " > /dev/null 2>&1";
  int st = std::system(cmd.c_str());
  if (st == -1) return -1;
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

// ---- criterion 1: formula properties over random inputs ----

bool criterion_formulas() {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> uni(0.0, 50.0);
  for (int i = 0; i < 200; ++i) {
    double a = uni(rng), b = uni(rng);
    double got = lsm(a, b);
    double want = 1.0 - std::abs(a - b) / (a + b + 0.0001);
    if (std::abs(got - want) > 1e-15) return false;
    if (got != lsm(b, a)) return false;
    if (!(got > 0.0 && got <= 1.0)) return false;
    if (lsm(a, a) != 1.0) return false;
  }
  if (lsm(0.0, 0.0) != 1.0) return false;

  auto dict = testutil::tiny_dict();
  auto pool = testutil::word_pool(20);
  pool.push_back("the");
  pool.push_back("we");
  pool.push_back("not");
  for (int i = 0; i < 200; ++i) {
    std::string ut = testutil::random_sentence(rng, pool, 1 + rng() % 8);
    std::string rt = testutil::random_sentence(rng, pool, 1 + rng() % 8);
    auto u = annotate_utterance(ut, dict, PropnMode::heuristic);
    auto r = annotate_utterance(rt, dict, PropnMode::heuristic);

    double len = utterance_length_convergence(u, r);
    double liwc = liwc_agreement(u, r).mean;
    double prop = propn_overlap(u, r);
    double nov = token_novelty(u, r);
    if (!(len > 0.0 && len <= 1.0)) return false;
    if (!(liwc > 0.0 && liwc <= 1.0)) return false;
    if (prop < 0.0 || prop > 1.0) return false;
    if (nov < 0.0 || nov > 1.0) return false;

    // symmetric metrics, and the identity pair is maximal
    if (len != utterance_length_convergence(r, u)) return false;
    if (liwc != liwc_agreement(r, u).mean) return false;
    if (prop != propn_overlap(r, u)) return false;
    if (utterance_length_convergence(u, u) != 1.0) return false;
    if (liwc_agreement(u, u).mean != 1.0) return false;
    if (token_novelty(u, u) != 0.0) return false;
  }
  return true;
}

// ---- criterion 2: metric oracle over random pairs ----

struct NaiveDict {
  std::map<std::string, std::set<int>> lits;
  std::map<std::string, std::set<int>> prefs;

  std::set<int> classes_of(const std::string& tok) const {
    auto it = lits.find(tok);
    if (it != lits.end()) return it->second;
    std::size_t best = 0;
    std::set<int> out;
    for (const auto& [stem, cls] : prefs) {
      if (stem.size() <= tok.size() && tok.compare(0, stem.size(), stem) == 0 &&
          stem.size() >= best) {
        if (stem.size() > best) out.clear();
        best = stem.size();
        for (int c : cls) out.insert(c);
      }
    }
    return out;
  }
};

double naive_lsm(double a, double b) {
  return 1.0 - std::abs(a - b) / (a + b + 0.0001);
}

bool criterion_oracle() {
  std::mt19937_64 rng(202);
  auto vocab = testutil::word_pool(50);
  const char* names[] = {"Anna", "Boston", "Carol", "Delhi"};

  LiwcDictionary dict;
  NaiveDict naive;
  for (int i = 0; i < 30; ++i) {
    const std::string& w = vocab[rng() % vocab.size()];
    ClassSet cs = 0;
    std::set<int> ncs;
    for (int k = 0; k < 1 + static_cast<int>(rng() % 2); ++k) {
      int c = static_cast<int>(rng() % kNumLiwcClasses);
      cs = static_cast<ClassSet>(cs | (1u << c));
      ncs.insert(c);
    }
    if (i % 4 == 0) {
      std::string stem = w.substr(0, std::min<std::size_t>(w.size(), 2 + rng() % 3));
      dict.add_prefix(stem, cs);
      naive.prefs[stem].insert(ncs.begin(), ncs.end());
    } else {
      dict.add_literal(w, cs);
      naive.lits[w].insert(ncs.begin(), ncs.end());
    }
  }

  for (int iter = 0; iter < 1000; ++iter) {
    std::vector<std::string> uw, rw;
    std::vector<std::string> u_names, r_names;
    std::size_t un = 1 + rng() % 10, rn = 1 + rng() % 10;
    for (std::size_t i = 0; i < un; ++i) uw.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t i = 0; i < rn; ++i) rw.push_back(vocab[rng() % vocab.size()]);
    for (int k = 0; k < 2; ++k) {
      if (rng() % 3 == 0) {
        const char* nm = names[rng() % 4];
        uw.push_back(nm);
        u_names.push_back(nm);
      }
      if (rng() % 3 == 0) {
        const char* nm = names[rng() % 4];
        rw.push_back(nm);
        r_names.push_back(nm);
      }
    }
    std::string ut = testutil::join_words(uw), rt = testutil::join_words(rw);
    auto u = annotate_utterance(ut, dict, PropnMode::heuristic);
    auto r = annotate_utterance(rt, dict, PropnMode::heuristic);

    // oracle values from first principles
    auto lower = [](std::string s) {
      for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      return s;
    };
    std::set<std::string> u_types, r_types;
    for (const auto& w : uw) u_types.insert(lower(w));
    for (const auto& w : rw) r_types.insert(lower(w));
    std::size_t fresh = 0;
    for (const auto& t : u_types) fresh += r_types.count(t) ? 0 : 1;
    double want_nov = static_cast<double>(fresh) / static_cast<double>(u_types.size());

    std::set<std::string> u_prop, r_prop;
    for (const auto& n : u_names) u_prop.insert(lower(n));
    for (const auto& n : r_names) r_prop.insert(lower(n));
    double want_prop = 0.0;
    if (!u_prop.empty() || !r_prop.empty()) {
      std::size_t inter = 0;
      for (const auto& n : u_prop) inter += r_prop.count(n);
      want_prop = static_cast<double>(inter) /
                  static_cast<double>(u_prop.size() + r_prop.size() - inter);
    }

    double want_len = naive_lsm(static_cast<double>(uw.size()),
                                static_cast<double>(rw.size()));

    double want_liwc = 0.0;
    for (int c = 0; c < kNumLiwcClasses; ++c) {
      int cu = 0, cr = 0;
      for (const auto& w : uw) cu += naive.classes_of(lower(w)).count(c) ? 1 : 0;
      for (const auto& w : rw) cr += naive.classes_of(lower(w)).count(c) ? 1 : 0;
      double pu = 100.0 * cu / static_cast<double>(uw.size());
      double pr = 100.0 * cr / static_cast<double>(rw.size());
      want_liwc += (cu == 0 && cr == 0) ? 1.0 : naive_lsm(pu, pr);
    }
    want_liwc /= kNumLiwcClasses;

    if (token_novelty(u, r) != want_nov) return false;
    if (propn_overlap(u, r) != want_prop) return false;
    if (std::abs(utterance_length_convergence(u, r) - want_len) > 1e-12) return false;
    if (std::abs(liwc_agreement(u, r).mean - want_liwc) > 1e-12) return false;
  }
  return true;
}

// ---- criterion 3: statistics against a reference implementation ----

bool criterion_stats() {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> ab(0.1, 20.0);
  std::uniform_real_distribution<double> xs(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    double a = ab(rng), b = ab(rng), x = xs(rng);
    double got = regularized_incomplete_beta(a, b, x);
    double want = boost::math::ibeta(a, b, x);
    if (std::abs(got - want) > 1e-9) return false;
  }

  std::uniform_real_distribution<double> ts(-8.0, 8.0);
  std::uniform_real_distribution<double> dfs(1.0, 60.0);
  for (int i = 0; i < 100; ++i) {
    double t = ts(rng), df = dfs(rng);
    boost::math::students_t dist(df);
    double want = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    if (std::abs(student_t_two_sided_p(t, df) - want) > 1e-9) return false;
  }

  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < 100; ++i) {
    std::size_t n = 5 + rng() % 28;
    std::vector<double> a(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = xs(rng) + noise(rng);
      b[k] = xs(rng);
    }
    PairedTestResult res = paired_t_test(a, b);
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += a[k] - b[k];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double d = a[k] - b[k] - mean;
      ss += d * d;
    }
    double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) continue;
    double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t dist(static_cast<double>(n - 1));
    double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    if (std::abs(res.t_stat - t) > 1e-9) return false;
    if (std::abs(res.p_value - p) > 1e-9) return false;
  }

  // published correlation spot value: rho = -0.189 over 8 points -> p ~ 0.653
  double rho = -0.189, df = 6.0;
  double t = rho * std::sqrt(df / (1.0 - rho * rho));
  double p = student_t_two_sided_p(t, df);
  return std::abs(p - 0.653) < 0.01;
}

// ---- criteria 4 and 5: planted corpus with known structure ----

// Speaker Y reuses a private core vocabulary plus a couple of words from the
// X turn it answers; X turns are fresh words every time. Conversations never
// share words, so a cross-conversation draw is maximally novel.
std::vector<Conversation> planted_corpus(std::mt19937_64& rng, int n) {
  std::vector<Conversation> cs;
  cs.reserve(static_cast<std::size_t>(n));
  for (int ci = 0; ci < n; ++ci) {
    std::string tag = "p" + std::to_string(ci);
    std::vector<std::string> core;
    for (int k = 0; k < 10; ++k) core.push_back(tag + "core" + std::to_string(k));

    std::vector<std::string> texts;
    std::vector<std::string> prev_x;
    for (int t = 1; t <= 8; ++t) {
      std::vector<std::string> words;
      if (t % 2 == 1) {
        std::size_t cnt = 7 + rng() % 4;
        for (std::size_t k = 0; k < cnt; ++k) {
          words.push_back(tag + "t" + std::to_string(t) + "w" + std::to_string(k));
        }
        prev_x = words;
      } else {
        std::size_t copy = 1 + rng() % 3;
        for (std::size_t k = 0; k < copy; ++k) {
          words.push_back(prev_x[rng() % prev_x.size()]);
        }
        std::vector<std::string> pick = core;
        std::size_t keep = 5 + rng() % 3;
        for (std::size_t k = 0; k < keep; ++k) {
          std::swap(pick[k], pick[k + rng() % (pick.size() - k)]);
          words.push_back(pick[k]);
        }
        std::size_t fresh = 1 + rng() % 3;
        for (std::size_t k = 0; k < fresh; ++k) {
          words.push_back(tag + "t" + std::to_string(t) + "w" + std::to_string(k));
        }
      }
      texts.push_back(testutil::join_words(words));
    }
    cs.push_back(testutil::make_conv("plant-" + std::to_string(ci), texts));
  }
  return cs;
}

bool criterion_human_vs_random(const std::vector<Conversation>& cs,
                               const LiwcDictionary& dict) {
  auto human = human_baseline_records(cs, dict, PropnMode::heuristic);
  auto random = random_baseline_records(cs, dict, PropnMode::heuristic, 42);
  if (human.records.size() != random.records.size()) return false;

  const std::vector<double> alphas = {0.05, 0.001};
  auto cells =
      significance_matrix(human.records, random.records, "human", "random", alphas);
  const SignificanceCell& nov = cells[3];
  if (nov.metric_or_class != "token_novelty") return false;

  double mh = 0.0, mr = 0.0;
  for (const auto& r : human.records) mh += r.token_novelty;
  for (const auto& r : random.records) mr += r.token_novelty;
  mh /= static_cast<double>(human.records.size());
  mr /= static_cast<double>(random.records.size());

  return nov.direction == Direction::over && nov.alpha == 0.001 &&
         nov.p_value < 0.001 && mh < mr;
}

bool criterion_sawtooth(const std::vector<Conversation>& cs,
                        const LiwcDictionary& dict) {
  auto profiles = stepwise_profile(cs, nullptr, dict, PropnMode::heuristic, "human");
  const StepwiseProfile* nov = nullptr;
  for (const auto& p : profiles) {
    if (p.metric == "token_novelty") nov = &p;
  }
  if (nov == nullptr) return false;
  for (std::size_t off = 0; off < 5; ++off) {
    if (nov->n[off] != cs.size()) return false;
  }
  // same-speaker offsets 2 and 4 must be less novel than 1, 3, and 5
  for (std::size_t same : {1u, 3u}) {
    for (std::size_t other : {0u, 2u, 4u}) {
      if (!(nov->scores[same] < nov->scores[other])) return false;
    }
  }
  return true;
}

// ---- criterion 6: hermetic replay pipeline matches the goldens ----

bool criterion_golden() {
  auto t0 = std::chrono::steady_clock::now();
  testutil::TempDir td;
  const std::string corpus = td.file("corpus.jsonl");
  const std::string gen = td.file("gen.jsonl");
  const std::string records = td.file("records.jsonl");
  const std::string outdir = td.file("analysis");
  const std::string stepwise = td.file("stepwise.csv");
  const std::string dict = g_data_dir + "/fallback_liwc.dic";

  if (run_cli("ingest --input " + g_data_dir + "/mini_corpus.jsonl --out " + corpus) !=
      0) {
    return false;
  }
  if (run_cli("generate --corpus " + corpus + " --backend replay --replay " +
              g_data_dir + "/replay_small.jsonl --model demo-model --out " + gen) !=
      0) {
    return false;
  }
  if (run_cli("score --corpus " + corpus + " --dict " + dict +
              " --condition human --condition random --condition model"
              " --generations " +
              gen + " --out " + records) != 0) {
    return false;
  }
  if (run_cli("analyze --records " + records + " --out-dir " + outdir) != 0) {
    return false;
  }
  if (run_cli("stepwise --corpus " + corpus + " --dict " + dict + " --generations " +
              gen + " --out " + stepwise) != 0) {
    return false;
  }

  bool same =
      testutil::read_file(outdir + "/summary.csv") ==
          testutil::read_file(g_data_dir + "/golden/summary.csv") &&
      testutil::read_file(outdir + "/matrix.csv") ==
          testutil::read_file(g_data_dir + "/golden/matrix.csv") &&
      testutil::read_file(stepwise) ==
          testutil::read_file(g_data_dir + "/golden/stepwise.csv");
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
  return same && elapsed < 10000;
}

// ---- criterion 7: echo backend pins the convergence extreme ----

bool criterion_echo_extreme() {
  std::vector<Conversation> cs =
      preprocess_corpus(parse_corpus(g_data_dir + "/mini_corpus.jsonl"), 6);
  GenerationConfig cfg;
  cfg.backend.kind = BackendKind::mock_echo;
  cfg.model_name = "echo";
  GenerationOutcome out = complete_conversations(cs, cfg, nullptr, 2);
  if (out.hybrids.size() != cs.size() || !out.failures.empty()) return false;

  auto res = model_records(out.hybrids, testutil::tiny_dict(), PropnMode::heuristic,
                           "echo");
  if (res.records.empty()) return false;
  double nov = 0.0, len = 0.0;
  for (const auto& r : res.records) {
    nov += r.token_novelty;
    len += r.utterance_length_lsm;
  }
  nov /= static_cast<double>(res.records.size());
  len /= static_cast<double>(res.records.size());
  return nov == 0.0 && len == 1.0;
}

// ---- criterion 8: published-table reproduction on real data ----

bool criterion_table(bool& skipped) {
  const char* corpus_env = std::getenv("CONVERGELAB_DAILYDIALOG_JSONL");
  const char* dict_env = std::getenv("CONVERGELAB_LIWC_DIC");
  if (corpus_env == nullptr || dict_env == nullptr) {
    skipped = true;
    return true;
  }
  skipped = false;

  std::vector<Conversation> cs = downsample(
      preprocess_corpus(parse_corpus(corpus_env), 6), 1000, 42);
  LiwcDictionary dict = load_liwc_dict(dict_env);

  auto human = human_baseline_records(cs, dict, PropnMode::heuristic);
  auto random = random_baseline_records(cs, dict, PropnMode::heuristic, 42);

  auto means = [](const std::vector<ConvergenceRecord>& rs) {
    std::array<double, 4> m{};
    for (const auto& r : rs) {
      m[0] += r.utterance_length_lsm;
      m[1] += r.liwc_mean;
      m[2] += r.propn_overlap;
      m[3] += r.token_novelty;
    }
    for (double& v : m) v /= static_cast<double>(rs.size());
    return m;
  };
  std::array<double, 4> h = means(human.records);
  std::array<double, 4> r = means(random.records);
  const double eh[4] = {0.69102, 0.53759, 0.01460, 0.75742};
  const double er[4] = {0.66348, 0.50481, 0.00052, 0.78874};
  for (int k = 0; k < 4; ++k) {
    std::fprintf(stderr, "  table %s: human %.5f (want %.5f) random %.5f (want %.5f)\n",
                 kMetricNames[k], h[static_cast<std::size_t>(k)], eh[k],
                 r[static_cast<std::size_t>(k)], er[k]);
    if (std::abs(h[static_cast<std::size_t>(k)] - eh[k]) > 0.03) return false;
    if (std::abs(r[static_cast<std::size_t>(k)] - er[k]) > 0.03) return false;
  }
  return true;
}

int report(int idx, const char* label, bool ok) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, label);
  std::fflush(stdout);
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <data_dir> <cli_path>\n", argv[0]);
    return 2;
  }
  g_data_dir = argv[1];
  g_cli = argv[2];

  int failures = 0;
  failures += report(1, "metric formulas hold over random inputs",
                     criterion_formulas());
  failures += report(2, "metrics match an independent oracle on 1000 pairs",
                     criterion_oracle());
  failures += report(3, "statistics match the reference implementation",
                     criterion_stats());

  std::mt19937_64 rng(404);
  auto planted = planted_corpus(rng, 200);
  auto dict = testutil::tiny_dict();
  failures += report(4, "human responses beat the random control on novelty",
                     criterion_human_vs_random(planted, dict));
  failures += report(5, "stepwise novelty is lowest at same-speaker offsets",
                     criterion_sawtooth(planted, dict));

  failures += report(6, "replay pipeline reproduces the golden reports",
                     criterion_golden());
  failures += report(7, "echo backend scores as a perfect converger",
                     criterion_echo_extreme());

  bool skipped = false;
  bool table_ok = criterion_table(skipped);
  if (skipped) {
    std::printf("[SKIP] criterion 8: published-table reproduction "
                "(set CONVERGELAB_DAILYDIALOG_JSONL and CONVERGELAB_LIWC_DIC)\n");
  } else {
    failures += report(8, "published-table means reproduce within 0.03", table_ok);
  }
  return failures;
}
