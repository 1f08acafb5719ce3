#include "convergelab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "convergelab/analysis.hpp"
#include "convergelab/annotate.hpp"
#include "convergelab/corpus.hpp"
#include "convergelab/genharness.hpp"
#include "convergelab/metrics.hpp"
#include "convergelab/report.hpp"
#include "convergelab/stats.hpp"

namespace convergelab {

namespace {

PropnMode parse_propn(const std::string& s) {
  if (s == "heuristic") return PropnMode::heuristic;
  if (s == "external") return PropnMode::external;
  throw AnnotateError("unknown propn mode '" + s + "'");
}

int guarded(const char* stage, const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    std::cerr << "convergelab " << stage << ": " << e.what() << "\n";
    return 1;
  }
}

// ---- ingest ----

struct IngestOpts {
  std::string input;
  std::string format = "jsonl";
  std::size_t cap = 1000;
  std::uint64_t seed = kDefaultSeed;
  int min_turns = 6;
  int priming_turns = 5;
  std::string out;
};

int run_ingest(const IngestOpts& o) {
  std::vector<Conversation> raw = parse_corpus(o.input);
  std::vector<Conversation> kept = preprocess_corpus(raw, o.min_turns);
  std::vector<Conversation> sampled = downsample(kept, o.cap, o.seed);
  write_corpus(sampled, o.out);

  CorpusStats st = compute_corpus_stats(sampled, o.priming_turns);
  std::printf("conversations: %zu\n", st.conversation_count);
  std::printf("avg turns: %.2f\n", st.avg_turns);
  std::printf("avg turn length: %.2f\n", st.avg_turn_length);
  std::printf("replaced turns: %zu\n", st.replaced_turn_count);
  return 0;
}

// ---- generate ----

struct GenerateOpts {
  std::string corpus;
  std::string backend = "replay";
  std::string endpoint;
  std::string auth_env;
  std::string replay;
  std::string model;
  std::string out;
  std::string cache_dir;
  int workers = 4;
  GenerationConfig cfg;  // instruction/temperature/top_p/max_tokens/priming_turns
  std::optional<std::uint64_t> gen_seed;
};

int run_generate(const GenerateOpts& o) {
  std::vector<Conversation> cs =
      preprocess_corpus(parse_corpus(o.corpus), o.cfg.priming_turns + 1);

  GenerationConfig cfg = o.cfg;
  cfg.model_name = o.model;
  cfg.seed = o.gen_seed;
  if (o.backend == "http_chat") {
    cfg.backend.kind = BackendKind::http_chat;
    cfg.backend.endpoint_url = o.endpoint;
    cfg.backend.auth_env_var = o.auth_env;
  } else if (o.backend == "replay") {
    cfg.backend.kind = BackendKind::replay;
    cfg.backend.replay_path = o.replay;
  } else if (o.backend == "mock_echo") {
    cfg.backend.kind = BackendKind::mock_echo;
  } else {
    throw GenerationError("unknown backend '" + o.backend + "'");
  }

  std::optional<DirectoryLock> lock;
  std::optional<CompletionCache> cache;
  if (!o.cache_dir.empty()) {
    lock.emplace(o.cache_dir);
    cache.emplace(o.cache_dir, cs.empty() ? "" : cs.front().dataset, cfg.model_name);
  }

  GenerationOutcome outcome =
      complete_conversations(cs, cfg, cache ? &*cache : nullptr, o.workers);

  std::vector<CompletionRow> rows;
  std::size_t completions = 0;
  for (const HybridConversation& h : outcome.hybrids) {
    for (const auto& [t, text] : h.completions) {
      rows.push_back(CompletionRow{h.base.id, t, h.model_name, text});
      ++completions;
    }
  }
  write_completions(rows, o.out);

  for (const CompletionFailure& f : outcome.failures) {
    std::cerr << "failed: conversation " << f.conversation_id;
    if (f.turn > 0) std::cerr << " turn " << f.turn;
    std::cerr << ": " << f.reason << "\n";
  }
  std::printf("completed %zu/%zu conversations (%zu completions, %zu backend calls)\n",
              outcome.hybrids.size(), cs.size(), completions, outcome.backend_calls);
  if (!cs.empty() && outcome.hybrids.empty()) {
    throw GenerationError("all conversations failed");
  }
  return 0;
}

// ---- score ----

struct ScoreOpts {
  std::string corpus;
  std::string dict;
  std::string propn = "heuristic";
  std::vector<std::string> conditions;
  std::string generations;
  std::string model_label;
  std::uint64_t seed = kDefaultSeed;
  int priming_turns = 5;
  bool serial = false;
  std::string out;
  std::string usage_out;
};

// Groups completion rows into hybrids over the corpus; conversations with
// incomplete coverage are reported on stderr and skipped.
std::pair<std::vector<HybridConversation>, std::string> hybrids_from_file(
    const std::vector<Conversation>& cs, const std::string& path,
    const std::string& model_label, int m) {
  std::vector<CompletionRow> rows = read_completions(path);

  std::set<std::string> models;
  for (const CompletionRow& r : rows) models.insert(r.model);
  std::string label = model_label;
  if (label.empty()) {
    if (models.size() > 1) {
      throw AnalysisError(path + " holds completions for " +
                          std::to_string(models.size()) +
                          " models; pass --model to pick one");
    }
    label = models.empty() ? "model" : *models.begin();
  }

  std::map<std::string, std::map<int, std::string>> by_conv;
  for (CompletionRow& r : rows) {
    if (r.model != label) continue;
    by_conv[r.conversation_id][r.turn] = std::move(r.text);
  }

  std::vector<HybridConversation> hs;
  for (const Conversation& c : cs) {
    auto it = by_conv.find(c.id);
    if (it == by_conv.end()) {
      std::cerr << "score: no completions for conversation " << c.id << "; skipped\n";
      continue;
    }
    HybridConversation h;
    h.base = c;
    h.model_name = label;
    bool complete = true;
    for (int t : replaced_turn_indices(c, m)) {
      auto ct = it->second.find(t);
      if (ct == it->second.end()) {
        std::cerr << "score: conversation " << c.id << " missing turn " << t
                  << "; skipped\n";
        complete = false;
        break;
      }
      h.completions[t] = ct->second;
    }
    if (complete) hs.push_back(std::move(h));
  }
  return {std::move(hs), label};
}

void write_usage_csv(const std::vector<Conversation>& cs,
                     const std::vector<HybridConversation>& hs,
                     const std::string& model_label, const LiwcDictionary& dict,
                     PropnMode mode, int m, bool want_human, bool want_model,
                     const std::string& path) {
  using Pair = std::pair<AnnotatedUtterance, AnnotatedUtterance>;
  auto annotate_gold = [&](const Turn& t) {
    return annotate_utterance(t.text, dict, mode,
                              t.has_propn_sidecar ? &t.propn_sidecar : nullptr);
  };

  std::vector<std::pair<std::string, std::vector<Pair>>> groups;
  if (want_human) {
    std::vector<Pair> pairs;
    for (const Conversation& c : cs) {
      for (int t : replaced_turn_indices(c, m)) {
        Pair p{annotate_gold(c.turns[static_cast<std::size_t>(t - 1)]),
               annotate_gold(c.turns[static_cast<std::size_t>(t - 2)])};
        if (p.first.token_count > 0 && p.second.token_count > 0) {
          pairs.push_back(std::move(p));
        }
      }
    }
    groups.emplace_back("human", std::move(pairs));
  }
  if (want_model) {
    std::vector<Pair> pairs;
    for (const HybridConversation& h : hs) {
      for (const auto& [t, text] : h.completions) {
        Pair p{annotate_utterance(text, dict, PropnMode::heuristic),
               annotate_gold(h.base.turns[static_cast<std::size_t>(t - 2)])};
        if (p.first.token_count > 0 && p.second.token_count > 0) {
          pairs.push_back(std::move(p));
        }
      }
    }
    groups.emplace_back(model_label, std::move(pairs));
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError("cannot write " + path);
  out << "condition,class,prior,rate\n";
  static const PriorCondition kPriors[] = {PriorCondition::present,
                                           PriorCondition::absent,
                                           PriorCondition::any};
  static const char* kPriorNames[] = {"present", "absent", "any"};
  for (const auto& [label, pairs] : groups) {
    for (int k = 0; k < kNumLiwcClasses; ++k) {
      for (int pi = 0; pi < 3; ++pi) {
        double rate;
        try {
          rate = class_usage_rate(pairs, static_cast<LiwcClass>(k), kPriors[pi]);
        } catch (const AnalysisError&) {
          continue;  // empty restriction, no defined rate
        }
        out << label << "," << liwc_class_name(static_cast<LiwcClass>(k)) << ","
            << kPriorNames[pi] << "," << format_fixed5(rate) << "\n";
      }
    }
  }
}

int run_score(const ScoreOpts& o) {
  std::vector<Conversation> cs =
      preprocess_corpus(parse_corpus(o.corpus), o.priming_turns + 1);
  LiwcDictionary dict = load_liwc_dict(o.dict);
  PropnMode mode = parse_propn(o.propn);
  Execution exec = o.serial ? Execution::serial : Execution::parallel;

  std::set<std::string> wanted(o.conditions.begin(), o.conditions.end());
  for (const std::string& c : wanted) {
    if (c != "human" && c != "random" && c != "model") {
      throw AnalysisError("unknown condition '" + c + "'");
    }
  }
  if (wanted.empty()) wanted = {"human", "random"};
  if (wanted.count("model") && o.generations.empty()) {
    throw AnalysisError("condition model needs --generations");
  }

  std::vector<ConvergenceRecord> all;
  std::size_t degenerate = 0;

  std::vector<HybridConversation> hs;
  std::string model_label;
  if (wanted.count("human")) {
    AssemblyResult r = human_baseline_records(cs, dict, mode, o.priming_turns, exec);
    degenerate += r.degenerate_skipped;
    std::printf("human: %zu records\n", r.records.size());
    all.insert(all.end(), r.records.begin(), r.records.end());
  }
  if (wanted.count("random")) {
    AssemblyResult r =
        random_baseline_records(cs, dict, mode, o.seed, o.priming_turns, exec);
    degenerate += r.degenerate_skipped;
    std::printf("random: %zu records\n", r.records.size());
    all.insert(all.end(), r.records.begin(), r.records.end());
  }
  if (wanted.count("model")) {
    auto [hybrids, label] =
        hybrids_from_file(cs, o.generations, o.model_label, o.priming_turns);
    hs = std::move(hybrids);
    model_label = label;
    AssemblyResult r = model_records(hs, dict, mode, label, o.priming_turns, exec);
    degenerate += r.degenerate_skipped;
    std::printf("model %s: %zu records\n", label.c_str(), r.records.size());
    all.insert(all.end(), r.records.begin(), r.records.end());
  }

  sort_records(all);
  write_records(all, o.out);
  if (degenerate > 0) {
    std::fprintf(stderr, "score: skipped %zu degenerate pairs\n", degenerate);
  }

  if (!o.usage_out.empty()) {
    write_usage_csv(cs, hs, model_label, dict, mode, o.priming_turns,
                    wanted.count("human") > 0, wanted.count("model") > 0,
                    o.usage_out);
  }
  return 0;
}

// ---- analyze / report ----

struct AnalyzeOpts {
  std::vector<std::string> records;
  std::string out_dir;
  std::vector<double> alphas;
  bool per_class = false;
};

std::vector<ConvergenceRecord> load_and_intersect(
    const std::vector<std::string>& paths) {
  std::vector<ConvergenceRecord> all;
  for (const std::string& p : paths) {
    std::vector<ConvergenceRecord> part = read_records(p);
    all.insert(all.end(), part.begin(), part.end());
  }
  sort_records(all);
  return intersect_conditions(all);
}

std::vector<std::string> condition_labels(std::span<const ConvergenceRecord> records) {
  bool has_human = false, has_random = false;
  std::set<std::string> models;
  for (const ConvergenceRecord& r : records) {
    if (r.condition == Condition::human) has_human = true;
    else if (r.condition == Condition::random_control) has_random = true;
    else models.insert(r.model_name);
  }
  std::vector<std::string> out;
  if (has_human) out.push_back("human");
  if (has_random) out.push_back("random");
  out.insert(out.end(), models.begin(), models.end());
  return out;
}

std::vector<ConvergenceRecord> filter_label(std::span<const ConvergenceRecord> records,
                                            const std::string& label) {
  std::vector<ConvergenceRecord> out;
  for (const ConvergenceRecord& r : records) {
    std::string l = r.condition == Condition::model ? r.model_name
                                                    : condition_name(r.condition);
    if (l == label) out.push_back(r);
  }
  return out;
}

// Every non-human condition is tested against the human baseline; models are
// additionally tested against the random control.
std::vector<SignificanceCell> build_matrix(std::span<const ConvergenceRecord> records,
                                           std::span<const double> alphas,
                                           bool per_class) {
  std::vector<std::string> labels = condition_labels(records);
  bool has_human =
      std::find(labels.begin(), labels.end(), "human") != labels.end();
  bool has_random =
      std::find(labels.begin(), labels.end(), "random") != labels.end();

  std::vector<ConvergenceRecord> human, random;
  if (has_human) human = filter_label(records, "human");
  if (has_random) random = filter_label(records, "random");

  std::vector<SignificanceCell> cells;
  auto run_pair = [&](const std::vector<ConvergenceRecord>& test,
                      const std::string& test_label,
                      const std::vector<ConvergenceRecord>& base,
                      const std::string& base_label) {
    auto head = significance_matrix(test, base, test_label, base_label, alphas, false);
    cells.insert(cells.end(), head.begin(), head.end());
    if (per_class) {
      auto pc = significance_matrix(test, base, test_label, base_label, alphas, true);
      cells.insert(cells.end(), pc.begin(), pc.end());
    }
  };

  for (const std::string& label : labels) {
    if (label == "human" || !has_human) continue;
    run_pair(filter_label(records, label), label, human, "human");
  }
  if (has_random) {
    for (const std::string& label : labels) {
      if (label == "human" || label == "random") continue;
      run_pair(filter_label(records, label), label, random, "random");
    }
  }
  return cells;
}

int run_analyze(const AnalyzeOpts& o) {
  std::vector<ConvergenceRecord> records = load_and_intersect(o.records);
  if (records.empty()) throw AnalysisError("no records survived intersection");

  std::vector<double> alphas = o.alphas;
  if (alphas.empty()) alphas = {0.05, 0.001};

  std::vector<SummaryRow> summary = summarize_records(records);
  std::vector<SignificanceCell> cells = build_matrix(records, alphas, o.per_class);

  std::filesystem::create_directories(o.out_dir);
  write_summary_csv(summary, o.out_dir + "/summary.csv");
  write_matrix_csv(cells, o.out_dir + "/matrix.csv");

  nlohmann::ordered_json j;
  j["records"] = records.size();
  j["alphas"] = alphas;
  j["summary"] = nlohmann::ordered_json::array();
  for (const SummaryRow& r : summary) {
    j["summary"].push_back({{"condition", r.condition},
                            {"metric", r.metric},
                            {"mean", std::stod(format_fixed5(r.mean))},
                            {"n", r.n}});
  }
  j["matrix"] = nlohmann::ordered_json::array();
  for (const SignificanceCell& c : cells) {
    j["matrix"].push_back({{"model", c.model_name},
                           {"baseline", c.baseline},
                           {"metric_or_class", c.metric_or_class},
                           {"direction", direction_name(c.direction)},
                           {"p", std::stod(format_fixed5(c.p_value))},
                           {"alpha", c.alpha}});
  }
  std::ofstream jout(o.out_dir + "/analysis.json", std::ios::binary);
  if (!jout) throw ReportError("cannot write " + o.out_dir + "/analysis.json");
  jout << j.dump(2) << "\n";

  std::cout << render_summary_table(summary, cells);
  return 0;
}

// ---- stepwise ----

struct StepwiseOpts {
  std::string corpus;
  std::string dict;
  std::string propn = "heuristic";
  std::string generations;
  std::string model_label;
  bool serial = false;
  std::string out;
};

std::vector<StepwiseProfile> build_stepwise(const StepwiseOpts& o) {
  std::vector<Conversation> cs = preprocess_corpus(parse_corpus(o.corpus), 6);
  LiwcDictionary dict = load_liwc_dict(o.dict);
  PropnMode mode = parse_propn(o.propn);
  Execution exec = o.serial ? Execution::serial : Execution::parallel;

  std::vector<StepwiseProfile> profiles =
      stepwise_profile(cs, nullptr, dict, mode, "human", exec);

  if (!o.generations.empty()) {
    auto [hs, label] = hybrids_from_file(cs, o.generations, o.model_label, 5);
    std::map<std::string, std::string> at6;
    for (const HybridConversation& h : hs) {
      auto it = h.completions.find(6);
      if (it != h.completions.end()) at6[h.base.id] = it->second;
    }
    std::vector<StepwiseProfile> mp =
        stepwise_profile(cs, &at6, dict, mode, label, exec);
    profiles.insert(profiles.end(), mp.begin(), mp.end());
  }
  return profiles;
}

int run_stepwise(const StepwiseOpts& o) {
  std::vector<StepwiseProfile> profiles = build_stepwise(o);
  write_stepwise_csv(profiles, o.out);
  for (const StepwiseProfile& p : profiles) {
    if (p.metric != "token_novelty") continue;
    std::printf("%s token_novelty:", p.condition.c_str());
    for (std::size_t off = 0; off < p.scores.size(); ++off) {
      std::printf(" %s", format_fixed5(p.scores[off]).c_str());
    }
    std::printf("\n");
  }
  return 0;
}

// ---- report ----

struct ReportOpts {
  std::string kind;
  std::vector<std::string> records;
  std::vector<double> alphas;
  bool per_class = false;
  StepwiseOpts stepwise;  // corpus/dict/propn/generations for --kind stepwise
  std::string out;
};

int run_report(const ReportOpts& o) {
  if (o.kind == "summary" || o.kind == "matrix") {
    if (o.records.empty()) {
      throw ReportError("report --kind " + o.kind + " needs --records");
    }
    std::vector<ConvergenceRecord> records = load_and_intersect(o.records);
    if (records.empty()) throw AnalysisError("no records survived intersection");
    if (o.kind == "summary") {
      write_summary_csv(summarize_records(records), o.out);
    } else {
      std::vector<double> alphas = o.alphas;
      if (alphas.empty()) alphas = {0.05, 0.001};
      write_matrix_csv(build_matrix(records, alphas, o.per_class), o.out);
    }
    return 0;
  }
  if (o.kind == "stepwise") {
    if (o.stepwise.corpus.empty() || o.stepwise.dict.empty()) {
      throw ReportError("report --kind stepwise needs --corpus and --dict");
    }
    StepwiseOpts so = o.stepwise;
    so.out = o.out;
    write_stepwise_csv(build_stepwise(so), o.out);
    return 0;
  }
  throw ReportError("unknown report kind '" + o.kind + "'");
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"measure linguistic convergence of dialogue responses"};
  app.name("convergelab");
  app.require_subcommand(1);

  IngestOpts ing;
  CLI::App* c_ing = app.add_subcommand("ingest", "normalize a corpus to canonical JSONL");
  c_ing->add_option("--input", ing.input, "source corpus JSONL")->required()
      ->check(CLI::ExistingFile);
  c_ing->add_option("--format", ing.format, "input format")
      ->check(CLI::IsMember({"jsonl"}));
  c_ing->add_option("--cap", ing.cap, "max conversations to keep");
  c_ing->add_option("--seed", ing.seed, "downsampling seed");
  c_ing->add_option("--min-turns", ing.min_turns, "drop shorter conversations");
  c_ing->add_option("--priming-turns", ing.priming_turns, "context turns before replacement");
  c_ing->add_option("--out", ing.out, "canonical corpus path")->required();

  GenerateOpts gen;
  CLI::App* c_gen = app.add_subcommand("generate", "complete replaced turns via a backend");
  c_gen->add_option("--corpus", gen.corpus, "canonical corpus JSONL")->required()
      ->check(CLI::ExistingFile);
  c_gen->add_option("--backend", gen.backend, "http_chat | replay | mock_echo")
      ->check(CLI::IsMember({"http_chat", "replay", "mock_echo"}));
  c_gen->add_option("--endpoint", gen.endpoint, "chat-completions URL (http_chat)");
  c_gen->add_option("--auth-env", gen.auth_env, "env var holding the bearer token");
  c_gen->add_option("--replay", gen.replay, "replay JSONL (replay backend)");
  c_gen->add_option("--model", gen.model, "model name")->required();
  c_gen->add_option("--out", gen.out, "completions JSONL path")->required();
  c_gen->add_option("--cache-dir", gen.cache_dir, "completion cache directory");
  c_gen->add_option("--workers", gen.workers, "worker threads");
  c_gen->add_option("--instruction", gen.cfg.instruction, "prompt instruction line");
  c_gen->add_option("--priming-turns", gen.cfg.priming_turns, "context turns before replacement");
  c_gen->add_option("--temperature", gen.cfg.temperature, "sampling temperature");
  c_gen->add_option("--top-p", gen.cfg.top_p, "nucleus sampling mass");
  c_gen->add_option("--max-tokens", gen.cfg.max_tokens, "completion length limit");
  c_gen->add_option("--gen-seed", gen.gen_seed, "sampling seed forwarded to the backend");

  ScoreOpts sco;
  CLI::App* c_sco = app.add_subcommand("score", "compute convergence records");
  c_sco->add_option("--corpus", sco.corpus, "canonical corpus JSONL")->required()
      ->check(CLI::ExistingFile);
  c_sco->add_option("--dict", sco.dict, "LIWC-format dictionary")->required()
      ->check(CLI::ExistingFile);
  c_sco->add_option("--propn", sco.propn, "heuristic | external")
      ->check(CLI::IsMember({"heuristic", "external"}));
  c_sco->add_option("--condition", sco.conditions,
                    "condition to score (repeatable): human, random, model");
  c_sco->add_option("--generations", sco.generations, "completions JSONL (model)")
      ->check(CLI::ExistingFile);
  c_sco->add_option("--model", sco.model_label, "model label in the generations file");
  c_sco->add_option("--seed", sco.seed, "random-control seed");
  c_sco->add_option("--priming-turns", sco.priming_turns, "context turns before replacement");
  c_sco->add_flag("--serial", sco.serial, "single-threaded scoring");
  c_sco->add_option("--out", sco.out, "records JSONL path")->required();
  c_sco->add_option("--usage-out", sco.usage_out, "class usage-rate CSV path");

  AnalyzeOpts ana;
  CLI::App* c_ana = app.add_subcommand("analyze", "summaries and significance tests");
  c_ana->add_option("--records", ana.records, "records JSONL (repeatable)")->required()
      ->check(CLI::ExistingFile);
  c_ana->add_option("--out-dir", ana.out_dir, "output directory")->required();
  c_ana->add_option("--alpha", ana.alphas, "significance level (repeatable)");
  c_ana->add_flag("--per-class", ana.per_class, "per-LIWC-class significance cells");

  StepwiseOpts stw;
  CLI::App* c_stw = app.add_subcommand("stepwise", "convergence against turns 1..5");
  c_stw->add_option("--corpus", stw.corpus, "canonical corpus JSONL")->required()
      ->check(CLI::ExistingFile);
  c_stw->add_option("--dict", stw.dict, "LIWC-format dictionary")->required()
      ->check(CLI::ExistingFile);
  c_stw->add_option("--propn", stw.propn, "heuristic | external")
      ->check(CLI::IsMember({"heuristic", "external"}));
  c_stw->add_option("--generations", stw.generations, "completions JSONL")
      ->check(CLI::ExistingFile);
  c_stw->add_option("--model", stw.model_label, "model label in the generations file");
  c_stw->add_flag("--serial", stw.serial, "single-threaded scoring");
  c_stw->add_option("--out", stw.out, "stepwise CSV path")->required();

  ReportOpts rep;
  CLI::App* c_rep = app.add_subcommand("report", "emit one CSV report");
  c_rep->add_option("--kind", rep.kind, "summary | matrix | stepwise")->required()
      ->check(CLI::IsMember({"summary", "matrix", "stepwise"}));
  c_rep->add_option("--records", rep.records, "records JSONL (summary/matrix)")
      ->check(CLI::ExistingFile);
  c_rep->add_option("--alpha", rep.alphas, "significance level (repeatable)");
  c_rep->add_flag("--per-class", rep.per_class, "per-LIWC-class cells (matrix)");
  c_rep->add_option("--corpus", rep.stepwise.corpus, "canonical corpus JSONL (stepwise)");
  c_rep->add_option("--dict", rep.stepwise.dict, "dictionary (stepwise)");
  c_rep->add_option("--propn", rep.stepwise.propn, "heuristic | external")
      ->check(CLI::IsMember({"heuristic", "external"}));
  c_rep->add_option("--generations", rep.stepwise.generations,
                    "completions JSONL (stepwise)");
  c_rep->add_option("--model", rep.stepwise.model_label,
                    "model label in the generations file");
  c_rep->add_flag("--serial", rep.stepwise.serial, "single-threaded scoring");
  c_rep->add_option("--out", rep.out, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*c_ing) return guarded("ingest", [&] { return run_ingest(ing); });
  if (*c_gen) return guarded("generate", [&] { return run_generate(gen); });
  if (*c_sco) return guarded("score", [&] { return run_score(sco); });
  if (*c_ana) return guarded("analyze", [&] { return run_analyze(ana); });
  if (*c_stw) return guarded("stepwise", [&] { return run_stepwise(stw); });
  if (*c_rep) return guarded("report", [&] { return run_report(rep); });
  return 1;
}

}  // namespace convergelab
