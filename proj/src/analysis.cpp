#include "convergelab/analysis.hpp"

#include <algorithm>
#include <random>
#include <set>

namespace convergelab {

namespace {

// One (response, reference) scoring job. Slots are precomputed serially and
// scored independently; the reduction walks them in slot order, so the
// serial and OpenMP paths emit byte-identical record streams.
struct Slot {
  const std::string* u_text = nullptr;
  const std::string* ref_text = nullptr;
  const std::vector<std::string>* u_sidecar = nullptr;
  const std::vector<std::string>* ref_sidecar = nullptr;
  PropnMode u_mode = PropnMode::heuristic;
  PropnMode ref_mode = PropnMode::heuristic;
  PairMeta meta;
};

template <class Fn>
void run_slots(std::size_t n, Execution exec, Fn&& fn) {
  if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      fn(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) fn(i);
  }
}

AssemblyResult assemble(const std::vector<Slot>& slots, const LiwcDictionary& dict,
                        Execution exec) {
  std::vector<ConvergenceRecord> recs(slots.size());
  std::vector<std::uint8_t> ok(slots.size(), 0);
  std::vector<std::uint8_t> degen(slots.size(), 0);
  std::vector<std::string> errs(slots.size());

  run_slots(slots.size(), exec, [&](std::size_t i) {
    const Slot& s = slots[i];
    try {
      AnnotatedUtterance u = annotate_utterance(*s.u_text, dict, s.u_mode, s.u_sidecar);
      AnnotatedUtterance ref =
          annotate_utterance(*s.ref_text, dict, s.ref_mode, s.ref_sidecar);
      if (u.token_count == 0 || ref.token_count == 0) {
        degen[i] = 1;
        return;
      }
      recs[i] = score_pair(u, ref, s.meta);
      ok[i] = 1;
    } catch (const DegenerateUtterance&) {
      degen[i] = 1;
    } catch (const std::exception& e) {
      errs[i] = e.what();
    }
  });

  AssemblyResult out;
  out.records.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!errs[i].empty()) throw AnalysisError(errs[i]);
    if (degen[i]) {
      ++out.degenerate_skipped;
    } else if (ok[i]) {
      out.records.push_back(std::move(recs[i]));
    }
  }
  return out;
}

const std::vector<std::string>* turn_sidecar(const Turn& t) {
  return t.has_propn_sidecar ? &t.propn_sidecar : nullptr;
}

double metric_value(const ConvergenceRecord& r, std::string_view name) {
  if (name == "utterance_length") return r.utterance_length_lsm;
  if (name == "liwc_mean") return r.liwc_mean;
  if (name == "propn_overlap") return r.propn_overlap;
  if (name == "token_novelty") return r.token_novelty;
  for (int k = 0; k < kNumLiwcClasses; ++k) {
    if (name == liwc_class_name(static_cast<LiwcClass>(k))) {
      return r.liwc_per_class[static_cast<std::size_t>(k)];
    }
  }
  throw AnalysisError("unknown metric: " + std::string(name));
}

std::string condition_label(const ConvergenceRecord& r) {
  if (r.condition == Condition::model) return r.model_name;
  return condition_name(r.condition);
}

}  // namespace

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::over: return "over";
    case Direction::under: return "under";
    case Direction::ns: return "ns";
  }
  return "?";
}

AssemblyResult human_baseline_records(const std::vector<Conversation>& cs,
                                      const LiwcDictionary& dict, PropnMode mode,
                                      int m, Execution exec) {
  std::vector<Slot> slots;
  for (const Conversation& c : cs) {
    for (int t : replaced_turn_indices(c, m)) {
      const Turn& u = c.turns[static_cast<std::size_t>(t - 1)];
      const Turn& ref = c.turns[static_cast<std::size_t>(t - 2)];
      Slot s;
      s.u_text = &u.text;
      s.ref_text = &ref.text;
      s.u_sidecar = turn_sidecar(u);
      s.ref_sidecar = turn_sidecar(ref);
      s.u_mode = mode;
      s.ref_mode = mode;
      s.meta = PairMeta{c.id, t, Condition::human, ""};
      slots.push_back(s);
    }
  }
  return assemble(slots, dict, exec);
}

AssemblyResult random_baseline_records(const std::vector<Conversation>& cs,
                                       const LiwcDictionary& dict, PropnMode mode,
                                       std::uint64_t seed, int m, Execution exec) {
  if (cs.size() < 2) {
    throw AnalysisError("random baseline needs at least 2 conversations");
  }
  // prefix[i] = turns in conversations 0..i-1, for mapping pool draws back
  // to (conversation, turn)
  std::vector<std::size_t> prefix(cs.size() + 1, 0);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    prefix[i + 1] = prefix[i] + cs[i].turns.size();
  }
  const std::size_t total = prefix.back();

  std::vector<Slot> slots;
  std::mt19937_64 rng(seed);
  for (std::size_t ci = 0; ci < cs.size(); ++ci) {
    const Conversation& c = cs[ci];
    const std::size_t pool = total - c.turns.size();
    if (pool == 0) throw AnalysisError("empty draw pool for conversation " + c.id);
    for (int t : replaced_turn_indices(c, m)) {
      std::size_t k = static_cast<std::size_t>(rng() % pool);
      // skip over this conversation's own block of the corpus-order pool
      std::size_t g = k < prefix[ci] ? k : k + c.turns.size();
      std::size_t cj =
          static_cast<std::size_t>(std::upper_bound(prefix.begin(), prefix.end(), g) -
                                   prefix.begin()) -
          1;
      const Turn& u = cs[cj].turns[g - prefix[cj]];
      const Turn& ref = c.turns[static_cast<std::size_t>(t - 2)];
      Slot s;
      s.u_text = &u.text;
      s.ref_text = &ref.text;
      s.u_sidecar = turn_sidecar(u);
      s.ref_sidecar = turn_sidecar(ref);
      s.u_mode = mode;
      s.ref_mode = mode;
      s.meta = PairMeta{c.id, t, Condition::random_control, ""};
      slots.push_back(s);
    }
  }
  return assemble(slots, dict, exec);
}

AssemblyResult model_records(const std::vector<HybridConversation>& hs,
                             const LiwcDictionary& dict, PropnMode mode,
                             const std::string& model_name, int m, Execution exec) {
  std::vector<Slot> slots;
  for (const HybridConversation& h : hs) {
    for (int t : replaced_turn_indices(h.base, m)) {
      auto it = h.completions.find(t);
      if (it == h.completions.end()) {
        throw AnalysisError("conversation " + h.base.id + ": no completion at turn " +
                            std::to_string(t));
      }
      const Turn& ref = h.base.turns[static_cast<std::size_t>(t - 2)];
      Slot s;
      s.u_text = &it->second;
      s.ref_text = &ref.text;
      // completions carry no annotations, so the heuristic tagger applies to
      // them under either mode
      s.u_sidecar = nullptr;
      s.u_mode = PropnMode::heuristic;
      s.ref_sidecar = turn_sidecar(ref);
      s.ref_mode = mode;
      s.meta = PairMeta{h.base.id, t, Condition::model, model_name};
      slots.push_back(s);
    }
  }
  return assemble(slots, dict, exec);
}

std::vector<SignificanceCell> significance_matrix(
    std::span<const ConvergenceRecord> test_recs,
    std::span<const ConvergenceRecord> baseline_recs, const std::string& test_label,
    const std::string& baseline_label, std::span<const double> alphas,
    bool per_class) {
  std::map<std::pair<std::string, int>, std::size_t> base_idx;
  for (std::size_t i = 0; i < baseline_recs.size(); ++i) {
    auto key = std::make_pair(baseline_recs[i].conversation_id, baseline_recs[i].turn);
    if (!base_idx.emplace(key, i).second) {
      throw AnalysisError("duplicate baseline record for " + key.first + ":" +
                          std::to_string(key.second));
    }
  }
  if (test_recs.size() != baseline_recs.size()) {
    throw AnalysisError("record sets are not aligned: " +
                        std::to_string(test_recs.size()) + " vs " +
                        std::to_string(baseline_recs.size()));
  }

  std::vector<std::string> names;
  if (per_class) {
    for (int k = 0; k < kNumLiwcClasses; ++k) {
      names.push_back(liwc_class_name(static_cast<LiwcClass>(k)));
    }
  } else {
    names.assign(std::begin(kMetricNames), std::end(kMetricNames));
  }

  std::vector<SignificanceCell> cells;
  for (const std::string& name : names) {
    std::vector<double> a, b;
    a.reserve(test_recs.size());
    b.reserve(test_recs.size());
    for (const ConvergenceRecord& r : test_recs) {
      auto it = base_idx.find({r.conversation_id, r.turn});
      if (it == base_idx.end()) {
        throw AnalysisError("no baseline record for " + r.conversation_id + ":" +
                            std::to_string(r.turn));
      }
      a.push_back(metric_value(r, name));
      b.push_back(metric_value(baseline_recs[it->second], name));
    }
    PairedTestResult tr = paired_t_test(a, b);

    SignificanceCell cell;
    cell.metric_or_class = name;
    cell.model_name = test_label;
    cell.baseline = baseline_label;
    cell.p_value = tr.p_value;
    double smallest = 0.0;
    for (double alpha : alphas) {
      if (tr.p_value < alpha && (smallest == 0.0 || alpha < smallest)) {
        smallest = alpha;
      }
    }
    if (smallest == 0.0) {
      cell.direction = Direction::ns;
      cell.alpha = 0.0;
    } else {
      cell.alpha = smallest;
      double diff = tr.mean_a - tr.mean_b;
      bool more_convergent =
          metric_higher_is_convergent(name) ? diff > 0.0 : diff < 0.0;
      cell.direction = more_convergent ? Direction::over : Direction::under;
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

double proportion_significant(std::span<const SignificanceCell> cells,
                              std::string_view metric_or_class, Direction dir) {
  std::size_t total = 0, hits = 0;
  for (const SignificanceCell& c : cells) {
    if (c.metric_or_class != metric_or_class) continue;
    ++total;
    if (c.direction == dir) ++hits;
  }
  if (total == 0) {
    throw AnalysisError("no cells for metric " + std::string(metric_or_class));
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

std::vector<StepwiseProfile> stepwise_profile(
    const std::vector<Conversation>& cs,
    const std::map<std::string, std::string>* completions_at_6,
    const LiwcDictionary& dict, PropnMode mode, const std::string& condition,
    Execution exec) {
  constexpr std::size_t kOffsets = 5;
  struct Row {
    std::array<std::array<double, kOffsets>, 4> vals{};
    std::array<std::uint8_t, kOffsets> ok{};
    std::string err;
  };
  std::vector<Row> rows(cs.size());

  run_slots(cs.size(), exec, [&](std::size_t i) {
    Row& row = rows[i];
    const Conversation& c = cs[i];
    try {
      if (c.turns.size() < 6) return;
      const std::string* u_text = nullptr;
      PropnMode u_mode = mode;
      const std::vector<std::string>* u_sidecar = nullptr;
      if (completions_at_6 != nullptr) {
        auto it = completions_at_6->find(c.id);
        if (it == completions_at_6->end()) return;  // failed generation, skip
        u_text = &it->second;
        u_mode = PropnMode::heuristic;
      } else {
        const Turn& gold = c.turns[5];
        u_text = &gold.text;
        u_sidecar = turn_sidecar(gold);
      }
      AnnotatedUtterance u = annotate_utterance(*u_text, dict, u_mode, u_sidecar);
      if (u.token_count == 0) return;
      for (std::size_t off = 0; off < kOffsets; ++off) {
        const Turn& rt = c.turns[off];
        AnnotatedUtterance ref =
            annotate_utterance(rt.text, dict, mode, turn_sidecar(rt));
        if (ref.token_count == 0) continue;
        row.vals[0][off] = utterance_length_convergence(u, ref);
        row.vals[1][off] = liwc_agreement(u, ref).mean;
        row.vals[2][off] = propn_overlap(u, ref);
        row.vals[3][off] = token_novelty(u, ref);
        row.ok[off] = 1;
      }
    } catch (const std::exception& e) {
      row.err = e.what();
    }
  });

  std::vector<StepwiseProfile> out(4);
  for (int mi = 0; mi < 4; ++mi) {
    out[static_cast<std::size_t>(mi)].metric = kMetricNames[mi];
    out[static_cast<std::size_t>(mi)].condition = condition;
  }
  std::array<std::array<double, kOffsets>, 4> sums{};
  std::array<std::size_t, kOffsets> counts{};
  for (const Row& row : rows) {
    if (!row.err.empty()) throw AnalysisError(row.err);
    for (std::size_t off = 0; off < kOffsets; ++off) {
      if (!row.ok[off]) continue;
      ++counts[off];
      for (std::size_t mi = 0; mi < 4; ++mi) sums[mi][off] += row.vals[mi][off];
    }
  }
  for (std::size_t mi = 0; mi < 4; ++mi) {
    for (std::size_t off = 0; off < kOffsets; ++off) {
      out[mi].n[off] = counts[off];
      out[mi].scores[off] =
          counts[off] == 0 ? 0.0 : sums[mi][off] / static_cast<double>(counts[off]);
    }
  }
  return out;
}

double class_usage_rate(
    std::span<const std::pair<AnnotatedUtterance, AnnotatedUtterance>> pairs,
    LiwcClass cls, PriorCondition prior) {
  const std::size_t k = static_cast<std::size_t>(cls);
  std::size_t total = 0, used = 0;
  for (const auto& [u, ref] : pairs) {
    bool ref_has = ref.liwc_counts[k] > 0;
    if (prior == PriorCondition::present && !ref_has) continue;
    if (prior == PriorCondition::absent && ref_has) continue;
    ++total;
    if (u.liwc_counts[k] > 0) ++used;
  }
  if (total == 0) {
    throw AnalysisError(std::string("no pairs satisfy the prior for class ") +
                        liwc_class_name(cls));
  }
  return static_cast<double>(used) / static_cast<double>(total);
}

std::vector<SummaryRow> summarize_records(std::span<const ConvergenceRecord> records) {
  // canonical condition order: human, random, then models by name
  std::vector<std::string> order;
  std::set<std::string> model_names;
  bool has_human = false, has_random = false;
  for (const ConvergenceRecord& r : records) {
    if (r.condition == Condition::human) has_human = true;
    else if (r.condition == Condition::random_control) has_random = true;
    else model_names.insert(r.model_name);
  }
  if (has_human) order.push_back("human");
  if (has_random) order.push_back("random");
  order.insert(order.end(), model_names.begin(), model_names.end());

  std::vector<SummaryRow> rows;
  for (const std::string& label : order) {
    for (const char* metric : kMetricNames) {
      SummaryRow row;
      row.condition = label;
      row.metric = metric;
      double sum = 0.0;
      for (const ConvergenceRecord& r : records) {
        if (condition_label(r) != label) continue;
        sum += metric_value(r, metric);
        ++row.n;
      }
      row.mean = row.n == 0 ? 0.0 : sum / static_cast<double>(row.n);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<SummaryRow> summarize_liwc_classes(
    std::span<const ConvergenceRecord> records) {
  std::vector<std::string> order;
  std::set<std::string> model_names;
  bool has_human = false, has_random = false;
  for (const ConvergenceRecord& r : records) {
    if (r.condition == Condition::human) has_human = true;
    else if (r.condition == Condition::random_control) has_random = true;
    else model_names.insert(r.model_name);
  }
  if (has_human) order.push_back("human");
  if (has_random) order.push_back("random");
  order.insert(order.end(), model_names.begin(), model_names.end());

  std::vector<SummaryRow> rows;
  for (const std::string& label : order) {
    for (int k = 0; k < kNumLiwcClasses; ++k) {
      SummaryRow row;
      row.condition = label;
      row.metric = liwc_class_name(static_cast<LiwcClass>(k));
      double sum = 0.0;
      for (const ConvergenceRecord& r : records) {
        if (condition_label(r) != label) continue;
        sum += r.liwc_per_class[static_cast<std::size_t>(k)];
        ++row.n;
      }
      row.mean = row.n == 0 ? 0.0 : sum / static_cast<double>(row.n);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<ConvergenceRecord> intersect_conditions(
    std::span<const ConvergenceRecord> records) {
  std::set<std::string> labels;
  for (const ConvergenceRecord& r : records) labels.insert(condition_label(r));
  if (labels.empty()) return {};

  std::map<std::pair<std::string, int>, std::set<std::string>> seen;
  for (const ConvergenceRecord& r : records) {
    seen[{r.conversation_id, r.turn}].insert(condition_label(r));
  }
  std::vector<ConvergenceRecord> out;
  for (const ConvergenceRecord& r : records) {
    if (seen.at({r.conversation_id, r.turn}).size() == labels.size()) {
      out.push_back(r);
    }
  }
  return out;
}

void sort_records(std::vector<ConvergenceRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const ConvergenceRecord& a, const ConvergenceRecord& b) {
                     if (a.condition != b.condition) {
                       return static_cast<int>(a.condition) <
                              static_cast<int>(b.condition);
                     }
                     if (a.model_name != b.model_name) {
                       return a.model_name < b.model_name;
                     }
                     if (a.conversation_id != b.conversation_id) {
                       return a.conversation_id < b.conversation_id;
                     }
                     return a.turn < b.turn;
                   });
}

}  // namespace convergelab
