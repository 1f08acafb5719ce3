// analysis.hpp -- record assembly for the three conditions, significance
// testing against baselines, stepwise profiles, and usage-rate analysis.
//
// Record assembly is the hot loop: every kernel ships an OpenMP-parallel
// path (the default) and a plain serial reference used by the tests and the
// benchmark. Both produce identical output: slots are precomputed serially,
// scored independently, and reduced in slot order.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "convergelab/annotate.hpp"
#include "convergelab/genharness.hpp"
#include "convergelab/metrics.hpp"
#include "convergelab/stats.hpp"

namespace convergelab {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Execution { serial, parallel };

struct AssemblyResult {
  std::vector<ConvergenceRecord> records;     // slot order
  std::size_t degenerate_skipped = 0;
};

// Gold r_t vs r_{t-1} for every replaced index t; condition = human.
AssemblyResult human_baseline_records(const std::vector<Conversation>& cs,
                                      const LiwcDictionary& dict, PropnMode mode,
                                      int m = 5,
                                      Execution exec = Execution::parallel);

// A seeded uniform draw from another conversation's turns vs r_{t-1};
// condition = random_control. The pool for conversation c is every turn of
// every other conversation, in corpus order; one draw per slot is taken from
// std::mt19937_64(seed) as rng() % pool_size before scoring starts, so the
// result is a pure function of (cs, m, seed). Needs >= 2 conversations.
AssemblyResult random_baseline_records(const std::vector<Conversation>& cs,
                                       const LiwcDictionary& dict, PropnMode mode,
                                       std::uint64_t seed, int m = 5,
                                       Execution exec = Execution::parallel);

// Completion at t vs the human turn r_{t-1}; condition = model.
AssemblyResult model_records(const std::vector<HybridConversation>& hs,
                             const LiwcDictionary& dict, PropnMode mode,
                             const std::string& model_name, int m = 5,
                             Execution exec = Execution::parallel);

enum class Direction { over, under, ns };

const char* direction_name(Direction d);

// One significance-test outcome versus a baseline. For metrics where lower
// means more convergence (token novelty), `over` means significantly lower.
struct SignificanceCell {
  std::string metric_or_class;
  std::string model_name;  // label of the tested side ("human" is allowed)
  std::string baseline;    // "human" or "random"
  Direction direction = Direction::ns;
  double p_value = 1.0;
  double alpha = 0.0;      // smallest satisfied alpha; 0 when ns
};

// Paired t-tests between two record sets aligned on (conversation_id, turn).
// Emits one cell per headline metric, or one per LIWC class when per_class.
// Records present on only one side raise AnalysisError.
std::vector<SignificanceCell> significance_matrix(
    std::span<const ConvergenceRecord> test_recs,
    std::span<const ConvergenceRecord> baseline_recs,
    const std::string& test_label, const std::string& baseline_label,
    std::span<const double> alphas, bool per_class = false);

// 100 * |cells for metric with the given direction| / |cells for metric|.
double proportion_significant(std::span<const SignificanceCell> cells,
                              std::string_view metric_or_class, Direction dir);

struct StepwiseProfile {
  std::string metric;
  std::string condition;
  std::array<double, 5> scores{};       // offset t' = 1..5 at [t'-1]
  std::array<std::size_t, 5> n{};
};

// Convergence of each conversation's t=6 response against turns 1..5.
// completions_at_6 keys conversation ids; pass nullptr to use the gold turn
// (human condition). Pairs where either side tokenizes to nothing are
// dropped for that offset. Returns one profile per headline metric.
std::vector<StepwiseProfile> stepwise_profile(
    const std::vector<Conversation>& cs,
    const std::map<std::string, std::string>* completions_at_6,
    const LiwcDictionary& dict, PropnMode mode, const std::string& condition,
    Execution exec = Execution::parallel);

enum class PriorCondition { present, absent, any };

// Fraction of responses containing at least one word of `cls`, restricted to
// pairs whose reference does (present) / does not (absent) contain the class.
// An empty restriction raises AnalysisError.
double class_usage_rate(
    std::span<const std::pair<AnnotatedUtterance, AnnotatedUtterance>> pairs,
    LiwcClass cls, PriorCondition prior);

struct SummaryRow {
  std::string condition;  // "human", "random", or the model name
  std::string metric;
  double mean = 0.0;
  std::size_t n = 0;
};

// Per-condition means of the four headline metrics, rows in report order.
std::vector<SummaryRow> summarize_records(std::span<const ConvergenceRecord> records);

// Per-condition means of the nine LIWC classes.
std::vector<SummaryRow> summarize_liwc_classes(std::span<const ConvergenceRecord> records);

// Restricts every condition to the (conversation_id, turn) keys present in
// all of them, preserving order. Keeps comparisons pair-aligned when some
// condition dropped a degenerate or failed record.
std::vector<ConvergenceRecord> intersect_conditions(
    std::span<const ConvergenceRecord> records);

// Stable sort by (condition, model, conversation_id, turn).
void sort_records(std::vector<ConvergenceRecord>& records);

}  // namespace convergelab
