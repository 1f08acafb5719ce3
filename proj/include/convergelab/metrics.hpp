// metrics.hpp -- the four convergence indicators for a (response, reference)
// utterance pair.

#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

#include "convergelab/annotate.hpp"

namespace convergelab {

enum class Condition { human, random_control, model };

const char* condition_name(Condition c);  // "human" / "random" / "model"

// Raised when a metric's input has no tokens; callers exclude the record.
class DegenerateUtterance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kLsmEpsilon = 0.0001;

// Style-matching similarity 1 - |a-b|/(a+b+eps). Symmetric, in (0,1];
// equals 1 when a == b, including the both-absent case a = b = 0.
double lsm(double a, double b, double eps = kLsmEpsilon);

// lsm over token counts. Both utterances must be non-empty.
double utterance_length_convergence(const AnnotatedUtterance& u,
                                    const AnnotatedUtterance& ref);

struct LiwcAgreement {
  std::array<double, kNumLiwcClasses> per_class{};
  double mean = 0.0;
};

// Per-class lsm over usage rates expressed as percentages of the utterance's
// tokens, plus the unweighted mean across the nine classes.
LiwcAgreement liwc_agreement(const AnnotatedUtterance& u,
                             const AnnotatedUtterance& ref);

// Jaccard index over case-folded proper-noun sets; 0 when both are empty.
double propn_overlap(const AnnotatedUtterance& u, const AnnotatedUtterance& ref);

// Fraction of u's token *types* absent from ref. Lower = more convergence.
// Intentionally asymmetric; u must be non-empty.
double token_novelty(const AnnotatedUtterance& u, const AnnotatedUtterance& ref);

// The metric vector for one (response, reference) pair under one condition.
struct ConvergenceRecord {
  std::string conversation_id;
  int turn = 0;
  Condition condition = Condition::human;
  std::string model_name;  // set only for Condition::model
  double utterance_length_lsm = 0.0;
  std::array<double, kNumLiwcClasses> liwc_per_class{};
  double liwc_mean = 0.0;
  double propn_overlap = 0.0;
  double token_novelty = 0.0;
};

struct PairMeta {
  std::string conversation_id;
  int turn = 0;
  Condition condition = Condition::human;
  std::string model_name;
};

ConvergenceRecord score_pair(const AnnotatedUtterance& u,
                             const AnnotatedUtterance& ref, PairMeta meta);

ConvergenceRecord score_pair(std::string_view u_text, std::string_view ref_text,
                             const LiwcDictionary& dict, PropnMode mode,
                             PairMeta meta,
                             const std::vector<std::string>* u_sidecar = nullptr,
                             const std::vector<std::string>* ref_sidecar = nullptr);

// Canonical metric column names, in report order.
inline constexpr const char* kMetricNames[4] = {
    "utterance_length", "liwc_mean", "propn_overlap", "token_novelty"};

// true if larger values of the metric mean more convergence.
bool metric_higher_is_convergent(std::string_view metric_or_class);

}  // namespace convergelab
