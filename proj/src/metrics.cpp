#include "convergelab/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace convergelab {

namespace {

std::vector<std::string> fold_set(const std::vector<std::string>& xs) {
  std::vector<std::string> out = xs;
  for (std::string& s : out) {
    for (char& ch : s) {
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

const char* condition_name(Condition c) {
  switch (c) {
    case Condition::human: return "human";
    case Condition::random_control: return "random";
    case Condition::model: return "model";
  }
  return "?";
}

double lsm(double a, double b, double eps) {
  if (a == 0.0 && b == 0.0) return 1.0;
  return 1.0 - std::fabs(a - b) / (a + b + eps);
}

double utterance_length_convergence(const AnnotatedUtterance& u,
                                    const AnnotatedUtterance& ref) {
  if (u.token_count == 0 || ref.token_count == 0) {
    throw DegenerateUtterance("length convergence needs non-empty utterances");
  }
  return lsm(static_cast<double>(u.token_count), static_cast<double>(ref.token_count));
}

LiwcAgreement liwc_agreement(const AnnotatedUtterance& u,
                             const AnnotatedUtterance& ref) {
  if (u.token_count == 0 || ref.token_count == 0) {
    throw DegenerateUtterance("liwc agreement needs non-empty utterances");
  }
  LiwcAgreement out;
  double sum = 0.0;
  for (int k = 0; k < kNumLiwcClasses; ++k) {
    // usage rates as percentages, the scale LIWC reports category scores on
    double ru = 100.0 * u.liwc_counts[static_cast<std::size_t>(k)] /
                static_cast<double>(u.token_count);
    double rr = 100.0 * ref.liwc_counts[static_cast<std::size_t>(k)] /
                static_cast<double>(ref.token_count);
    out.per_class[static_cast<std::size_t>(k)] = lsm(ru, rr);
    sum += out.per_class[static_cast<std::size_t>(k)];
  }
  out.mean = sum / kNumLiwcClasses;
  return out;
}

double propn_overlap(const AnnotatedUtterance& u, const AnnotatedUtterance& ref) {
  std::vector<std::string> a = fold_set(u.propn_set);
  std::vector<std::string> b = fold_set(ref.propn_set);
  if (a.empty() && b.empty()) return 0.0;
  std::vector<std::string> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(inter));
  std::size_t uni = a.size() + b.size() - inter.size();
  return static_cast<double>(inter.size()) / static_cast<double>(uni);
}

double token_novelty(const AnnotatedUtterance& u, const AnnotatedUtterance& ref) {
  if (u.token_count == 0) {
    throw DegenerateUtterance("token novelty needs a non-empty utterance");
  }
  std::unordered_set<std::string> ref_types(ref.tokens.begin(), ref.tokens.end());
  std::unordered_set<std::string> u_types(u.tokens.begin(), u.tokens.end());
  std::size_t novel = 0;
  for (const std::string& w : u_types) {
    if (!ref_types.count(w)) ++novel;
  }
  return static_cast<double>(novel) / static_cast<double>(u_types.size());
}

ConvergenceRecord score_pair(const AnnotatedUtterance& u,
                             const AnnotatedUtterance& ref, PairMeta meta) {
  ConvergenceRecord r;
  r.conversation_id = std::move(meta.conversation_id);
  r.turn = meta.turn;
  r.condition = meta.condition;
  r.model_name = std::move(meta.model_name);
  r.utterance_length_lsm = utterance_length_convergence(u, ref);
  LiwcAgreement la = liwc_agreement(u, ref);
  r.liwc_per_class = la.per_class;
  r.liwc_mean = la.mean;
  r.propn_overlap = propn_overlap(u, ref);
  r.token_novelty = token_novelty(u, ref);
  return r;
}

ConvergenceRecord score_pair(std::string_view u_text, std::string_view ref_text,
                             const LiwcDictionary& dict, PropnMode mode,
                             PairMeta meta,
                             const std::vector<std::string>* u_sidecar,
                             const std::vector<std::string>* ref_sidecar) {
  AnnotatedUtterance u = annotate_utterance(u_text, dict, mode, u_sidecar);
  AnnotatedUtterance ref = annotate_utterance(ref_text, dict, mode, ref_sidecar);
  return score_pair(u, ref, std::move(meta));
}

bool metric_higher_is_convergent(std::string_view metric_or_class) {
  return metric_or_class != "token_novelty";
}

}  // namespace convergelab
