// report.hpp -- serialized record files, completion files, and the CSV
// report formats.

#pragma once

#include <span>
#include <string>
#include <vector>

#include "convergelab/analysis.hpp"
#include "convergelab/metrics.hpp"

namespace convergelab {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Fixed-point with five decimals, the serialization contract for all
// report values ("0.33333"). Negative zero is normalized away.
std::string format_fixed5(double v);

// JSONL, one record per line, keys in a fixed order, values at 5 decimal
// places. Reading back yields records equal at that precision.
void write_records(std::span<const ConvergenceRecord> records,
                   const std::string& path);
std::vector<ConvergenceRecord> read_records(const std::string& path);

// Completion rows share the replay-file schema, so a generation run's
// output can be replayed directly.
struct CompletionRow {
  std::string conversation_id;
  int turn = 0;
  std::string model;
  std::string text;
};

void write_completions(std::span<const CompletionRow> rows, const std::string& path);
std::vector<CompletionRow> read_completions(const std::string& path);

// CSV emitters. Headers are fixed:
//   summary:  condition,metric,mean,n
//   matrix:   model,baseline,metric_or_class,direction,p
//   stepwise: offset,metric,condition,score
void write_summary_csv(std::span<const SummaryRow> rows, const std::string& path);
void write_matrix_csv(std::span<const SignificanceCell> cells, const std::string& path);
void write_stepwise_csv(std::span<const StepwiseProfile> profiles, const std::string& path);

std::string render_summary_table(std::span<const SummaryRow> rows,
                                 std::span<const SignificanceCell> cells);

}  // namespace convergelab
