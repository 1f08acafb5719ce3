#include "convergelab/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace convergelab {

namespace {

std::string json_str(const std::string& s) { return nlohmann::json(s).dump(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
  if (!out) throw ReportError("cannot write " + path);
  return out;
}

Condition parse_condition(const std::string& s, const std::string& where) {
  if (s == "human") return Condition::human;
  if (s == "random") return Condition::random_control;
  if (s == "model") return Condition::model;
  throw ReportError(where + ": unknown condition '" + s + "'");
}

}  // namespace

std::string format_fixed5(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5f", v);
  if (buf[0] == '-' && std::string_view(buf + 1) == "0.00000") return "0.00000";
  return buf;
}

void write_records(std::span<const ConvergenceRecord> records,
                   const std::string& path) {
  std::ofstream out = open_out(path);
  for (const ConvergenceRecord& r : records) {
    // lines are composed by hand so the 5-decimal contract is byte-exact
    out << "{\"conversation_id\":" << json_str(r.conversation_id)
        << ",\"turn\":" << r.turn << ",\"condition\":\""
        << condition_name(r.condition) << "\",\"model\":" << json_str(r.model_name)
        << ",\"utterance_length\":" << format_fixed5(r.utterance_length_lsm)
        << ",\"liwc_mean\":" << format_fixed5(r.liwc_mean)
        << ",\"propn_overlap\":" << format_fixed5(r.propn_overlap)
        << ",\"token_novelty\":" << format_fixed5(r.token_novelty)
        << ",\"liwc_per_class\":{";
    for (int k = 0; k < kNumLiwcClasses; ++k) {
      if (k > 0) out << ",";
      out << "\"" << liwc_class_name(static_cast<LiwcClass>(k))
          << "\":" << format_fixed5(r.liwc_per_class[static_cast<std::size_t>(k)]);
    }
    out << "}}\n";
  }
  if (!out) throw ReportError("write failed: " + path);
}

std::vector<ConvergenceRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open records file: " + path);
  std::vector<ConvergenceRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + " line " + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      ConvergenceRecord r;
      r.conversation_id = j.at("conversation_id").get<std::string>();
      r.turn = j.at("turn").get<int>();
      r.condition = parse_condition(j.at("condition").get<std::string>(), where);
      r.model_name = j.at("model").get<std::string>();
      r.utterance_length_lsm = j.at("utterance_length").get<double>();
      r.liwc_mean = j.at("liwc_mean").get<double>();
      r.propn_overlap = j.at("propn_overlap").get<double>();
      r.token_novelty = j.at("token_novelty").get<double>();
      const auto& pc = j.at("liwc_per_class");
      for (int k = 0; k < kNumLiwcClasses; ++k) {
        r.liwc_per_class[static_cast<std::size_t>(k)] =
            pc.at(liwc_class_name(static_cast<LiwcClass>(k))).get<double>();
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ReportError(where + ": " + e.what());
    }
  }
  return out;
}

void write_completions(std::span<const CompletionRow> rows, const std::string& path) {
  std::ofstream out = open_out(path);
  for (const CompletionRow& row : rows) {
    nlohmann::ordered_json j;
    j["conversation_id"] = row.conversation_id;
    j["turn"] = row.turn;
    j["model"] = row.model;
    j["text"] = row.text;
    out << j.dump() << "\n";
  }
  if (!out) throw ReportError("write failed: " + path);
}

std::vector<CompletionRow> read_completions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open completions file: " + path);
  std::vector<CompletionRow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      CompletionRow row;
      row.conversation_id = j.at("conversation_id").get<std::string>();
      row.turn = j.at("turn").get<int>();
      row.model = j.at("model").get<std::string>();
      row.text = j.at("text").get<std::string>();
      out.push_back(std::move(row));
    } catch (const nlohmann::json::exception& e) {
      throw ReportError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(std::span<const SummaryRow> rows, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "condition,metric,mean,n\n";
  for (const SummaryRow& r : rows) {
    out << csv_field(r.condition) << "," << r.metric << "," << format_fixed5(r.mean)
        << "," << r.n << "\n";
  }
  if (!out) throw ReportError("write failed: " + path);
}

void write_matrix_csv(std::span<const SignificanceCell> cells,
                      const std::string& path) {
  std::ofstream out = open_out(path);
  out << "model,baseline,metric_or_class,direction,p\n";
  for (const SignificanceCell& c : cells) {
    out << csv_field(c.model_name) << "," << csv_field(c.baseline) << ","
        << c.metric_or_class << "," << direction_name(c.direction) << ","
        << format_fixed5(c.p_value) << "\n";
  }
  if (!out) throw ReportError("write failed: " + path);
}

void write_stepwise_csv(std::span<const StepwiseProfile> profiles,
                        const std::string& path) {
  std::ofstream out = open_out(path);
  out << "offset,metric,condition,score\n";
  for (const StepwiseProfile& p : profiles) {
    for (std::size_t off = 0; off < p.scores.size(); ++off) {
      out << (off + 1) << "," << p.metric << "," << csv_field(p.condition) << ","
          << format_fixed5(p.scores[off]) << "\n";
    }
  }
  if (!out) throw ReportError("write failed: " + path);
}

std::string render_summary_table(std::span<const SummaryRow> rows,
                                 std::span<const SignificanceCell> cells) {
  // condition label column + one column per headline metric + n
  std::vector<std::string> labels;
  for (const SummaryRow& r : rows) {
    if (labels.empty() || labels.back() != r.condition) labels.push_back(r.condition);
  }
  std::size_t label_w = std::string("condition").size();
  for (const std::string& l : labels) label_w = std::max(label_w, l.size());

  auto marker = [&](const std::string& label, const std::string& metric) {
    for (const SignificanceCell& c : cells) {
      if (c.model_name != label || c.baseline != "human" ||
          c.metric_or_class != metric) {
        continue;
      }
      if (c.direction == Direction::over) return std::string("+");
      if (c.direction == Direction::under) return std::string("-");
    }
    return std::string();
  };

  std::ostringstream os;
  os << std::string(label_w, ' ');
  for (const char* metric : kMetricNames) {
    std::size_t len = std::string(metric).size();
    os << "  " << std::string(len < 9 ? 9 - len : 0, ' ') << metric;
  }
  os << "       n\n";

  for (const std::string& label : labels) {
    os << label << std::string(label_w - label.size(), ' ');
    std::size_t n = 0;
    for (const char* metric : kMetricNames) {
      double mean = 0.0;
      for (const SummaryRow& r : rows) {
        if (r.condition == label && r.metric == metric) {
          mean = r.mean;
          n = r.n;
          break;
        }
      }
      std::string cell = format_fixed5(mean) + marker(label, metric);
      std::size_t w = std::max<std::size_t>(std::string(metric).size(), 9) + 2;
      os << std::string(w > cell.size() ? w - cell.size() : 1, ' ') << cell;
    }
    char nbuf[16];
    std::snprintf(nbuf, sizeof(nbuf), "%8zu", n);
    os << nbuf << "\n";
  }
  return os.str();
}

}  // namespace convergelab
