#include "convergelab/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <unordered_set>

#include "convergelab/annotate.hpp"
#include "json.hpp"

namespace convergelab {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Turn parse_turn(const nlohmann::json& j, std::size_t line_no, std::size_t pos) {
  if (!j.is_object() || !j.contains("speaker") || !j.contains("text") ||
      !j["speaker"].is_string() || !j["text"].is_string()) {
    throw CorpusError("line " + std::to_string(line_no) + ": turn " +
                      std::to_string(pos + 1) + " needs string speaker and text");
  }
  Turn t;
  t.raw_speaker = j["speaker"].get<std::string>();
  t.speaker = t.raw_speaker;
  t.text = trim(j["text"].get<std::string>());
  t.index = static_cast<int>(pos) + 1;
  if (t.raw_speaker.empty()) {
    throw CorpusError("line " + std::to_string(line_no) + ": empty speaker label");
  }
  if (t.text.empty()) {
    throw CorpusError("line " + std::to_string(line_no) + ": turn " +
                      std::to_string(pos + 1) + " has empty text");
  }
  if (j.contains("propn")) {
    if (!j["propn"].is_array()) {
      throw CorpusError("line " + std::to_string(line_no) + ": propn must be an array");
    }
    t.has_propn_sidecar = true;
    for (const auto& p : j["propn"]) {
      if (!p.is_string()) {
        throw CorpusError("line " + std::to_string(line_no) + ": propn entries must be strings");
      }
      t.propn_sidecar.push_back(p.get<std::string>());
    }
  }
  return t;
}

}  // namespace

std::vector<Conversation> parse_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot open corpus file: " + path);

  std::vector<Conversation> out;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      throw CorpusError("line " + std::to_string(line_no) + ": record needs a string id");
    }

    Conversation c;
    c.id = j["id"].get<std::string>();
    if (c.id.empty()) {
      throw CorpusError("line " + std::to_string(line_no) + ": empty conversation id");
    }
    if (!seen_ids.insert(c.id).second) {
      throw CorpusError("line " + std::to_string(line_no) +
                        ": duplicate conversation id '" + c.id + "'");
    }
    if (j.contains("dataset") && j["dataset"].is_string()) {
      c.dataset = j["dataset"].get<std::string>();
    }
    if (!j.contains("turns") || !j["turns"].is_array() || j["turns"].empty()) {
      throw CorpusError("line " + std::to_string(line_no) +
                        ": conversation '" + c.id + "' has no turns");
    }
    for (std::size_t k = 0; k < j["turns"].size(); ++k) {
      c.turns.push_back(parse_turn(j["turns"][k], line_no, k));
    }
    out.push_back(std::move(c));
  }
  return out;
}

Conversation merge_consecutive_turns(const Conversation& c) {
  Conversation out;
  out.id = c.id;
  out.dataset = c.dataset;
  for (const Turn& t : c.turns) {
    if (!out.turns.empty() && out.turns.back().raw_speaker == t.raw_speaker) {
      Turn& prev = out.turns.back();
      prev.text += " " + t.text;
      if (t.has_propn_sidecar) {
        prev.has_propn_sidecar = true;
        for (const auto& p : t.propn_sidecar) {
          if (std::find(prev.propn_sidecar.begin(), prev.propn_sidecar.end(), p) ==
              prev.propn_sidecar.end()) {
            prev.propn_sidecar.push_back(p);
          }
        }
      }
    } else {
      out.turns.push_back(t);
      out.turns.back().index = static_cast<int>(out.turns.size());
    }
  }
  return out;
}

std::vector<Conversation> filter_conversations(const std::vector<Conversation>& cs,
                                               int min_turns) {
  std::vector<Conversation> out;
  for (const Conversation& c : cs) {
    if (static_cast<int>(c.turns.size()) < min_turns) continue;
    std::set<std::string> speakers;
    for (const Turn& t : c.turns) speakers.insert(t.raw_speaker);
    if (speakers.size() != 2) continue;
    out.push_back(c);
  }
  return out;
}

Conversation normalize_speakers(Conversation c) {
  if (c.turns.empty()) throw CorpusError("cannot normalize empty conversation " + c.id);
  const std::string first = c.turns.front().raw_speaker;
  for (std::size_t i = 0; i < c.turns.size(); ++i) {
    Turn& t = c.turns[i];
    const bool is_x = (t.raw_speaker == first);
    // post-merge alternation means parity fully determines the speaker
    if (is_x != (i % 2 == 0)) {
      throw CorpusError("conversation " + c.id + ": speakers do not alternate at turn " +
                        std::to_string(i + 1));
    }
    t.speaker = is_x ? "X" : "Y";
    t.index = static_cast<int>(i) + 1;
  }
  return c;
}

std::vector<Conversation> preprocess_corpus(const std::vector<Conversation>& raw,
                                            int min_turns) {
  std::vector<Conversation> merged;
  merged.reserve(raw.size());
  for (const Conversation& c : raw) merged.push_back(merge_consecutive_turns(c));
  std::vector<Conversation> kept = filter_conversations(merged, min_turns);
  for (Conversation& c : kept) c = normalize_speakers(std::move(c));
  return kept;
}

std::vector<Conversation> downsample(const std::vector<Conversation>& cs,
                                     std::size_t cap, std::uint64_t seed) {
  if (cap < 1) throw CorpusError("downsample cap must be >= 1");
  if (cs.size() <= cap) return cs;

  std::vector<std::size_t> idx(cs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < cap; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());

  std::vector<Conversation> out;
  out.reserve(cap);
  for (std::size_t i : idx) out.push_back(cs[i]);
  return out;
}

std::vector<int> replaced_turn_indices(const Conversation& c, int m) {
  if (m < 1) throw CorpusError("priming turn count m must be >= 1");
  std::vector<int> out;
  for (int t = m + 1; t <= static_cast<int>(c.turns.size()); t += 2) out.push_back(t);
  return out;
}

CorpusStats compute_corpus_stats(const std::vector<Conversation>& cs, int m) {
  CorpusStats st;
  st.conversation_count = cs.size();
  if (cs.empty()) return st;

  std::size_t total_turns = 0;
  for (const Conversation& c : cs) total_turns += c.turns.size();

  // flatten so the token counting loop is data parallel
  std::vector<const Turn*> flat;
  flat.reserve(total_turns);
  for (const Conversation& c : cs) {
    for (const Turn& t : c.turns) flat.push_back(&t);
    st.replaced_turn_count += replaced_turn_indices(c, m).size();
  }

  long long total_tokens = 0;
#pragma omp parallel for schedule(dynamic, 64) reduction(+ : total_tokens)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(flat.size()); ++i) {
    total_tokens += static_cast<long long>(tokenize(flat[i]->text).tokens.size());
  }

  st.avg_turns = static_cast<double>(total_turns) / static_cast<double>(cs.size());
  st.avg_turn_length =
      static_cast<double>(total_tokens) / static_cast<double>(total_turns);
  return st;
}

void write_corpus(const std::vector<Conversation>& cs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  for (const Conversation& c : cs) {
    nlohmann::ordered_json j;
    j["id"] = c.id;
    j["dataset"] = c.dataset;
    j["turns"] = nlohmann::ordered_json::array();
    for (const Turn& t : c.turns) {
      nlohmann::ordered_json jt;
      jt["speaker"] = t.speaker;
      jt["text"] = t.text;
      if (t.has_propn_sidecar) jt["propn"] = t.propn_sidecar;
      j["turns"].push_back(std::move(jt));
    }
    out << j.dump() << "\n";
  }
  if (!out) throw CorpusError("write failed: " + path);
}

}  // namespace convergelab
