#include "convergelab/annotate.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace convergelab {

namespace {

// Decodes one UTF-8 codepoint at s[i]; advances i. Malformed bytes decode as
// U+FFFD one byte at a time so tokenization never throws on dirty text.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  unsigned char b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + static_cast<std::size_t>(len) > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    unsigned char b = static_cast<unsigned char>(s[i + static_cast<std::size_t>(k)]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= '0' && cp <= '9') || cp == '\'';
  }
  // Latin-1 punctuation, multiplication/division signs, and the general
  // punctuation block separate tokens; other non-ASCII codepoints count as
  // word characters (accented letters, CJK, ...).
  if (cp >= 0xA0 && cp <= 0xBF) return false;
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return cp == 0x2019;
  return true;
}

bool is_sentence_end_cp(char32_t cp) {
  return cp == '.' || cp == '!' || cp == '?' || cp == 0x2026;
}

std::string ascii_lower(std::string s) {
  for (char& ch : s) {
    ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return s;
}

}  // namespace

TokenStream tokenize(std::string_view text) {
  TokenStream ts;
  std::string cur;
  bool sentence_start = true;  // pending flag for the next token
  bool cur_start = true;       // flag captured when cur opened

  auto flush = [&]() {
    if (cur.empty()) return;
    ts.tokens.push_back(ascii_lower(cur));
    ts.case_tokens.push_back(CaseToken{std::move(cur), cur_start});
    cur.clear();
  };

  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = decode_utf8(text, i);
    if (cp == 0x2019) cp = '\'';
    if (is_word_cp(cp)) {
      if (cur.empty()) {
        cur_start = sentence_start;
        sentence_start = false;
      }
      append_utf8(cur, cp);
    } else {
      flush();
      if (is_sentence_end_cp(cp)) sentence_start = true;
    }
  }
  flush();
  return ts;
}

std::vector<std::string> tag_propn(const std::vector<CaseToken>& case_tokens,
                                   PropnMode mode,
                                   const std::vector<std::string>* sidecar) {
  std::vector<std::string> out;
  if (mode == PropnMode::external) {
    if (sidecar == nullptr) {
      throw AnnotateError("external propn mode requires sidecar annotations");
    }
    out = *sidecar;
  } else {
    // capitalized self-reference forms that the heuristic must not tag
    static const std::unordered_set<std::string> kSelfForms = {
        "I", "I'm", "I'll", "I've", "I'd"};
    for (const CaseToken& t : case_tokens) {
      if (t.sentence_start) continue;
      unsigned char c0 = static_cast<unsigned char>(t.text[0]);
      if (c0 < 'A' || c0 > 'Z') continue;
      if (kSelfForms.count(t.text)) continue;
      out.push_back(t.text);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

const char* liwc_class_name(LiwcClass c) {
  switch (c) {
    case LiwcClass::personal_pronouns: return "personal_pronouns";
    case LiwcClass::impersonal_pronouns: return "impersonal_pronouns";
    case LiwcClass::articles: return "articles";
    case LiwcClass::conjunctions: return "conjunctions";
    case LiwcClass::prepositions: return "prepositions";
    case LiwcClass::auxiliary_verbs: return "auxiliary_verbs";
    case LiwcClass::adverbs: return "adverbs";
    case LiwcClass::negations: return "negations";
    case LiwcClass::quantifiers: return "quantifiers";
  }
  return "?";
}

std::optional<LiwcClass> parse_liwc_class(std::string_view name) {
  // canonical names plus the short names LIWC 2007 dictionaries use
  static const std::pair<std::string_view, LiwcClass> kTable[] = {
      {"personal_pronouns", LiwcClass::personal_pronouns},
      {"ppron", LiwcClass::personal_pronouns},
      {"impersonal_pronouns", LiwcClass::impersonal_pronouns},
      {"ipron", LiwcClass::impersonal_pronouns},
      {"articles", LiwcClass::articles},
      {"article", LiwcClass::articles},
      {"conjunctions", LiwcClass::conjunctions},
      {"conj", LiwcClass::conjunctions},
      {"prepositions", LiwcClass::prepositions},
      {"preps", LiwcClass::prepositions},
      {"auxiliary_verbs", LiwcClass::auxiliary_verbs},
      {"auxverb", LiwcClass::auxiliary_verbs},
      {"adverbs", LiwcClass::adverbs},
      {"adverb", LiwcClass::adverbs},
      {"negations", LiwcClass::negations},
      {"negate", LiwcClass::negations},
      {"quantifiers", LiwcClass::quantifiers},
      {"quant", LiwcClass::quantifiers},
  };
  for (const auto& [key, cls] : kTable) {
    if (key == name) return cls;
  }
  return std::nullopt;
}

void LiwcDictionary::add_literal(std::string word, ClassSet classes) {
  literal_[ascii_lower(std::move(word))] |= classes;
}

void LiwcDictionary::add_prefix(std::string stem, ClassSet classes) {
  std::string p = ascii_lower(std::move(stem));
  max_prefix_len_ = std::max(max_prefix_len_, p.size());
  prefix_[std::move(p)] |= classes;
}

ClassSet LiwcDictionary::lookup(const std::string& token) const {
  auto it = literal_.find(token);
  if (it != literal_.end()) return it->second;
  // longest matching prefix wins
  for (std::size_t len = std::min(token.size(), max_prefix_len_); len >= 1; --len) {
    auto pit = prefix_.find(token.substr(0, len));
    if (pit != prefix_.end()) return pit->second;
  }
  return 0;
}

LiwcDictionary load_liwc_dict(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw AnnotateError("cannot open dictionary: " + path);

  LiwcDictionary dict;
  std::unordered_set<int> declared_ids;
  std::unordered_map<int, LiwcClass> id_map;

  std::string line;
  int percent_seen = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t");
    std::string body = line.substr(b, e - b + 1);

    if (body == "%") {
      ++percent_seen;
      continue;
    }

    std::istringstream ss(body);
    std::string first;
    ss >> first;

    if (percent_seen == 1) {
      // header row: numeric id then class name
      int id = 0;
      try {
        id = std::stoi(first);
      } catch (...) {
        throw AnnotateError("dictionary line " + std::to_string(line_no) +
                            ": expected class id, got '" + first + "'");
      }
      std::string name;
      if (!(ss >> name)) {
        throw AnnotateError("dictionary line " + std::to_string(line_no) +
                            ": class id without name");
      }
      declared_ids.insert(id);
      // classes outside the nine tracked ones stay declared but unmapped
      if (auto cls = parse_liwc_class(name)) id_map[id] = *cls;
      continue;
    }

    if (percent_seen >= 2) {
      auto star = first.find('*');
      bool is_prefix = false;
      if (star != std::string::npos) {
        if (star != first.size() - 1 || first.size() == 1) {
          throw AnnotateError("dictionary line " + std::to_string(line_no) +
                              ": '*' must be the final character of a pattern");
        }
        first.pop_back();
        is_prefix = true;
      }
      ClassSet classes = 0;
      std::string tok;
      while (ss >> tok) {
        int id = 0;
        try {
          id = std::stoi(tok);
        } catch (...) {
          throw AnnotateError("dictionary line " + std::to_string(line_no) +
                              ": bad class id '" + tok + "'");
        }
        if (!declared_ids.count(id)) {
          throw AnnotateError("dictionary line " + std::to_string(line_no) +
                              ": id " + std::to_string(id) + " not in header");
        }
        auto it = id_map.find(id);
        if (it != id_map.end()) {
          classes |= static_cast<ClassSet>(1u << static_cast<int>(it->second));
        }
      }
      if (classes == 0) continue;
      if (is_prefix) {
        dict.add_prefix(first, classes);
      } else {
        dict.add_literal(first, classes);
      }
    }
  }
  if (percent_seen < 2) {
    throw AnnotateError("dictionary missing %-delimited header: " + path);
  }
  if (dict.size() == 0) {
    throw AnnotateError("dictionary has no usable entries: " + path);
  }
  return dict;
}

AnnotatedUtterance annotate_utterance(std::string_view text,
                                      const LiwcDictionary& dict, PropnMode mode,
                                      const std::vector<std::string>* sidecar) {
  TokenStream ts = tokenize(text);
  AnnotatedUtterance u;
  u.token_count = static_cast<int>(ts.tokens.size());
  u.propn_set = tag_propn(ts.case_tokens, mode, sidecar);
  u.liwc_counts.fill(0);
  for (const std::string& tok : ts.tokens) {
    ClassSet cs = dict.lookup(tok);
    while (cs != 0) {
      int bit = __builtin_ctz(static_cast<unsigned>(cs));
      ++u.liwc_counts[static_cast<std::size_t>(bit)];
      cs &= static_cast<ClassSet>(cs - 1);
    }
  }
  u.tokens = std::move(ts.tokens);
  return u;
}

}  // namespace convergelab
