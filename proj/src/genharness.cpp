#include "convergelab/genharness.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <thread>

#include "json.hpp"

#ifdef CONVERGELAB_WITH_TLS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace convergelab {

namespace {

constexpr const char* kTags[] = {"<user>", "</user>", "<assistant>",
                                 "</assistant>", "<model>", "</model>"};

// Internal: tags a generation failure with the turn it happened at so the
// batch driver can report it without string surgery.
class TurnFailure : public GenerationError {
 public:
  TurnFailure(int turn, const std::string& msg) : GenerationError(msg), turn_(turn) {}
  int turn() const { return turn_; }

 private:
  int turn_;
};

std::uint64_t fnv1a_init() { return 0xcbf29ce484222325ull; }

void fnv1a_feed(std::uint64_t& h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  // field separator byte so adjacent fields cannot alias
  h ^= 0x1f;
  h *= 0x100000001b3ull;
}

std::string collapse_ws(const std::string& s) {
  std::string out;
  bool in_ws = true;  // also strips leading whitespace
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      in_ws = true;
    } else {
      if (in_ws && !out.empty()) out += ' ';
      out += c;
      in_ws = false;
    }
  }
  return out;
}

class MockEchoBackend : public Backend {
 public:
  std::string generate(const GenerationRequest& req) override {
    auto open_pos = req.prompt.rfind("<user>");
    if (open_pos == std::string::npos) {
      throw BackendError("mock_echo: prompt has no <user> block");
    }
    auto close_pos = req.prompt.find("</user>", open_pos);
    if (close_pos == std::string::npos) {
      throw BackendError("mock_echo: unterminated <user> block");
    }
    std::size_t start = open_pos + 6;
    return req.prompt.substr(start, close_pos - start);
  }
};

class ReplayBackend : public Backend {
 public:
  ReplayBackend(const std::string& path, std::string model) : model_(std::move(model)) {
    std::ifstream in(path);
    if (!in) throw BackendError("replay: cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw BackendError("replay: " + path + " line " + std::to_string(line_no) +
                           ": " + e.what());
      }
      if (!j.contains("conversation_id") || !j.contains("turn") ||
          !j.contains("model") || !j.contains("text")) {
        throw BackendError("replay: " + path + " line " + std::to_string(line_no) +
                           ": need conversation_id, turn, model, text");
      }
      table_[{j["conversation_id"].get<std::string>(), j["turn"].get<int>(),
              j["model"].get<std::string>()}] = j["text"].get<std::string>();
    }
  }

  std::string generate(const GenerationRequest& req) override {
    auto it = table_.find({req.conversation_id, req.turn, model_});
    if (it == table_.end()) {
      throw ReplayMissError("replay: no row for (" + req.conversation_id + ", " +
                            std::to_string(req.turn) + ", " + model_ + ")");
    }
    return it->second;
  }

 private:
  std::string model_;
  std::map<std::tuple<std::string, int, std::string>, std::string> table_;
};

class HttpChatBackend : public Backend {
 public:
  HttpChatBackend(const BackendSpec& spec, const GenerationConfig& cfg) : cfg_(cfg) {
    const std::string& url = spec.endpoint_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw BackendError("http_chat: endpoint url needs a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      base_ = url;
      path_ = "/";
    } else {
      base_ = url.substr(0, path_start);
      path_ = url.substr(path_start);
    }
    if (!spec.auth_env_var.empty()) {
      const char* tok = std::getenv(spec.auth_env_var.c_str());
      if (tok == nullptr || *tok == '\0') {
        throw BackendError("http_chat: auth env var " + spec.auth_env_var +
                           " is not set");
      }
      bearer_ = tok;
    }
#ifndef CONVERGELAB_WITH_TLS
    if (base_.rfind("https://", 0) == 0) {
      throw BackendError("http_chat: built without TLS support");
    }
#endif
    client_ = std::make_unique<httplib::Client>(base_);
    client_->set_connection_timeout(15, 0);
    client_->set_read_timeout(120, 0);
    if (!bearer_.empty()) client_->set_bearer_token_auth(bearer_);
  }

  std::string generate(const GenerationRequest& req) override {
    nlohmann::ordered_json body;
    body["model"] = cfg_.model_name;
    body["messages"] = nlohmann::ordered_json::array(
        {{{"role", "user"}, {"content", req.prompt}}});
    body["temperature"] = cfg_.temperature;
    body["top_p"] = cfg_.top_p;
    body["max_tokens"] = cfg_.max_tokens;
    if (cfg_.seed) body["seed"] = *cfg_.seed;
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
      if (attempt > 0) {
        // 1s, then 2s
        std::this_thread::sleep_for(std::chrono::seconds(1 << (attempt - 1)));
      }
      auto res = client_->Post(path_, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status < 200 || res->status >= 300) {
        last_error = "http status " + std::to_string(res->status);
        continue;
      }
      try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("http_chat: malformed response: ") + e.what());
      }
    }
    throw BackendError("http_chat: " + last_error + " after 3 attempts (" + base_ +
                       path_ + ")");
  }

 private:
  GenerationConfig cfg_;
  std::string base_;
  std::string path_;
  std::string bearer_;
  std::unique_ptr<httplib::Client> client_;
};

// Forwards to an inner backend, counting calls across workers.
class CountingBackend : public Backend {
 public:
  CountingBackend(std::unique_ptr<Backend> inner, std::atomic<std::size_t>* calls)
      : inner_(std::move(inner)), calls_(calls) {}

  std::string generate(const GenerationRequest& req) override {
    calls_->fetch_add(1, std::memory_order_relaxed);
    return inner_->generate(req);
  }

 private:
  std::unique_ptr<Backend> inner_;
  std::atomic<std::size_t>* calls_;
};

}  // namespace

std::string config_fingerprint(const GenerationConfig& cfg) {
  std::uint64_t h = fnv1a_init();
  fnv1a_feed(h, cfg.instruction);
  fnv1a_feed(h, std::to_string(cfg.priming_turns));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.temperature);
  fnv1a_feed(h, buf);
  std::snprintf(buf, sizeof(buf), "%.17g", cfg.top_p);
  fnv1a_feed(h, buf);
  fnv1a_feed(h, std::to_string(cfg.max_tokens));
  switch (cfg.backend.kind) {
    case BackendKind::http_chat: fnv1a_feed(h, "http_chat"); break;
    case BackendKind::replay: fnv1a_feed(h, "replay"); break;
    case BackendKind::mock_echo: fnv1a_feed(h, "mock_echo"); break;
  }
  fnv1a_feed(h, cfg.backend.endpoint_url);
  fnv1a_feed(h, cfg.backend.auth_env_var);
  fnv1a_feed(h, cfg.backend.replay_path);
  fnv1a_feed(h, cfg.model_name);
  fnv1a_feed(h, cfg.seed ? std::to_string(*cfg.seed) : "none");
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string build_prompt(const Conversation& base,
                         const std::map<int, std::string>& completions, int t,
                         const GenerationConfig& cfg) {
  if (t < 2 || t > static_cast<int>(base.turns.size())) {
    throw GenerationError("prompt turn " + std::to_string(t) +
                          " out of range for conversation " + base.id);
  }
  std::vector<int> replaced = replaced_turn_indices(base, cfg.priming_turns);

  std::string out = cfg.instruction;
  out += "\n";
  for (int i = 1; i < t; ++i) {
    const Turn& turn = base.turns[static_cast<std::size_t>(i - 1)];
    const bool is_x = turn.speaker == "X";
    const std::string* text = &turn.text;
    if (!is_x &&
        std::find(replaced.begin(), replaced.end(), i) != replaced.end()) {
      auto it = completions.find(i);
      if (it == completions.end()) {
        throw GenerationError("conversation " + base.id + ": turn " +
                              std::to_string(i) +
                              " was replaced but has no completion");
      }
      text = &it->second;
    }
    if (i > 1) out += " ";
    out += is_x ? "<user> " : "<assistant> ";
    out += *text;
    out += is_x ? " </user>" : " </assistant>";
  }
  out += " \n <model>";
  return out;
}

std::string build_prompt(const HybridConversation& h, int t,
                         const GenerationConfig& cfg) {
  return build_prompt(h.base, h.completions, t, cfg);
}

std::string clean_generation(std::string raw) {
  // Removing a tag can splice a new one together, so run to a fixed point.
  for (;;) {
    std::string before = raw;
    auto cut = std::min(raw.find("<user>"), raw.find("<assistant>"));
    if (cut != std::string::npos) raw.erase(cut);
    for (const char* tag : kTags) {
      const std::size_t tag_len = std::char_traits<char>::length(tag);
      std::size_t pos = 0;
      while ((pos = raw.find(tag, pos)) != std::string::npos) {
        raw.erase(pos, tag_len);
      }
    }
    if (raw == before) break;
  }
  return collapse_ws(raw);
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec,
                                      const GenerationConfig& cfg) {
  switch (spec.kind) {
    case BackendKind::mock_echo:
      return std::make_unique<MockEchoBackend>();
    case BackendKind::replay:
      if (spec.replay_path.empty()) {
        throw BackendError("replay backend needs a replay file path");
      }
      return std::make_unique<ReplayBackend>(spec.replay_path, cfg.model_name);
    case BackendKind::http_chat:
      if (spec.endpoint_url.empty()) {
        throw BackendError("http_chat backend needs an endpoint url");
      }
      return std::make_unique<HttpChatBackend>(spec, cfg);
  }
  throw BackendError("unknown backend kind");
}

CompletionCache::CompletionCache(const std::string& dir, const std::string& dataset,
                                 const std::string& model) {
  std::filesystem::create_directories(dir);
  auto sanitize = [](std::string s) {
    for (char& c : s) {
      if (c == '/' || c == '\\' || c == ':') c = '_';
    }
    return s.empty() ? std::string("default") : s;
  };
  file_ = dir + "/" + sanitize(dataset) + "." + sanitize(model) + ".cache.jsonl";

  std::ifstream in(file_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      entries_[{j.at("conversation_id").get<std::string>(), j.at("turn").get<int>(),
                j.at("model").get<std::string>(),
                j.at("fingerprint").get<std::string>()}] =
          j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw GenerationError("cache " + file_ + " line " + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
}

std::optional<std::string> CompletionCache::find(const std::string& conversation_id,
                                                 int turn, const std::string& model,
                                                 const std::string& fingerprint) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = entries_.find({conversation_id, turn, model, fingerprint});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CompletionCache::insert(const std::string& conversation_id, int turn,
                             const std::string& model, const std::string& fingerprint,
                             const std::string& text) {
  std::lock_guard<std::mutex> lock(mu_);
  auto [it, fresh] =
      entries_.insert({{conversation_id, turn, model, fingerprint}, text});
  if (!fresh) return;
  nlohmann::ordered_json j;
  j["conversation_id"] = conversation_id;
  j["turn"] = turn;
  j["model"] = model;
  j["fingerprint"] = fingerprint;
  j["text"] = text;
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) throw GenerationError("cannot append to cache " + file_);
  out << j.dump() << "\n";
}

std::size_t CompletionCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

HybridConversation complete_conversation(const Conversation& c,
                                         const GenerationConfig& cfg,
                                         Backend& backend, CompletionCache* cache) {
  HybridConversation h;
  h.base = c;
  h.model_name = cfg.model_name;
  h.config_fingerprint = config_fingerprint(cfg);

  for (int t : replaced_turn_indices(c, cfg.priming_turns)) {
    if (cache) {
      if (auto hit = cache->find(c.id, t, cfg.model_name, h.config_fingerprint)) {
        h.completions[t] = *hit;
        continue;
      }
    }
    GenerationRequest req;
    req.conversation_id = c.id;
    req.turn = t;
    req.prompt = build_prompt(c, h.completions, t, cfg);
    std::string cleaned;
    try {
      cleaned = clean_generation(backend.generate(req));
    } catch (const std::exception& e) {
      throw TurnFailure(t, "conversation " + c.id + ": turn " + std::to_string(t) +
                               ": " + e.what());
    }
    if (cleaned.empty()) {
      throw TurnFailure(t, "conversation " + c.id + ": empty completion at turn " +
                               std::to_string(t));
    }
    if (cache) cache->insert(c.id, t, cfg.model_name, h.config_fingerprint, cleaned);
    h.completions[t] = std::move(cleaned);
  }
  return h;
}

GenerationOutcome complete_conversations(const std::vector<Conversation>& cs,
                                         const GenerationConfig& cfg,
                                         CompletionCache* cache, int workers) {
  GenerationOutcome out;
  if (cs.empty()) return out;
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(cs.size()));

  std::vector<std::optional<HybridConversation>> slots(cs.size());
  std::vector<std::optional<CompletionFailure>> fails(cs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> calls{0};

  auto worker = [&]() {
    // httplib clients are not safe to share, so each worker owns a backend.
    // Construction happens inside the loop's try: a bad configuration must
    // surface as per-conversation failures, not escape the thread.
    std::optional<CountingBackend> backend;
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= cs.size()) return;
      try {
        if (!backend) backend.emplace(make_backend(cfg.backend, cfg), &calls);
        slots[i] = complete_conversation(cs[i], cfg, *backend, cache);
      } catch (const TurnFailure& e) {
        fails[i] = CompletionFailure{cs[i].id, e.turn(), e.what()};
      } catch (const std::exception& e) {
        fails[i] = CompletionFailure{cs[i].id, 0, e.what()};
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();

  for (std::size_t i = 0; i < cs.size(); ++i) {
    if (slots[i]) out.hybrids.push_back(std::move(*slots[i]));
    if (fails[i]) out.failures.push_back(std::move(*fails[i]));
  }
  out.backend_calls = calls.load();
  return out;
}

DirectoryLock::DirectoryLock(const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::string path = dir + "/.convergelab.lock";
  fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
  if (fd_ < 0) throw GenerationError("cannot open lock file " + path);
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw GenerationError("another process holds the lock on " + dir);
  }
}

DirectoryLock::~DirectoryLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

}  // namespace convergelab
