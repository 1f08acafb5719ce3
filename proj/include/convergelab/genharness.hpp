// genharness.hpp -- prompt construction, pluggable completion backends,
// generation cleaning, and the completion cache.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convergelab/corpus.hpp"

namespace convergelab {

enum class BackendKind { http_chat, replay, mock_echo };

struct BackendSpec {
  BackendKind kind = BackendKind::mock_echo;
  std::string endpoint_url;   // http_chat
  std::string auth_env_var;   // http_chat, optional bearer token source
  std::string replay_path;    // replay
};

struct GenerationConfig {
  std::string instruction = "Continue this conversation based on the given context.";
  int priming_turns = 5;  // m
  double temperature = 0.4;
  double top_p = 0.8;
  int max_tokens = 40;
  BackendSpec backend;
  std::string model_name;
  std::optional<std::uint64_t> seed;
};

// Stable hex digest over every config field; any change yields a new value.
std::string config_fingerprint(const GenerationConfig& cfg);

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendError : public GenerationError {
 public:
  using GenerationError::GenerationError;
};

class ReplayMissError : public BackendError {
 public:
  using BackendError::BackendError;
};

struct HybridConversation {
  Conversation base;
  std::map<int, std::string> completions;  // turn index -> cleaned text
  std::string config_fingerprint;
  std::string model_name;
};

// Renders `instruction\n` followed by every turn before t as
// `<user> ... </user>` (speaker X) or `<assistant> ... </assistant>`
// (speaker Y) joined by single spaces, ending with " \n <model>". Earlier
// replaced turns must already have completions, which substitute for the
// gold text; a missing one raises GenerationError.
std::string build_prompt(const Conversation& base,
                         const std::map<int, std::string>& completions, int t,
                         const GenerationConfig& cfg);
std::string build_prompt(const HybridConversation& h, int t,
                         const GenerationConfig& cfg);

// Strips dialogue tags, truncates at the first new speaker tag, collapses
// whitespace, trims. Idempotent; may return an empty string (callers treat
// that as a failed generation).
std::string clean_generation(std::string raw);

struct GenerationRequest {
  std::string conversation_id;
  int turn = 0;
  std::string prompt;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string generate(const GenerationRequest& req) = 0;
};

// One backend instance per thread; instances are not shared across workers.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec,
                                      const GenerationConfig& cfg);

// Append-only JSONL cache, one file per (dataset, model) under `dir`.
// Keyed by (conversation_id, turn, model, fingerprint). Reads may happen
// concurrently with writes; writers are serialized.
class CompletionCache {
 public:
  CompletionCache(const std::string& dir, const std::string& dataset,
                  const std::string& model);

  std::optional<std::string> find(const std::string& conversation_id, int turn,
                                  const std::string& model,
                                  const std::string& fingerprint) const;
  void insert(const std::string& conversation_id, int turn,
              const std::string& model, const std::string& fingerprint,
              const std::string& text);

  std::size_t size() const;
  const std::string& path() const { return file_; }

 private:
  std::string file_;
  mutable std::mutex mu_;
  std::map<std::tuple<std::string, int, std::string, std::string>, std::string>
      entries_;
};

// Completes every replaced turn of one conversation in ascending order,
// consulting the cache before the backend. Throws GenerationError on the
// first failing turn.
HybridConversation complete_conversation(const Conversation& c,
                                         const GenerationConfig& cfg,
                                         Backend& backend,
                                         CompletionCache* cache = nullptr);

struct CompletionFailure {
  std::string conversation_id;
  int turn = 0;
  std::string reason;
};

struct GenerationOutcome {
  std::vector<HybridConversation> hybrids;  // successes, input order
  std::vector<CompletionFailure> failures;
  std::size_t backend_calls = 0;
};

// Completes conversations with a bounded pool of `workers` threads, one
// backend instance per worker. Turns inside a conversation stay sequential.
// A failed conversation is recorded and skipped; the rest proceed.
GenerationOutcome complete_conversations(const std::vector<Conversation>& cs,
                                         const GenerationConfig& cfg,
                                         CompletionCache* cache = nullptr,
                                         int workers = 4);

// Advisory exclusive lock on a directory (flock on <dir>/.convergelab.lock).
// Throws GenerationError if another process holds it.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::string& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace convergelab
