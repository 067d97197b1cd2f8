#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gsv/dataset.hpp"
#include "gsv/errors.hpp"

namespace gsv::backend {

using dataset::AnswerSpace;
using dataset::Gender;
using dataset::PromptInstance;

/// `external` covers adapters that plug a local model in through FunctionBackend.
enum class BackendKind { HttpChat, Persona, External };

std::string_view kind_name(BackendKind k);
BackendKind parse_kind(std::string_view s);

struct BackendId {
  BackendKind kind = BackendKind::Persona;
  std::string name;
  std::string version;

  /// "<kind>:<name>:<version>"
  std::string str() const;
  bool operator==(const BackendId&) const = default;
};

/// Answer provider. complete() must be safe to call from several threads.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendId& id() const = 0;
  /// Raw response text for the rendered prompt.
  virtual std::string complete(const PromptInstance& prompt) = 0;
};

/// Retryable transport failure (connection error, 429, 5xx).
class TransportError : public Error {
 public:
  using Error::Error;
};

// --- normalization and keys -----------------------------------------------------

/// Maps a raw response to a label of `space`:
///   1. exact match after trimming;
///   2. case-insensitive match after stripping terminal punctuation;
///   3. exactly one label occurring as a whole word.
/// Throws NoMatchError otherwise (including when several labels occur).
std::string normalize_answer(std::string_view raw, const AnswerSpace& space);

/// Hex SHA-256 of (backend id, prompt bytes, labels in order).
std::string cache_key(const BackendId& backend, std::string_view prompt_text, const AnswerSpace& space);

// --- cache ----------------------------------------------------------------------

struct CacheEntry {
  std::string key;
  std::string raw;
  std::string canonical;
  std::string created_at;  // ISO 8601 UTC
};

/// Thread-safe response cache. With a path, entries load from and append to a
/// versioned JSONL file; each append is flushed before put() returns.
class ResponseCache {
 public:
  static constexpr int kFormatVersion = 1;

  ResponseCache() = default;
  explicit ResponseCache(const std::filesystem::path& path);

  std::optional<CacheEntry> get(const std::string& key) const;
  /// Last writer wins for an existing key.
  void put(CacheEntry entry);
  std::size_t size() const;
  void flush();

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheEntry> entries_;
  std::mutex file_mutex_;
  std::ofstream file_;
};

// --- retries --------------------------------------------------------------------

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
};

/// Token bucket. A rate of zero disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double tokens_per_second = 0.0, double burst = 1.0);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

struct Answer {
  std::string raw;
  std::string canonical;
  bool from_cache = false;
};

struct ServiceOptions {
  RetryPolicy retry;
  double requests_per_second = 0.0;
  std::uint64_t seed = 0;  // backoff jitter
};

/// Cache-first question answering over one backend, with retries.
class AnswerService {
 public:
  AnswerService(Backend& backend, ResponseCache& cache, ServiceOptions options = {});

  /// Throws NoMatchError (unparseable answer, not cached) or BackendError.
  Answer ask(const PromptInstance& prompt);

  const BackendId& backend_id() const { return backend_.id(); }
  /// Number of complete() invocations, including failed attempts.
  std::size_t backend_calls() const { return calls_.load(); }

 private:
  std::chrono::milliseconds backoff(int attempt);

  Backend& backend_;
  ResponseCache& cache_;
  ServiceOptions options_;
  RateLimiter limiter_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
  std::atomic<std::size_t> calls_{0};
};

// --- personas -------------------------------------------------------------------

enum class PersonaKind { Stereotyped, Neutral, Contrarian, Random };

std::string_view persona_kind_name(PersonaKind k);
PersonaKind parse_persona_kind(std::string_view s);

struct PersonaSpec {
  PersonaKind kind = PersonaKind::Neutral;
  std::map<std::string, Gender> bias_table;  // occupation title -> preferred gender
  std::optional<double> qualify_prob;
  std::optional<std::uint64_t> seed;

  /// Throws ValidationError when a kind's required fields are missing or out of range.
  void validate() const;
};

PersonaSpec persona_spec_from_json(const nlohmann::json& j);
nlohmann::json persona_spec_to_json(const PersonaSpec& spec);

/// Deterministic synthetic respondent:
///   stereotyped  Background True, Q1 Yes, Q2/Q3 the preferred-gender subject for
///                listed occupations, else Unknown / Neither.
///   neutral      Background True, Q1 Yes, Q2 Unknown, Q3 Both.
///   contrarian   Background True, Q1 No, Q2 and Q3 the first subject.
///   random       Background True, Q1 Yes with probability q else No, Q2 and Q3
///                uniform over their labels. Each draw is keyed by (seed, prompt id).
std::unique_ptr<Backend> make_persona(const PersonaSpec& spec, std::string name, std::string version = "1");

/// Named specs listed by `gsv personas`.
std::vector<std::pair<std::string, PersonaSpec>> builtin_personas();

/// Wraps a callable; used for external adapters and scripted test respondents.
class FunctionBackend : public Backend {
 public:
  using Fn = std::function<std::string(const PromptInstance&)>;
  FunctionBackend(BackendId id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}
  const BackendId& id() const override { return id_; }
  std::string complete(const PromptInstance& prompt) override { return fn_(prompt); }

 private:
  BackendId id_;
  Fn fn_;
};

// --- chat-completions over HTTP -------------------------------------------------

struct HttpChatConfig {
  /// Full URL of the chat-completions endpoint, e.g. https://host/v1/chat/completions.
  std::string endpoint;
  std::string model;
  /// Name of the environment variable holding the bearer token. Empty: no auth header.
  std::string api_key_env;
  double temperature = 0.0;
  std::chrono::seconds timeout{60};
};

std::string chat_request_body(const std::string& model, const std::string& prompt_text, double temperature);
/// Content of the first choice; BackendError when the body has none.
std::string parse_chat_response(std::string_view body);

class HttpChatBackend : public Backend {
 public:
  HttpChatBackend(BackendId id, HttpChatConfig config);
  const BackendId& id() const override { return id_; }
  std::string complete(const PromptInstance& prompt) override;

 private:
  BackendId id_;
  HttpChatConfig config_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

}  // namespace gsv::backend
