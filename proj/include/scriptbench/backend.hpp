#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace scriptbench::backend {

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.7;
  int max_output_tokens = 4096;
  std::optional<std::uint64_t> seed;
  // Bookkeeping copies of what the user message embeds; not sent on the wire.
  std::string context;
  std::size_t min_chars = 0;
  std::size_t max_chars = 0;
};

enum class Failure { None, Timeout, Moderation, Other };

struct ChatResponse {
  std::string text;
  int status = 200;  // HTTP status; 0 when no response arrived
  Failure failure = Failure::None;
  std::string error;

  bool ok() const { return failure == Failure::None; }
};

/// Maps an HTTP status onto the failure taxonomy: 524/504/408 are timeouts,
/// 400 is a moderation block, anything else outside 2xx is Other.
Failure classify_status(int status);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Test double driven by a callback; records every request it receives.
class FunctionBackend : public ChatBackend {
 public:
  using Handler = std::function<ChatResponse(const ChatRequest&, std::size_t call_index)>;
  explicit FunctionBackend(Handler handler, std::string name = "function");

  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return name_; }
  std::vector<ChatRequest> requests() const;

 private:
  Handler handler_;
  std::string name_;
  mutable std::mutex mutex_;
  std::vector<ChatRequest> requests_;
};

/// Chat-completions style JSON API over HTTP(S).
struct HttpBackendOptions {
  std::string base_url;  // "https://api.example.com"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // name of the env var holding the bearer token
  double timeout_seconds = 600.0;
  bool send_seed = false;
};

class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendOptions options);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return options_.model; }

  /// Request body as sent on the wire.
  nlohmann::json request_body(const ChatRequest& request) const;

 private:
  HttpBackendOptions options_;
};

/// Deterministic offline continuation model. It answers in the
/// {"continuation": ...} envelope by recombining lines of Part I.
struct MockGeneratorOptions {
  std::string seed = "mock";
  std::size_t chunk_chars = 4000;  // chars returned per call (capped by the request)
  double drift = 0.0;              // per-line chance of breaking the format
  double timeout_rate = 0.0;       // per-sample chance of an HTTP 524
  double moderation_rate = 0.0;    // per-sample chance of an HTTP 400
  double meta_rate = 0.0;          // per-sample chance of a meta-discourse preface
};

class MockGeneratorBackend : public ChatBackend {
 public:
  MockGeneratorBackend(std::string name, MockGeneratorOptions options);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return name_; }

 private:
  std::string name_;
  MockGeneratorOptions options_;
};

/// Deterministic offline judge. Scores from character-bigram overlap between
/// the reference and generated sections of the judge prompt.
struct MockJudgeOptions {
  std::string seed = "judge";
  int prose_replies = 0;  // answer with prose (no JSON) this many times per prompt first
};

class MockJudgeBackend : public ChatBackend {
 public:
  MockJudgeBackend(std::string name, MockJudgeOptions options);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return name_; }

 private:
  std::string name_;
  MockJudgeOptions options_;
  std::mutex mutex_;
  std::vector<std::pair<std::uint64_t, int>> prose_counts_;
};

/// Spaces calls at least 1/rate seconds apart across all threads.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void acquire();

 private:
  std::chrono::steady_clock::duration interval_;
  std::chrono::steady_clock::time_point next_;
  std::mutex mutex_;
};

class RateLimitedBackend : public ChatBackend {
 public:
  RateLimitedBackend(std::shared_ptr<ChatBackend> inner, double per_second);
  ChatResponse complete(const ChatRequest& request) override;
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  RateLimiter limiter_;
};

/// Builds a backend from a registry entry such as
/// {"type": "http", "base_url": ..., "model": ..., "api_key_env": ...},
/// {"type": "mock", "chunk_chars": 900} or {"type": "mock_judge"}.
std::shared_ptr<ChatBackend> make_backend(const std::string& name, const nlohmann::json& spec);

}  // namespace scriptbench::backend
