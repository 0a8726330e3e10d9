#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "biasprobe/errors.hpp"

namespace biasprobe {

struct ModelClientConfig {
  std::string endpoint_url;       // full URL of a chat-completions endpoint
  std::string model_name;
  std::string api_key_env;        // env var holding the key; empty = no auth
  double temperature = 0.0;
  double request_timeout = 30.0;  // seconds
  int max_retries = 2;
  double retry_backoff_base = 0.5;  // seconds; delay = base * 2^attempt
};

/// Uniform completion interface the orchestrator drives. Implementations must
/// be safe to call from multiple sessions concurrently.
class ModelClient {
 public:
  virtual ~ModelClient() = default;

  /// Sends one user message and returns the model's reply verbatim.
  /// Throws ClientError.
  virtual std::string complete(const std::string& prompt) = 0;
};

struct MockRule {
  std::string pattern;   // substring to find in the prompt; non-empty
  std::string response;

  bool operator==(const MockRule&) const = default;
};

struct MockScript {
  std::vector<MockRule> rules;  // first match wins
  std::string default_response;

  bool operator==(const MockScript&) const = default;
};

/// Response of the first rule whose pattern occurs in the prompt, else the
/// default response.
std::string mock_complete(std::string_view prompt, const MockScript& script);

/// Parses the mock script JSON: {"rules": [{"pattern", "response"}, ...],
/// "default_response": str}. Throws ParseError / Error.
MockScript parse_mock_script(std::string_view document);
MockScript load_mock_script_file(const std::string& path);

class MockScriptClient final : public ModelClient {
 public:
  explicit MockScriptClient(MockScript script) : script_(std::move(script)) {}

  std::string complete(const std::string& prompt) override {
    return mock_complete(prompt, script_);
  }

 private:
  MockScript script_;
};

/// Chat-completions HTTP client. Sends {"model", "messages", "temperature"}
/// and reads choices[0].message.content. Transient failures (network errors,
/// 429, 5xx) are retried up to max_retries with exponential backoff; other
/// 4xx statuses fail immediately.
class HttpModelClient final : public ModelClient {
 public:
  /// Resolves the API key (throws ClientError{Auth} if the configured env var
  /// is unset) and validates the endpoint URL.
  explicit HttpModelClient(ModelClientConfig config);

  std::string complete(const std::string& prompt) override;

  /// Backoff before retry number attempt+1 (attempt counts from 0).
  static double backoff_delay_seconds(const ModelClientConfig& config, int attempt);

 private:
  ModelClientConfig config_;
  std::string base_url_;  // scheme://host[:port]
  std::string path_;
  std::string api_key_;   // empty = send no Authorization header
};

}  // namespace biasprobe
