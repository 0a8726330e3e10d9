#include "biasprobe/model_client.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "biasprobe/detail/httplib_include.hpp"
#include "json.hpp"

namespace biasprobe {
namespace {

using nlohmann::json;

struct EndpointParts {
  std::string base;  // scheme://host[:port]
  std::string path;
};

EndpointParts split_endpoint_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ClientError(ClientError::Kind::Transport,
                      "endpoint URL must start with http:// or https://: " + url);
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ClientError(ClientError::Kind::Transport,
                      "unsupported endpoint scheme \"" + scheme + "\"");
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string extract_message_content(const std::string& body) {
  json payload;
  try {
    payload = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ClientError(ClientError::Kind::Malformed,
                      std::string("response body is not JSON: ") + e.what());
  }
  if (!payload.contains("choices") || !payload["choices"].is_array() ||
      payload["choices"].empty()) {
    throw ClientError(ClientError::Kind::Malformed, "response has no choices");
  }
  const json& first = payload["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content") ||
      !first["message"]["content"].is_string()) {
    throw ClientError(ClientError::Kind::Malformed,
                      "response missing choices[0].message.content");
  }
  return first["message"]["content"].get<std::string>();
}

bool transient_status(int status) {
  return status == 429 || status >= 500;
}

}  // namespace

std::string mock_complete(std::string_view prompt, const MockScript& script) {
  for (const auto& rule : script.rules) {
    if (prompt.find(rule.pattern) != std::string_view::npos) {
      return rule.response;
    }
  }
  return script.default_response;
}

MockScript parse_mock_script(std::string_view document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(ParseError::Kind::MalformedDocument, "", e.what());
  }
  if (!root.is_object()) {
    throw ParseError(ParseError::Kind::TypeMismatch, "$", "expected an object");
  }
  for (const auto& item : root.items()) {
    if (item.key() != "rules" && item.key() != "default_response") {
      throw ParseError(ParseError::Kind::UnknownKey, "$",
                       "unknown key \"" + item.key() + "\"");
    }
  }
  MockScript script;
  if (!root.contains("default_response") || !root["default_response"].is_string()) {
    throw ParseError(ParseError::Kind::MissingField, "default_response",
                     "expected a string \"default_response\"");
  }
  script.default_response = root["default_response"].get<std::string>();
  if (root.contains("rules")) {
    if (!root["rules"].is_array()) {
      throw ParseError(ParseError::Kind::TypeMismatch, "rules", "expected an array");
    }
    for (std::size_t i = 0; i < root["rules"].size(); ++i) {
      const json& rule = root["rules"][i];
      const std::string path = "rules[" + std::to_string(i) + "]";
      if (!rule.is_object() || !rule.contains("pattern") || !rule["pattern"].is_string() ||
          !rule.contains("response") || !rule["response"].is_string()) {
        throw ParseError(ParseError::Kind::TypeMismatch, path,
                         "expected {\"pattern\": str, \"response\": str}");
      }
      MockRule parsed{rule["pattern"].get<std::string>(),
                      rule["response"].get<std::string>()};
      if (parsed.pattern.empty()) {
        throw Error("mock script: " + path + ".pattern must be non-empty");
      }
      script.rules.push_back(std::move(parsed));
    }
  }
  return script;
}

MockScript load_mock_script_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read mock script file: " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_mock_script(buffer.str());
}

HttpModelClient::HttpModelClient(ModelClientConfig config) : config_(std::move(config)) {
  if (config_.endpoint_url.empty()) {
    throw ClientError(ClientError::Kind::Transport, "endpoint URL is empty");
  }
  if (config_.request_timeout <= 0) {
    throw Error("request_timeout must be positive");
  }
  EndpointParts parts = split_endpoint_url(config_.endpoint_url);
  base_url_ = std::move(parts.base);
  path_ = std::move(parts.path);
  if (!config_.api_key_env.empty()) {
    const char* key = std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ClientError(ClientError::Kind::Auth, "environment variable " +
                                                     config_.api_key_env +
                                                     " is not set (API key)");
    }
    api_key_ = key;
  }
}

double HttpModelClient::backoff_delay_seconds(const ModelClientConfig& config,
                                              int attempt) {
  return config.retry_backoff_base * std::ldexp(1.0, attempt);
}

std::string HttpModelClient::complete(const std::string& prompt) {
  json body = {
      {"model", config_.model_name},
      {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", config_.temperature},
  };
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!api_key_.empty()) {
    headers.emplace("Authorization", "Bearer " + api_key_);
  }

  const auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::duration<double>(config_.request_timeout));
  ClientError last_error(ClientError::Kind::Transport, "request was never attempted");

  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::duration<double>(backoff_delay_seconds(config_, attempt - 1)));
    }
    // A fresh connection per attempt keeps the client safe under concurrent
    // complete() calls.
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Result result = client.Post(path_, headers, payload, "application/json");
    if (!result) {
      last_error = ClientError(ClientError::Kind::Transport,
                               "network error talking to " + config_.endpoint_url + ": " +
                                   httplib::to_string(result.error()));
      continue;
    }
    const int status = result->status;
    if (status == 401 || status == 403) {
      throw ClientError(ClientError::Kind::Auth,
                        "endpoint rejected credentials (HTTP " + std::to_string(status) + ")",
                        status);
    }
    if (transient_status(status)) {
      auto kind = status == 429 ? ClientError::Kind::RateLimited : ClientError::Kind::Http;
      last_error = ClientError(
          kind, "HTTP " + std::to_string(status) + " from " + config_.endpoint_url, status);
      continue;
    }
    if (status >= 400) {
      throw ClientError(ClientError::Kind::Http,
                        "HTTP " + std::to_string(status) + " from " + config_.endpoint_url,
                        status);
    }
    return extract_message_content(result->body);
  }
  throw last_error;
}

}  // namespace biasprobe
