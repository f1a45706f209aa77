#pragma once

// OpenAI-compatible chat-completions backend.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include <cstdlib>
#include <string>

#include "sgforge/llm_client.hpp"

namespace sgforge {

struct HttpBackendOptions {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 60;
};

namespace detail {

struct SplitUrl {
  std::string scheme_host_port;
  std::string path_prefix;
};

inline SplitUrl split_base_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.scheme_host_port = url.substr(0, path_start);
  out.path_prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

}  // namespace detail

class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    detail::split_base_url(options_.base_url);
  }

  BackendKind kind() const override { return BackendKind::http; }
  std::string cache_identity() const override { return "http"; }
  std::string model() const override { return options_.model; }

  static json request_body(const std::string& model, const std::string& prompt, const GenerationParams& params) {
    json body{{"model", model},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"temperature", params.temperature}};
    if (params.max_tokens) body["max_tokens"] = *params.max_tokens;
    return body;
  }

  /// Extracts content and usage from a chat-completions response body.
  static BackendReply parse_response(const std::string& prompt, const std::string& body) {
    json j;
    try {
      j = json::parse(body);
    } catch (const json::exception& e) {
      throw BackendRejected(std::string("chat-completions response is not JSON: ") + e.what());
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
      throw BackendRejected("chat-completions response has no choices");
    const json& message = j["choices"][0].value("message", json::object());
    if (!message.contains("content") || !message["content"].is_string())
      throw BackendRejected("chat-completions response has no message content");
    BackendReply reply;
    reply.response = message["content"].get<std::string>();
    const json usage = j.value("usage", json::object());
    reply.input_tokens = usage.value("prompt_tokens", estimate_tokens(prompt));
    reply.output_tokens = usage.value("completion_tokens", estimate_tokens(reply.response));
    return reply;
  }

  BackendReply invoke(const std::string& prompt, const GenerationParams& params) override {
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
      throw BackendUnavailable("environment variable " + options_.api_key_env + " is not set");

    const auto url = detail::split_base_url(options_.base_url);
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    client.set_write_timeout(options_.timeout_seconds, 0);
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

    auto res = client.Post(url.path_prefix + "/chat/completions", headers,
                           request_body(options_.model, prompt, params).dump(), "application/json");
    if (!res) throw TransientBackendError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
      throw TransientBackendError("HTTP " + std::to_string(res->status) + " from chat-completions endpoint");
    if (res->status != 200)
      throw BackendRejected("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    return parse_response(prompt, res->body);
  }

 private:
  HttpBackendOptions options_;
};

}  // namespace sgforge
