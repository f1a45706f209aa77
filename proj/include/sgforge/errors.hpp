#pragma once

#include <stdexcept>
#include <string>

namespace sgforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration, bad CLI arguments, missing files. Raised before any
// backend call is made.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file (lexicon, corpus, template, fixture, cache).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Precondition violation on an operation's arguments.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class PromptTooLong : public Error {
 public:
  PromptTooLong(std::size_t tokens, std::size_t budget)
      : Error("prompt needs ~" + std::to_string(tokens) +
              " tokens, budget is " + std::to_string(budget)),
        tokens_(tokens),
        budget_(budget) {}

  std::size_t tokens() const noexcept { return tokens_; }
  std::size_t budget() const noexcept { return budget_; }

 private:
  std::size_t tokens_;
  std::size_t budget_;
};

// Transient backend failure (HTTP 429/5xx, connection reset). Retried.
class TransientBackendError : public Error {
 public:
  using Error::Error;
};

// Backend unreachable after retries, or a replay run hit a cold cache.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// Non-retryable backend rejection (HTTP 4xx other than 429, bad payload).
class BackendRejected : public Error {
 public:
  using Error::Error;
};

// Mock backend asked for a prompt that its fixture does not contain.
class MockMiss : public Error {
 public:
  explicit MockMiss(std::string prompt_hash)
      : Error("mock fixture has no response for prompt " + prompt_hash),
        prompt_hash_(std::move(prompt_hash)) {}

  const std::string& prompt_hash() const noexcept { return prompt_hash_; }

 private:
  std::string prompt_hash_;
};

}  // namespace sgforge
