#pragma once

// Completion client: content-hash cache (append-only JSONL), bounded
// concurrency, retries with exponential backoff, and token/cost accounting.
// Backends: mock (fixture lookup), replay (cache only) and http (see
// http_backend.hpp).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "sgforge/dataset.hpp"
#include "sgforge/hashing.hpp"
#include "sgforge/prompt_builder.hpp"

namespace sgforge {

enum class BackendKind { http, mock, replay };

inline std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::http: return "http";
    case BackendKind::mock: return "mock";
    case BackendKind::replay: return "replay";
  }
  return "unknown";
}

inline std::optional<BackendKind> parse_backend_kind(std::string_view s) {
  if (s == "http") return BackendKind::http;
  if (s == "mock") return BackendKind::mock;
  if (s == "replay") return BackendKind::replay;
  return std::nullopt;
}

struct GenerationParams {
  double temperature = 0.0;
  std::optional<int> max_tokens;
};

struct CompletionRecord {
  std::string cache_key;
  std::string prompt;
  std::string response;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
  std::string timestamp;
  BackendKind backend = BackendKind::mock;

  friend bool operator==(const CompletionRecord&, const CompletionRecord&) = default;
};

inline void to_json(json& j, const CompletionRecord& r) {
  j = json{{"cache_key", r.cache_key},         {"prompt", r.prompt},
           {"response", r.response},           {"input_tokens", r.input_tokens},
           {"output_tokens", r.output_tokens}, {"timestamp", r.timestamp},
           {"backend", to_string(r.backend)}};
}

inline void from_json(const json& j, CompletionRecord& r) {
  r.cache_key = j.at("cache_key").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.response = j.at("response").get<std::string>();
  r.input_tokens = j.at("input_tokens").get<std::size_t>();
  r.output_tokens = j.at("output_tokens").get<std::size_t>();
  r.timestamp = j.value("timestamp", std::string{});
  auto kind = parse_backend_kind(j.at("backend").get<std::string>());
  if (!kind) throw FormatError("unknown backend in completion record");
  r.backend = *kind;
}

/// Cache key over the identity of whoever produced the answer.
inline std::string completion_cache_key(std::string_view backend_id, std::string_view model, std::string_view prompt) {
  return sha256_hex({backend_id, model, prompt});
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Backends

struct BackendReply {
  std::string response;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
};

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  virtual BackendKind kind() const = 0;
  /// Identity used in cache keys. A replay backend reports the identity of
  /// the backend whose cache it replays.
  virtual std::string cache_identity() const = 0;
  virtual std::string model() const = 0;
  virtual BackendReply invoke(const std::string& prompt, const GenerationParams& params) = 0;
};

/// Answers from a fixture keyed by SHA-256 of the prompt. Tokens are
/// approximated as ceil(characters / 4).
class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(std::unordered_map<std::string, std::string> responses_by_hash, std::string model = "mock")
      : responses_(std::move(responses_by_hash)), model_(std::move(model)) {}

  BackendKind kind() const override { return BackendKind::mock; }
  std::string cache_identity() const override { return "mock"; }
  std::string model() const override { return model_; }

  BackendReply invoke(const std::string& prompt, const GenerationParams&) override {
    const std::string hash = sha256_hex(prompt);
    {
      std::lock_guard lock(mu_);
      ++invocations_[hash];
      ++total_invocations_;
    }
    auto it = responses_.find(hash);
    if (it == responses_.end()) throw MockMiss(hash);
    return {it->second, estimate_tokens(prompt), estimate_tokens(it->second)};
  }

  void add(std::string_view prompt, std::string response) { responses_[sha256_hex(prompt)] = std::move(response); }

  std::size_t total_invocations() const {
    std::lock_guard lock(mu_);
    return total_invocations_;
  }

  /// Per prompt-hash invocation counts.
  std::map<std::string, std::size_t> invocations() const {
    std::lock_guard lock(mu_);
    return {invocations_.begin(), invocations_.end()};
  }

 private:
  std::unordered_map<std::string, std::string> responses_;
  std::string model_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::size_t> invocations_;
  std::size_t total_invocations_ = 0;
};

/// Fixture JSONL: one {"prompt_hash": hex, "response": ...} or
/// {"prompt": text, "response": ...} object per line.
inline std::unordered_map<std::string, std::string> parse_mock_fixture(std::string_view text) {
  std::unordered_map<std::string, std::string> out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      std::string hash = j.contains("prompt_hash") ? j.at("prompt_hash").get<std::string>()
                                                   : sha256_hex(j.at("prompt").get<std::string>());
      out[std::move(hash)] = j.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError("mock fixture line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::shared_ptr<MockBackend> load_mock_backend(const std::filesystem::path& path) {
  try {
    return std::make_shared<MockBackend>(parse_mock_fixture(read_text_file(path)));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

/// Cache-only: any call that reaches the backend is a failure.
class ReplayBackend : public CompletionBackend {
 public:
  ReplayBackend(std::string replayed_identity, std::string model)
      : identity_(std::move(replayed_identity)), model_(std::move(model)) {}

  BackendKind kind() const override { return BackendKind::replay; }
  std::string cache_identity() const override { return identity_; }
  std::string model() const override { return model_; }

  BackendReply invoke(const std::string& prompt, const GenerationParams&) override {
    throw BackendUnavailable("replay backend: prompt " + sha256_hex(prompt).substr(0, 12) +
                             " is not in the cache and network access is disabled");
  }

 private:
  std::string identity_;
  std::string model_;
};

// ---------------------------------------------------------------------------
// Cache

/// In-memory map mirrored to an append-only JSONL file. Loading applies
/// last-writer-wins; storing is write-once per key.
class CompletionCache {
 public:
  CompletionCache() = default;

  explicit CompletionCache(std::filesystem::path path) : path_(std::move(path)) {
    if (!path_->empty() && std::filesystem::exists(*path_)) load(*path_);
  }

  std::optional<CompletionRecord> lookup(const std::string& key) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  /// Returns false (and keeps the existing record) when the key is present.
  bool store(const CompletionRecord& record) {
    std::lock_guard lock(mu_);
    if (!records_.emplace(record.cache_key, record).second) return false;
    if (path_ && !path_->empty()) {
      if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
      std::ofstream out(*path_, std::ios::app | std::ios::binary);
      if (!out) throw ConfigError("cannot append to cache " + path_->string());
      out << json(record).dump() << '\n';
      out.flush();
    }
    return true;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

 private:
  void load(const std::filesystem::path& path) {
    const auto lines = split_lines(read_text_file(path));
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (detail::trim(lines[i]).empty()) continue;
      try {
        auto rec = json::parse(lines[i]).get<CompletionRecord>();
        records_[rec.cache_key] = std::move(rec);
      } catch (const std::exception& e) {
        // A torn final line is what a crash mid-append leaves behind.
        if (i + 1 == lines.size()) break;
        throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
      }
    }
  }

  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, CompletionRecord> records_;
};

// ---------------------------------------------------------------------------
// Client

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
};

struct ClientOptions {
  RetryPolicy retry;
  std::size_t concurrency = 4;
  PromptLimits limits;
  GenerationParams params;
};

struct CompletionResult {
  CompletionRecord record;
  bool cache_hit = false;
};

struct ClientStats {
  std::size_t requests = 0;
  std::size_t cache_hits = 0;
  std::size_t backend_calls = 0;
  std::size_t retries = 0;
};

class LlmClient {
 public:
  static constexpr std::ptrdiff_t kMaxConcurrency = 256;

  LlmClient(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<CompletionCache> cache,
            ClientOptions options = {})
      : backend_(std::move(backend)),
        cache_(cache ? std::move(cache) : std::make_shared<CompletionCache>()),
        options_(options),
        slots_(std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(options.concurrency), 1, kMaxConcurrency)) {
    if (!backend_) throw InvalidInput("LlmClient needs a backend");
  }

  LlmClient(const LlmClient&) = delete;
  LlmClient& operator=(const LlmClient&) = delete;

  CompletionResult complete(const std::string& prompt) { return complete(prompt, options_.params); }

  CompletionResult complete(const std::string& prompt, const GenerationParams& params) {
    if (detail::trim(prompt).empty()) throw InvalidInput("prompt is empty");
    check_prompt_budget(prompt, options_.limits);
    const std::string key = completion_cache_key(backend_->cache_identity(), backend_->model(), prompt);

    std::promise<CompletionRecord> promise;
    std::shared_future<CompletionRecord> waiter;
    bool owner = false;
    {
      std::lock_guard lock(mu_);
      ++stats_.requests;
      if (auto hit = cache_->lookup(key)) {
        ++stats_.cache_hits;
        return {std::move(*hit), true};
      }
      // Concurrent requests for one prompt share a single backend call.
      auto it = in_flight_.find(key);
      if (it != in_flight_.end()) {
        waiter = it->second;
        ++stats_.cache_hits;
      } else {
        waiter = promise.get_future().share();
        in_flight_.emplace(key, waiter);
        owner = true;
      }
    }
    if (!owner) return {waiter.get(), true};

    try {
      CompletionRecord record = call_backend(key, prompt, params);
      cache_->store(record);
      promise.set_value(record);
      finish(key);
      return {std::move(record), false};
    } catch (...) {
      promise.set_exception(std::current_exception());
      finish(key);
      throw;
    }
  }

  ClientStats stats() const {
    std::lock_guard lock(mu_);
    return stats_;
  }

  const CompletionBackend& backend() const { return *backend_; }
  const ClientOptions& options() const { return options_; }
  std::size_t concurrency() const {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(options_.concurrency), 1,
                                                                kMaxConcurrency));
  }

 private:
  void finish(const std::string& key) {
    std::lock_guard lock(mu_);
    in_flight_.erase(key);
  }

  CompletionRecord call_backend(const std::string& key, const std::string& prompt, const GenerationParams& params) {
    auto delay = options_.retry.initial_backoff;
    for (int attempt = 0;; ++attempt) {
      try {
        slots_.acquire();
        BackendReply reply;
        try {
          {
            std::lock_guard lock(mu_);
            ++stats_.backend_calls;
          }
          reply = backend_->invoke(prompt, params);
        } catch (...) {
          slots_.release();
          throw;
        }
        slots_.release();
        return CompletionRecord{key,         prompt, std::move(reply.response), reply.input_tokens, reply.output_tokens,
                                utc_timestamp(), backend_->kind()};
      } catch (const TransientBackendError& e) {
        if (attempt >= options_.retry.max_retries)
          throw BackendUnavailable("backend unavailable after " + std::to_string(attempt + 1) +
                                   " attempts: " + e.what());
        {
          std::lock_guard lock(mu_);
          ++stats_.retries;
        }
        std::this_thread::sleep_for(delay);
        delay = std::min(options_.retry.max_backoff,
                         std::chrono::milliseconds(static_cast<long long>(delay.count() * options_.retry.multiplier)));
      }
    }
  }

  std::shared_ptr<CompletionBackend> backend_;
  std::shared_ptr<CompletionCache> cache_;
  ClientOptions options_;
  std::counting_semaphore<kMaxConcurrency> slots_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<CompletionRecord>> in_flight_;
  ClientStats stats_;
};

// ---------------------------------------------------------------------------
// Cost accounting

/// Prices in currency per 1,000 tokens.
struct CostModel {
  double input_price_per_1k = 0.0005;
  double output_price_per_1k = 0.0015;

  void validate() const {
    if (input_price_per_1k < 0 || output_price_per_1k < 0) throw InvalidInput("prices must be non-negative");
  }
};

struct TokenCounts {
  double input_tokens = 0;
  double output_tokens = 0;

  TokenCounts& operator+=(const TokenCounts& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
};

struct StepCost {
  std::string step;
  TokenCounts tokens;
  double cost = 0;
};

struct CostReport {
  std::vector<StepCost> steps;
  double total = 0;
};

inline double token_cost(const TokenCounts& t, const CostModel& model) {
  return t.input_tokens / 1000.0 * model.input_price_per_1k + t.output_tokens / 1000.0 * model.output_price_per_1k;
}

inline CostReport estimate_cost(const std::vector<std::pair<std::string, TokenCounts>>& steps, const CostModel& model) {
  model.validate();
  CostReport report;
  for (const auto& [name, tokens] : steps) {
    if (tokens.input_tokens < 0 || tokens.output_tokens < 0) throw InvalidInput("token counts must be non-negative");
    StepCost sc{name, tokens, token_cost(tokens, model)};
    report.total += sc.cost;
    report.steps.push_back(std::move(sc));
  }
  return report;
}

inline TokenCounts token_totals(const std::vector<CompletionRecord>& records) {
  TokenCounts t;
  for (const auto& r : records) {
    t.input_tokens += static_cast<double>(r.input_tokens);
    t.output_tokens += static_cast<double>(r.output_tokens);
  }
  return t;
}

inline CostReport estimate_cost(const std::map<std::string, std::vector<CompletionRecord>>& records_by_step,
                                const CostModel& model) {
  std::vector<std::pair<std::string, TokenCounts>> steps;
  for (const auto& [step, records] : records_by_step) steps.emplace_back(step, token_totals(records));
  return estimate_cost(steps, model);
}

/// Per-step request and token tallies, fed from completion records whether
/// or not they came from the cache, so totals are reproducible.
struct StepUsage {
  std::size_t requests = 0;
  std::size_t input_tokens = 0;
  std::size_t output_tokens = 0;
};

class UsageLedger {
 public:
  void add(const std::string& step, const CompletionRecord& record) {
    std::lock_guard lock(mu_);
    auto& u = steps_[step];
    ++u.requests;
    u.input_tokens += record.input_tokens;
    u.output_tokens += record.output_tokens;
  }

  void add(const std::string& step, const StepUsage& usage) {
    std::lock_guard lock(mu_);
    auto& u = steps_[step];
    u.requests += usage.requests;
    u.input_tokens += usage.input_tokens;
    u.output_tokens += usage.output_tokens;
  }

  void touch(const std::string& step) {
    std::lock_guard lock(mu_);
    steps_[step];
  }

  std::map<std::string, StepUsage> snapshot() const {
    std::lock_guard lock(mu_);
    return steps_;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, StepUsage> steps_;
};

/// "$0.00050". Rounds half away from zero at the requested precision; the
/// tiny bias keeps values like 0.001165 from rounding down due to binary
/// representation.
inline std::string format_usd(double amount, int decimals = 5) {
  const double scale = std::pow(10.0, decimals);
  const double scaled = amount * scale;
  const double rounded = std::round(scaled + (scaled >= 0 ? 1e-7 : -1e-7));
  char buf[64];
  std::snprintf(buf, sizeof buf, "$%.*f", decimals, rounded / scale);
  return buf;
}

}  // namespace sgforge
