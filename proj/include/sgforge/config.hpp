#pragma once

// Run configuration: one JSON file, paths relative to the file's directory,
// any field overridable with a dotted key (e.g. "http.model=gpt-4").

#include <filesystem>
#include <optional>
#include <set>
#include <string>

#include "sgforge/alignment_engine.hpp"
#include "sgforge/dataset.hpp"
#include "sgforge/llm_client.hpp"
#include "sgforge/log.hpp"

namespace sgforge {

enum class RunMode { llm, combined, baseline };
enum class StopAfter { none, extract, align };

struct RunConfig {
  std::filesystem::path base_dir;

  std::filesystem::path captions;
  std::filesystem::path entity_lexicon;
  std::filesystem::path predicate_lexicon;

  std::string backend = "mock";  // http | mock | replay | baseline
  std::optional<std::filesystem::path> mock_fixture;
  std::string replay_source = "http";  // whose cache entries a replay run reads
  std::string http_base_url = "https://api.openai.com/v1";
  std::string http_model = "gpt-3.5-turbo";
  std::string http_api_key_env = "OPENAI_API_KEY";
  int http_timeout_seconds = 60;

  std::optional<std::filesystem::path> cache;
  std::filesystem::path checkpoint_dir;
  std::filesystem::path output;
  std::filesystem::path report;
  std::map<std::string, std::filesystem::path> templates;  // chain name -> template file
  std::optional<std::filesystem::path> kb;

  bool use_paraphrase = true;
  bool combined = false;
  HierarchyMode hierarchy = HierarchyMode::when_over_budget;
  std::size_t group_size = 200;
  std::size_t concurrency = 4;
  std::size_t max_prompt_tokens = 4096;
  double temperature = 0.0;
  std::optional<int> max_tokens;
  RetryPolicy retry;
  CostModel prices;
  LogLevel log_level = LogLevel::warn;

  bool resume = false;
  StopAfter stop_after = StopAfter::none;

  RunMode mode() const {
    if (backend == "baseline") return RunMode::baseline;
    return combined ? RunMode::combined : RunMode::llm;
  }
};

inline std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::llm: return "llm";
    case RunMode::combined: return "combined";
    case RunMode::baseline: return "baseline";
  }
  return "unknown";
}

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "captions",    "entity_lexicon", "predicate_lexicon", "backend",           "mock_fixture", "replay_source",
      "http",        "cache",          "checkpoint_dir",    "output",            "report",       "templates",
      "kb",          "use_paraphrase", "combined",          "hierarchical",      "group_size",   "concurrency",
      "max_prompt_tokens", "temperature", "max_tokens",     "retry",             "prices",       "log_level"};
  return keys;
}

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (key == "api_key" || key == "openai_api_key")
      throw ConfigError("API keys are read from the environment only; remove '" + where + key + "' from the config");
    if (allowed.count(key) == 0) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

// Sets a dotted key in a JSON object, creating intermediate objects.
inline void set_dotted(json& root, std::string_view dotted, json value) {
  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (key.empty()) throw ConfigError("bad override key '" + std::string(dotted) + "'");
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

}  // namespace detail

/// "key=value"; the value is parsed as JSON when it is valid JSON and taken
/// as a plain string otherwise.
inline void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must look like key=value: " + std::string(assignment));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  detail::set_dotted(config, assignment.substr(0, eq), std::move(value));
}

/// Validates field types and resolves paths against `base_dir`. File
/// existence is checked later, when the run loads its inputs.
inline RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(j, detail::known_config_keys(), "");
  RunConfig c;
  c.base_dir = base_dir;
  auto path_of = [&](const std::string& s) {
    std::filesystem::path p(s);
    return p.is_absolute() ? p : (base_dir / p).lexically_normal();
  };
  auto get = [&]<typename T>(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + where + key + "' has the wrong type");
    }
  };
  auto required_path = [&](const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");
    std::string s;
    get(j, key, s, "");
    if (s.empty()) throw ConfigError(std::string("config key '") + key + "' is empty");
    return path_of(s);
  };
  auto optional_path = [&](const char* key) -> std::optional<std::filesystem::path> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    std::string s;
    get(j, key, s, "");
    if (s.empty()) return std::nullopt;
    return path_of(s);
  };

  c.captions = required_path("captions");
  c.entity_lexicon = required_path("entity_lexicon");
  c.predicate_lexicon = required_path("predicate_lexicon");
  c.output = required_path("output");
  get(j, "backend", c.backend, "");
  if (c.backend != "http" && c.backend != "mock" && c.backend != "replay" && c.backend != "baseline")
    throw ConfigError("backend must be one of http, mock, replay, baseline; got '" + c.backend + "'");
  c.mock_fixture = optional_path("mock_fixture");
  get(j, "replay_source", c.replay_source, "");
  if (c.replay_source != "http" && c.replay_source != "mock")
    throw ConfigError("replay_source must be 'http' or 'mock'");
  c.cache = optional_path("cache");
  c.kb = optional_path("kb");
  c.report = optional_path("report").value_or(std::filesystem::path(c.output.string() + ".report.json"));
  c.checkpoint_dir = optional_path("checkpoint_dir").value_or(std::filesystem::path(c.output.string() + ".checkpoint"));

  if (j.contains("http")) {
    const json& h = j.at("http");
    if (!h.is_object()) throw ConfigError("config key 'http' must be an object");
    detail::reject_unknown(h, {"base_url", "model", "api_key_env", "timeout_seconds"}, "http.");
    get(h, "base_url", c.http_base_url, "http.");
    get(h, "model", c.http_model, "http.");
    get(h, "api_key_env", c.http_api_key_env, "http.");
    get(h, "timeout_seconds", c.http_timeout_seconds, "http.");
    if (c.http_timeout_seconds <= 0) throw ConfigError("http.timeout_seconds must be positive");
  }
  if (j.contains("templates")) {
    const json& t = j.at("templates");
    if (!t.is_object()) throw ConfigError("config key 'templates' must be an object");
    for (const auto& [name, value] : t.items()) {
      if (!parse_chain(name)) throw ConfigError("unknown template chain 'templates." + name + "'");
      if (!value.is_string()) throw ConfigError("config key 'templates." + name + "' must be a path");
      c.templates[name] = path_of(value.get<std::string>());
    }
  }

  get(j, "use_paraphrase", c.use_paraphrase, "");
  get(j, "combined", c.combined, "");
  if (j.contains("hierarchical")) {
    std::string h;
    get(j, "hierarchical", h, "");
    if (h == "auto") c.hierarchy = HierarchyMode::when_over_budget;
    else if (h == "always") c.hierarchy = HierarchyMode::always;
    else if (h == "never") c.hierarchy = HierarchyMode::never;
    else throw ConfigError("hierarchical must be auto, always or never");
  }
  long long group_size = static_cast<long long>(c.group_size);
  long long concurrency = static_cast<long long>(c.concurrency);
  long long max_prompt_tokens = static_cast<long long>(c.max_prompt_tokens);
  get(j, "group_size", group_size, "");
  get(j, "concurrency", concurrency, "");
  get(j, "max_prompt_tokens", max_prompt_tokens, "");
  if (group_size < 1) throw ConfigError("group_size must be at least 1");
  if (concurrency < 1 || concurrency > 256) throw ConfigError("concurrency must be between 1 and 256");
  if (max_prompt_tokens < 1) throw ConfigError("max_prompt_tokens must be positive");
  c.group_size = static_cast<std::size_t>(group_size);
  c.concurrency = static_cast<std::size_t>(concurrency);
  c.max_prompt_tokens = static_cast<std::size_t>(max_prompt_tokens);

  get(j, "temperature", c.temperature, "");
  if (c.temperature < 0) throw ConfigError("temperature must be non-negative");
  if (j.contains("max_tokens") && !j.at("max_tokens").is_null()) {
    int mt = 0;
    get(j, "max_tokens", mt, "");
    if (mt < 1) throw ConfigError("max_tokens must be positive");
    c.max_tokens = mt;
  }
  if (j.contains("retry")) {
    const json& r = j.at("retry");
    if (!r.is_object()) throw ConfigError("config key 'retry' must be an object");
    detail::reject_unknown(r, {"max_retries", "initial_backoff_ms", "multiplier", "max_backoff_ms"}, "retry.");
    long long initial = c.retry.initial_backoff.count();
    long long max_backoff = c.retry.max_backoff.count();
    get(r, "max_retries", c.retry.max_retries, "retry.");
    get(r, "initial_backoff_ms", initial, "retry.");
    get(r, "multiplier", c.retry.multiplier, "retry.");
    get(r, "max_backoff_ms", max_backoff, "retry.");
    if (c.retry.max_retries < 0 || initial < 0 || max_backoff < 0 || c.retry.multiplier < 1.0)
      throw ConfigError("retry settings must be non-negative and multiplier at least 1");
    c.retry.initial_backoff = std::chrono::milliseconds(initial);
    c.retry.max_backoff = std::chrono::milliseconds(max_backoff);
  }
  if (j.contains("prices")) {
    const json& p = j.at("prices");
    if (!p.is_object()) throw ConfigError("config key 'prices' must be an object");
    detail::reject_unknown(p, {"input_per_1k", "output_per_1k"}, "prices.");
    get(p, "input_per_1k", c.prices.input_price_per_1k, "prices.");
    get(p, "output_per_1k", c.prices.output_price_per_1k, "prices.");
    if (c.prices.input_price_per_1k < 0 || c.prices.output_price_per_1k < 0)
      throw ConfigError("prices must be non-negative");
  }
  if (j.contains("log_level")) {
    std::string level;
    get(j, "log_level", level, "");
    auto parsed = parse_log_level(level);
    if (!parsed) throw ConfigError("log_level must be debug, info, warn, error or off");
    c.log_level = *parsed;
  }

  if (c.backend == "mock" && !c.mock_fixture) throw ConfigError("backend 'mock' needs 'mock_fixture'");
  if (c.backend == "baseline" && !c.kb) throw ConfigError("backend 'baseline' needs 'kb'");
  if (c.backend == "baseline" && c.combined) throw ConfigError("the combined prompt needs an LLM backend");
  return c;
}

inline json read_config_json(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

inline RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  json j = read_config_json(path);
  for (const auto& o : overrides) apply_override(j, o);
  return parse_run_config(j, std::filesystem::absolute(path).parent_path());
}

}  // namespace sgforge
