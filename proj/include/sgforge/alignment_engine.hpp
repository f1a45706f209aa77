#pragma once

// Second chain: map free-text lexemes onto lexicon classes, one LLM question
// per distinct lexeme, with a grouped fallback for lexicons too large for a
// single prompt.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgforge/dataset.hpp"
#include "sgforge/llm_client.hpp"
#include "sgforge/parallel.hpp"
#include "sgforge/prompt_builder.hpp"
#include "sgforge/response_parser.hpp"

namespace sgforge {

enum class AlignmentProvenance { llm, kb_baseline, exact_match, manual };

inline std::string_view to_string(AlignmentProvenance p) {
  switch (p) {
    case AlignmentProvenance::llm: return "llm";
    case AlignmentProvenance::kb_baseline: return "kb_baseline";
    case AlignmentProvenance::exact_match: return "exact_match";
    case AlignmentProvenance::manual: return "manual";
  }
  return "unknown";
}

inline std::optional<AlignmentProvenance> parse_alignment_provenance(std::string_view s) {
  if (s == "llm") return AlignmentProvenance::llm;
  if (s == "kb_baseline") return AlignmentProvenance::kb_baseline;
  if (s == "exact_match") return AlignmentProvenance::exact_match;
  if (s == "manual") return AlignmentProvenance::manual;
  return std::nullopt;
}

struct AlignmentEntry {
  std::optional<ClassIndex> index;
  AlignmentProvenance provenance = AlignmentProvenance::llm;

  friend bool operator==(const AlignmentEntry&, const AlignmentEntry&) = default;
};

/// Lexeme -> class memo for one lexicon. Entries are write-once; class names
/// of the lexicon itself always resolve to themselves. When a path is given,
/// every new entry is appended to it as one JSONL line.
class AlignmentTable {
 public:
  explicit AlignmentTable(Lexicon lexicon, std::optional<std::filesystem::path> path = std::nullopt)
      : lexicon_(std::move(lexicon)), lexicon_id_(lexicon_.id()), path_(std::move(path)) {
    if (path_ && std::filesystem::exists(*path_)) load_jsonl(read_text_file(*path_));
  }

  AlignmentTable(const AlignmentTable&) = delete;
  AlignmentTable& operator=(const AlignmentTable&) = delete;

  const Lexicon& lexicon() const noexcept { return lexicon_; }
  const std::string& lexicon_id() const noexcept { return lexicon_id_; }

  std::optional<AlignmentEntry> find(std::string_view lexeme) const {
    const std::string key = normalize_lexeme(lexeme);
    if (auto idx = lexicon_.index_of(key)) return AlignmentEntry{idx, AlignmentProvenance::exact_match};
    std::lock_guard lock(mu_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  /// Returns false (and leaves the table alone) if the lexeme already has an
  /// entry or is a class name of the lexicon.
  bool insert(std::string_view lexeme, AlignmentEntry entry) {
    const std::string key = normalize_lexeme(lexeme);
    if (key.empty()) throw InvalidInput("cannot store an alignment for an empty lexeme");
    if (entry.index && !lexicon_.valid_index(*entry.index))
      throw InvalidInput("alignment index " + std::to_string(*entry.index) + " is outside lexicon " + lexicon_.name());
    if (lexicon_.index_of(key)) return false;
    std::lock_guard lock(mu_);
    if (!entries_.emplace(key, entry).second) return false;
    if (path_) append_line(key, entry);
    return true;
  }

  /// Table hit, else compute() exactly once per lexeme even when several
  /// threads ask at the same time.
  AlignmentEntry get_or_compute(std::string_view lexeme, const std::function<AlignmentEntry()>& compute) {
    const std::string key = normalize_lexeme(lexeme);
    if (auto hit = find(key)) return *hit;
    std::promise<AlignmentEntry> promise;
    std::shared_future<AlignmentEntry> waiter;
    {
      std::lock_guard lock(mu_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
      if (auto it = pending_.find(key); it != pending_.end()) {
        waiter = it->second;
      } else {
        pending_.emplace(key, promise.get_future().share());
      }
    }
    if (waiter.valid()) return waiter.get();
    try {
      AlignmentEntry entry = compute();
      insert(key, entry);
      promise.set_value(entry);
      std::lock_guard lock(mu_);
      pending_.erase(key);
      return entry;
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard lock(mu_);
      pending_.erase(key);
      throw;
    }
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return entries_.size();
  }

  /// Stored entries sorted by lexeme (self-alignments are implicit).
  std::map<std::string, AlignmentEntry> entries() const {
    std::lock_guard lock(mu_);
    return {entries_.begin(), entries_.end()};
  }

  std::string to_jsonl() const {
    std::string out;
    for (const auto& [lexeme, entry] : entries()) {
      out += entry_line(lexeme, entry);
      out.push_back('\n');
    }
    return out;
  }

  /// Seeds the table from JSONL rows; rows of other lexicons are skipped.
  /// Returns the number of rows adopted.
  std::size_t load_jsonl(std::string_view text) {
    std::size_t adopted = 0;
    std::size_t line_no = 0;
    const auto lines = split_lines(text);
    for (const auto& line : lines) {
      ++line_no;
      if (detail::trim(line).empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception&) {
        if (line_no == lines.size()) break;  // torn tail from an interrupted append
        throw FormatError("alignment table line " + std::to_string(line_no) + " is not JSON");
      }
      try {
        if (j.value("lexicon_id", std::string{}) != lexicon_id_) continue;
        const std::string lexeme = normalize_lexeme(j.at("lexeme").get<std::string>());
        const auto prov = parse_alignment_provenance(j.at("provenance").get<std::string>());
        if (!prov) throw FormatError("unknown provenance");
        AlignmentEntry entry{detail::optional_index_from(j.at("index")), *prov};
        if (entry.index && !lexicon_.valid_index(*entry.index)) throw FormatError("index outside the lexicon");
        if (lexeme.empty() || lexicon_.index_of(lexeme)) continue;
        std::lock_guard lock(mu_);
        if (entries_.emplace(lexeme, entry).second) ++adopted;
      } catch (const json::exception& e) {
        throw FormatError("alignment table line " + std::to_string(line_no) + ": " + e.what());
      } catch (const FormatError& e) {
        throw FormatError("alignment table line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return adopted;
  }

 private:
  std::string entry_line(const std::string& lexeme, const AlignmentEntry& entry) const {
    ordered_json j;
    j["lexicon_id"] = lexicon_id_;
    j["lexeme"] = lexeme;
    j["index"] = entry.index ? ordered_json(*entry.index) : ordered_json(nullptr);
    j["provenance"] = to_string(entry.provenance);
    return j.dump();
  }

  // Called with mu_ held.
  void append_line(const std::string& lexeme, const AlignmentEntry& entry) {
    if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
    std::ofstream out(*path_, std::ios::app | std::ios::binary);
    if (!out) throw ConfigError("cannot append to alignment table " + path_->string());
    out << entry_line(lexeme, entry) << '\n';
  }

  Lexicon lexicon_;
  std::string lexicon_id_;
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, AlignmentEntry> entries_;
  std::unordered_map<std::string, std::shared_future<AlignmentEntry>> pending_;
};

// ---------------------------------------------------------------------------
// Grouping

struct IndexRange {
  ClassIndex first = 1;  // 1-based, inclusive
  std::size_t size = 0;

  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// ceil(n / group_size) consecutive ranges covering 1..n in order.
inline std::vector<IndexRange> partition_groups(std::size_t n, std::size_t group_size) {
  if (group_size == 0) throw InvalidInput("group_size must be at least 1");
  std::vector<IndexRange> groups;
  for (std::size_t start = 0; start < n; start += group_size)
    groups.push_back({start + 1, std::min(group_size, n - start)});
  return groups;
}

struct LexiconGroup {
  Lexicon lexicon;  // renumbered 1..size
  ClassIndex first = 1;

  ClassIndex to_original(ClassIndex local) const { return first + local - 1; }
};

inline std::vector<LexiconGroup> partition_lexicon(const Lexicon& lexicon, std::size_t group_size) {
  const auto ranges = partition_groups(lexicon.size(), group_size);
  std::vector<LexiconGroup> out;
  out.reserve(ranges.size());
  for (std::size_t g = 0; g < ranges.size(); ++g) {
    const auto begin = lexicon.classes().begin() + static_cast<std::ptrdiff_t>(ranges[g].first - 1);
    std::vector<std::string> names(begin, begin + static_cast<std::ptrdiff_t>(ranges[g].size));
    out.push_back({Lexicon(lexicon.kind(),
                           lexicon.name() + " [" + std::to_string(g + 1) + "/" + std::to_string(ranges.size()) + "]",
                           std::move(names)),
                   ranges[g].first});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Engine

enum class HierarchyMode {
  never,
  always,
  when_over_budget,  // flat prompt first, grouped when it exceeds the token budget
};

struct AlignmentOptions {
  std::size_t group_size = 200;
  HierarchyMode hierarchy = HierarchyMode::when_over_budget;
};

class AlignmentEngine {
 public:
  AlignmentEngine(LlmClient& client, const TemplateSet& templates, AlignmentOptions options = {},
                  UsageLedger* usage = nullptr)
      : client_(client), templates_(templates), options_(options), usage_(usage) {
    if (options_.group_size == 0) throw InvalidInput("group_size must be at least 1");
  }

  std::optional<ClassIndex> align_lexeme(std::string_view lexeme, AlignmentTable& table) {
    const std::string key = normalize_lexeme(lexeme);
    if (key.empty()) throw InvalidInput("cannot align an empty lexeme");
    const Lexicon& lexicon = table.lexicon();
    return table
        .get_or_compute(key,
                        [&]() -> AlignmentEntry {
                          switch (options_.hierarchy) {
                            case HierarchyMode::always:
                              return {hierarchical_uncached(key, lexicon, options_.group_size),
                                      AlignmentProvenance::llm};
                            case HierarchyMode::never: return {ask(key, lexicon), AlignmentProvenance::llm};
                            case HierarchyMode::when_over_budget: break;
                          }
                          std::string prompt;
                          try {
                            prompt = render(key, lexicon);
                          } catch (const PromptTooLong&) {
                            return {hierarchical_uncached(key, lexicon, options_.group_size),
                                    AlignmentProvenance::llm};
                          }
                          return {ask_rendered(prompt, lexicon), AlignmentProvenance::llm};
                        })
        .index;
  }

  /// Grouped alignment against `lexicon`, uncached. Each group is a
  /// renumbered sub-lexicon; the non-None answers, in first-seen order, form
  /// a candidate lexicon that is asked once more when there are two or more.
  std::optional<ClassIndex> align_hierarchical(std::string_view lexeme, const Lexicon& lexicon,
                                               std::size_t group_size) {
    const std::string key = normalize_lexeme(lexeme);
    if (key.empty()) throw InvalidInput("cannot align an empty lexeme");
    if (group_size == 0) throw InvalidInput("group_size must be at least 1");
    if (auto idx = lexicon.index_of(key)) return idx;
    return hierarchical_uncached(key, lexicon, group_size);
  }

  /// Annotates each triplet with class indices; order is preserved and each
  /// distinct lexeme is asked at most once.
  std::vector<AlignedTriplet> align_triplets(const std::vector<RawTriplet>& raw, AlignmentTable& entity_table,
                                             AlignmentTable& predicate_table) {
    if (entity_table.lexicon().kind() != LexiconKind::entity)
      throw InvalidInput("entity table is bound to a predicate lexicon");
    if (predicate_table.lexicon().kind() != LexiconKind::predicate)
      throw InvalidInput("predicate table is bound to an entity lexicon");

    std::vector<std::pair<std::string, AlignmentTable*>> work;
    std::set<std::pair<std::string, AlignmentTable*>> queued;
    auto enqueue = [&](const std::string& lexeme, AlignmentTable* table) {
      if (queued.emplace(lexeme, table).second) work.emplace_back(lexeme, table);
    };
    for (const auto& t : raw) {
      enqueue(t.subject, &entity_table);
      enqueue(t.predicate, &predicate_table);
      enqueue(t.object, &entity_table);
    }
    parallel_for(work.size(), client_.concurrency(),
                 [&](std::size_t i) { align_lexeme(work[i].first, *work[i].second); });

    std::vector<AlignedTriplet> out;
    out.reserve(raw.size());
    for (const auto& t : raw) {
      AlignedTriplet a;
      a.subject_class = entity_table.find(t.subject).value().index;
      a.predicate_class = predicate_table.find(t.predicate).value().index;
      a.object_class = entity_table.find(t.object).value().index;
      a.raw = t;
      out.push_back(std::move(a));
    }
    return out;
  }

  std::size_t unparseable_answers() const { return unparseable_.load(); }

 private:
  std::string render(const std::string& lexeme, const Lexicon& lexicon) const {
    return render_alignment_prompt(templates_.alignment_for(lexicon.kind()), lexeme, lexicon, client_.options().limits);
  }

  std::optional<ClassIndex> ask_rendered(const std::string& prompt, const Lexicon& lexicon) {
    const CompletionResult result = client_.complete(prompt);
    if (usage_) usage_->add(lexicon.kind() == LexiconKind::entity ? "align_entity" : "align_predicate", result.record);
    const AlignmentParse parsed = parse_alignment(result.record.response, lexicon);
    if (parsed.unparseable) ++unparseable_;
    return parsed.index;
  }

  std::optional<ClassIndex> ask(const std::string& lexeme, const Lexicon& lexicon) {
    return ask_rendered(render(lexeme, lexicon), lexicon);
  }

  std::optional<ClassIndex> hierarchical_uncached(const std::string& lexeme, const Lexicon& lexicon,
                                                  std::size_t group_size) {
    const auto groups = partition_lexicon(lexicon, group_size);
    if (groups.size() == 1) return ask(lexeme, lexicon);
    std::vector<ClassIndex> candidates;
    for (const auto& group : groups) {
      if (auto local = ask(lexeme, group.lexicon)) {
        const ClassIndex original = group.to_original(*local);
        if (std::find(candidates.begin(), candidates.end(), original) == candidates.end())
          candidates.push_back(original);
      }
    }
    if (candidates.empty()) return std::nullopt;
    if (candidates.size() == 1) return candidates.front();
    std::vector<std::string> names;
    for (ClassIndex c : candidates) names.push_back(lexicon.class_name(c));
    const Lexicon finalists(lexicon.kind(), lexicon.name() + " [candidates]", std::move(names));
    const auto pick = ask(lexeme, finalists);
    if (!pick) return std::nullopt;
    return lexicon.index_of(finalists.class_name(*pick));
  }

  LlmClient& client_;
  const TemplateSet& templates_;
  AlignmentOptions options_;
  UsageLedger* usage_;
  std::atomic<std::size_t> unparseable_{0};
};

}  // namespace sgforge
