#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sgforge/errors.hpp"
#include "sgforge/hashing.hpp"

namespace sgforge {

/// 1-based position of a class inside a Lexicon. 0 is never a valid index; it
/// is the "None" answer of an alignment prompt.
using ClassIndex = std::size_t;

enum class LexiconKind { entity, predicate };

enum class TripletSource { llm_original, llm_paraphrased, baseline_parser };

inline std::string_view to_string(LexiconKind kind) {
  return kind == LexiconKind::entity ? "entity" : "predicate";
}

inline std::string_view to_string(TripletSource source) {
  switch (source) {
    case TripletSource::llm_original: return "llm_original";
    case TripletSource::llm_paraphrased: return "llm_paraphrased";
    case TripletSource::baseline_parser: return "baseline_parser";
  }
  return "unknown";
}

inline std::optional<LexiconKind> parse_lexicon_kind(std::string_view s) {
  if (s == "entity") return LexiconKind::entity;
  if (s == "predicate") return LexiconKind::predicate;
  return std::nullopt;
}

inline std::optional<TripletSource> parse_triplet_source(std::string_view s) {
  if (s == "llm_original") return TripletSource::llm_original;
  if (s == "llm_paraphrased") return TripletSource::llm_paraphrased;
  if (s == "baseline_parser") return TripletSource::baseline_parser;
  return std::nullopt;
}

namespace detail {

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace detail

/// Canonical form of a free-text lexeme: ASCII-lowercased, whitespace
/// collapsed, surrounding ASCII punctuation and leading articles ("a", "an",
/// "the") removed. Applied to a fixed point, so the function is idempotent.
/// Returns an empty string when nothing survives; callers reject that.
inline std::string normalize_lexeme(std::string_view raw) {
  std::string s = detail::collapse_whitespace(detail::to_lower_ascii(raw));
  static constexpr std::array<std::string_view, 3> kArticles{"a ", "an ", "the "};
  for (;;) {
    const std::string before = s;
    std::string_view v = s;
    while (!v.empty() && detail::is_ascii_punct(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
    while (!v.empty() && detail::is_ascii_punct(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
    v = detail::trim(v);
    for (std::string_view article : kArticles) {
      if (v.size() > article.size() && v.substr(0, article.size()) == article) {
        v.remove_prefix(article.size());
        v = detail::trim(v);
        break;
      }
    }
    s = std::string(v);
    if (s == before) return s;
  }
}

/// Ordered set of target classes (C_e or C_p). Index space is 1-based.
class Lexicon {
 public:
  Lexicon() = default;

  Lexicon(LexiconKind kind, std::string name, std::vector<std::string> classes)
      : kind_(kind), name_(std::move(name)), classes_(std::move(classes)) {
    by_name_.reserve(classes_.size());
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      const std::string& c = classes_[i];
      if (c.empty()) throw InvalidInput("lexicon '" + name_ + "': empty class name at index " + std::to_string(i + 1));
      if (normalize_lexeme(c) != c)
        throw InvalidInput("lexicon '" + name_ + "': class '" + c + "' is not in normalized form");
      if (!by_name_.emplace(c, i + 1).second)
        throw InvalidInput("lexicon '" + name_ + "': duplicate class '" + c + "'");
    }
  }

  LexiconKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return classes_.size(); }
  bool empty() const noexcept { return classes_.empty(); }

  bool valid_index(ClassIndex index) const noexcept { return index >= 1 && index <= classes_.size(); }

  const std::string& class_name(ClassIndex index) const {
    if (!valid_index(index)) throw InvalidInput("lexicon index " + std::to_string(index) + " out of range");
    return classes_[index - 1];
  }

  /// Lookup after normalizing the query.
  std::optional<ClassIndex> index_of(std::string_view name) const {
    auto it = by_name_.find(normalize_lexeme(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  /// Stable identifier: the label plus a digest of kind and class order.
  std::string id() const {
    std::string joined;
    for (const auto& c : classes_) {
      joined += c;
      joined.push_back('\n');
    }
    return name_ + "#" + sha256_hex({to_string(kind_), joined}).substr(0, 16);
  }

  friend bool operator==(const Lexicon& a, const Lexicon& b) {
    return a.kind_ == b.kind_ && a.name_ == b.name_ && a.classes_ == b.classes_;
  }

 private:
  LexiconKind kind_ = LexiconKind::entity;
  std::string name_;
  std::vector<std::string> classes_;
  std::unordered_map<std::string, ClassIndex> by_name_;
};

struct CaptionRecord {
  std::string image_id;
  std::string caption_id;
  std::string text;

  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

struct RawTriplet {
  std::string subject;
  std::string predicate;
  std::string object;
  TripletSource source = TripletSource::llm_original;
  std::string image_id;
  std::string caption_id;

  bool well_formed() const {
    auto ok = [](const std::string& s) { return !s.empty() && normalize_lexeme(s) == s; };
    return ok(subject) && ok(predicate) && ok(object);
  }

  friend bool operator==(const RawTriplet&, const RawTriplet&) = default;
};

/// Normalizes the three lexemes; returns nullopt if any of them normalizes
/// to nothing.
inline std::optional<RawTriplet> make_raw_triplet(std::string_view subject, std::string_view predicate,
                                                  std::string_view object, TripletSource source,
                                                  std::string image_id, std::string caption_id) {
  RawTriplet t{normalize_lexeme(subject), normalize_lexeme(predicate), normalize_lexeme(object), source,
               std::move(image_id), std::move(caption_id)};
  if (t.subject.empty() || t.predicate.empty() || t.object.empty()) return std::nullopt;
  return t;
}

struct AlignedTriplet {
  std::optional<ClassIndex> subject_class;
  std::optional<ClassIndex> predicate_class;
  std::optional<ClassIndex> object_class;
  RawTriplet raw;

  bool fully_aligned() const noexcept {
    return subject_class.has_value() && predicate_class.has_value() && object_class.has_value();
  }

  friend bool operator==(const AlignedTriplet&, const AlignedTriplet&) = default;
};

}  // namespace sgforge
