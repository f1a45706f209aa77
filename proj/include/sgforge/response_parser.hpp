#pragma once

// Turns free-text LLM answers into triplets and lexicon indices. Parsing is
// total: nothing here throws on odd input, degradations are counted instead.

#include <cctype>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sgforge/core_types.hpp"

namespace sgforge {

struct TripletParse {
  std::vector<RawTriplet> triplets;
  std::size_t malformed_spans = 0;
};

struct AlignmentParse {
  std::optional<ClassIndex> index;
  bool unparseable = false;
};

namespace detail {

inline constexpr std::string_view kOpenAngle = "\xE2\x9F\xA8";   // U+27E8
inline constexpr std::string_view kCloseAngle = "\xE2\x9F\xA9";  // U+27E9

// Length of an opening / closing bracket at `pos`, or 0.
inline std::size_t open_at(std::string_view s, std::size_t pos) {
  if (s[pos] == '<') return 1;
  if (s.substr(pos, kOpenAngle.size()) == kOpenAngle) return kOpenAngle.size();
  return 0;
}

inline std::size_t close_at(std::string_view s, std::size_t pos) {
  if (s[pos] == '>') return 1;
  if (s.substr(pos, kCloseAngle.size()) == kCloseAngle) return kCloseAngle.size();
  return 0;
}

inline std::size_t rfind_case_insensitive(std::string_view haystack, std::string_view needle) {
  const std::string h = to_lower_ascii(haystack);
  const std::string n = to_lower_ascii(needle);
  return h.rfind(n);
}

struct Span {
  std::vector<std::string> parts;  // raw, comma-split content
};

// Every bracketed span of `text`. Unclosed or nested spans count as malformed.
inline std::vector<Span> bracket_spans(std::string_view text, std::size_t& malformed) {
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t open_len = open_at(text, i);
    if (open_len == 0) {
      ++i;
      continue;
    }
    const std::size_t content_start = i + open_len;
    std::size_t j = content_start;
    bool closed = false;
    while (j < text.size()) {
      if (open_at(text, j) != 0) break;  // nested or stray opener: restart there
      if (std::size_t close_len = close_at(text, j); close_len != 0) {
        Span span;
        std::string_view content = text.substr(content_start, j - content_start);
        std::size_t start = 0;
        for (;;) {
          const std::size_t comma = content.find(',', start);
          span.parts.emplace_back(content.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                        : comma - start));
          if (comma == std::string_view::npos) break;
          start = comma + 1;
        }
        spans.push_back(std::move(span));
        i = j + close_len;
        closed = true;
        break;
      }
      ++j;
    }
    if (!closed) {
      ++malformed;
      i = j;
    }
  }
  return spans;
}

inline std::string_view after_final_marker(std::string_view response, std::string_view marker) {
  const std::size_t pos = rfind_case_insensitive(response, marker);
  if (pos == std::string::npos) return response;
  return response.substr(pos + marker.size());
}

// Exact lookup, else the longest leading word sequence that is a class
// ("lying on the mat" -> "lying on").
inline std::optional<ClassIndex> resolve_name(const std::string& name, const Lexicon& lexicon) {
  if (name.empty()) return std::nullopt;
  if (auto idx = lexicon.index_of(name)) return idx;
  std::string prefix = name;
  for (;;) {
    const std::size_t space = prefix.rfind(' ');
    if (space == std::string::npos) return std::nullopt;
    prefix.resize(space);
    if (auto idx = lexicon.index_of(prefix)) return idx;
  }
}

struct NumberedAnswer {
  ClassIndex number = 0;
  std::string name;  // normalized
};

// First "N.name" token. A digit run counts only when it starts a word and is
// followed by '.' and a non-digit (so "3.5" is skipped).
inline std::optional<NumberedAnswer> first_numbered_answer(std::string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!std::isdigit(c)) continue;
    if (i > 0 && std::isalnum(static_cast<unsigned char>(text[i - 1]))) continue;
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    if (j >= text.size() || text[j] != '.' ||
        (j + 1 < text.size() && std::isdigit(static_cast<unsigned char>(text[j + 1])))) {
      i = j;
      continue;
    }
    if (j - i > 9) {  // absurdly large index; treat as text
      i = j;
      continue;
    }
    NumberedAnswer out;
    out.number = static_cast<ClassIndex>(std::stoull(std::string(text.substr(i, j - i))));
    std::size_t end = j + 1;
    while (end < text.size() && text[end] != '\n' && text[end] != ',' && text[end] != ';' && text[end] != '<' &&
           text[end] != '>' && text[end] != '(')
      ++end;
    out.name = normalize_lexeme(text.substr(j + 1, end - j - 1));
    return out;
  }
  return std::nullopt;
}

}  // namespace detail

/// Extracts "<s, p, o>" / "⟨s, p, o⟩" spans. When the answer contains a
/// "meaningful triplets are" marker, only text after the last one is used,
/// which skips the intermediate Step-1/Step-2 lists of paraphrase answers.
inline TripletParse parse_triplets(std::string_view response, const CaptionRecord& caption, TripletSource source) {
  TripletParse out;
  const std::string_view region = detail::after_final_marker(response, "meaningful triplets are");
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (auto& span : detail::bracket_spans(region, out.malformed_spans)) {
    if (span.parts.size() != 3) {
      ++out.malformed_spans;
      continue;
    }
    auto t = make_raw_triplet(span.parts[0], span.parts[1], span.parts[2], source, caption.image_id, caption.caption_id);
    if (!t) {
      ++out.malformed_spans;
      continue;
    }
    if (!seen.emplace(t->subject, t->predicate, t->object).second) continue;
    out.triplets.push_back(std::move(*t));
  }
  return out;
}

/// Resolves an alignment answer such as "29.near" or "0.None".
///
/// The literal name outranks the number when they disagree ("12.surfboard"
/// resolves to surfboard), since enumeration miscounts are the more common
/// LLM slip. A number alone is accepted when it is in range. "0.None" and
/// bare "None" are the explicit no-match answer.
inline AlignmentParse parse_alignment(std::string_view response, const Lexicon& lexicon) {
  AlignmentParse out;
  if (auto answer = detail::first_numbered_answer(response)) {
    const auto by_name = detail::resolve_name(answer->name, lexicon);
    if (answer->number == 0) {
      if (answer->name.empty() || answer->name == "none") return out;
      out.index = by_name;
      return out;
    }
    if (lexicon.valid_index(answer->number)) {
      out.index = by_name ? *by_name : answer->number;
      return out;
    }
    out.index = by_name;
    out.unparseable = !by_name;
    return out;
  }

  std::string_view text = response;
  const std::size_t colon = detail::rfind_case_insensitive(text, "answer:");
  if (colon != std::string::npos) text = text.substr(colon + 7);
  const std::string name = normalize_lexeme(text);
  if (name == "none") return out;
  out.index = detail::resolve_name(name, lexicon);
  out.unparseable = !out.index;
  return out;
}

struct CombinedParse {
  std::vector<AlignedTriplet> triplets;
  std::size_t malformed_spans = 0;
  std::size_t unparseable_components = 0;
};

/// Answers of the single-prompt mode end with
/// "The aligned triplets are <149.woman, 31.on, 7.beach>, ...".
inline CombinedParse parse_combined_triplets(std::string_view response, const CaptionRecord& caption,
                                             const Lexicon& entities, const Lexicon& predicates) {
  CombinedParse out;
  const std::string_view region = detail::after_final_marker(response, "aligned triplets are");
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (auto& span : detail::bracket_spans(region, out.malformed_spans)) {
    if (span.parts.size() != 3) {
      ++out.malformed_spans;
      continue;
    }
    // The raw lexeme is the answer text without its number.
    auto lexeme = [](const std::string& part) {
      auto numbered = detail::first_numbered_answer(part);
      std::string name = numbered ? numbered->name : normalize_lexeme(part);
      return name.empty() ? std::string("none") : name;
    };
    auto raw = make_raw_triplet(lexeme(span.parts[0]), lexeme(span.parts[1]), lexeme(span.parts[2]),
                                TripletSource::llm_paraphrased, caption.image_id, caption.caption_id);
    if (!raw || !seen.emplace(raw->subject, raw->predicate, raw->object).second) {
      if (!raw) ++out.malformed_spans;
      continue;
    }
    AlignedTriplet t;
    const AlignmentParse s = parse_alignment(span.parts[0], entities);
    const AlignmentParse p = parse_alignment(span.parts[1], predicates);
    const AlignmentParse o = parse_alignment(span.parts[2], entities);
    out.unparseable_components += static_cast<std::size_t>(s.unparseable) + static_cast<std::size_t>(p.unparseable) +
                                  static_cast<std::size_t>(o.unparseable);
    t.subject_class = s.index;
    t.predicate_class = p.index;
    t.object_class = o.index;
    t.raw = std::move(*raw);
    out.triplets.push_back(std::move(t));
  }
  return out;
}

/// "⟨s, p, o⟩"
inline std::string format_triplet(const RawTriplet& t) {
  return std::string(detail::kOpenAngle) + t.subject + ", " + t.predicate + ", " + t.object +
         std::string(detail::kCloseAngle);
}

}  // namespace sgforge
