#pragma once

// Prompt templates and their rendering. A rendered prompt is always
//
//   <task description>
//   <examples intro>            (optional)
//   Question: <example question>
//   Answer: <example answer>    (repeated per in-context example)
//   Question: <actual question>
//   Answer:
//
// Template file format (UTF-8): a line holding only "[SECTION]" opens a
// section; its body runs until the next section line. Sections are [CHAIN]
// (optional), [TASK], [EXAMPLES] (optional intro line), repeated
// [EXAMPLE.q]/[EXAMPLE.a] pairs, and [QUESTION] containing {INPUT}.
// Alignment tasks use {LEXICON} and {LEXICON_SIZE}; the combined task uses
// {ENTITY_LEXICON}, {ENTITY_LEXICON_SIZE}, {PREDICATE_LEXICON} and
// {PREDICATE_LEXICON_SIZE}.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgforge/core_types.hpp"
#include "sgforge/dataset.hpp"
#include "sgforge/default_templates.hpp"

namespace sgforge {

enum class Chain { extract_original, extract_paraphrase, align_entity, align_predicate, combined };

inline std::string_view to_string(Chain chain) {
  switch (chain) {
    case Chain::extract_original: return "extract_original";
    case Chain::extract_paraphrase: return "extract_paraphrase";
    case Chain::align_entity: return "align_entity";
    case Chain::align_predicate: return "align_predicate";
    case Chain::combined: return "combined";
  }
  return "unknown";
}

inline std::optional<Chain> parse_chain(std::string_view s) {
  for (Chain c : {Chain::extract_original, Chain::extract_paraphrase, Chain::align_entity, Chain::align_predicate,
                  Chain::combined})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline bool is_extraction_chain(Chain c) {
  return c == Chain::extract_original || c == Chain::extract_paraphrase || c == Chain::combined;
}

inline bool is_alignment_chain(Chain c) { return c == Chain::align_entity || c == Chain::align_predicate; }

struct FewShotExample {
  std::string question;
  std::string answer;

  friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

struct PromptTemplate {
  Chain chain = Chain::extract_original;
  std::string task_description;
  std::string examples_intro;
  std::vector<FewShotExample> examples;
  std::string question_pattern;

  friend bool operator==(const PromptTemplate&, const PromptTemplate&) = default;
};

inline constexpr std::string_view kInputSlot = "{INPUT}";

/// Prompt length budget. Tokens are approximated as ceil(bytes / 4).
struct PromptLimits {
  std::size_t max_tokens = 4096;
};

inline std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

inline void check_prompt_budget(std::string_view prompt, const PromptLimits& limits) {
  const std::size_t tokens = estimate_tokens(prompt);
  if (tokens > limits.max_tokens) throw PromptTooLong(tokens, limits.max_tokens);
}

namespace detail {

inline std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

// Single pass: text inserted for one placeholder is never rescanned.
inline std::string substitute(std::string_view text, const std::map<std::string, std::string, std::less<>>& vars) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const std::size_t close = text.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = vars.find(text.substr(i + 1, close - i - 1));
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

}  // namespace detail

inline void validate_template(const PromptTemplate& t) {
  auto fail = [&](const std::string& why) {
    throw FormatError(std::string("template ") + std::string(to_string(t.chain)) + ": " + why);
  };
  if (t.task_description.empty()) fail("empty [TASK]");
  if (detail::count_occurrences(t.question_pattern, kInputSlot) != 1) fail("[QUESTION] must contain {INPUT} exactly once");
  for (const auto& ex : t.examples)
    if (ex.question.empty() || ex.answer.empty()) fail("in-context example with an empty question or answer");
  switch (t.chain) {
    case Chain::extract_paraphrase:
      if (t.task_description.find("Step 1") == std::string::npos ||
          t.task_description.find("Step 2") == std::string::npos)
        fail("paraphrase task must state the Step 1 / Step 2 instruction");
      break;
    case Chain::align_entity:
    case Chain::align_predicate:
      if (t.task_description.find("{LEXICON}") == std::string::npos) fail("alignment task must contain {LEXICON}");
      break;
    case Chain::combined:
      if (t.task_description.find("{ENTITY_LEXICON}") == std::string::npos ||
          t.task_description.find("{PREDICATE_LEXICON}") == std::string::npos)
        fail("combined task must contain {ENTITY_LEXICON} and {PREDICATE_LEXICON}");
      break;
    case Chain::extract_original:
      break;
  }
}

/// Parses the template-file format. `expected` is required when the text has
/// no [CHAIN] section, and must agree with it otherwise.
inline PromptTemplate parse_template(std::string_view text, std::optional<Chain> expected = std::nullopt) {
  PromptTemplate t;
  std::optional<Chain> declared;
  std::string section;
  std::vector<std::string> body;
  bool have_task = false;
  bool have_question = false;
  std::optional<std::string> pending_question;

  auto join = [](const std::vector<std::string>& lines) {
    std::string s;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i) s.push_back('\n');
      s += lines[i];
    }
    return s;
  };
  auto flush = [&]() {
    if (section.empty()) {
      for (const auto& l : body)
        if (!detail::trim(l).empty()) throw FormatError("template text before the first section");
      return;
    }
    std::vector<std::string> lines = body;
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    const std::string value = join(lines);
    if (section == "CHAIN") {
      declared = parse_chain(detail::trim(value));
      if (!declared) throw FormatError("unknown template chain '" + value + "'");
    } else if (section == "TASK") {
      t.task_description = value;
      have_task = true;
    } else if (section == "EXAMPLES") {
      t.examples_intro = value;
    } else if (section == "EXAMPLE.q") {
      if (pending_question) throw FormatError("[EXAMPLE.q] without a following [EXAMPLE.a]");
      pending_question = value;
    } else if (section == "EXAMPLE.a") {
      if (!pending_question) throw FormatError("[EXAMPLE.a] without a preceding [EXAMPLE.q]");
      t.examples.push_back({std::move(*pending_question), value});
      pending_question.reset();
    } else if (section == "QUESTION") {
      t.question_pattern = value;
      have_question = true;
    } else {
      throw FormatError("unknown template section [" + section + "]");
    }
  };

  for (const auto& line : split_lines(text)) {
    if (line.size() >= 2 && line.front() == '[' && line.back() == ']' && line.find(' ') == std::string::npos) {
      flush();
      section = line.substr(1, line.size() - 2);
      body.clear();
    } else {
      body.push_back(line);
    }
  }
  flush();
  if (pending_question) throw FormatError("[EXAMPLE.q] without a following [EXAMPLE.a]");
  if (!have_task || !have_question) throw FormatError("template needs [TASK] and [QUESTION] sections");
  if (declared && expected && *declared != *expected)
    throw FormatError("template declares chain " + std::string(to_string(*declared)) + ", expected " +
                      std::string(to_string(*expected)));
  if (!declared && !expected) throw FormatError("template has no [CHAIN] section and no chain was given");
  t.chain = declared ? *declared : *expected;
  validate_template(t);
  return t;
}

inline std::string serialize_template(const PromptTemplate& t) {
  std::string out = "[CHAIN]\n" + std::string(to_string(t.chain)) + "\n[TASK]\n" + t.task_description + "\n";
  if (!t.examples_intro.empty()) out += "[EXAMPLES]\n" + t.examples_intro + "\n";
  for (const auto& ex : t.examples) out += "[EXAMPLE.q]\n" + ex.question + "\n[EXAMPLE.a]\n" + ex.answer + "\n";
  out += "[QUESTION]\n" + t.question_pattern + "\n";
  return out;
}

inline PromptTemplate load_template(const std::filesystem::path& path, std::optional<Chain> expected = std::nullopt) {
  try {
    return parse_template(read_text_file(path), expected);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline PromptTemplate default_template(Chain chain) {
  switch (chain) {
    case Chain::extract_original: return parse_template(default_templates::kExtractOriginal, chain);
    case Chain::extract_paraphrase: return parse_template(default_templates::kExtractParaphrase, chain);
    case Chain::align_entity: return parse_template(default_templates::kAlignEntity, chain);
    case Chain::align_predicate: return parse_template(default_templates::kAlignPredicate, chain);
    case Chain::combined: return parse_template(default_templates::kCombined, chain);
  }
  throw InvalidInput("unknown chain");
}

/// The full set a pipeline run needs.
struct TemplateSet {
  PromptTemplate extract_original = default_template(Chain::extract_original);
  PromptTemplate extract_paraphrase = default_template(Chain::extract_paraphrase);
  PromptTemplate align_entity = default_template(Chain::align_entity);
  PromptTemplate align_predicate = default_template(Chain::align_predicate);
  PromptTemplate combined = default_template(Chain::combined);

  const PromptTemplate& alignment_for(LexiconKind kind) const {
    return kind == LexiconKind::entity ? align_entity : align_predicate;
  }
};

/// "1.airplane 2.animal ... N.name" in lexicon order.
inline std::string enumerate_lexicon(const Lexicon& lexicon) {
  std::string out;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(i + 1) + "." + lexicon.classes()[i];
  }
  return out;
}

/// Inverse of enumerate_lexicon: expects consecutive indices starting at 1.
inline std::vector<std::string> parse_enumeration(std::string_view text) {
  std::vector<std::string> names;
  text = detail::trim(text);
  if (text.empty()) return names;
  if (text.substr(0, 2) != "1.") throw FormatError("enumeration must start with '1.'");
  std::size_t pos = 2;
  for (std::size_t next = 2;; ++next) {
    const std::string marker = " " + std::to_string(next) + ".";
    const std::size_t hit = text.find(marker, pos);
    if (hit == std::string_view::npos) {
      names.emplace_back(text.substr(pos));
      break;
    }
    names.emplace_back(text.substr(pos, hit - pos));
    pos = hit + marker.size();
  }
  return names;
}

namespace detail {

inline std::string assemble_prompt(const PromptTemplate& t, const std::map<std::string, std::string, std::less<>>& task_vars,
                                   std::string_view input) {
  std::string out = substitute(t.task_description, task_vars);
  out.push_back('\n');
  if (!t.examples_intro.empty()) {
    out += t.examples_intro;
    out.push_back('\n');
  }
  for (const auto& ex : t.examples) {
    out += "Question: " + ex.question + "\nAnswer: " + ex.answer + "\n";
  }
  out += "Question: " + substitute(t.question_pattern, {{"INPUT", std::string(input)}});
  out += "\nAnswer:";
  return out;
}

}  // namespace detail

/// Lexicons enumerated inside the combined prompt.
struct LexiconPair {
  const Lexicon& entities;
  const Lexicon& predicates;
};

inline std::string render_extraction_prompt(const PromptTemplate& t, const CaptionRecord& caption,
                                            const PromptLimits& limits = {},
                                            const LexiconPair* lexicons = nullptr) {
  if (!is_extraction_chain(t.chain))
    throw InvalidInput("template " + std::string(to_string(t.chain)) + " is not an extraction template");
  if (detail::trim(caption.text).empty()) throw InvalidInput("caption text is empty");
  std::map<std::string, std::string, std::less<>> vars;
  if (t.chain == Chain::combined) {
    if (lexicons == nullptr) throw InvalidInput("the combined template needs entity and predicate lexicons");
    vars["ENTITY_LEXICON"] = enumerate_lexicon(lexicons->entities);
    vars["ENTITY_LEXICON_SIZE"] = std::to_string(lexicons->entities.size());
    vars["PREDICATE_LEXICON"] = enumerate_lexicon(lexicons->predicates);
    vars["PREDICATE_LEXICON_SIZE"] = std::to_string(lexicons->predicates.size());
  }
  std::string prompt = detail::assemble_prompt(t, vars, caption.text);
  check_prompt_budget(prompt, limits);
  return prompt;
}

inline std::string render_alignment_prompt(const PromptTemplate& t, std::string_view lexeme, const Lexicon& lexicon,
                                           const PromptLimits& limits = {}) {
  if (!is_alignment_chain(t.chain))
    throw InvalidInput("template " + std::string(to_string(t.chain)) + " is not an alignment template");
  const LexiconKind wanted = t.chain == Chain::align_entity ? LexiconKind::entity : LexiconKind::predicate;
  if (lexicon.kind() != wanted)
    throw InvalidInput("template " + std::string(to_string(t.chain)) + " cannot align against a " +
                       std::string(to_string(lexicon.kind())) + " lexicon");
  if (detail::trim(lexeme).empty()) throw InvalidInput("lexeme is empty");
  if (lexicon.empty()) throw InvalidInput("lexicon is empty");
  std::string prompt = detail::assemble_prompt(
      t, {{"LEXICON", enumerate_lexicon(lexicon)}, {"LEXICON_SIZE", std::to_string(lexicon.size())}}, lexeme);
  check_prompt_budget(prompt, limits);
  return prompt;
}

}  // namespace sgforge
