#pragma once

// The conventional comparator: a small heuristic caption parser and a
// one-hop synonym-table alignment. The parser is deliberately crude. It keeps
// prepositions and drops the verb in front of them, so "lying on" becomes
// "on", which is the coarse-predicate behaviour the LLM chains are compared
// against.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sgforge/dataset.hpp"

namespace sgforge {

/// lexeme -> related lexemes (synonyms, hypernyms, hyponyms flattened), in
/// file order. The key itself never appears among its relations.
class SynonymKB {
 public:
  SynonymKB() = default;
  explicit SynonymKB(std::string source) : source_(std::move(source)) {}

  void add(std::string_view lexeme, const std::vector<std::string>& related) {
    const std::string key = normalize_lexeme(lexeme);
    if (key.empty()) throw InvalidInput("synonym KB key is empty");
    auto& rel = entries_[key];
    for (const auto& r : related) {
      std::string n = normalize_lexeme(r);
      if (n.empty() || n == key || std::find(rel.begin(), rel.end(), n) != rel.end()) continue;
      rel.push_back(std::move(n));
    }
  }

  const std::vector<std::string>& related(std::string_view lexeme) const {
    static const std::vector<std::string> kNone;
    auto it = entries_.find(normalize_lexeme(lexeme));
    return it == entries_.end() ? kNone : it->second;
  }

  const std::map<std::string, std::vector<std::string>>& entries() const noexcept { return entries_; }
  const std::string& source() const noexcept { return source_; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  std::string source_;
  std::map<std::string, std::vector<std::string>> entries_;
};

/// "lexeme<TAB>rel1,rel2,..." per line; '#' starts a comment line.
inline SynonymKB parse_synonym_kb(std::string_view text, std::string source = {}) {
  SynonymKB kb(std::move(source));
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    const auto trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw FormatError("synonym KB line " + std::to_string(line_no) + " has no tab separator");
    std::vector<std::string> related;
    std::string_view rest = std::string_view(line).substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      related.emplace_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    try {
      kb.add(line.substr(0, tab), related);
    } catch (const InvalidInput& e) {
      throw FormatError("synonym KB line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return kb;
}

inline SynonymKB load_synonym_kb(const std::filesystem::path& path) {
  return parse_synonym_kb(read_text_file(path), path.string());
}

/// Exact class, else the first related lexeme (in KB order) that is a class.
inline std::optional<ClassIndex> kb_align(std::string_view lexeme, const Lexicon& lexicon, const SynonymKB& kb) {
  if (auto idx = lexicon.index_of(lexeme)) return idx;
  for (const auto& rel : kb.related(lexeme))
    if (auto idx = lexicon.index_of(rel)) return idx;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Rule parser

namespace detail {

enum class TokenRole { word, verb, preposition, skip, boundary };

struct ParserTables {
  std::unordered_set<std::string> skip;
  std::unordered_set<std::string> boundaries;
  std::vector<std::vector<std::string>> prepositions;  // longest first
  std::unordered_map<std::string, std::string> verb_forms;  // inflected -> -ing form

  static std::string ing_form(const std::string& base) {
    static const std::unordered_map<std::string, std::string> kIrregular{
        {"lie", "lying"}, {"die", "dying"}, {"tie", "tying"}, {"be", "being"}, {"see", "seeing"}};
    if (auto it = kIrregular.find(base); it != kIrregular.end()) return it->second;
    static const std::unordered_set<std::string> kDoubled{"sit", "run", "swim", "cut", "get", "put",
                                                          "stop", "shop", "hug", "dig", "jog", "set"};
    if (kDoubled.count(base) != 0) return base + base.back() + "ing";
    if (base.size() > 2 && base.back() == 'e' && base[base.size() - 2] != 'e') return base.substr(0, base.size() - 1) + "ing";
    return base + "ing";
  }

  ParserTables() {
    for (const char* w : {"a", "an", "the", "some", "several", "many", "few", "two", "three", "four", "five", "six",
                          "seven", "eight", "nine", "ten", "one", "his", "her", "their", "its", "this", "these", "those",
                          "other", "another", "each", "is", "are", "was", "were", "be", "been", "being", "very",
                          "there", "here", "it", "they", "he", "she", "also", "just", "all", "both", "has", "have",
                          "had", "up", "down", "out", "away", "together"})
      skip.insert(w);
    for (const char* w : {"and", "while", "but", "as", "then", "where", "that", "which", "who", "whilst", ",", ";"})
      boundaries.insert(w);
    for (std::string_view p :
         {"in front of", "on top of", "next to", "close to", "out of", "on", "in", "at", "near", "with", "under",
          "above", "behind", "over", "by", "beside", "along", "across", "against", "into", "onto", "from", "of", "for",
          "inside", "outside", "between", "below", "beneath", "around", "through", "toward", "towards", "underneath",
          "atop", "among", "past", "off", "upon", "within", "without", "alongside"}) {
      std::vector<std::string> words;
      std::size_t start = 0;
      for (;;) {
        const auto space = p.find(' ', start);
        words.emplace_back(p.substr(start, space == std::string_view::npos ? std::string_view::npos : space - start));
        if (space == std::string_view::npos) break;
        start = space + 1;
      }
      prepositions.push_back(std::move(words));
    }
    std::stable_sort(prepositions.begin(), prepositions.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });

    // base form, past tense
    static const std::pair<const char*, const char*> kVerbs[] = {
        {"ride", "rode"},     {"sit", "sat"},        {"stand", "stood"},    {"lie", "lay"},
        {"hold", "held"},     {"wear", "wore"},      {"eat", "ate"},        {"walk", "walked"},
        {"carry", "carried"}, {"look", "looked"},    {"watch", "watched"},  {"play", "played"},
        {"fly", "flew"},      {"hang", "hung"},      {"park", "parked"},    {"cover", "covered"},
        {"lay", "laid"},      {"grow", "grew"},      {"throw", "threw"},    {"catch", "caught"},
        {"use", "used"},      {"drive", "drove"},    {"pull", "pulled"},    {"push", "pushed"},
        {"read", "read"},     {"talk", "talked"},    {"cut", "cut"},        {"fill", "filled"},
        {"place", "placed"},  {"show", "showed"},    {"run", "ran"},        {"swim", "swam"},
        {"rest", "rested"},   {"lean", "leaned"},    {"stack", "stacked"},  {"pile", "piled"},
        {"top", "topped"},    {"float", "floated"},  {"graze", "grazed"},   {"chase", "chased"},
        {"feed", "fed"},      {"surround", "surrounded"}, {"cross", "crossed"}, {"mount", "mounted"},
        {"attach", "attached"}, {"paint", "painted"}, {"display", "displayed"}, {"perch", "perched"},
        {"sleep", "slept"},   {"drink", "drank"},    {"hit", "hit"},        {"kick", "kicked"},
        {"cook", "cooked"},   {"wait", "waited"},    {"sell", "sold"},      {"serve", "served"},
        {"make", "made"},     {"slice", "sliced"},   {"set", "set"},
        {"jump", "jumped"},   {"stare", "stared"},
    };
    // Bare base forms are ambiguous in captions ("a park", "the top") and are
    // not treated as verbs. Past forms go in last so "lay" reads as lie.
    static const std::unordered_set<std::string> kNounLike{
        "parks", "tops", "plays", "stands", "rests", "cuts", "walks", "drinks", "displays", "shows", "watches",
        "places", "flies", "sets", "stacks", "piles", "paints", "covers", "hits", "slices", "kicks", "uses",
        "reads", "looks", "runs", "mounts", "perches", "chases", "waits", "cooks", "jumps", "stares", "swings"};
    for (const auto& [base_c, past_c] : kVerbs) {
      const std::string base = base_c;
      const std::string ing = ing_form(base);
      verb_forms.emplace(ing, ing);
      std::string third;
      const char last = base.back();
      if (last == 's' || last == 'h' || last == 'x')
        third = base + "es";
      else if (last == 'y' && std::string_view("aeiou").find(base[base.size() - 2]) == std::string_view::npos)
        third = base.substr(0, base.size() - 1) + "ies";
      else
        third = base + "s";
      if (kNounLike.count(third) == 0) verb_forms.emplace(third, ing);
    }
    for (const auto& [base_c, past_c] : kVerbs) {
      if (std::string_view(past_c) != base_c) verb_forms.emplace(past_c, ing_form(base_c));
    }
    // -ing nouns that happen to share a verb stem.
    for (const char* noun : {"painting", "building", "railing", "clothing", "ceiling", "setting", "covering"})
      verb_forms.erase(noun);
  }
};

inline const ParserTables& parser_tables() {
  static const ParserTables tables;
  return tables;
}

// Lowercased words; commas and semicolons become their own tokens, other
// punctuation is dropped, and a trailing possessive "'s" marks the token.
inline std::vector<std::string> caption_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  const std::string lower = to_lower_ascii(text);
  for (std::size_t i = 0; i < lower.size(); ++i) {
    const auto c = static_cast<unsigned char>(lower[i]);
    if (is_space(c)) {
      flush();
    } else if (c == ',' || c == ';') {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else if (c == '\'' || c == '-') {
      if (!cur.empty()) cur.push_back(static_cast<char>(c));
    } else if (is_ascii_punct(c)) {
      flush();
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  flush();
  return out;
}

struct ClauseItem {
  TokenRole role = TokenRole::word;
  std::string text;  // NP head, -ing verb, or preposition
};

}  // namespace detail

/// Heuristic subject-verb-object extraction.
///
/// Clauses are split at commas and conjunctions. A noun phrase is a run of
/// content words and its head is the last one. A verb followed directly by a
/// noun phrase becomes the predicate (in its -ing form); a verb followed by a
/// preposition is dropped in favour of the preposition. Further
/// prepositional phrases attach to the previous object, and a clause without
/// a subject reuses the previous clause's subject.
inline std::vector<RawTriplet> rule_parse(const CaptionRecord& caption) {
  using detail::ClauseItem;
  using detail::TokenRole;
  const auto& tables = detail::parser_tables();
  const auto tokens = detail::caption_tokens(caption.text);

  // Classify into a flat item stream with boundaries.
  std::vector<ClauseItem> items;
  std::vector<std::string> np_words;
  auto flush_np = [&] {
    if (!np_words.empty()) items.push_back({TokenRole::word, np_words.back()});
    np_words.clear();
  };
  for (std::size_t i = 0; i < tokens.size();) {
    const std::string& tok = tokens[i];
    if (tables.boundaries.count(tok) != 0) {
      flush_np();
      items.push_back({TokenRole::boundary, tok});
      ++i;
      continue;
    }
    bool matched_prep = false;
    for (const auto& prep : tables.prepositions) {
      if (i + prep.size() > tokens.size()) continue;
      if (!std::equal(prep.begin(), prep.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) continue;
      flush_np();
      std::string joined;
      for (const auto& w : prep) joined += (joined.empty() ? "" : " ") + w;
      items.push_back({TokenRole::preposition, joined});
      i += prep.size();
      matched_prep = true;
      break;
    }
    if (matched_prep) continue;
    if (tables.skip.count(tok) != 0) {
      ++i;
      continue;
    }
    if (auto it = tables.verb_forms.find(tok); it != tables.verb_forms.end()) {
      flush_np();
      items.push_back({TokenRole::verb, it->second});
      ++i;
      continue;
    }
    if (tok.size() > 2 && tok.ends_with("'s")) {  // possessive modifier, never a head
      ++i;
      continue;
    }
    if (std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; })) {
      ++i;
      continue;
    }
    np_words.push_back(tok);
    ++i;
  }
  flush_np();

  std::vector<RawTriplet> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  auto emit = [&](const std::string& s, const std::string& p, const std::string& o) {
    auto t = make_raw_triplet(s, p, o, TripletSource::baseline_parser, caption.image_id, caption.caption_id);
    if (t && seen.emplace(t->subject, t->predicate, t->object).second) out.push_back(std::move(*t));
  };

  std::optional<std::string> previous_subject;
  std::size_t i = 0;
  while (i < items.size()) {
    std::size_t end = i;
    while (end < items.size() && items[end].role != TokenRole::boundary) ++end;

    std::optional<std::string> subject;
    std::optional<std::string> anchor;  // what the next bare preposition attaches to
    std::optional<std::string> verb;
    std::optional<std::string> prep;
    for (std::size_t k = i; k < end; ++k) {
      const ClauseItem& item = items[k];
      switch (item.role) {
        case TokenRole::word:
          if (!subject && !verb && !prep) {
            subject = item.text;
            anchor = item.text;
            break;
          }
          if (prep || verb) {
            const std::string& head = (prep && verb && anchor == subject) || !anchor ? subject.value_or("") : *anchor;
            const std::string& predicate = prep ? *prep : *verb;
            if (!head.empty()) {
              emit(head, predicate, item.text);
              anchor = item.text;
            }
            verb.reset();
            prep.reset();
          }
          break;
        case TokenRole::verb:
          if (!subject && previous_subject) {
            subject = previous_subject;
            anchor = previous_subject;
          }
          anchor = subject;  // the verb's arguments belong to the subject
          verb = item.text;
          prep.reset();
          break;
        case TokenRole::preposition:
          if (!subject && previous_subject) {
            subject = previous_subject;
            anchor = previous_subject;
          }
          prep = item.text;
          break;
        default: break;
      }
    }
    if (subject) previous_subject = subject;
    i = end + 1;
  }
  return out;
}

}  // namespace sgforge
