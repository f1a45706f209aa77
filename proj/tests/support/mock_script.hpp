#pragma once

// Turns a human-written mock script (caption -> answer, lexeme -> answer)
// into the hash-keyed fixture the mock backend reads, by rendering every
// prompt with the default templates.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sgforge/alignment_engine.hpp"
#include "sgforge/dataset.hpp"
#include "sgforge/prompt_builder.hpp"
#include "sgforge/response_parser.hpp"

namespace sgforge::testing {

struct FixtureEntry {
  std::string chain;
  std::string input;
  std::string response;
};

// Script keys:
//   entity_lexicon, predicate_lexicon   paths relative to the script
//   extract_original, extract_paraphrase, combined   {caption text: answer}
//   align_entity, align_predicate       {lexeme: answer}
//   hierarchical  [{lexicon, kind, group_size, lexeme, groups: {"g": answer}, default, final}]
inline std::map<std::string, FixtureEntry> render_mock_script(const json& script, const std::filesystem::path& base) {
  const TemplateSet templates;
  const Lexicon entities = load_lexicon(base / script.at("entity_lexicon").get<std::string>(), LexiconKind::entity);
  const Lexicon predicates =
      load_lexicon(base / script.at("predicate_lexicon").get<std::string>(), LexiconKind::predicate);
  std::map<std::string, FixtureEntry> out;
  auto put = [&](const std::string& prompt, const std::string& chain, const std::string& input,
                 const std::string& response) {
    out[sha256_hex(prompt)] = FixtureEntry{chain, input, response};
  };

  const LexiconPair pair{entities, predicates};
  for (const char* chain : {"extract_original", "extract_paraphrase", "combined"}) {
    if (!script.contains(chain)) continue;
    const PromptTemplate& t = std::string(chain) == "extract_original"     ? templates.extract_original
                              : std::string(chain) == "extract_paraphrase" ? templates.extract_paraphrase
                                                                          : templates.combined;
    for (const auto& [caption, answer] : script.at(chain).items()) {
      CaptionRecord rec{"-", "-", caption};
      put(render_extraction_prompt(t, rec, {}, &pair), chain, caption, answer.get<std::string>());
    }
  }
  for (const char* chain : {"align_entity", "align_predicate"}) {
    if (!script.contains(chain)) continue;
    const bool entity = std::string(chain) == "align_entity";
    for (const auto& [lexeme, answer] : script.at(chain).items())
      put(render_alignment_prompt(entity ? templates.align_entity : templates.align_predicate, lexeme,
                                  entity ? entities : predicates),
          chain, lexeme, answer.get<std::string>());
  }
  if (script.contains("hierarchical")) {
    for (const auto& h : script.at("hierarchical")) {
      const auto kind = h.value("kind", std::string("entity")) == "predicate" ? LexiconKind::predicate
                                                                              : LexiconKind::entity;
      const Lexicon big = load_lexicon(base / h.at("lexicon").get<std::string>(), kind);
      const auto group_size = h.at("group_size").get<std::size_t>();
      const std::string lexeme = h.at("lexeme").get<std::string>();
      const PromptTemplate& t = kind == LexiconKind::entity ? templates.align_entity : templates.align_predicate;
      const auto groups = partition_lexicon(big, group_size);
      const std::string fallback = h.value("default", std::string("0.None"));
      std::vector<std::string> candidates;
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const std::string key = std::to_string(g + 1);
        const std::string answer = h.at("groups").contains(key) ? h.at("groups").at(key).get<std::string>() : fallback;
        put(render_alignment_prompt(t, lexeme, groups[g].lexicon), "hierarchical", lexeme + " [group " + key + "]",
            answer);
        if (auto idx = parse_alignment(answer, groups[g].lexicon).index)
          candidates.push_back(groups[g].lexicon.class_name(*idx));
      }
      if (candidates.size() >= 2 && h.contains("final")) {
        const Lexicon finalists(kind, big.name() + " [candidates]", candidates);
        put(render_alignment_prompt(t, lexeme, finalists), "hierarchical", lexeme + " [final]",
            h.at("final").get<std::string>());
      }
    }
  }
  return out;
}

/// JSONL sorted by prompt hash, so regeneration is byte-stable.
inline std::string mock_fixture_jsonl(const std::map<std::string, FixtureEntry>& entries) {
  std::string out;
  for (const auto& [hash, e] : entries) {
    ordered_json j;
    j["prompt_hash"] = hash;
    j["chain"] = e.chain;
    j["input"] = e.input;
    j["response"] = e.response;
    out += j.dump() + "\n";
  }
  return out;
}

/// Non-class lexemes produced by the script's extraction answers that have
/// no alignment answer; a complete script has none.
inline std::vector<std::string> unscripted_lexemes(const json& script, const std::filesystem::path& base) {
  const Lexicon entities = load_lexicon(base / script.at("entity_lexicon").get<std::string>(), LexiconKind::entity);
  const Lexicon predicates =
      load_lexicon(base / script.at("predicate_lexicon").get<std::string>(), LexiconKind::predicate);
  std::vector<std::string> missing;
  auto check = [&](const std::string& lexeme, const Lexicon& lex, const char* chain) {
    if (lex.index_of(lexeme)) return;
    if (script.contains(chain) && script.at(chain).contains(lexeme)) return;
    const std::string tag = std::string(chain) + ":" + lexeme;
    if (std::find(missing.begin(), missing.end(), tag) == missing.end()) missing.push_back(tag);
  };
  for (const char* chain : {"extract_original", "extract_paraphrase"}) {
    if (!script.contains(chain)) continue;
    for (const auto& [caption, answer] : script.at(chain).items()) {
      for (const auto& t : parse_triplets(answer.get<std::string>(), {"-", "-", caption}, TripletSource::llm_original)
                               .triplets) {
        check(t.subject, entities, "align_entity");
        check(t.predicate, predicates, "align_predicate");
        check(t.object, entities, "align_entity");
      }
    }
  }
  return missing;
}

}  // namespace sgforge::testing
