#pragma once

// Captions -> extracted triplets -> aligned triplets -> None filter ->
// per-pair predicate selection -> JSONL. Extraction is checkpointed so the
// alignment stage can resume without repeating it.

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "sgforge/alignment_engine.hpp"
#include "sgforge/baseline.hpp"
#include "sgforge/config.hpp"
#include "sgforge/http_backend.hpp"
#include "sgforge/llm_client.hpp"
#include "sgforge/log.hpp"
#include "sgforge/parallel.hpp"
#include "sgforge/prompt_builder.hpp"
#include "sgforge/response_parser.hpp"
#include "sgforge/stats.hpp"

namespace sgforge {

inline constexpr const char* kStepExtractOriginal = "extract_original";
inline constexpr const char* kStepExtractParaphrase = "extract_paraphrase";
inline constexpr const char* kStepAlignEntity = "align_entity";
inline constexpr const char* kStepAlignPredicate = "align_predicate";
inline constexpr const char* kStepCombined = "combined";

// ---------------------------------------------------------------------------
// Extraction

struct ExtractionResult {
  std::vector<RawTriplet> triplets;
  std::size_t failed_captions = 0;
  std::size_t malformed_spans = 0;
};

/// Runs the original-caption prompt (and, when asked, the paraphrase prompt)
/// on every caption. A caption whose request fails is logged and skipped;
/// only a backend that stays unavailable aborts the stage.
inline ExtractionResult extract_all(const std::vector<CaptionRecord>& corpus, LlmClient& client,
                                    const TemplateSet& templates, bool use_paraphrase, UsageLedger* usage = nullptr) {
  struct PerCaption {
    std::vector<RawTriplet> triplets;
    std::size_t malformed = 0;
    bool failed = false;
  };
  std::vector<PerCaption> results(corpus.size());
  if (usage) {
    usage->touch(kStepExtractOriginal);
    if (use_paraphrase) usage->touch(kStepExtractParaphrase);
  }

  auto run_chain = [&](const CaptionRecord& caption, const PromptTemplate& t, const char* step, TripletSource source,
                       PerCaption& out) {
    try {
      const std::string prompt = render_extraction_prompt(t, caption, client.options().limits);
      const CompletionResult r = client.complete(prompt);
      if (usage) usage->add(step, r.record);
      TripletParse parsed = parse_triplets(r.record.response, caption, source);
      out.malformed += parsed.malformed_spans;
      for (auto& tr : parsed.triplets) out.triplets.push_back(std::move(tr));
    } catch (const BackendUnavailable&) {
      throw;
    } catch (const Error& e) {
      log_message(LogLevel::warn, "caption " + caption.image_id + "/" + caption.caption_id + " (" + step +
                                      ") skipped: " + e.what());
      out.failed = true;
    }
  };

  parallel_for(corpus.size(), client.concurrency(), [&](std::size_t i) {
    run_chain(corpus[i], templates.extract_original, kStepExtractOriginal, TripletSource::llm_original, results[i]);
    if (use_paraphrase)
      run_chain(corpus[i], templates.extract_paraphrase, kStepExtractParaphrase, TripletSource::llm_paraphrased,
                results[i]);
  });

  ExtractionResult out;
  for (auto& r : results) {
    out.failed_captions += r.failed ? 1 : 0;
    out.malformed_spans += r.malformed;
    for (auto& t : r.triplets) out.triplets.push_back(std::move(t));
  }
  return out;
}

struct CombinedResult {
  std::vector<AlignedTriplet> triplets;
  std::size_t failed_captions = 0;
  std::size_t malformed_spans = 0;
  std::size_t unparseable_components = 0;
};

/// Single-prompt variant: extraction and alignment in one request.
inline CombinedResult extract_combined(const std::vector<CaptionRecord>& corpus, LlmClient& client,
                                       const TemplateSet& templates, const Lexicon& entities,
                                       const Lexicon& predicates, UsageLedger* usage = nullptr) {
  struct PerCaption {
    CombinedParse parsed;
    bool failed = false;
  };
  std::vector<PerCaption> results(corpus.size());
  if (usage) usage->touch(kStepCombined);
  const LexiconPair lexicons{entities, predicates};
  parallel_for(corpus.size(), client.concurrency(), [&](std::size_t i) {
    try {
      const std::string prompt =
          render_extraction_prompt(templates.combined, corpus[i], client.options().limits, &lexicons);
      const CompletionResult r = client.complete(prompt);
      if (usage) usage->add(kStepCombined, r.record);
      results[i].parsed = parse_combined_triplets(r.record.response, corpus[i], entities, predicates);
    } catch (const BackendUnavailable&) {
      throw;
    } catch (const Error& e) {
      log_message(LogLevel::warn,
                  "caption " + corpus[i].image_id + "/" + corpus[i].caption_id + " (combined) skipped: " + e.what());
      results[i].failed = true;
    }
  });
  CombinedResult out;
  for (auto& r : results) {
    out.failed_captions += r.failed ? 1 : 0;
    out.malformed_spans += r.parsed.malformed_spans;
    out.unparseable_components += r.parsed.unparseable_components;
    for (auto& t : r.parsed.triplets) out.triplets.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Filtering and selection

struct DiscardReport {
  std::size_t subject_none = 0;
  std::size_t predicate_none = 0;
  std::size_t object_none = 0;
  std::size_t discarded = 0;
  std::map<std::string, std::size_t> by_pattern;  // e.g. "subject+object"
};

struct FilterResult {
  std::vector<AlignedTriplet> kept;
  DiscardReport report;
};

/// Keeps the triplets whose three components all resolved.
inline FilterResult filter_none(const std::vector<AlignedTriplet>& triplets) {
  FilterResult out;
  for (const auto& t : triplets) {
    if (t.fully_aligned()) {
      out.kept.push_back(t);
      continue;
    }
    std::string pattern;
    auto note = [&](bool missing, std::size_t& counter, const char* name) {
      if (!missing) return;
      ++counter;
      pattern += pattern.empty() ? name : std::string("+") + name;
    };
    note(!t.subject_class, out.report.subject_none, "subject");
    note(!t.predicate_class, out.report.predicate_none, "predicate");
    note(!t.object_class, out.report.object_none, "object");
    ++out.report.by_pattern[pattern];
    ++out.report.discarded;
  }
  return out;
}

struct SelectionReport {
  std::size_t self_loops = 0;
  std::size_t duplicates = 0;
  std::size_t superseded = 0;  // lost to a finer predicate on the same pair
};

struct SelectionResult {
  std::vector<AlignedTriplet> kept;
  SelectionReport report;
};

/// One triplet per (image, subject class, object class): the one whose
/// predicate is rarest over the whole input (after self-loop and duplicate
/// removal). Ties go to the lexicographically smaller predicate name, then to
/// the earlier triplet. Survivors keep their input order.
inline SelectionResult select_predicates(const std::vector<AlignedTriplet>& triplets, const Lexicon& predicates) {
  SelectionResult out;
  std::vector<const AlignedTriplet*> pool;
  std::set<std::tuple<std::string, ClassIndex, ClassIndex, ClassIndex>> seen;
  for (const auto& t : triplets) {
    if (!t.fully_aligned()) throw InvalidInput("select_predicates needs fully aligned triplets");
    if (!predicates.valid_index(*t.predicate_class))
      throw InvalidInput("predicate index " + std::to_string(*t.predicate_class) + " outside the predicate lexicon");
    if (*t.subject_class == *t.object_class && t.raw.subject == t.raw.object) {
      ++out.report.self_loops;
      continue;
    }
    if (!seen.emplace(t.raw.image_id, *t.subject_class, *t.predicate_class, *t.object_class).second) {
      ++out.report.duplicates;
      continue;
    }
    pool.push_back(&t);
  }

  std::map<ClassIndex, std::size_t> frequency;
  for (const auto* t : pool) ++frequency[*t->predicate_class];

  using GroupKey = std::tuple<std::string, ClassIndex, ClassIndex>;
  std::map<GroupKey, std::size_t> winner;  // group -> position in pool
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const AlignedTriplet& t = *pool[i];
    const GroupKey key{t.raw.image_id, *t.subject_class, *t.object_class};
    auto [it, inserted] = winner.emplace(key, i);
    if (inserted) continue;
    const AlignedTriplet& best = *pool[it->second];
    const std::size_t f_new = frequency[*t.predicate_class];
    const std::size_t f_best = frequency[*best.predicate_class];
    const bool better = f_new < f_best || (f_new == f_best && predicates.class_name(*t.predicate_class) <
                                                                  predicates.class_name(*best.predicate_class));
    if (better) it->second = i;
  }

  std::vector<bool> keep(pool.size(), false);
  for (const auto& [key, pos] : winner) keep[pos] = true;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (keep[i])
      out.kept.push_back(*pool[i]);
    else
      ++out.report.superseded;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint of the extraction stage

struct ExtractionCheckpoint {
  std::string fingerprint;
  ExtractionResult result;
  std::map<std::string, StepUsage> usage;
};

inline std::string checkpoint_to_jsonl(const ExtractionCheckpoint& cp) {
  ordered_json header;
  header["fingerprint"] = cp.fingerprint;
  header["failed_captions"] = cp.result.failed_captions;
  header["malformed_spans"] = cp.result.malformed_spans;
  ordered_json usage = ordered_json::object();
  for (const auto& [step, u] : cp.usage)
    usage[step] = {{"requests", u.requests}, {"input_tokens", u.input_tokens}, {"output_tokens", u.output_tokens}};
  header["usage"] = usage;
  header["triplets"] = cp.result.triplets.size();
  std::string out = header.dump() + "\n";
  for (const auto& t : cp.result.triplets) out += json(t).dump() + "\n";
  return out;
}

/// nullopt for a truncated or unreadable checkpoint, so the caller simply
/// extracts again.
inline std::optional<ExtractionCheckpoint> checkpoint_from_jsonl(std::string_view text) {
  try {
    const auto lines = split_lines(text);
    if (lines.empty()) return std::nullopt;
    const json header = json::parse(lines[0]);
    ExtractionCheckpoint cp;
    cp.fingerprint = header.at("fingerprint").get<std::string>();
    cp.result.failed_captions = header.at("failed_captions").get<std::size_t>();
    cp.result.malformed_spans = header.at("malformed_spans").get<std::size_t>();
    for (const auto& [step, u] : header.at("usage").items())
      cp.usage[step] = {u.at("requests").get<std::size_t>(), u.at("input_tokens").get<std::size_t>(),
                        u.at("output_tokens").get<std::size_t>()};
    const auto expected = header.at("triplets").get<std::size_t>();
    for (std::size_t i = 1; i < lines.size(); ++i) cp.result.triplets.push_back(json::parse(lines[i]).get<RawTriplet>());
    if (cp.result.triplets.size() != expected) return std::nullopt;
    return cp;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Full run

enum class RunStatus { complete, partial };

struct RunResult {
  TripletDataset dataset;
  ordered_json report;
  RunStatus status = RunStatus::complete;
};

/// Everything a run reads, loaded and validated before any request is sent.
struct RunInputs {
  CaptionCorpus corpus;
  Lexicon entities;
  Lexicon predicates;
  TemplateSet templates;
  std::optional<SynonymKB> kb;
  std::string corpus_text;  // for the checkpoint fingerprint
};

inline RunInputs load_run_inputs(const RunConfig& config) {
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
  };
  require(config.captions, "caption corpus");
  require(config.entity_lexicon, "entity lexicon");
  require(config.predicate_lexicon, "predicate lexicon");
  if (config.backend == "mock") require(*config.mock_fixture, "mock fixture");
  if (config.kb) require(*config.kb, "synonym KB");

  RunInputs in;
  try {
    in.corpus_text = read_text_file(config.captions);
    in.corpus = load_captions(config.captions);
    in.entities = load_lexicon(config.entity_lexicon, LexiconKind::entity);
    in.predicates = load_lexicon(config.predicate_lexicon, LexiconKind::predicate);
    if (in.entities.kind() != LexiconKind::entity) throw ConfigError("entity_lexicon is not an entity lexicon");
    if (in.predicates.kind() != LexiconKind::predicate)
      throw ConfigError("predicate_lexicon is not a predicate lexicon");
    if (in.entities.empty() || in.predicates.empty()) throw ConfigError("lexicons must not be empty");
    for (const auto& [name, path] : config.templates) {
      require(path, "template");
      const Chain chain = *parse_chain(name);
      PromptTemplate t = load_template(path, chain);
      switch (chain) {
        case Chain::extract_original: in.templates.extract_original = std::move(t); break;
        case Chain::extract_paraphrase: in.templates.extract_paraphrase = std::move(t); break;
        case Chain::align_entity: in.templates.align_entity = std::move(t); break;
        case Chain::align_predicate: in.templates.align_predicate = std::move(t); break;
        case Chain::combined: in.templates.combined = std::move(t); break;
      }
    }
    if (config.kb) in.kb = load_synonym_kb(*config.kb);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  return in;
}

inline std::shared_ptr<CompletionBackend> make_backend(const RunConfig& config) {
  if (config.backend == "mock") return load_mock_backend(*config.mock_fixture);
  if (config.backend == "replay")
    return std::make_shared<ReplayBackend>(config.replay_source,
                                           config.replay_source == "mock" ? std::string("mock") : config.http_model);
  if (config.backend == "http")
    return std::make_shared<HttpBackend>(HttpBackendOptions{config.http_base_url, config.http_model,
                                                            config.http_api_key_env, config.http_timeout_seconds});
  throw ConfigError("backend '" + config.backend + "' does not issue completions");
}

inline ClientOptions client_options(const RunConfig& config) {
  ClientOptions o;
  o.retry = config.retry;
  o.concurrency = config.concurrency;
  o.limits.max_tokens = config.max_prompt_tokens;
  o.params.temperature = config.temperature;
  o.params.max_tokens = config.max_tokens;
  return o;
}

namespace detail {

inline std::string extraction_fingerprint(const RunConfig& config, const RunInputs& in,
                                          const CompletionBackend& backend) {
  return sha256_hex({in.corpus_text, serialize_template(in.templates.extract_original),
                     serialize_template(in.templates.extract_paraphrase), backend.cache_identity(), backend.model(),
                     config.use_paraphrase ? "paraphrase" : "original-only"});
}

inline ordered_json usage_json(const std::map<std::string, StepUsage>& usage, const CostModel& prices) {
  ordered_json steps = ordered_json::object();
  std::vector<std::pair<std::string, TokenCounts>> counts;
  for (const auto& [step, u] : usage)
    counts.emplace_back(step, TokenCounts{static_cast<double>(u.input_tokens), static_cast<double>(u.output_tokens)});
  const CostReport cost = estimate_cost(counts, prices);
  for (std::size_t i = 0; i < cost.steps.size(); ++i) {
    const StepUsage& u = usage.at(cost.steps[i].step);
    ordered_json s;
    s["requests"] = u.requests;
    s["input_tokens"] = u.input_tokens;
    s["output_tokens"] = u.output_tokens;
    s["cost_usd"] = format_usd(cost.steps[i].cost);
    steps[cost.steps[i].step] = s;
  }
  ordered_json out;
  out["steps"] = steps;
  out["prices_per_1k"] = {{"input", prices.input_price_per_1k}, {"output", prices.output_price_per_1k}};
  out["total_cost_usd"] = format_usd(cost.total);
  return out;
}

inline void write_outputs(const RunConfig& config, const RunResult& result, const RunInputs& in) {
  write_text_file(config.output, dataset_to_jsonl(result.dataset, in.entities, in.predicates));
  write_text_file(config.report, result.report.dump(2) + "\n");
}

}  // namespace detail

/// Executes a configured run and writes the dataset and report. A run told
/// to stop early writes only its checkpoint and returns a partial status.
/// `backend` overrides the configured backend (tests inject mocks this way).
inline RunResult run(const RunConfig& config, std::shared_ptr<CompletionBackend> backend = nullptr) {
  set_log_level(config.log_level);
  config.prices.validate();
  const RunInputs in = load_run_inputs(config);
  const RunMode mode = config.mode();
  if (!backend && mode != RunMode::baseline) backend = make_backend(config);

  RunResult result;
  ordered_json& report = result.report;
  report["mode"] = to_string(mode);
  report["use_paraphrase"] = mode == RunMode::llm && config.use_paraphrase;
  report["captions"] = in.corpus.captions.size();
  report["images"] = in.corpus.image_count;
  report["entity_lexicon"] = {{"name", in.entities.name()}, {"size", in.entities.size()}, {"id", in.entities.id()}};
  report["predicate_lexicon"] = {
      {"name", in.predicates.name()}, {"size", in.predicates.size()}, {"id", in.predicates.id()}};

  UsageLedger usage;
  std::vector<AlignedTriplet> aligned;
  std::size_t extracted = 0;
  ordered_json parse_counters;

  if (mode == RunMode::baseline) {
    for (const auto& caption : in.corpus.captions) {
      for (auto& raw : rule_parse(caption)) {
        AlignedTriplet t;
        t.subject_class = kb_align(raw.subject, in.entities, *in.kb);
        t.predicate_class = kb_align(raw.predicate, in.predicates, *in.kb);
        t.object_class = kb_align(raw.object, in.entities, *in.kb);
        t.raw = std::move(raw);
        aligned.push_back(std::move(t));
      }
    }
    extracted = aligned.size();
  } else {
    auto cache = std::make_shared<CompletionCache>(config.cache.value_or(std::filesystem::path{}));
    LlmClient client(backend, cache, client_options(config));
    if (mode == RunMode::combined) {
      CombinedResult combined = extract_combined(in.corpus.captions, client, in.templates, in.entities,
                                                 in.predicates, &usage);
      extracted = combined.triplets.size();
      aligned = std::move(combined.triplets);
      parse_counters["failed_captions"] = combined.failed_captions;
      parse_counters["malformed_spans"] = combined.malformed_spans;
      parse_counters["unparseable_alignments"] = combined.unparseable_components;
      if (config.stop_after != StopAfter::none)
        log_message(LogLevel::warn, "stop_after has no effect with the combined prompt, which has a single stage");
    } else {
      const std::filesystem::path checkpoint = config.checkpoint_dir / "extracted.jsonl";
      const std::filesystem::path entity_table_path = config.checkpoint_dir / "entity_alignments.jsonl";
      const std::filesystem::path predicate_table_path = config.checkpoint_dir / "predicate_alignments.jsonl";
      const std::string fingerprint = detail::extraction_fingerprint(config, in, *backend);

      std::optional<ExtractionCheckpoint> cp;
      if (config.resume && std::filesystem::exists(checkpoint)) {
        cp = checkpoint_from_jsonl(read_text_file(checkpoint));
        if (cp && cp->fingerprint != fingerprint) {
          log_message(LogLevel::warn, "checkpoint was made from different inputs; extracting again");
          cp.reset();
        }
      }
      if (!config.resume) {
        std::filesystem::remove(entity_table_path);
        std::filesystem::remove(predicate_table_path);
      }
      if (cp) {
        log_message(LogLevel::info, "resuming from " + checkpoint.string());
        for (const auto& [step, u] : cp->usage) usage.add(step, u);
      } else {
        UsageLedger extraction_usage;
        ExtractionCheckpoint fresh;
        fresh.fingerprint = fingerprint;
        fresh.result = extract_all(in.corpus.captions, client, in.templates, config.use_paraphrase, &extraction_usage);
        fresh.usage = extraction_usage.snapshot();
        write_text_file(checkpoint, checkpoint_to_jsonl(fresh));
        for (const auto& [step, u] : fresh.usage) usage.add(step, u);
        cp = std::move(fresh);
      }
      extracted = cp->result.triplets.size();
      parse_counters["failed_captions"] = cp->result.failed_captions;
      parse_counters["malformed_spans"] = cp->result.malformed_spans;

      if (config.stop_after == StopAfter::extract) {
        result.status = RunStatus::partial;
        report["status"] = "partial";
        report["stopped_after"] = "extract";
        report["stages"] = {{"extracted", extracted}};
        write_text_file(config.report, report.dump(2) + "\n");
        return result;
      }

      AlignmentTable entity_table(in.entities, entity_table_path);
      AlignmentTable predicate_table(in.predicates, predicate_table_path);
      usage.touch(kStepAlignEntity);
      usage.touch(kStepAlignPredicate);
      AlignmentEngine engine(client, in.templates, AlignmentOptions{config.group_size, config.hierarchy}, &usage);
      aligned = engine.align_triplets(cp->result.triplets, entity_table, predicate_table);
      parse_counters["unparseable_alignments"] = engine.unparseable_answers();

      if (config.stop_after == StopAfter::align) {
        result.status = RunStatus::partial;
        report["status"] = "partial";
        report["stopped_after"] = "align";
        report["stages"] = {{"extracted", extracted}, {"aligned", aligned.size()}};
        write_text_file(config.report, report.dump(2) + "\n");
        return result;
      }
    }
  }

  FilterResult filtered = filter_none(aligned);
  SelectionResult selected = select_predicates(filtered.kept, in.predicates);

  result.dataset.triplets = std::move(selected.kept);
  result.dataset.image_count = in.corpus.image_count;
  result.dataset.metadata = {{"mode", to_string(mode)}, {"captions", config.captions.filename().string()}};
  result.dataset.validate();

  ordered_json stages;
  stages["extracted"] = extracted;
  stages["aligned"] = aligned.size();
  stages["discarded_none"] = filtered.report.discarded;
  stages["after_filter"] = filtered.kept.size();
  stages["self_loops"] = selected.report.self_loops;
  stages["duplicates"] = selected.report.duplicates;
  stages["superseded"] = selected.report.superseded;
  stages["final"] = result.dataset.triplets.size();
  report["status"] = result.status == RunStatus::complete ? "complete" : "partial";
  report["stages"] = stages;
  ordered_json discards;
  discards["subject"] = filtered.report.subject_none;
  discards["predicate"] = filtered.report.predicate_none;
  discards["object"] = filtered.report.object_none;
  discards["total"] = filtered.report.discarded;
  discards["by_pattern"] = filtered.report.by_pattern;
  report["discards"] = discards;
  if (in.corpus.image_count > 0) {
    const double density = static_cast<double>(result.dataset.triplets.size()) / in.corpus.image_count;
    report["density"] = density;
    report["density_display"] = format_density(density);
  } else {
    report["density"] = 0.0;
    report["density_display"] = format_density(0.0);
  }
  report["parse"] = parse_counters.is_null() ? ordered_json::object() : parse_counters;
  report["llm"] = detail::usage_json(usage.snapshot(), config.prices);

  detail::write_outputs(config, result, in);
  return result;
}

}  // namespace sgforge
