#pragma once

// Command-line front end. Exit codes: 0 ok, 2 configuration or usage error,
// 3 backend failure, 4 partial run.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgforge/pipeline.hpp"

namespace sgforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitPartial = 4;

namespace cli_detail {

/// "0.52K" -> 520, "1200" -> 1200, "1.5M" -> 1500000.
inline double parse_token_amount(std::string s) {
  s = std::string(detail::trim(s));
  if (s.empty()) throw ConfigError("empty token count");
  double scale = 1;
  const char suffix = s.back();
  if (suffix == 'k' || suffix == 'K') scale = 1e3;
  if (suffix == 'm' || suffix == 'M') scale = 1e6;
  if (scale != 1) s.pop_back();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad token count '" + s + "'");
  }
  if (used != s.size() || v < 0) throw ConfigError("bad token count '" + s + "'");
  return v * scale;
}

inline std::pair<std::string, std::string> split_pair(const std::string& s, char sep, const std::string& what) {
  const auto pos = s.find(sep);
  if (pos == std::string::npos) throw ConfigError(what + " must look like A" + sep + "B, got '" + s + "'");
  return {s.substr(0, pos), s.substr(pos + 1)};
}

inline std::string absolute_string(const std::string& p) { return std::filesystem::absolute(p).lexically_normal().string(); }

inline Lexicon load_lexicon_auto(const std::filesystem::path& path, const std::string& kind) {
  if (kind == "entity") return load_lexicon(path, LexiconKind::entity);
  if (kind == "predicate") return load_lexicon(path, LexiconKind::predicate);
  const std::string stem = detail::to_lower_ascii(path.stem().string());
  return load_lexicon(path, stem.find("pred") != std::string::npos ? LexiconKind::predicate : LexiconKind::entity);
}

inline std::string answer_string(const std::optional<ClassIndex>& idx, const Lexicon& lexicon) {
  if (!idx) return "0.None";
  return std::to_string(*idx) + "." + lexicon.class_name(*idx);
}

}  // namespace cli_detail

/// Parses and executes one command; everything printed goes to `out`/`err`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Build scene-graph triplet datasets from image captions with an LLM or a rule-based baseline."};
  app.name("sgforge");
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "Extract, align, filter and select triplets for a caption corpus");
  std::string config_path;
  std::optional<std::string> backend, out_path, report_path, cache_path, fixture_path, checkpoint_dir, stop_after,
      log_level;
  std::optional<std::size_t> concurrency;
  bool no_paraphrase = false, resume = false, combined = false;
  std::vector<std::string> sets;
  run_cmd->add_option("--config", config_path, "Run configuration (JSON)")->required();
  run_cmd->add_option("--backend", backend, "Completion backend")
      ->check(CLI::IsMember({"http", "mock", "replay", "baseline"}));
  run_cmd->add_flag("--no-paraphrase", no_paraphrase, "Skip the paraphrase extraction chain");
  run_cmd->add_flag("--combined", combined, "Use the single combined extraction+alignment prompt");
  run_cmd->add_option("--out", out_path, "Output dataset (JSONL)");
  run_cmd->add_option("--report", report_path, "Run report (JSON)");
  run_cmd->add_option("--cache", cache_path, "Completion cache (JSONL)");
  run_cmd->add_option("--mock-fixture", fixture_path, "Mock backend fixture (JSONL)");
  run_cmd->add_option("--checkpoint-dir", checkpoint_dir, "Directory for stage checkpoints and alignment tables");
  run_cmd->add_flag("--resume", resume, "Reuse a matching extraction checkpoint and stored alignments");
  run_cmd->add_option("--stop-after", stop_after, "Stop after a stage (exit code 4)")
      ->check(CLI::IsMember({"extract", "align"}));
  run_cmd->add_option("--concurrency", concurrency, "Maximum in-flight backend requests (default 4)")
      ->check(CLI::Range(1, 256));
  run_cmd->add_option("--log-level", log_level, "debug, info, warn, error or off")
      ->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));
  run_cmd->add_option("--set", sets, "Override any config field, e.g. --set http.model=gpt-4");

  // align
  auto* align_cmd = app.add_subcommand("align", "Align one lexeme to a lexicon and print index.name");
  std::string lexeme, lexicon_path, kind = "auto";
  bool hierarchical = false;
  std::size_t group_size = 200;
  std::string align_backend = "mock";
  std::optional<std::string> align_fixture, align_cache, align_template, align_model;
  std::string replay_source = "mock";
  std::size_t max_prompt_tokens = 4096;
  align_cmd->add_option("--lexeme", lexeme, "Lexeme to align")->required();
  align_cmd->add_option("--lexicon", lexicon_path, "Lexicon file (text or JSON)")->required();
  align_cmd->add_option("--kind", kind, "Lexicon kind; auto reads JSON kind or looks for 'pred' in the file name")
      ->check(CLI::IsMember({"auto", "entity", "predicate"}));
  align_cmd->add_flag("--hierarchical", hierarchical, "Align group by group, then among the candidates");
  align_cmd->add_option("--group-size", group_size, "Classes per group for --hierarchical")
      ->check(CLI::PositiveNumber);
  align_cmd->add_option("--backend", align_backend, "Completion backend")
      ->check(CLI::IsMember({"http", "mock", "replay"}));
  align_cmd->add_option("--mock-fixture", align_fixture, "Mock backend fixture (JSONL)");
  align_cmd->add_option("--cache", align_cache, "Completion cache (JSONL)");
  align_cmd->add_option("--replay-source", replay_source, "Backend whose cache entries replay reads")
      ->check(CLI::IsMember({"http", "mock"}));
  align_cmd->add_option("--model", align_model, "Model id for the http backend");
  align_cmd->add_option("--template", align_template, "Alignment template file");
  align_cmd->add_option("--max-prompt-tokens", max_prompt_tokens, "Prompt budget in tokens")
      ->check(CLI::PositiveNumber);

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "Density and predicate distribution of emitted datasets");
  std::optional<std::string> dataset_path, csv_path, json_path, captions_path;
  std::vector<std::string> compare_paths;
  std::string stats_lexicon;
  std::optional<std::size_t> images;
  bool by_frequency = false;
  auto* dataset_opt = stats_cmd->add_option("--dataset", dataset_path, "Dataset JSONL");
  auto* compare_opt =
      stats_cmd->add_option("--compare", compare_paths, "Two datasets A B; deltas are B - A")->expected(2);
  dataset_opt->excludes(compare_opt);
  stats_cmd->add_option("--lexicon", stats_lexicon, "Predicate lexicon")->required();
  stats_cmd->add_option("--images", images, "Image count (default: distinct images in each dataset)");
  stats_cmd->add_option("--captions", captions_path, "Caption corpus to take the image count from");
  stats_cmd->add_option("--csv", csv_path, "Write the CSV here instead of stdout");
  stats_cmd->add_option("--json", json_path, "Write a JSON summary here");
  stats_cmd->add_flag("--by-frequency", by_frequency, "Order the histogram by descending count");

  // cost
  auto* cost_cmd = app.add_subcommand("cost", "Price token counts or a run report");
  std::vector<std::string> token_specs;
  std::string prices = "0.0005,0.0015";
  std::optional<std::string> cost_report;
  auto* tokens_opt = cost_cmd->add_option("--tokens", token_specs, "[step=]input,output per step, e.g. 0.52K,0.16K");
  auto* report_opt = cost_cmd->add_option("--report", cost_report, "Run report JSON");
  tokens_opt->excludes(report_opt);
  cost_cmd->add_option("--prices", prices, "input,output price per 1K tokens");

  // templates
  auto* tpl_cmd = app.add_subcommand("templates", "Print or export the default prompt templates");
  std::optional<std::string> dump_chain, dump_dir;
  tpl_cmd->add_option("--dump", dump_chain, "Print one default template")
      ->check(CLI::IsMember({"extract_original", "extract_paraphrase", "align_entity", "align_predicate", "combined"}));
  tpl_cmd->add_option("--dump-dir", dump_dir, "Write all default templates into this directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      std::vector<std::string> overrides = sets;
      auto set_string = [&](const char* key, const std::string& v) { overrides.push_back(std::string(key) + "=" + json(v).dump()); };
      if (backend) set_string("backend", *backend);
      if (out_path) set_string("output", cli_detail::absolute_string(*out_path));
      if (report_path) set_string("report", cli_detail::absolute_string(*report_path));
      if (cache_path) set_string("cache", cli_detail::absolute_string(*cache_path));
      if (fixture_path) set_string("mock_fixture", cli_detail::absolute_string(*fixture_path));
      if (checkpoint_dir) set_string("checkpoint_dir", cli_detail::absolute_string(*checkpoint_dir));
      if (log_level) set_string("log_level", *log_level);
      if (concurrency) overrides.push_back("concurrency=" + std::to_string(*concurrency));
      if (no_paraphrase) overrides.push_back("use_paraphrase=false");
      if (combined) overrides.push_back("combined=true");
      RunConfig config = load_run_config(config_path, overrides);
      config.resume = resume;
      if (stop_after) config.stop_after = *stop_after == "extract" ? StopAfter::extract : StopAfter::align;
      const RunResult result = run(config);
      if (result.status == RunStatus::partial) {
        out << "stopped after " << *stop_after << "; checkpoint in " << config.checkpoint_dir.string() << "\n";
        return kExitPartial;
      }
      out << "wrote " << result.dataset.triplets.size() << " triplets for " << result.dataset.image_count
          << " images to " << config.output.string() << " (density " << result.report["density_display"].get<std::string>()
          << ", cost " << result.report["llm"]["total_cost_usd"].get<std::string>() << ")\n";
      return kExitOk;
    }

    if (align_cmd->parsed()) {
      const Lexicon lexicon = cli_detail::load_lexicon_auto(lexicon_path, kind);
      const std::string normalized = normalize_lexeme(lexeme);
      if (normalized.empty()) throw ConfigError("--lexeme is empty after normalization");
      if (auto idx = lexicon.index_of(normalized)) {
        out << cli_detail::answer_string(idx, lexicon) << "\n";
        return kExitOk;
      }
      std::shared_ptr<CompletionBackend> be;
      const std::string model = align_model.value_or("gpt-3.5-turbo");
      if (align_backend == "mock") {
        if (!align_fixture) throw ConfigError("--backend mock needs --mock-fixture");
        be = load_mock_backend(*align_fixture);
      } else if (align_backend == "replay") {
        be = std::make_shared<ReplayBackend>(replay_source, replay_source == "mock" ? "mock" : model);
      } else {
        HttpBackendOptions o;
        o.model = model;
        be = std::make_shared<HttpBackend>(o);
      }
      TemplateSet templates;
      if (align_template) {
        PromptTemplate t = load_template(*align_template);
        if (!is_alignment_chain(t.chain)) throw ConfigError("--template is not an alignment template");
        (t.chain == Chain::align_entity ? templates.align_entity : templates.align_predicate) = std::move(t);
      }
      ClientOptions options;
      options.limits.max_tokens = max_prompt_tokens;
      options.concurrency = 1;
      auto cache = std::make_shared<CompletionCache>(align_cache ? std::filesystem::path(*align_cache)
                                                                 : std::filesystem::path{});
      LlmClient client(be, cache, options);
      AlignmentEngine engine(client, templates,
                             {group_size, hierarchical ? HierarchyMode::always : HierarchyMode::when_over_budget});
      std::optional<ClassIndex> idx;
      if (hierarchical) {
        idx = engine.align_hierarchical(normalized, lexicon, group_size);
      } else {
        AlignmentTable table(lexicon);
        idx = engine.align_lexeme(normalized, table);
      }
      out << cli_detail::answer_string(idx, lexicon) << "\n";
      return kExitOk;
    }

    if (stats_cmd->parsed()) {
      const Lexicon predicates = load_lexicon(stats_lexicon, LexiconKind::predicate);
      std::optional<std::size_t> image_count = images;
      if (captions_path && !image_count) image_count = load_captions(*captions_path).image_count;
      auto load = [&](const std::string& path) {
        return dataset_from_jsonl(read_text_file(path), predicates, image_count);
      };
      auto emit = [&](const std::string& csv) {
        if (csv_path)
          write_text_file(*csv_path, csv);
        else
          out << csv;
      };
      if (!compare_paths.empty()) {
        const CorpusStats a = compute_stats(load(compare_paths[0]), predicates);
        const CorpusStats b = compute_stats(load(compare_paths[1]), predicates);
        const StatsComparison cmp = compare_stats(a, b);
        if (json_path) write_text_file(*json_path, comparison_json(cmp, a, b).dump(2) + "\n");
        char line[160];
        std::snprintf(line, sizeof line, "density %s -> %s (delta %+.3f); zero-frequency %zu -> %zu (delta %+lld)\n",
                      format_density(a.density).c_str(), format_density(b.density).c_str(), cmp.density_delta,
                      a.zero_frequency_count, b.zero_frequency_count, cmp.zero_frequency_delta);
        (csv_path ? out : err) << line;
        emit(comparison_csv(cmp));
        return kExitOk;
      }
      if (!dataset_path) throw ConfigError("stats needs --dataset or --compare");
      const CorpusStats s = compute_stats(load(*dataset_path), predicates);
      if (json_path) write_text_file(*json_path, stats_json(s).dump(2) + "\n");
      (csv_path ? out : err) << "density " << format_density(s.density) << " (" << s.triplet_count << " triplets / "
                             << s.image_count << " images); zero-frequency predicates " << s.zero_frequency_count
                             << "/" << s.classes.size() << "\n";
      emit(by_frequency ? histogram_csv_by_frequency(s) : histogram_csv(s));
      return kExitOk;
    }

    if (cost_cmd->parsed()) {
      const auto [pin, pout] = cli_detail::split_pair(prices, ',', "--prices");
      CostModel model;
      try {
        model.input_price_per_1k = std::stod(pin);
        model.output_price_per_1k = std::stod(pout);
      } catch (const std::exception&) {
        throw ConfigError("--prices must be two numbers");
      }
      if (model.input_price_per_1k < 0 || model.output_price_per_1k < 0)
        throw ConfigError("--prices must be non-negative");
      std::vector<std::pair<std::string, TokenCounts>> steps;
      if (cost_report) {
        const json report = read_config_json(*cost_report);
        if (!report.contains("llm") || !report["llm"].contains("steps"))
          throw ConfigError(*cost_report + " is not a run report");
        for (const auto& [step, u] : report["llm"]["steps"].items())
          steps.emplace_back(step, TokenCounts{u.at("input_tokens").get<double>(), u.at("output_tokens").get<double>()});
      } else {
        if (token_specs.empty()) throw ConfigError("cost needs --tokens or --report");
        for (std::size_t i = 0; i < token_specs.size(); ++i) {
          std::string spec = token_specs[i];
          std::string name = "step" + std::to_string(i + 1);
          if (auto eq = spec.find('='); eq != std::string::npos) {
            name = spec.substr(0, eq);
            spec = spec.substr(eq + 1);
          }
          const auto [in, outp] = cli_detail::split_pair(spec, ',', "--tokens");
          steps.emplace_back(name, TokenCounts{cli_detail::parse_token_amount(in), cli_detail::parse_token_amount(outp)});
        }
      }
      const CostReport report = estimate_cost(steps, model);
      const bool single_unnamed = !cost_report && steps.size() == 1 && token_specs[0].find('=') == std::string::npos;
      if (single_unnamed) {
        out << format_usd(report.total) << "\n";
      } else {
        for (const auto& s : report.steps) out << s.step << ": " << format_usd(s.cost) << "\n";
        out << "total: " << format_usd(report.total) << "\n";
      }
      return kExitOk;
    }

    if (tpl_cmd->parsed()) {
      if (dump_chain) {
        out << serialize_template(default_template(*parse_chain(*dump_chain)));
        return kExitOk;
      }
      if (dump_dir) {
        for (Chain c : {Chain::extract_original, Chain::extract_paraphrase, Chain::align_entity, Chain::align_predicate,
                        Chain::combined})
          write_text_file(std::filesystem::path(*dump_dir) / (std::string(to_string(c)) + ".tmpl"),
                          serialize_template(default_template(c)));
        return kExitOk;
      }
      throw ConfigError("templates needs --dump or --dump-dir");
    }
  } catch (const BackendUnavailable& e) {
    err << "sgforge: backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const BackendRejected& e) {
    err << "sgforge: backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const TransientBackendError& e) {
    err << "sgforge: backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const MockMiss& e) {
    err << "sgforge: backend failure: " << e.what() << "\n";
    return kExitBackend;
  } catch (const Error& e) {
    err << "sgforge: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "sgforge: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}

}  // namespace sgforge
