#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "sgforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sgforge;

namespace {

const fs::path kSource = SGFORGE_SOURCE_DIR;
const fs::path kGolden = kSource / "tests/fixtures/golden";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sgforge_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig golden_config(const fs::path& work, std::vector<std::string> extra = {}) {
  std::vector<std::string> o{"output=\"" + (work / "out.jsonl").string() + "\"",
                             "report=\"" + (work / "report.json").string() + "\"",
                             "cache=\"" + (work / "cache.jsonl").string() + "\"",
                             "checkpoint_dir=\"" + (work / "ckpt").string() + "\""};
  o.insert(o.end(), extra.begin(), extra.end());
  return load_run_config(kGolden / "config.json", o);
}

class FlakyBackend : public CompletionBackend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  BackendKind kind() const override { return BackendKind::mock; }
  std::string cache_identity() const override { return "flaky"; }
  std::string model() const override { return "m"; }
  BackendReply invoke(const std::string& prompt, const GenerationParams&) override {
    ++calls;
    if (failures_-- > 0) throw TransientBackendError("429");
    return {"echo:" + prompt, 1, 1};
  }
  int calls = 0;

 private:
  int failures_;
};

ClientOptions fast_retry(int retries) {
  ClientOptions o;
  o.retry.max_retries = retries;
  o.retry.initial_backoff = std::chrono::milliseconds(1);
  return o;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::string& args, const fs::path& work) {
  const fs::path out = work / "cli.out", err = work / "cli.err";
  const std::string cmd =
      std::string("\"") + SGFORGE_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text_file(out), read_text_file(err)};
}

}  // namespace

// ---------------------------------------------------------------------------
// client

TEST(Client, CachesByPromptAndPersists) {
  TempDir dir("client_cache");
  auto mock = std::make_shared<MockBackend>(std::unordered_map<std::string, std::string>{});
  mock->add("hello", "world");
  {
    LlmClient client(mock, std::make_shared<CompletionCache>(dir.path / "c.jsonl"));
    EXPECT_FALSE(client.complete("hello").cache_hit);
    EXPECT_TRUE(client.complete("hello").cache_hit);
    EXPECT_EQ(client.stats().backend_calls, 1u);
  }
  LlmClient again(mock, std::make_shared<CompletionCache>(dir.path / "c.jsonl"));
  const auto r = again.complete("hello");
  EXPECT_TRUE(r.cache_hit);
  EXPECT_EQ(r.record.response, "world");
  EXPECT_EQ(mock->total_invocations(), 1u);
}

TEST(Client, TornFinalCacheLineIsIgnored) {
  TempDir dir("client_torn");
  auto mock = std::make_shared<MockBackend>(std::unordered_map<std::string, std::string>{});
  mock->add("hello", "world");
  LlmClient(mock, std::make_shared<CompletionCache>(dir.path / "c.jsonl")).complete("hello");
  const std::string good = read_text_file(dir.path / "c.jsonl");
  write_text_file(dir.path / "c.jsonl", good + "{\"cache_key\":\"ab");
  EXPECT_EQ(CompletionCache(dir.path / "c.jsonl").size(), 1u);
  write_text_file(dir.path / "c.jsonl", "{broken\n" + good);
  EXPECT_THROW(CompletionCache(dir.path / "c.jsonl"), FormatError);
}

TEST(Client, MockMissAndEmptyPrompt) {
  LlmClient client(std::make_shared<MockBackend>(std::unordered_map<std::string, std::string>{}), nullptr);
  EXPECT_THROW(client.complete("unknown"), MockMiss);
  EXPECT_THROW(client.complete("   "), InvalidInput);
}

TEST(Client, MockTokensAreCeilQuarterCharacters) {
  auto mock = std::make_shared<MockBackend>(std::unordered_map<std::string, std::string>{});
  mock->add("12345", "abcdefgh");
  LlmClient client(mock, nullptr);
  const auto r = client.complete("12345");
  EXPECT_EQ(r.record.input_tokens, 2u);
  EXPECT_EQ(r.record.output_tokens, 2u);
}

TEST(Client, RetriesTransientErrorsThenGivesUp) {
  auto ok = std::make_shared<FlakyBackend>(2);
  LlmClient client(ok, nullptr, fast_retry(3));
  EXPECT_EQ(client.complete("p").record.response, "echo:p");
  EXPECT_EQ(client.stats().retries, 2u);

  auto bad = std::make_shared<FlakyBackend>(10);
  LlmClient failing(bad, nullptr, fast_retry(2));
  EXPECT_THROW(failing.complete("p"), BackendUnavailable);
  EXPECT_EQ(bad->calls, 3);
}

TEST(Client, ReplayServesOnlyCachedPrompts) {
  auto cache = std::make_shared<CompletionCache>();
  auto mock = std::make_shared<MockBackend>(std::unordered_map<std::string, std::string>{});
  mock->add("q", "a");
  LlmClient(mock, cache).complete("q");
  LlmClient replay(std::make_shared<ReplayBackend>("mock", "mock"), cache);
  EXPECT_EQ(replay.complete("q").record.response, "a");
  EXPECT_THROW(replay.complete("other"), BackendUnavailable);
}

TEST(Client, ConcurrentIdenticalPromptsShareOneCall) {
  auto mock = std::make_shared<MockBackend>(std::unordered_map<std::string, std::string>{});
  mock->add("same", "x");
  LlmClient client(mock, nullptr);
  parallel_for(16, 8, [&](std::size_t) { EXPECT_EQ(client.complete("same").record.response, "x"); });
  EXPECT_EQ(mock->total_invocations(), 1u);
}

TEST(Cost, MatchesPerStepArithmetic) {
  const auto r = estimate_cost({{"a", {520, 160}}, {"b", {1000, 0}}}, CostModel{});
  EXPECT_NEAR(r.steps[0].cost, 0.00050, 1e-12);
  EXPECT_NEAR(r.total, 0.00100, 1e-12);
  EXPECT_EQ(format_usd(0.000496), "$0.00050");
  EXPECT_THROW(estimate_cost({{"a", {-1, 0}}}, CostModel{}), InvalidInput);
}

TEST(HttpBackend, TalksToChatCompletionsEndpoint) {
  httplib::Server server;
  std::string seen_auth, seen_model;
  int hits = 0;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    if (hits == 1) {
      res.status = 503;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    const auto body = json::parse(req.body);
    seen_model = body.at("model");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"12.bird"}}],)"
                    R"("usage":{"prompt_tokens":120,"completion_tokens":3}})",
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("SGFORGE_TEST_KEY", "sk-test", 1);
  auto backend = std::make_shared<HttpBackend>(
      HttpBackendOptions{"http://127.0.0.1:" + std::to_string(port) + "/v1", "gpt-test", "SGFORGE_TEST_KEY", 5});
  LlmClient client(backend, nullptr, fast_retry(2));
  const auto r = client.complete("pigeon?");
  server.stop();
  t.join();

  EXPECT_EQ(r.record.response, "12.bird");
  EXPECT_EQ(r.record.input_tokens, 120u);
  EXPECT_EQ(r.record.output_tokens, 3u);
  EXPECT_EQ(seen_auth, "Bearer sk-test");
  EXPECT_EQ(seen_model, "gpt-test");
  EXPECT_EQ(client.stats().retries, 1u);
}

TEST(HttpBackend, MissingKeyIsUnavailable) {
  ::unsetenv("SGFORGE_ABSENT_KEY");
  HttpBackend backend({"http://127.0.0.1:9/v1", "m", "SGFORGE_ABSENT_KEY", 1});
  EXPECT_THROW(backend.invoke("x", {}), BackendUnavailable);
  EXPECT_THROW(HttpBackend::parse_response("x", "{}"), BackendRejected);
}

// ---------------------------------------------------------------------------
// config

TEST(Config, RejectsUnknownKeysAndInlineCredentials) {
  json j = read_config_json(kGolden / "config.json");
  j["api_key"] = "sk-123";
  EXPECT_THROW(parse_run_config(j, kGolden), ConfigError);
  j.erase("api_key");
  j["colour"] = 1;
  EXPECT_THROW(parse_run_config(j, kGolden), ConfigError);
  j.erase("colour");
  j["concurrency"] = 0;
  EXPECT_THROW(parse_run_config(j, kGolden), ConfigError);
}

TEST(Config, OverridesUseDottedPaths) {
  json j = read_config_json(kGolden / "config.json");
  apply_override(j, "retry.max_retries=7");
  apply_override(j, "group_size=50");
  apply_override(j, "use_paraphrase=false");
  const auto c = parse_run_config(j, kGolden);
  EXPECT_EQ(c.retry.max_retries, 7);
  EXPECT_EQ(c.group_size, 50u);
  EXPECT_FALSE(c.use_paraphrase);
  EXPECT_EQ(c.captions, kGolden / "captions.json");
}

// ---------------------------------------------------------------------------
// pipeline

TEST(Pipeline, GoldenRunMatchesFrozenOutput) {
  TempDir dir("pipeline_golden");
  const auto r = run(golden_config(dir.path));
  EXPECT_EQ(r.status, RunStatus::complete);
  EXPECT_EQ(read_text_file(dir.path / "out.jsonl"), read_text_file(kSource / "tests/golden/run/llm_triplets.jsonl"));
  EXPECT_EQ(read_text_file(dir.path / "report.json"), read_text_file(kSource / "tests/golden/run/llm_report.json"));
  const auto& s = r.report.at("stages");
  EXPECT_LE(s.at("final").get<int>(), s.at("after_filter").get<int>());
  EXPECT_LE(s.at("after_filter").get<int>(), s.at("aligned").get<int>());
  EXPECT_EQ(s.at("aligned"), s.at("extracted"));
}

TEST(Pipeline, BaselineRunMatchesFrozenOutput) {
  TempDir dir("pipeline_baseline");
  run(golden_config(dir.path, {"backend=baseline"}));
  EXPECT_EQ(read_text_file(dir.path / "out.jsonl"),
            read_text_file(kSource / "tests/golden/run/baseline_triplets.jsonl"));
  EXPECT_EQ(read_text_file(dir.path / "report.json"),
            read_text_file(kSource / "tests/golden/run/baseline_report.json"));
}

TEST(Pipeline, ReplayReproducesColdRun) {
  TempDir dir("pipeline_replay");
  run(golden_config(dir.path));
  const auto out = read_text_file(dir.path / "out.jsonl");
  const auto report = read_text_file(dir.path / "report.json");
  run(golden_config(dir.path, {"backend=replay", "replay_source=mock"}));
  EXPECT_EQ(read_text_file(dir.path / "out.jsonl"), out);
  EXPECT_EQ(read_text_file(dir.path / "report.json"), report);
}

TEST(Pipeline, ResumeAfterExtractionRepeatsNoCalls) {
  TempDir dir("pipeline_resume");
  TempDir ref("pipeline_resume_ref");
  run(golden_config(ref.path));

  RunConfig interrupted = golden_config(dir.path);
  interrupted.stop_after = StopAfter::extract;
  EXPECT_EQ(run(interrupted).status, RunStatus::partial);
  RunConfig resumed = golden_config(dir.path);
  resumed.resume = true;
  auto mock = load_mock_backend(kGolden / "mock_fixture.jsonl");
  run(resumed, mock);
  for (const auto& [hash, n] : mock->invocations()) EXPECT_EQ(n, 1u) << hash;
  EXPECT_EQ(read_text_file(dir.path / "out.jsonl"), read_text_file(ref.path / "out.jsonl"));
  EXPECT_EQ(read_text_file(dir.path / "report.json"), read_text_file(ref.path / "report.json"));
}

TEST(Pipeline, EmptyCorpusGivesEmptyDatasetAndZeroCost) {
  TempDir dir("pipeline_empty");
  write_text_file(dir.path / "captions.jsonl", "");
  const auto r = run(golden_config(dir.path, {"captions=\"" + (dir.path / "captions.jsonl").string() + "\""}));
  EXPECT_TRUE(r.dataset.triplets.empty());
  EXPECT_EQ(r.report.at("llm").at("total_cost_usd"), "$0.00000");
  EXPECT_EQ(read_text_file(dir.path / "out.jsonl"), "");
}

TEST(Pipeline, MissingInputsFailBeforeAnyRequest) {
  TempDir dir("pipeline_missing");
  auto mock = load_mock_backend(kGolden / "mock_fixture.jsonl");
  EXPECT_THROW(run(golden_config(dir.path, {"captions=\"/nonexistent/c.json\""}), mock), ConfigError);
  EXPECT_EQ(mock->total_invocations(), 0u);
}

TEST(Pipeline, CombinedModeProducesTriplets) {
  TempDir dir("pipeline_combined");
  const auto r = run(golden_config(dir.path, {"combined=true"}));
  EXPECT_EQ(r.report.at("mode"), "combined");
  EXPECT_FALSE(r.dataset.triplets.empty());
}

// ---------------------------------------------------------------------------
// command line

TEST(Cli, RunWritesSummaryAndExitCodes) {
  TempDir dir("cli_run");
  const std::string common = "--config \"" + (kGolden / "config.json").string() + "\" --out \"" +
                             (dir.path / "o.jsonl").string() + "\" --checkpoint-dir \"" +
                             (dir.path / "ck").string() + "\"";
  const std::string cache = " --cache \"" + (dir.path / "c.jsonl").string() + "\"";
  auto r = cli("run " + common + cache, dir.path);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("wrote 20 triplets for 6 images"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("density 3.3"), std::string::npos);

  r = cli("run " + common + cache + " --stop-after extract", dir.path);
  EXPECT_EQ(r.code, 4);
  r = cli("run --config /nonexistent.json", dir.path);
  EXPECT_EQ(r.code, 2);
  r = cli("run " + common + " --backend replay --cache \"" + (dir.path / "empty.jsonl").string() + "\"", dir.path);
  EXPECT_EQ(r.code, 3);
}

TEST(Cli, AlignPrintsNumberedAnswer) {
  TempDir dir("cli_align");
  const std::string lex = (kSource / "data/lexicons/vg150_entities.txt").string();
  auto r = cli("align --lexeme pigeon --lexicon \"" + lex + "\" --mock-fixture \"" +
                   (kGolden / "mock_fixture.jsonl").string() + "\"",
               dir.path);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "12.bird\n");
  r = cli("align --lexeme Bird --lexicon \"" + lex + "\"", dir.path);
  EXPECT_EQ(r.out, "12.bird\n");

  const fs::path vinvl = kSource / "tests/fixtures/vinvl";
  r = cli("align --lexeme ramen --hierarchical --group-size 200 --lexicon \"" + (vinvl / "vinvl.txt").string() +
              "\" --mock-fixture \"" + (vinvl / "mock_fixture.jsonl").string() + "\"",
          dir.path);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "1100.noodle\n");
}

TEST(Cli, StatsAndCost) {
  TempDir dir("cli_stats");
  const fs::path run_dir = kSource / "tests/golden/run";
  auto r = cli("stats --compare \"" + (run_dir / "baseline_triplets.jsonl").string() + "\" \"" +
                   (run_dir / "llm_triplets.jsonl").string() + "\" --lexicon \"" +
                   (kSource / "data/lexicons/vg50_predicates.txt").string() + "\" --captions \"" +
                   (kGolden / "captions.json").string() + "\"",
               dir.path);
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, read_text_file(run_dir / "compare.csv"));

  r = cli("cost --tokens 520,160", dir.path);
  EXPECT_EQ(r.out, "$0.00050\n");
  r = cli("cost --tokens orig=0.52K,0.16K --tokens para=0.89K,0.48K", dir.path);
  EXPECT_NE(r.out.find("total: $0.00167"), std::string::npos) << r.out;
  r = cli("cost --tokens nonsense", dir.path);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, TemplatesDumpMatchesShippedFile) {
  TempDir dir("cli_templates");
  const auto r = cli("templates --dump extract_original", dir.path);
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, read_text_file(kSource / "data/templates/extract_original.tmpl"));
}
