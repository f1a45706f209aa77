// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "sgforge/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sgforge;

namespace {

const fs::path kSource = SGFORGE_SOURCE_DIR;
const fs::path kGolden = kSource / "tests/fixtures/golden";

struct Check {
  bool ok = true;
  std::ostringstream why;
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) why << what;
    ok = ok && cond;
  }
};

int failures = 0;

void criterion(int n, const char* title, double limit_seconds, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (c.ok && secs >= limit_seconds) {
    c.ok = false;
    c.why << "took " << secs << " s, limit " << limit_seconds << " s";
  }
  char timing[32];
  std::snprintf(timing, sizeof timing, "%.3f s", secs);
  std::cout << (c.ok ? "PASS" : "FAIL") << " " << n << " " << title << " (" << timing << ")";
  if (!c.ok) std::cout << ": " << c.why.str();
  std::cout << std::endl;
  if (!c.ok) ++failures;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("sgforge_accept_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig golden_config(const fs::path& work, std::vector<std::string> extra = {}) {
  std::vector<std::string> o{"output=\"" + (work / "out.jsonl").string() + "\"",
                             "report=\"" + (work / "report.json").string() + "\"",
                             "cache=\"" + (work / "cache.jsonl").string() + "\"",
                             "checkpoint_dir=\"" + (work / "ckpt").string() + "\"", "log_level=\"off\""};
  o.insert(o.end(), extra.begin(), extra.end());
  return load_run_config(kGolden / "config.json", o);
}

// 1-based line number of `name` in a lexicon file, read without the library.
std::optional<ClassIndex> line_of(const fs::path& file, const std::string& name) {
  std::istringstream in(read_text_file(file));
  std::string line;
  for (ClassIndex i = 1; std::getline(in, line); ++i)
    if (line == name) return i;
  return std::nullopt;
}

}  // namespace

int main() {
  const fs::path entity_file = kSource / "data/lexicons/vg150_entities.txt";
  const fs::path predicate_file = kSource / "data/lexicons/vg50_predicates.txt";
  const Lexicon entities = load_lexicon(entity_file, LexiconKind::entity);
  const Lexicon predicates = load_lexicon(predicate_file, LexiconKind::predicate);

  criterion(1, "prompt fidelity", 1.0, [&](Check& c) {
    const std::string sentinel = "zqxslotzqx";
    const TemplateSet t;
    const CaptionRecord cap{"1", "1", sentinel};
    const std::pair<const char*, std::string> rendered[] = {
        {"extract_original", render_extraction_prompt(t.extract_original, cap)},
        {"extract_paraphrase", render_extraction_prompt(t.extract_paraphrase, cap)},
        {"align_entity", render_alignment_prompt(t.align_entity, sentinel, entities)},
        {"align_predicate", render_alignment_prompt(t.align_predicate, sentinel, predicates)},
    };
    for (auto [name, prompt] : rendered) {
      const auto at = prompt.find(sentinel);
      c.expect(at != std::string::npos, std::string(name) + ": slot missing");
      if (at == std::string::npos) continue;
      prompt.replace(at, sentinel.size(), "{INPUT}");
      c.expect(prompt == read_text_file(kSource / "tests/golden/prompts" / (std::string(name) + ".txt")),
               std::string(name) + ": differs from transcription");
    }
  });

  criterion(2, "alignment parsing oracle", 1.0, [&](Check& c) {
    // (answer as printed, class the answer names, lexicon)
    struct Case {
      const char* answer;
      const char* name;
      bool entity;
    };
    const Case cases[] = {
        {"0.None", nullptr, true},         {"142.vehicle", "vehicle", true},  {"0.None", nullptr, true},
        {"110.shelf", "shelf", true},      {"72.laptop", "laptop", true},     {"104.rock", "rock", true},
        {"99.pole", "pole", true},         {"6.basket", "basket", true},      {"0.None", nullptr, true},
        {"98.player", "player", true},     {"91.person", "person", true},     {"12.bird", "bird", true},
        {"96.plant", "plant", true},       {"125.surfboard", "surfboard", true}, {"111.shirt", "shirt", true},
        {"29.near", "near", false},        {"35.parked on", "parked on", false}, {"0.None", nullptr, false},
        {"40.sitting on", "sitting on", false}, {"14.eating", "eating", false}, {"0.None", nullptr, false},
        {"24.lying on", "lying on", false}, {"43.under", "under", false},     {"29.near", "near", false},
        {"25.looking at", "looking at", false}, {"0.has", "has", false},      {"40.sitting on", "sitting on", false},
        {"0.None", nullptr, false},        {"19.hanging from", "hanging from", false},
    };
    std::size_t hits = 0;
    for (const auto& k : cases) {
      const auto expected = k.name ? line_of(k.entity ? entity_file : predicate_file, k.name) : std::nullopt;
      const auto got = parse_alignment(k.answer, k.entity ? entities : predicates);
      const bool ok = got.index == expected && !got.unparseable;
      hits += ok ? 1 : 0;
      c.expect(ok, std::string("'") + k.answer + "' parsed wrongly");
    }
    c.expect(hits == std::size(cases), "");
    c.expect(std::size(cases) == 29, "case list incomplete");
  });

  criterion(3, "cost model", 1.0, [&](Check& c) {
    const std::pair<TokenCounts, double> rows[] = {
        {{520, 160}, 0.00050}, {{890, 480}, 0.00117}, {{1180, 110}, 0.00076}, {{820, 110}, 0.00058}};
    for (const auto& [tokens, expected] : rows) {
      const auto r = estimate_cost({{"step", tokens}}, CostModel{0.0005, 0.0015});
      c.expect(std::abs(r.total - expected) <= 0.00001 + 1e-12, "cost " + std::to_string(r.total));
    }
  });

  criterion(4, "hierarchical partition", 1.0, [&](Check& c) {
    const Lexicon vinvl = load_lexicon(kSource / "tests/fixtures/vinvl/vinvl.txt", LexiconKind::entity);
    c.expect(vinvl.size() == 1594, "fixture lexicon size");
    const auto groups = partition_lexicon(vinvl, 200);
    c.expect(groups.size() == 8, "group count " + std::to_string(groups.size()));
    std::vector<std::string> joined;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      c.expect(groups[g].lexicon.size() == (g < 7 ? 200u : 194u), "group size");
      for (std::size_t i = 1; i <= groups[g].lexicon.size(); ++i) {
        c.expect(groups[g].lexicon.class_name(i) == vinvl.class_name(groups[g].to_original(i)), "index mapping");
        joined.push_back(groups[g].lexicon.class_name(i));
      }
    }
    c.expect(joined == vinvl.classes(), "groups are not an ordered disjoint cover");
  });

  criterion(5, "golden end-to-end determinism", 5.0, [&](Check& c) {
    TempDir a("e2e_a"), b("e2e_b");
    run(golden_config(a.path));
    run(golden_config(b.path));
    const auto out = read_text_file(a.path / "out.jsonl");
    const auto report = read_text_file(a.path / "report.json");
    c.expect(out == read_text_file(b.path / "out.jsonl"), "output differs between runs");
    c.expect(report == read_text_file(b.path / "report.json"), "report differs between runs");
    c.expect(out == read_text_file(kSource / "tests/golden/run/llm_triplets.jsonl"), "output differs from golden");
    c.expect(report == read_text_file(kSource / "tests/golden/run/llm_report.json"), "report differs from golden");
    run(golden_config(a.path, {"backend=\"replay\"", "replay_source=\"mock\""}));
    c.expect(out == read_text_file(a.path / "out.jsonl"), "replay output differs");
    c.expect(report == read_text_file(a.path / "report.json"), "replay report differs");
  });

  criterion(6, "selection oracle", 30.0, [&](Check& c) {
    std::mt19937 rng(20240601);
    std::size_t ties = 0;
    for (int round = 0; round < 500; ++round) {
      const int images = 1 + static_cast<int>(rng() % 10);
      const int preds = 1 + static_cast<int>(rng() % 8);
      const auto in = oracle::random_aligned(rng, images, preds, 50, 1.0);
      const auto got = select_predicates(in, predicates).kept;
      c.expect(got == oracle::select_brute_force(in, predicates), "mismatch in round " + std::to_string(round));
      ties += got.size() < in.size() ? 1 : 0;
    }
    c.expect(ties > 0, "no corpus exercised selection");
  });

  criterion(7, "filter soundness", 10.0, [&](Check& c) {
    std::mt19937 rng(77);
    for (int round = 0; round < 2000; ++round) {
      const auto in = oracle::random_aligned(rng, 5, 50, 60, 0.75);
      const auto r = filter_none(in);
      c.expect(r.kept == oracle::filter_brute_force(in), "kept set");
      c.expect(r.report.discarded == in.size() - r.kept.size(), "discard count");
      std::size_t s = 0, p = 0, o = 0, patterns = 0;
      for (const auto& t : in) {
        s += !t.subject_class;
        p += !t.predicate_class;
        o += !t.object_class;
      }
      for (const auto& [k, v] : r.report.by_pattern) patterns += v;
      c.expect(r.report.subject_none == s && r.report.predicate_none == p && r.report.object_none == o,
               "per-component counts");
      c.expect(patterns == r.report.discarded, "pattern counts");
    }
  });

  criterion(8, "stats correctness", 10.0, [&](Check& c) {
    c.expect(format_density(154000.0 / 64000.0) == "2.4", "154K/64K");
    c.expect(format_density(344000.0 / 64000.0) == "5.4", "344K/64K");
    std::mt19937 rng(8);
    for (int round = 0; round < 300; ++round) {
      std::vector<StatsAccumulator> parts(3, StatsAccumulator(predicates));
      std::vector<std::size_t> hist(predicates.size(), 0);
      for (auto& acc : parts) {
        for (const auto& t : oracle::random_aligned(rng, 4, 50, 40, 1.0)) {
          acc.add(t);
          ++hist[*t.predicate_class - 1];
        }
        acc.add_images(1 + rng() % 7);
      }
      StatsAccumulator left = parts[0];
      left.merge(parts[1]).merge(parts[2]);
      StatsAccumulator tail = parts[1];
      tail.merge(parts[2]);
      StatsAccumulator right = parts[0];
      right.merge(tail);
      const auto l = left.finish(), r = right.finish();
      c.expect(l.predicate_histogram == hist, "histogram conservation");
      c.expect(r.predicate_histogram == hist && l.image_count == r.image_count && l.density == r.density,
               "merge associativity");
    }
  });

  criterion(9, "baseline gap", 5.0, [&](Check& c) {
    TempDir llm_dir("gap_llm"), base_dir("gap_base");
    const auto llm = run(golden_config(llm_dir.path));
    const auto base = run(golden_config(base_dir.path, {"backend=\"baseline\""}));
    const auto ls = compute_stats(llm.dataset, predicates), bs = compute_stats(base.dataset, predicates);
    c.expect(bs.density < ls.density, "baseline density is not lower");
    c.expect(bs.zero_frequency_count > ls.zero_frequency_count, "baseline zero-frequency count is not higher");

    std::string caption_id;
    for (const auto& cap : load_captions(kGolden / "captions.json").captions)
      if (cap.text == "an elephant lying on the beach") caption_id = cap.caption_id;
    c.expect(!caption_id.empty(), "elephant caption missing from fixture");
    auto predicate_for = [&](const TripletDataset& d) {
      std::set<std::string> out;
      for (const auto& t : d.triplets)
        if (t.raw.caption_id == caption_id && t.subject_class == line_of(entity_file, "elephant") && t.object_class == line_of(entity_file, "beach"))
          out.insert(predicates.class_name(*t.predicate_class));
      return out;
    };
    c.expect(predicate_for(base.dataset) == std::set<std::string>{"on"}, "baseline predicate is not 'on'");
    c.expect(predicate_for(llm.dataset) == std::set<std::string>{"lying on"}, "LLM predicate is not 'lying on'");
  });

  criterion(10, "cache and resume", 10.0, [&](Check& c) {
    TempDir ref("resume_ref"), work("resume_work");
    run(golden_config(ref.path));

    // The interrupted run stops right after the extraction checkpoint.
    auto first = load_mock_backend(kGolden / "mock_fixture.jsonl");
    RunConfig interrupted = golden_config(work.path);
    interrupted.stop_after = StopAfter::extract;
    const auto partial = run(interrupted, first);
    c.expect(partial.status == RunStatus::partial, "first run did not stop after extraction");
    c.expect(fs::exists(work.path / "ckpt"), "no checkpoint written");

    auto second = load_mock_backend(kGolden / "mock_fixture.jsonl");
    RunConfig resumed = golden_config(work.path);
    resumed.resume = true;
    run(resumed, second);
    const auto before = first->invocations();
    for (const auto& [hash, n] : second->invocations()) {
      c.expect(!before.contains(hash), "prompt " + hash.substr(0, 12) + " was sent again after resume");
      c.expect(n == 1, "prompt " + hash.substr(0, 12) + " sent more than once");
    }
    c.expect(read_text_file(work.path / "out.jsonl") == read_text_file(ref.path / "out.jsonl"),
             "resumed output differs");
    c.expect(read_text_file(work.path / "report.json") == read_text_file(ref.path / "report.json"),
             "resumed report differs");
  });

  return failures == 0 ? 0 : 1;
}
