#pragma once

// JSON forms of the core types, plus the on-disk formats: lexicon files,
// caption corpora (COCO-caption JSON and JSONL) and the emitted triplet JSONL.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgforge/core_types.hpp"

namespace sgforge {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// The final unlocalized triplet set. Every triplet is fully aligned.
struct TripletDataset {
  std::vector<AlignedTriplet> triplets;
  std::size_t image_count = 0;
  json metadata = json::object();

  std::size_t distinct_images() const {
    std::set<std::string> ids;
    for (const auto& t : triplets) ids.insert(t.raw.image_id);
    return ids.size();
  }

  void validate() const {
    for (const auto& t : triplets)
      if (!t.fully_aligned()) throw InvalidInput("dataset contains a triplet with a None component");
    if (image_count < distinct_images())
      throw InvalidInput("dataset image_count is smaller than the number of distinct images in its triplets");
  }
};

struct CaptionCorpus {
  std::vector<CaptionRecord> captions;
  std::size_t image_count = 0;
};

// ---------------------------------------------------------------------------
// JSON conversions (found by nlohmann via ADL)

inline void to_json(json& j, const Lexicon& lex) {
  j = json{{"kind", to_string(lex.kind())}, {"name", lex.name()}, {"classes", lex.classes()}};
}

inline void from_json(const json& j, Lexicon& lex) {
  auto kind = parse_lexicon_kind(j.at("kind").get<std::string>());
  if (!kind) throw FormatError("lexicon kind must be 'entity' or 'predicate'");
  lex = Lexicon(*kind, j.value("name", std::string{}), j.at("classes").get<std::vector<std::string>>());
}

inline void to_json(json& j, const CaptionRecord& c) {
  j = json{{"image_id", c.image_id}, {"caption_id", c.caption_id}, {"text", c.text}};
}

namespace detail {

// COCO uses integer ids; everything else here treats ids as opaque strings.
inline std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  throw FormatError("id must be a string or an integer, got " + v.dump());
}

inline json optional_index_json(const std::optional<ClassIndex>& idx) {
  return idx ? json(*idx) : json(nullptr);
}

inline std::optional<ClassIndex> optional_index_from(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<ClassIndex>();
}

}  // namespace detail

inline void from_json(const json& j, CaptionRecord& c) {
  c.image_id = detail::id_string(j.at("image_id"));
  c.caption_id = detail::id_string(j.at("caption_id"));
  c.text = j.at("text").get<std::string>();
}

inline void to_json(json& j, const RawTriplet& t) {
  j = json{{"subject", t.subject},   {"predicate", t.predicate}, {"object", t.object},
           {"source", to_string(t.source)}, {"image_id", t.image_id}, {"caption_id", t.caption_id}};
}

inline void from_json(const json& j, RawTriplet& t) {
  t.subject = j.at("subject").get<std::string>();
  t.predicate = j.at("predicate").get<std::string>();
  t.object = j.at("object").get<std::string>();
  auto src = parse_triplet_source(j.at("source").get<std::string>());
  if (!src) throw FormatError("unknown triplet source " + j.at("source").dump());
  t.source = *src;
  t.image_id = j.at("image_id").get<std::string>();
  t.caption_id = j.at("caption_id").get<std::string>();
}

inline void to_json(json& j, const AlignedTriplet& t) {
  j = json{{"subject_class", detail::optional_index_json(t.subject_class)},
           {"predicate_class", detail::optional_index_json(t.predicate_class)},
           {"object_class", detail::optional_index_json(t.object_class)},
           {"raw", t.raw}};
}

inline void from_json(const json& j, AlignedTriplet& t) {
  t.subject_class = detail::optional_index_from(j.at("subject_class"));
  t.predicate_class = detail::optional_index_from(j.at("predicate_class"));
  t.object_class = detail::optional_index_from(j.at("object_class"));
  t.raw = j.at("raw").get<RawTriplet>();
}

inline void to_json(json& j, const TripletDataset& d) {
  j = json{{"triplets", d.triplets}, {"image_count", d.image_count}, {"metadata", d.metadata}};
}

inline void from_json(const json& j, TripletDataset& d) {
  d.triplets = j.at("triplets").get<std::vector<AlignedTriplet>>();
  d.image_count = j.at("image_count").get<std::size_t>();
  d.metadata = j.value("metadata", json::object());
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    start = end + 1;
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  return lines;
}

/// Plain text (one class per line, line number = index) or JSON
/// {kind, name, classes}. `kind` applies to the text form only.
inline Lexicon load_lexicon(const std::filesystem::path& path, LexiconKind kind = LexiconKind::entity) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".json") {
    try {
      return json::parse(text).get<Lexicon>();
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  std::vector<std::string> classes;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    std::string name = detail::collapse_whitespace(line);
    if (name.empty()) throw FormatError(path.string() + ":" + std::to_string(line_no) + ": blank class line");
    classes.push_back(std::move(name));
  }
  try {
    return Lexicon(kind, path.stem().string(), std::move(classes));
  } catch (const InvalidInput& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline void save_lexicon_text(const Lexicon& lex, const std::filesystem::path& path) {
  std::string out;
  for (const auto& c : lex.classes()) out += c + "\n";
  write_text_file(path, out);
}

inline void validate_corpus(const CaptionCorpus& corpus) {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : corpus.captions) {
    if (detail::trim(c.text).empty())
      throw FormatError("caption " + c.image_id + "/" + c.caption_id + " has empty text");
    if (!seen.emplace(c.image_id, c.caption_id).second)
      throw FormatError("duplicate caption id " + c.image_id + "/" + c.caption_id);
  }
}

/// COCO-caption JSON: {"images":[{"id":..}], "annotations":[{"image_id","id","caption"}]}.
inline CaptionCorpus parse_coco_captions(const json& j) {
  CaptionCorpus corpus;
  std::set<std::string> images;
  if (j.contains("images")) {
    for (const auto& img : j.at("images")) images.insert(detail::id_string(img.at("id")));
  }
  for (const auto& ann : j.at("annotations")) {
    CaptionRecord rec{detail::id_string(ann.at("image_id")), detail::id_string(ann.at("id")),
                      ann.at("caption").get<std::string>()};
    images.insert(rec.image_id);
    corpus.captions.push_back(std::move(rec));
  }
  corpus.image_count = images.size();
  validate_corpus(corpus);
  return corpus;
}

inline CaptionCorpus parse_caption_jsonl(std::string_view text) {
  CaptionCorpus corpus;
  std::set<std::string> images;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto rec = json::parse(line).get<CaptionRecord>();
      images.insert(rec.image_id);
      corpus.captions.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw FormatError("caption JSONL line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  corpus.image_count = images.size();
  validate_corpus(corpus);
  return corpus;
}

inline CaptionCorpus load_captions(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  if (path.extension() == ".jsonl") return parse_caption_jsonl(text);
  try {
    return parse_coco_captions(json::parse(text));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Emitted dataset: one JSON object per triplet.

inline std::string triplet_output_line(const AlignedTriplet& t, const Lexicon& entities, const Lexicon& predicates) {
  ordered_json j;
  j["image_id"] = t.raw.image_id;
  j["subject"] = entities.class_name(t.subject_class.value());
  j["predicate"] = predicates.class_name(t.predicate_class.value());
  j["object"] = entities.class_name(t.object_class.value());
  j["subject_idx"] = *t.subject_class;
  j["predicate_idx"] = *t.predicate_class;
  j["object_idx"] = *t.object_class;
  j["source"] = to_string(t.raw.source);
  return j.dump();
}

inline std::string dataset_to_jsonl(const TripletDataset& d, const Lexicon& entities, const Lexicon& predicates) {
  std::string out;
  for (const auto& t : d.triplets) {
    out += triplet_output_line(t, entities, predicates);
    out.push_back('\n');
  }
  return out;
}

/// Reads an emitted dataset back. Raw lexemes are not part of the output
/// format, so they come back as the class names. `image_count` defaults to
/// the number of distinct images in the file.
inline TripletDataset dataset_from_jsonl(std::string_view text, const Lexicon& predicates,
                                         std::optional<std::size_t> image_count = std::nullopt) {
  TripletDataset d;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      AlignedTriplet t;
      t.subject_class = j.at("subject_idx").get<ClassIndex>();
      t.predicate_class = j.at("predicate_idx").get<ClassIndex>();
      t.object_class = j.at("object_idx").get<ClassIndex>();
      if (!predicates.valid_index(*t.predicate_class))
        throw FormatError("predicate_idx " + std::to_string(*t.predicate_class) + " outside the predicate lexicon");
      t.raw.image_id = detail::id_string(j.at("image_id"));
      t.raw.subject = j.at("subject").get<std::string>();
      t.raw.predicate = j.at("predicate").get<std::string>();
      t.raw.object = j.at("object").get<std::string>();
      auto src = parse_triplet_source(j.value("source", std::string("llm_original")));
      if (!src) throw FormatError("unknown source");
      t.raw.source = *src;
      d.triplets.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  d.image_count = image_count.value_or(d.distinct_images());
  d.validate();
  return d;
}

}  // namespace sgforge
