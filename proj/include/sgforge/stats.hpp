#pragma once

// Density and predicate-distribution diagnostics for triplet datasets.

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "sgforge/dataset.hpp"

namespace sgforge {

/// One decimal, as densities are usually quoted ("2.4").
inline std::string format_density(double density) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", density);
  return buf;
}

struct CorpusStats {
  std::string lexicon_id;
  std::vector<std::string> classes;  // predicate lexicon, in order
  std::size_t triplet_count = 0;
  std::size_t image_count = 0;
  double density = 0;
  std::vector<std::size_t> predicate_histogram;  // aligned with `classes`
  std::size_t zero_frequency_count = 0;
  std::vector<std::string> zero_frequency_classes;
  std::optional<double> head_tail_ratio;  // max count / median count; absent when the median is 0
};

/// Partial aggregate; merge() is associative and commutative, so partial
/// results over disjoint image sets can be combined in any order.
class StatsAccumulator {
 public:
  explicit StatsAccumulator(const Lexicon& predicates)
      : lexicon_id_(predicates.id()), classes_(predicates.classes()), histogram_(predicates.size(), 0) {}

  void add(const AlignedTriplet& t) {
    if (!t.predicate_class || *t.predicate_class < 1 || *t.predicate_class > histogram_.size())
      throw InvalidInput("triplet predicate is missing or outside the lexicon");
    ++histogram_[*t.predicate_class - 1];
    ++triplets_;
  }

  void add_images(std::size_t n) { images_ += n; }

  void add(const TripletDataset& d) {
    for (const auto& t : d.triplets) add(t);
    add_images(d.image_count);
  }

  StatsAccumulator& merge(const StatsAccumulator& other) {
    if (other.lexicon_id_ != lexicon_id_) throw InvalidInput("cannot merge statistics over different lexicons");
    for (std::size_t i = 0; i < histogram_.size(); ++i) histogram_[i] += other.histogram_[i];
    triplets_ += other.triplets_;
    images_ += other.images_;
    return *this;
  }

  CorpusStats finish() const {
    if (images_ == 0) throw InvalidInput("statistics need at least one image");
    CorpusStats s;
    s.lexicon_id = lexicon_id_;
    s.classes = classes_;
    s.triplet_count = triplets_;
    s.image_count = images_;
    s.density = static_cast<double>(triplets_) / static_cast<double>(images_);
    s.predicate_histogram = histogram_;
    for (std::size_t i = 0; i < histogram_.size(); ++i) {
      if (histogram_[i] == 0) {
        ++s.zero_frequency_count;
        s.zero_frequency_classes.push_back(classes_[i]);
      }
    }
    if (!histogram_.empty()) {
      std::vector<std::size_t> sorted = histogram_;
      std::sort(sorted.begin(), sorted.end());
      const std::size_t n = sorted.size();
      const double median = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                                       : (static_cast<double>(sorted[n / 2 - 1]) + static_cast<double>(sorted[n / 2])) / 2;
      if (median > 0) s.head_tail_ratio = static_cast<double>(sorted.back()) / median;
    }
    return s;
  }

  std::size_t triplets() const noexcept { return triplets_; }
  std::size_t images() const noexcept { return images_; }
  const std::vector<std::size_t>& histogram() const noexcept { return histogram_; }

 private:
  std::string lexicon_id_;
  std::vector<std::string> classes_;
  std::vector<std::size_t> histogram_;
  std::size_t triplets_ = 0;
  std::size_t images_ = 0;
};

inline CorpusStats compute_stats(const TripletDataset& dataset, const Lexicon& predicates) {
  if (dataset.image_count == 0) throw InvalidInput("dataset has no images");
  StatsAccumulator acc(predicates);
  acc.add(dataset);
  return acc.finish();
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

// Class positions by count descending; equal counts keep lexicon order.
inline std::vector<std::size_t> frequency_order(const std::vector<std::size_t>& counts) {
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  return order;
}

}  // namespace detail

inline ordered_json stats_json(const CorpusStats& s) {
  ordered_json j;
  j["triplet_count"] = s.triplet_count;
  j["image_count"] = s.image_count;
  j["density"] = s.density;
  j["density_display"] = format_density(s.density);
  j["zero_frequency_count"] = s.zero_frequency_count;
  j["zero_frequency_classes"] = s.zero_frequency_classes;
  j["head_tail_ratio"] = s.head_tail_ratio ? ordered_json(*s.head_tail_ratio) : ordered_json(nullptr);
  ordered_json hist = ordered_json::object();
  for (std::size_t i = 0; i < s.classes.size(); ++i) hist[s.classes[i]] = s.predicate_histogram[i];
  j["predicate_histogram"] = hist;
  return j;
}

/// "class,count" rows in lexicon order.
inline std::string histogram_csv(const CorpusStats& s) {
  std::string out = "class,count\n";
  for (std::size_t i = 0; i < s.classes.size(); ++i)
    out += detail::csv_field(s.classes[i]) + "," + std::to_string(s.predicate_histogram[i]) + "\n";
  return out;
}

/// "class,count" rows by descending count.
inline std::string histogram_csv_by_frequency(const CorpusStats& s) {
  std::string out = "class,count\n";
  for (std::size_t i : detail::frequency_order(s.predicate_histogram))
    out += detail::csv_field(s.classes[i]) + "," + std::to_string(s.predicate_histogram[i]) + "\n";
  return out;
}

struct ClassDelta {
  std::string name;
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  long long delta = 0;  // b - a
};

struct StatsComparison {
  std::vector<ClassDelta> rows;  // by count_a descending
  long long triplet_delta = 0;
  double density_delta = 0;
  long long zero_frequency_delta = 0;
};

/// Deltas are b - a. Rows follow a's frequency order (ties in lexicon order).
inline StatsComparison compare_stats(const CorpusStats& a, const CorpusStats& b) {
  if (a.lexicon_id != b.lexicon_id || a.classes != b.classes)
    throw InvalidInput("statistics were computed over different predicate lexicons");
  StatsComparison c;
  c.triplet_delta = static_cast<long long>(b.triplet_count) - static_cast<long long>(a.triplet_count);
  c.density_delta = b.density - a.density;
  c.zero_frequency_delta =
      static_cast<long long>(b.zero_frequency_count) - static_cast<long long>(a.zero_frequency_count);
  for (std::size_t i : detail::frequency_order(a.predicate_histogram)) {
    c.rows.push_back({a.classes[i], a.predicate_histogram[i], b.predicate_histogram[i],
                      static_cast<long long>(b.predicate_histogram[i]) -
                          static_cast<long long>(a.predicate_histogram[i])});
  }
  return c;
}

inline std::string comparison_csv(const StatsComparison& c) {
  std::string out = "class,count_a,count_b,delta\n";
  for (const auto& r : c.rows)
    out += detail::csv_field(r.name) + "," + std::to_string(r.count_a) + "," + std::to_string(r.count_b) + "," +
           std::to_string(r.delta) + "\n";
  return out;
}

inline ordered_json comparison_json(const StatsComparison& c, const CorpusStats& a, const CorpusStats& b) {
  ordered_json j;
  j["density_a"] = a.density;
  j["density_b"] = b.density;
  j["density_delta"] = c.density_delta;
  j["triplet_delta"] = c.triplet_delta;
  j["zero_frequency_a"] = a.zero_frequency_count;
  j["zero_frequency_b"] = b.zero_frequency_count;
  j["zero_frequency_delta"] = c.zero_frequency_delta;
  return j;
}

}  // namespace sgforge
