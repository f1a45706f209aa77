#pragma once

// Reference implementations kept deliberately naive: they materialize every
// group and scan, with no shared code paths with the library.

#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sgforge/core_types.hpp"

namespace oracle {

using sgforge::AlignedTriplet;
using sgforge::ClassIndex;

/// Up to max_triplets triplets over `images` images and predicate classes
/// 1..predicates. Entities come from a tiny pool so groups, duplicates and
/// self-loops all occur. Each component is present with probability
/// `present`.
template <typename Rng>
std::vector<AlignedTriplet> random_aligned(Rng& rng, int images, int predicates, int max_triplets, double present) {
  static const char* kLexemes[] = {"man", "guy", "dog", "table"};
  std::uniform_int_distribution<int> n_dist(0, max_triplets);
  std::uniform_int_distribution<int> image(0, images - 1);
  std::uniform_int_distribution<int> entity(1, 3);
  std::uniform_int_distribution<int> lexeme(0, 3);
  std::uniform_int_distribution<int> predicate(1, predicates);
  std::bernoulli_distribution keep(present);
  auto maybe = [&](ClassIndex v) -> std::optional<ClassIndex> {
    if (keep(rng)) return v;
    return std::nullopt;
  };
  std::vector<AlignedTriplet> out;
  const int n = n_dist(rng);
  for (int i = 0; i < n; ++i) {
    AlignedTriplet t;
    t.raw.image_id = "img" + std::to_string(image(rng));
    t.raw.caption_id = "c" + std::to_string(i);
    t.raw.subject = kLexemes[lexeme(rng)];
    t.raw.object = kLexemes[lexeme(rng)];
    const auto p = static_cast<ClassIndex>(predicate(rng));
    t.raw.predicate = "p" + std::to_string(p);
    t.subject_class = maybe(static_cast<ClassIndex>(entity(rng)));
    t.predicate_class = maybe(p);
    t.object_class = maybe(static_cast<ClassIndex>(entity(rng)));
    out.push_back(t);
  }
  return out;
}

inline std::vector<AlignedTriplet> filter_brute_force(const std::vector<AlignedTriplet>& in) {
  std::vector<AlignedTriplet> out;
  for (const auto& t : in)
    if (t.subject_class && t.predicate_class && t.object_class) out.push_back(t);
  return out;
}

/// Selection rule, stated directly: after dropping self-loops and repeated
/// (image, s, p, o) rows, a triplet survives iff no other member of its
/// (image, s, o) group beats it on (frequency, predicate name, position).
inline std::vector<AlignedTriplet> select_brute_force(const std::vector<AlignedTriplet>& in,
                                                      const sgforge::Lexicon& predicates) {
  std::vector<AlignedTriplet> pool;
  for (const auto& t : in) {
    if (*t.subject_class == *t.object_class && t.raw.subject == t.raw.object) continue;
    bool repeated = false;
    for (const auto& u : pool)
      repeated = repeated || (u.raw.image_id == t.raw.image_id && *u.subject_class == *t.subject_class &&
                              *u.predicate_class == *t.predicate_class && *u.object_class == *t.object_class);
    if (!repeated) pool.push_back(t);
  }
  auto freq = [&](ClassIndex p) {
    std::size_t n = 0;
    for (const auto& u : pool) n += *u.predicate_class == p ? 1 : 0;
    return n;
  };
  std::vector<AlignedTriplet> out;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const auto& t = pool[i];
    bool beaten = false;
    for (std::size_t j = 0; j < pool.size() && !beaten; ++j) {
      const auto& u = pool[j];
      if (j == i || u.raw.image_id != t.raw.image_id || *u.subject_class != *t.subject_class ||
          *u.object_class != *t.object_class)
        continue;
      const auto fu = freq(*u.predicate_class), ft = freq(*t.predicate_class);
      const auto& nu = predicates.class_name(*u.predicate_class);
      const auto& nt = predicates.class_name(*t.predicate_class);
      beaten = fu < ft || (fu == ft && nu < nt) || (fu == ft && nu == nt && j < i);
    }
    if (!beaten) out.push_back(t);
  }
  return out;
}

}  // namespace oracle
