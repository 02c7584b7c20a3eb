#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "saliensim/vocab.hpp"

namespace saliensim {

enum class Category {
  kStupidity,
  kIgnorance,
  kTrollingLying,
  kBias,
  kCondescension,
  kOther,
};

const char* to_string(Category category);
Category category_from_string(std::string_view name);
const std::vector<Category>& all_categories();

// Binary attribute label; categories refine a positive label and must be
// empty exactly when is_positive is false.
struct AttributeLabel {
  bool is_positive = false;
  std::set<Category> categories;

  void validate() const;
  bool operator==(const AttributeLabel&) const = default;
};

inline AttributeLabel positive_label(std::set<Category> categories = {Category::kOther}) {
  return AttributeLabel{true, std::move(categories)};
}
inline AttributeLabel negative_label() { return AttributeLabel{false, {}}; }

struct LabeledPair {
  std::string post;
  std::string response;
  std::string topic;
  std::string source;  // "human" | "model" | "synthetic"
  std::optional<AttributeLabel> label;
  std::optional<std::vector<AttributeLabel>> annotations;

  bool operator==(const LabeledPair&) const = default;
};

struct Corpus {
  std::vector<LabeledPair> pairs;
  std::optional<Vocabulary> vocabulary;  // built on demand by build_vocab

  bool operator==(const Corpus& other) const { return pairs == other.pairs; }
};

struct AgreementReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// One JSONL record per pair:
// {"post","response","topic","source","label":{...}|null,"annotations":[...]|null}
LabeledPair pair_from_json_line(std::string_view line);
std::string pair_to_json_line(const LabeledPair& pair);

// Throws ValidationError naming the 1-based line of the first malformed record.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

// Applies preprocess() to every post and response.
Corpus preprocess_corpus(const Corpus& corpus);

// Per (topic, source) cell, removes uniformly random negatives until the
// negative count equals the positive count. Positives are never removed;
// cells with fewer negatives than positives are left as-is and, when `notes`
// is given, reported there.
Corpus downsample_balance(const Corpus& corpus, std::uint64_t seed,
                          std::vector<std::string>* notes = nullptr);

struct AugmentTarget {
  std::string topic;
  bool positive = false;
  std::size_t count = 0;
};

// Adds `count` synthetic pairs per target cell by independently sampling a
// random post of the target topic and a random response carrying the target
// label polarity (with replacement). The new pair inherits the response's
// label and the post's topic; source is "synthetic". Original pairs are kept.
Corpus augment_pairs(const Corpus& corpus, const std::vector<AugmentTarget>& targets,
                     std::uint64_t seed);

// Worker-agreement-with-aggregate over the binary labels: majority vote per
// pair (ties resolve negative), then micro-averaged precision/recall/F1 of
// all per-annotator decisions against the majority.
AgreementReport wawa_agreement(const Corpus& corpus);

}  // namespace saliensim
