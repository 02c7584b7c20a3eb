#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "saliensim/corpus.hpp"
#include "saliensim/rational.hpp"

namespace saliensim {

inline constexpr const char* kPositiveAttribute = "positive";
inline constexpr const char* kNegativeAttribute = "negative";

struct SalienceConfig {
  std::set<int> n_values{3, 4, 5};
  Rational lambda{1, 2};      // smoothing, > 0
  Rational gamma_sal{11, 2};  // salience threshold, >= 1

  void validate() const;
};

struct SalientNgram {
  std::vector<std::string> tokens;
  double score = 0.0;

  bool operator==(const SalientNgram&) const = default;
};

using SalientSets = std::map<std::string, std::vector<SalientNgram>>;

// Occurrence counts of response n-grams per attribute. N-grams are keyed by
// their space-joined token form (tokens never contain whitespace).
struct SalienceTable {
  std::vector<std::string> attributes;  // sorted; |A| >= 2 once scored
  std::map<std::string, std::unordered_map<std::string, std::uint64_t>> counts;

  std::uint64_t count(std::string_view ngram, const std::string& attribute) const;
  // Sum of counts over all attributes other than `attribute`.
  std::uint64_t count_others(std::string_view ngram, const std::string& attribute) const;
};

std::string join_ngram(const std::vector<std::string>& tokens);
std::vector<std::string> split_ngram(std::string_view ngram);

using AttributeOf = std::function<std::string(const LabeledPair&)>;

// Binary attribute from the pair label; throws ValidationError when unlabeled.
std::string label_attribute(const LabeledPair& pair);

// Counts overlapping occurrences of every n-gram (n in config.n_values) over
// the tokenized responses, grouped by the pair's attribute. When `attributes`
// is empty the attribute set is derived from the corpus.
SalienceTable count_ngrams(const Corpus& corpus, const AttributeOf& attribute_of,
                           const SalienceConfig& config,
                           std::vector<std::string> attributes = {});

// count_ngrams with label_attribute and the fixed {negative, positive} set.
SalienceTable count_label_ngrams(const Corpus& corpus, const SalienceConfig& config);

// (count(u, D_a) + lambda) / (sum_{a' != a} count(u, D_a') + lambda)
double salience_score(std::string_view ngram, const std::string& attribute,
                      const SalienceTable& table, const SalienceConfig& config);

// Exact threshold test: score >= gamma_sal by integer cross-multiplication.
bool is_salient(std::string_view ngram, const std::string& attribute, const SalienceTable& table,
                const SalienceConfig& config);

// All salient n-grams per attribute, sorted by descending score (exact
// comparison) then by n-gram.
SalientSets extract_salient(const SalienceTable& table, const SalienceConfig& config);

void save_salient_sets(const SalientSets& sets, const std::vector<std::string>& attributes,
                       const SalienceConfig& config, const std::string& path);

struct SalienceDocument {
  SalienceConfig config;
  std::vector<std::string> attributes;
  SalientSets salient;
};

SalienceDocument load_salient_sets(const std::string& path);

}  // namespace saliensim
