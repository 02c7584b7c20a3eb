#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "saliensim/corpus.hpp"
#include "saliensim/rng.hpp"

namespace saliensim::testing {

inline LabeledPair make_pair(std::string post, std::string response, std::string topic = "t",
                             std::string source = "human") {
  LabeledPair pair;
  pair.post = std::move(post);
  pair.response = std::move(response);
  pair.topic = std::move(topic);
  pair.source = std::move(source);
  return pair;
}

inline LabeledPair make_labeled(std::string post, std::string response, bool positive,
                                std::string topic = "t", std::string source = "human") {
  LabeledPair pair = make_pair(std::move(post), std::move(response), std::move(topic),
                               std::move(source));
  pair.label = positive ? positive_label() : negative_label();
  return pair;
}

inline std::string random_word(Rng& rng) {
  static const char* kWords[] = {"alpha", "bravo", "cedar", "delta", "ember", "frost",
                                 "grove", "haze",  "iris",  "jolt",  "karst", "lumen",
                                 "moss",  "node",  "onyx",  "pine",  "quartz", "reed",
                                 "slate", "tarn",  "umber", "vale",  "wisp",  "xenon"};
  return kWords[rng.next_below(std::size(kWords))];
}

inline std::string random_text(Rng& rng, std::size_t min_words, std::size_t max_words) {
  const std::size_t n = min_words + rng.next_below(max_words - min_words + 1);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) out += ' ';
    out += random_word(rng);
  }
  return out;
}

// Random labeled corpus for serialization and counting tests.
inline Corpus random_corpus(std::size_t pairs, std::uint64_t seed, bool with_annotations = false) {
  Rng rng(seed);
  static const char* kTopics[] = {"blm", "metoo", "vegan", "wfh"};
  static const char* kSources[] = {"human", "model", "synthetic"};
  Corpus corpus;
  for (std::size_t i = 0; i < pairs; ++i) {
    LabeledPair pair = make_pair(random_text(rng, 3, 8), random_text(rng, 3, 10),
                                 kTopics[rng.next_below(4)], kSources[rng.next_below(3)]);
    const bool positive = rng.next_below(2) == 0;
    if (positive) {
      std::set<Category> cats;
      cats.insert(all_categories()[rng.next_below(all_categories().size())]);
      pair.label = positive_label(std::move(cats));
    } else {
      pair.label = negative_label();
    }
    if (with_annotations) {
      std::vector<AttributeLabel> annotations;
      const std::size_t n = 1 + rng.next_below(4);
      for (std::size_t a = 0; a < n; ++a) {
        annotations.push_back(rng.next_below(2) == 0 ? positive_label() : negative_label());
      }
      pair.annotations = std::move(annotations);
    }
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

// Synthetic corpus whose positive class is defined by five planted marker
// trigrams. Single marker words also appear as strays in the opposite class
// (never adjacent), so marker unigrams carry no signal while marker bigrams
// and trigrams are exclusive to their class: the corpus is linearly
// separable on bigram features and its salient n-grams are constructible.
struct PlantedCorpus {
  Corpus corpus;
  std::vector<std::vector<std::string>> positive_trigrams;
  std::vector<std::vector<std::string>> negative_trigrams;
};

inline PlantedCorpus make_planted_corpus(std::size_t pairs, std::uint64_t seed,
                                         std::string topic = "plant") {
  PlantedCorpus out;
  out.positive_trigrams = {{"zorp", "blik", "vash"},
                           {"grum", "tyle", "quon"},
                           {"plin", "drog", "smek"},
                           {"crav", "nulb", "jixt"},
                           {"brel", "fost", "gwim"}};
  out.negative_trigrams = {{"harn", "velt", "oskil"},
                           {"murd", "seft", "talon"},
                           {"wib", "ranto", "clum"},
                           {"dov", "yent", "prill"},
                           {"kest", "ablo", "finch"}};

  std::vector<std::string> fillers;
  for (int i = 0; i < 40; ++i) fillers.push_back("w" + std::to_string(i));
  std::vector<std::string> positive_words, negative_words;
  for (const auto& t : out.positive_trigrams) {
    positive_words.insert(positive_words.end(), t.begin(), t.end());
  }
  for (const auto& t : out.negative_trigrams) {
    negative_words.insert(negative_words.end(), t.begin(), t.end());
  }

  Rng rng(seed);
  auto filler = [&] { return fillers[rng.next_below(fillers.size())]; };
  for (std::size_t i = 0; i < pairs; ++i) {
    const bool positive = i % 2 == 0;
    const auto& trigram =
        positive ? out.positive_trigrams[rng.next_below(5)] : out.negative_trigrams[rng.next_below(5)];
    const auto& strays = positive ? negative_words : positive_words;

    // Fixed 4-token opener, then the class trigram, then a tail with two
    // opposite-class stray singles. The opener pushes the first marker past
    // any short unconstrained prefix a decoder may have, and the strays keep
    // single marker words from being exclusive to one class.
    std::vector<std::string> tokens = {"hmm", "well", "okay", "so"};
    tokens.insert(tokens.end(), trigram.begin(), trigram.end());
    tokens.push_back(filler());
    tokens.push_back(strays[rng.next_below(strays.size())]);
    tokens.push_back(filler());
    tokens.push_back(strays[rng.next_below(strays.size())]);
    tokens.push_back(filler());

    std::string response;
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (j > 0) response += ' ';
      response += tokens[j];
    }
    std::string post = filler();
    for (int j = 0; j < 4; ++j) post += ' ' + filler();
    out.corpus.pairs.push_back(make_labeled(post, response, positive, topic));
  }
  return out;
}

// Unique temp directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("saliensim_" + tag + "_" + std::to_string(++counter) + "_" +
             std::to_string(::getpid()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace saliensim::testing
