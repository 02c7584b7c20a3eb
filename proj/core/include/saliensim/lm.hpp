#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "saliensim/corpus.hpp"
#include "saliensim/vocab.hpp"

namespace saliensim {

// Next-token distribution contract consumed by the decoders. Returned
// vectors are non-negative and sum to 1 within 1e-9.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;
  virtual int vocab_size() const = 0;
  virtual int eos_id() const = 0;
  virtual std::vector<double> next_distribution(std::span<const int> prefix) const = 0;
};

// Interpolated absolute discounting over n-gram counts, backing off through
// lower orders down to a uniform base, so every distribution has full
// support. Untrained models are uniform.
class BackoffNgramLM : public LanguageModel {
 public:
  explicit BackoffNgramLM(Vocabulary vocab, int order = 3, double discount = 0.75);

  // Counts one occurrence of `token` after `context` at every order
  // (the context is truncated to the last order-1 ids).
  void observe_continuation(std::span<const int> context, int token);
  // Counts every position of the sequence at every order.
  void observe_sequence(std::span<const int> sequence);

  int order() const { return order_; }
  double discount() const { return discount_; }
  const Vocabulary& vocab() const { return vocab_; }

  int vocab_size() const override { return vocab_.size(); }
  int eos_id() const override { return Vocabulary::kEosId; }
  std::vector<double> next_distribution(std::span<const int> prefix) const override;

  void save(const std::string& path) const;
  static BackoffNgramLM load(const std::string& path);

 private:
  struct ContextStats {
    std::uint64_t total = 0;
    std::map<int, std::uint64_t> continuations;
  };

  Vocabulary vocab_;
  int order_;
  double discount_;
  std::vector<std::unordered_map<std::string, ContextStats>> by_order_;  // [n-1]
};

// post ++ [EOS] ++ response ++ [EOS]
std::vector<int> training_sequence(const LabeledPair& pair, const Vocabulary& vocab);

// Trains on the training_sequence of every pair; empty corpus -> error.
BackoffNgramLM train_lm(const Corpus& corpus, const Vocabulary& vocab, int order = 3,
                        double discount = 0.75);

// exp of the mean per-token negative log-likelihood over training sequences.
double perplexity(const LanguageModel& lm, const Corpus& corpus, const Vocabulary& vocab);
double perplexity_on_sequences(const LanguageModel& lm,
                               const std::vector<std::vector<int>>& sequences);

}  // namespace saliensim
