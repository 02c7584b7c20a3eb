#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "saliensim/embedding.hpp"
#include "saliensim/lm.hpp"
#include "saliensim/rng.hpp"

namespace saliensim {

struct DecoderConfig {
  int k = 40;                  // top-k size
  int c = 10;                  // candidates sampled per step
  int r = 5;                   // recent-gram length for the similarity test
  double gamma_sim = 0.01;     // similarity margin
  int backtrack_limit = 5;     // global per-generation backtrack budget
  int max_steps = 30;          // generated-token cap
  std::uint64_t seed = 0;

  void validate(int vocab_size) const;
};

struct ScoredToken {
  int id = 0;
  double prob = 0.0;
};

// Sparse renormalized distribution, sorted by descending probability with
// ties broken by lower token id. Zero-probability tokens are dropped.
using SparseDist = std::vector<ScoredToken>;

// Keeps the k most probable tokens and divides by their total mass.
SparseDist top_k_rescale(std::span<const double> dist, int k);

// min(c, support) distinct tokens drawn without replacement by iterated
// renormalized draws; output order is draw order.
std::vector<int> sample_candidates(const SparseDist& dist, int c, Rng& rng);

// Single draw from a sparse distribution.
int sample_one(const SparseDist& dist, Rng& rng);

enum class AcceptReason {
  kInit,    // init_condition: too few generated tokens, or budget exhausted
  kEos,     // end-of-sequence is never blocked
  kMargin,  // sim_a - sim_b <= gamma_sim
  kForced,  // nothing generated yet and no candidate passed
};

struct AcceptanceRecord {
  std::size_t step = 0;  // generated-suffix length when the token was accepted
  int token = 0;
  AcceptReason reason = AcceptReason::kInit;
  double sim_a = 0.0;
  double sim_b = 0.0;
  std::vector<int> recent;  // the tested r-gram (margin acceptances only)
};

struct DecodeResult {
  std::vector<int> tokens;  // generated suffix; includes [EOS] when emitted
  int backtracks_used = 0;
  std::vector<AcceptanceRecord> log;  // append-only, kept across backtracks
};

// Plain top-k sampling: one token per step from the rescaled distribution,
// until [EOS] or max_steps.
DecodeResult decode_top_k(const LanguageModel& lm, std::span<const int> input,
                          const DecoderConfig& config);

// Top-k sampling with the salient-similarity soft constraint: per step, c
// candidates are drawn and the first one whose recent r-gram passes
// sim_a - sim_b <= gamma_sim is kept; if none passes, the previous token is
// removed (at most backtrack_limit times per generation) or, with nothing
// generated yet, the first candidate is kept.
//
// The constructor aligns the embedding table to the vocabulary and
// precomputes all token/matrix dot products, so decode() costs close to
// plain top-k per step. The object is immutable after construction and safe
// to share across concurrent generations.
class SalienSimDecoder {
 public:
  SalienSimDecoder(const ConstraintProfile& profile, const EmbeddingTable& embeddings,
                   const Vocabulary& vocab);
  ~SalienSimDecoder();
  SalienSimDecoder(SalienSimDecoder&&) noexcept;
  SalienSimDecoder& operator=(SalienSimDecoder&&) noexcept;

  DecodeResult decode(const LanguageModel& lm, std::span<const int> input,
                      const DecoderConfig& config) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-shot convenience wrapper around SalienSimDecoder.
DecodeResult decode_salien_sim(const LanguageModel& lm, std::span<const int> input,
                               const ConstraintProfile& profile, const EmbeddingTable& embeddings,
                               const Vocabulary& vocab, const DecoderConfig& config);

}  // namespace saliensim
