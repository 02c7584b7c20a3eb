#include "saliensim/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "saliensim/error.hpp"

namespace saliensim {

void DecoderConfig::validate(int vocab_size) const {
  if (c < 1) throw ValidationError("c must be >= 1");
  if (k < c) throw ValidationError("k must be >= c");
  if (k > vocab_size) throw ValidationError("k must be <= vocabulary size");
  if (r < 2) throw ValidationError("r must be >= 2");
  if (backtrack_limit < 0) throw ValidationError("backtrack_limit must be >= 0");
  if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
}

SparseDist top_k_rescale(std::span<const double> dist, int k) {
  if (k < 1) throw ValidationError("k must be >= 1");
  SparseDist entries;
  entries.reserve(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    entries.push_back({static_cast<int>(i), dist[i]});
  }
  const auto by_prob_then_id = [](const ScoredToken& a, const ScoredToken& b) {
    return a.prob != b.prob ? a.prob > b.prob : a.id < b.id;
  };
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), entries.size());
  std::partial_sort(entries.begin(), entries.begin() + keep, entries.end(), by_prob_then_id);
  entries.resize(keep);
  while (!entries.empty() && entries.back().prob <= 0.0) entries.pop_back();

  double mass = 0.0;
  for (const auto& e : entries) mass += e.prob;
  if (mass > 0.0) {
    for (auto& e : entries) e.prob /= mass;
  }
  return entries;
}

int sample_one(const SparseDist& dist, Rng& rng) {
  if (dist.empty()) throw ValidationError("cannot sample from an empty distribution");
  double mass = 0.0;
  for (const auto& e : dist) mass += e.prob;
  double u = rng.next_double() * mass;
  for (const auto& e : dist) {
    u -= e.prob;
    if (u < 0.0) return e.id;
  }
  return dist.back().id;  // guards against rounding at the boundary
}

std::vector<int> sample_candidates(const SparseDist& dist, int c, Rng& rng) {
  if (c < 1) throw ValidationError("c must be >= 1");
  if (dist.empty()) throw ValidationError("cannot sample from an empty distribution");

  std::vector<double> weights(dist.size());
  double mass = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    weights[i] = dist[i].prob;
    mass += weights[i];
  }

  const std::size_t draws = std::min<std::size_t>(static_cast<std::size_t>(c), dist.size());
  std::vector<int> out;
  out.reserve(draws);
  for (std::size_t n = 0; n < draws; ++n) {
    double u = rng.next_double() * mass;
    std::size_t pick = dist.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      u -= weights[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
      pick = i;  // last positive entry wins on boundary rounding
    }
    out.push_back(dist[pick].id);
    mass -= weights[pick];
    weights[pick] = 0.0;
  }
  return out;
}

DecodeResult decode_top_k(const LanguageModel& lm, std::span<const int> input,
                          const DecoderConfig& config) {
  if (input.empty()) throw ValidationError("decode requires a non-empty input");
  config.validate(lm.vocab_size());

  Rng rng(config.seed);
  std::vector<int> y(input.begin(), input.end());
  const std::size_t base = y.size();
  DecodeResult result;
  while (y.size() - base < static_cast<std::size_t>(config.max_steps)) {
    const SparseDist pdash = top_k_rescale(lm.next_distribution(y), config.k);
    const int token = sample_one(pdash, rng);
    y.push_back(token);
    if (token == lm.eos_id()) break;
  }
  result.tokens.assign(y.begin() + static_cast<std::ptrdiff_t>(base), y.end());
  return result;
}

namespace {

// cosine(mean(recent ++ cand), row) == dot(S + v, row) / (|S + v| * |row|)
// where S is the sum over the recent tokens and v the candidate vector, so
// the per-candidate work per row is one add once dot(S, row) is cached per
// step and dot(v, row) per token.
class SimilarityMatrix {
 public:
  SimilarityMatrix(const std::vector<ConstraintProfile::Entry>& entries, int dim)
      : dim_(static_cast<std::size_t>(dim)), rows_(entries.size()) {
    flat_.reserve(rows_ * dim_);
    norms_.reserve(rows_);
    for (const auto& e : entries) {
      double sq = 0.0;
      for (double x : e.mean) {
        flat_.push_back(x);
        sq += x * x;
      }
      norms_.push_back(std::sqrt(sq));
    }
  }

  std::size_t rows() const { return rows_; }

  // dot(v, row_j) for all j
  std::vector<double> dots(std::span<const double> v) const {
    std::vector<double> out(rows_, 0.0);
    for (std::size_t j = 0; j < rows_; ++j) {
      const double* row = flat_.data() + j * dim_;
      double s = 0.0;
      for (std::size_t d = 0; d < dim_; ++d) s += v[d] * row[d];
      out[j] = s;
    }
    return out;
  }

  // max_j (sum_dots_j + cand_dots_j) / (query_norm * |row_j|)
  double max_cosine_from(const std::vector<double>& sum_dots,
                         const std::vector<double>& cand_dots, double query_norm) const {
    if (rows_ == 0) return 0.0;
    double best = 0.0;
    bool first = true;
    for (std::size_t j = 0; j < rows_; ++j) {
      double sim = 0.0;
      if (query_norm > 0.0 && norms_[j] > 0.0) {
        sim = (sum_dots[j] + cand_dots[j]) / (query_norm * norms_[j]);
      }
      if (first || sim > best) {
        best = sim;
        first = false;
      }
    }
    return best;
  }

 private:
  std::size_t dim_;
  std::size_t rows_;
  std::vector<double> flat_;
  std::vector<double> norms_;
};

}  // namespace

// All token-dependent similarity inputs, precomputed per token id.
struct SalienSimDecoder::Impl {
  int dim = 0;
  std::vector<std::vector<double>> id_vectors;
  SimilarityMatrix matrix_a;
  SimilarityMatrix matrix_b;
  std::vector<std::vector<double>> token_dots_a;  // [token] -> dot against each a-row
  std::vector<std::vector<double>> token_dots_b;
  std::vector<double> token_norm_sq;

  Impl(const ConstraintProfile& profile, const EmbeddingTable& embeddings,
       const Vocabulary& vocab)
      : dim(embeddings.dim),
        id_vectors(aligned_vectors(embeddings, vocab)),
        matrix_a(profile.matrix_a, embeddings.dim),
        matrix_b(profile.matrix_b, embeddings.dim) {
    if (!profile.matrix_a.empty() || !profile.matrix_b.empty()) {
      if (profile.dim != embeddings.dim) {
        throw ValidationError("constraint profile dimension does not match the embedding table");
      }
    }
    token_dots_a.reserve(id_vectors.size());
    token_dots_b.reserve(id_vectors.size());
    token_norm_sq.reserve(id_vectors.size());
    for (const auto& v : id_vectors) {
      token_dots_a.push_back(matrix_a.dots(v));
      token_dots_b.push_back(matrix_b.dots(v));
      double sq = 0.0;
      for (double x : v) sq += x * x;
      token_norm_sq.push_back(sq);
    }
  }
};

SalienSimDecoder::SalienSimDecoder(const ConstraintProfile& profile,
                                   const EmbeddingTable& embeddings, const Vocabulary& vocab)
    : impl_(std::make_unique<Impl>(profile, embeddings, vocab)) {}

SalienSimDecoder::~SalienSimDecoder() = default;
SalienSimDecoder::SalienSimDecoder(SalienSimDecoder&&) noexcept = default;
SalienSimDecoder& SalienSimDecoder::operator=(SalienSimDecoder&&) noexcept = default;

DecodeResult SalienSimDecoder::decode(const LanguageModel& lm, std::span<const int> input,
                                      const DecoderConfig& config) const {
  if (input.empty()) throw ValidationError("decode requires a non-empty input");
  config.validate(lm.vocab_size());
  const Impl& pre = *impl_;
  if (static_cast<std::size_t>(lm.vocab_size()) != pre.id_vectors.size()) {
    throw ValidationError("language model vocabulary does not match the decoder's vocabulary");
  }
  const SimilarityMatrix& matrix_a = pre.matrix_a;
  const SimilarityMatrix& matrix_b = pre.matrix_b;
  const std::vector<std::vector<double>>& id_vectors = pre.id_vectors;

  Rng rng(config.seed);
  std::vector<int> y(input.begin(), input.end());
  const std::size_t base = y.size();
  DecodeResult result;
  int backtracks = 0;
  bool eos_emitted = false;

  auto accept = [&](int token, AcceptReason reason, double sim_a, double sim_b,
                    std::vector<int> recent) {
    result.log.push_back(
        {y.size() - base, token, reason, sim_a, sim_b, std::move(recent)});
    y.push_back(token);
    if (token == lm.eos_id()) eos_emitted = true;
  };

  // per-step cache for the sum S over the last r-1 generated tokens
  std::vector<double> recent_sum(static_cast<std::size_t>(pre.dim), 0.0);
  std::vector<double> recent_dots_a, recent_dots_b;
  double recent_norm_sq = 0.0;

  while (!eos_emitted && y.size() - base < static_cast<std::size_t>(config.max_steps)) {
    const SparseDist pdash = top_k_rescale(lm.next_distribution(y), config.k);
    const std::vector<int> candidates = sample_candidates(pdash, config.c, rng);

    bool step_prepared = false;
    bool accepted = false;
    for (int candidate : candidates) {
      const std::size_t generated = y.size() - base;
      const bool init_condition = generated < static_cast<std::size_t>(config.r - 1) ||
                                  backtracks >= config.backtrack_limit;
      if (init_condition) {
        accept(candidate, AcceptReason::kInit, 0.0, 0.0, {});
        accepted = true;
        break;
      }
      if (candidate == lm.eos_id()) {
        accept(candidate, AcceptReason::kEos, 0.0, 0.0, {});
        accepted = true;
        break;
      }
      if (!step_prepared) {
        std::fill(recent_sum.begin(), recent_sum.end(), 0.0);
        recent_dots_a.assign(matrix_a.rows(), 0.0);
        recent_dots_b.assign(matrix_b.rows(), 0.0);
        for (auto it = y.end() - (config.r - 1); it != y.end(); ++it) {
          const std::size_t id = static_cast<std::size_t>(*it);
          const auto& v = id_vectors[id];
          for (std::size_t d = 0; d < recent_sum.size(); ++d) recent_sum[d] += v[d];
          for (std::size_t j = 0; j < recent_dots_a.size(); ++j) {
            recent_dots_a[j] += pre.token_dots_a[id][j];
          }
          for (std::size_t j = 0; j < recent_dots_b.size(); ++j) {
            recent_dots_b[j] += pre.token_dots_b[id][j];
          }
        }
        recent_norm_sq = 0.0;
        for (double x : recent_sum) recent_norm_sq += x * x;
        step_prepared = true;
      }

      const std::size_t cand_id = static_cast<std::size_t>(candidate);
      const auto& cand_vector = id_vectors[cand_id];
      double cross = 0.0;
      for (std::size_t d = 0; d < recent_sum.size(); ++d) {
        cross += recent_sum[d] * cand_vector[d];
      }
      const double query_norm =
          std::sqrt(std::max(0.0, recent_norm_sq + 2.0 * cross + pre.token_norm_sq[cand_id]));
      const double sim_a =
          matrix_a.max_cosine_from(recent_dots_a, pre.token_dots_a[cand_id], query_norm);
      const double sim_b =
          matrix_b.max_cosine_from(recent_dots_b, pre.token_dots_b[cand_id], query_norm);
      if (sim_a - sim_b <= config.gamma_sim) {
        std::vector<int> recent(y.end() - (config.r - 1), y.end());
        recent.push_back(candidate);
        accept(candidate, AcceptReason::kMargin, sim_a, sim_b, std::move(recent));
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (y.size() == base) {
        accept(candidates.front(), AcceptReason::kForced, 0.0, 0.0, {});
      } else {
        y.pop_back();
        ++backtracks;
      }
    }
  }

  result.tokens.assign(y.begin() + static_cast<std::ptrdiff_t>(base), y.end());
  result.backtracks_used = backtracks;
  return result;
}

DecodeResult decode_salien_sim(const LanguageModel& lm, std::span<const int> input,
                               const ConstraintProfile& profile, const EmbeddingTable& embeddings,
                               const Vocabulary& vocab, const DecoderConfig& config) {
  return SalienSimDecoder(profile, embeddings, vocab).decode(lm, input, config);
}

}  // namespace saliensim
