#pragma once

#include <span>
#include <string>
#include <vector>

#include "saliensim/corpus.hpp"
#include "saliensim/salience.hpp"
#include "saliensim/vocab.hpp"

namespace saliensim {

// Dense token embeddings, row-indexed by the vocabulary id the table was
// built with. Rows are unit-length.
struct EmbeddingTable {
  int dim = 0;
  std::vector<std::vector<double>> vectors;  // one row per token id
  std::vector<std::string> tokens;           // id -> token, for cross-artifact alignment
  std::string provenance;

  const std::vector<double>& vector_for(int id) const;
};

// Symmetric windowed co-occurrence -> positive PMI -> truncated SVD of rank
// `dim` -> L2-normalized rows. Deterministic; tokens that never co-occur get
// a fixed basis-vector fallback so every row has unit norm.
EmbeddingTable build_embeddings(const Corpus& corpus, const Vocabulary& vocab, int window = 5,
                                int dim = 64);

// Arithmetic mean of the token vectors (not re-normalized). Empty -> error.
// The string overload resolves tokens against the table's own token list,
// falling back to its [UNK] row.
std::vector<double> ngram_mean(std::span<const int> token_ids, const EmbeddingTable& table);
std::vector<double> ngram_mean(const std::vector<std::string>& tokens,
                               const EmbeddingTable& table);

// Max over rows of cosine(query, row); 0 for an empty matrix; zero-norm
// queries or rows contribute 0.
double max_cosine(std::span<const double> query, const std::vector<std::vector<double>>& rows);

// The two averaged-embedding matrices behind the decoder's similarity test.
struct ConstraintProfile {
  struct Entry {
    std::vector<std::string> tokens;
    std::vector<double> mean;
  };

  int dim = 0;
  std::string attribute_a;
  std::string attribute_b;
  std::vector<Entry> matrix_a;
  std::vector<Entry> matrix_b;
};

ConstraintProfile build_profile(const std::vector<SalientNgram>& salient_a,
                                const std::vector<SalientNgram>& salient_b,
                                const EmbeddingTable& table, std::string attribute_a,
                                std::string attribute_b);

// Re-indexes the table rows to the given vocabulary; tokens absent from the
// table fall back to its [UNK] row.
std::vector<std::vector<double>> aligned_vectors(const EmbeddingTable& table,
                                                 const Vocabulary& vocab);

// JSON with base-10 floats; when sidecar_path is non-empty the rows go to a
// flat little-endian float32 sidecar (header: magic, dim, row count) and the
// JSON stores its relative filename.
void save_embeddings(const EmbeddingTable& table, const std::string& path,
                     const std::string& sidecar_path = "");
EmbeddingTable load_embeddings(const std::string& path);

void save_profile(const ConstraintProfile& profile, const std::string& path);
ConstraintProfile load_profile(const std::string& path);

}  // namespace saliensim
