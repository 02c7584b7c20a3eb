#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "saliensim/classifier.hpp"
#include "saliensim/decoding.hpp"
#include "saliensim/embedding.hpp"
#include "saliensim/harness.hpp"
#include "saliensim/lm.hpp"
#include "saliensim/salience.hpp"

namespace {

using namespace saliensim;

// Synthetic two-class corpus with marker trigrams, matching the shape the
// acceptance experiments use.
Corpus synthetic_corpus(std::size_t pairs) {
  const std::vector<std::vector<std::string>> pos = {
      {"zorp", "blik", "vash"}, {"grum", "tyle", "quon"}, {"plin", "drog", "smek"}};
  const std::vector<std::vector<std::string>> neg = {
      {"harn", "velt", "oskil"}, {"murd", "seft", "talon"}, {"wib", "ranto", "clum"}};
  Rng rng(7);
  Corpus corpus;
  for (std::size_t i = 0; i < pairs; ++i) {
    const bool positive = i % 2 == 0;
    const auto& tri = positive ? pos[rng.next_below(3)] : neg[rng.next_below(3)];
    std::string response = "hmm well okay so";
    for (const auto& t : tri) response += " " + t;
    for (int j = 0; j < 3; ++j) response += " w" + std::to_string(rng.next_below(30));
    std::string post = "w" + std::to_string(rng.next_below(30));
    for (int j = 0; j < 4; ++j) post += " w" + std::to_string(rng.next_below(30));
    LabeledPair pair;
    pair.post = post;
    pair.response = response;
    pair.topic = "bench";
    pair.source = "synthetic";
    pair.label = positive ? positive_label() : negative_label();
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

struct Fixture {
  Corpus corpus = synthetic_corpus(400);
  Vocabulary vocab = build_vocab(corpus, 1);
  BackoffNgramLM lm = train_lm(corpus, vocab, 3, 0.75);
  EmbeddingTable embeddings = build_embeddings(corpus, vocab, 5, 32);
  ConstraintProfile profile;
  SalienSimDecoder* decoder = nullptr;
  std::vector<int> input;
  DecoderConfig config;

  Fixture() {
    SalienceConfig sal;
    const SalienceTable table = count_label_ngrams(corpus, sal);
    const SalientSets sets = extract_salient(table, sal);
    profile = build_profile(sets.at(kPositiveAttribute), sets.at(kNegativeAttribute), embeddings,
                            kPositiveAttribute, kNegativeAttribute);
    decoder = new SalienSimDecoder(profile, embeddings, vocab);
    input = vocab.encode(corpus.pairs[0].post);
    input.push_back(Vocabulary::kEosId);
    config.k = 40;
    config.max_steps = 15;
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_NextDistribution(benchmark::State& state) {
  Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.lm.next_distribution(f.input));
  }
}
BENCHMARK(BM_NextDistribution);

void BM_TopKRescale(benchmark::State& state) {
  Fixture& f = fixture();
  const std::vector<double> dist = f.lm.next_distribution(f.input);
  for (auto _ : state) {
    benchmark::DoNotOptimize(top_k_rescale(dist, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_TopKRescale)->Arg(10)->Arg(40);

void BM_SampleCandidates(benchmark::State& state) {
  Fixture& f = fixture();
  const SparseDist pdash = top_k_rescale(f.lm.next_distribution(f.input), 40);
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_candidates(pdash, 10, rng));
  }
}
BENCHMARK(BM_SampleCandidates);

void BM_MaxCosine(benchmark::State& state) {
  Fixture& f = fixture();
  std::vector<std::vector<double>> rows;
  for (const auto& e : f.profile.matrix_a) rows.push_back(e.mean);
  const std::vector<double> query = f.embeddings.vectors[5];
  for (auto _ : state) {
    benchmark::DoNotOptimize(max_cosine(query, rows));
  }
}
BENCHMARK(BM_MaxCosine);

void BM_DecodeTopK(benchmark::State& state) {
  Fixture& f = fixture();
  DecoderConfig config = f.config;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    config.seed = seed++;
    benchmark::DoNotOptimize(decode_top_k(f.lm, f.input, config));
  }
}
BENCHMARK(BM_DecodeTopK);

void BM_DecodeSalienSim(benchmark::State& state) {
  Fixture& f = fixture();
  DecoderConfig config = f.config;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    config.seed = seed++;
    benchmark::DoNotOptimize(f.decoder->decode(f.lm, f.input, config));
  }
}
BENCHMARK(BM_DecodeSalienSim);

// one-shot path, including embedding alignment and dot-product setup
void BM_DecodeSalienSimColdStart(benchmark::State& state) {
  Fixture& f = fixture();
  DecoderConfig config = f.config;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    config.seed = seed++;
    benchmark::DoNotOptimize(
        decode_salien_sim(f.lm, f.input, f.profile, f.embeddings, f.vocab, config));
  }
}
BENCHMARK(BM_DecodeSalienSimColdStart);

}  // namespace

BENCHMARK_MAIN();
