#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "saliensim/decoding.hpp"
#include "saliensim/error.hpp"
#include "test_util.hpp"

using namespace saliensim;
using saliensim::testing::make_pair;

namespace {

// Markers share one direction, every other token sits on its own axis, and
// dim 7 is left free so a matrix_b row there is disjoint from all tokens.
EmbeddingTable axis_table(const Vocabulary& vocab, const std::set<int>& marker_ids) {
  EmbeddingTable table;
  table.dim = 8;
  table.tokens = vocab.tokens();
  table.provenance = "hand-built";
  for (int id = 0; id < vocab.size(); ++id) {
    std::vector<double> row(8, 0.0);
    if (marker_ids.count(id)) {
      row[0] = 1.0;
    } else {
      row[1 + static_cast<std::size_t>(id) % 6] = 1.0;
    }
    table.vectors.push_back(std::move(row));
  }
  return table;
}

}  // namespace

TEST_CASE("top_k_rescale implements the rescaling") {
  SUBCASE("hand example") {
    const std::vector<double> dist = {0.5, 0.3, 0.2};
    const SparseDist out = top_k_rescale(dist, 2);
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == 0);
    CHECK(out[0].prob == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(out[1].id == 1);
    CHECK(out[1].prob == doctest::Approx(0.375).epsilon(1e-12));
  }

  SUBCASE("k equal to vocab size keeps the distribution") {
    const std::vector<double> dist = {0.25, 0.5, 0.25};
    const SparseDist out = top_k_rescale(dist, 3);
    REQUIRE(out.size() == 3);
    double mass = 0;
    for (const auto& e : out) mass += e.prob;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out[0].id == 1);
    CHECK(out[0].prob == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("k = 1 is the argmax") {
    const std::vector<double> dist = {0.2, 0.7, 0.1};
    const SparseDist out = top_k_rescale(dist, 1);
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == 1);
    CHECK(out[0].prob == 1.0);
  }

  SUBCASE("ties break toward the lower token id") {
    const std::vector<double> dist = {0.25, 0.25, 0.25, 0.25};
    const SparseDist out = top_k_rescale(dist, 2);
    REQUIRE(out.size() == 2);
    CHECK(out[0].id == 0);
    CHECK(out[1].id == 1);
  }

  SUBCASE("k < 1 is rejected") {
    const std::vector<double> dist = {1.0};
    CHECK_THROWS_AS(top_k_rescale(dist, 0), ValidationError);
  }

  SUBCASE("zero-probability tokens are dropped") {
    const std::vector<double> dist = {0.0, 1.0, 0.0};
    const SparseDist out = top_k_rescale(dist, 3);
    REQUIRE(out.size() == 1);
    CHECK(out[0].id == 1);
  }
}

TEST_CASE("sample_candidates draws without replacement") {
  SUBCASE("forced single outcome") {
    const SparseDist dist = {{7, 1.0}};
    Rng rng(1);
    CHECK(sample_candidates(dist, 1, rng) == std::vector<int>{7});
  }

  SUBCASE("c = support size is a permutation") {
    const SparseDist dist = {{0, 0.5}, {1, 0.3}, {2, 0.2}};
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<int> out = sample_candidates(dist, 3, rng);
      std::sort(out.begin(), out.end());
      CHECK(out == std::vector<int>{0, 1, 2});
    }
  }

  SUBCASE("c above support returns the full support") {
    const SparseDist dist = {{0, 0.6}, {1, 0.4}};
    Rng rng(3);
    CHECK(sample_candidates(dist, 10, rng).size() == 2);
  }

  SUBCASE("empty distribution is rejected") {
    Rng rng(4);
    CHECK_THROWS_AS(sample_candidates(SparseDist{}, 1, rng), ValidationError);
  }

  SUBCASE("first draw follows the distribution") {
    const SparseDist dist = {{0, 0.625}, {1, 0.375}};
    Rng rng(5);
    std::map<int, int> freq;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      freq[sample_candidates(dist, 1, rng)[0]] += 1;
    }
    const double l1 = std::abs(freq[0] / double(n) - 0.625) + std::abs(freq[1] / double(n) - 0.375);
    CHECK(l1 < 0.05);
  }
}

TEST_CASE("decode_top_k") {
  Corpus corpus;
  for (int i = 0; i < 50; ++i) corpus.pairs.push_back(make_pair("go", "left then right"));
  const Vocabulary vocab = build_vocab(corpus, 1);
  const BackoffNgramLM lm = train_lm(corpus, vocab, 3);
  std::vector<int> input = vocab.encode("go");
  input.push_back(Vocabulary::kEosId);

  SUBCASE("max_steps = 1 emits exactly one token") {
    DecoderConfig config;
    config.k = 4;
    config.c = 2;
    config.max_steps = 1;
    config.seed = 11;
    CHECK(decode_top_k(lm, input, config).tokens.size() == 1);
  }

  SUBCASE("k = 1 on a peaked model reproduces the continuation") {
    DecoderConfig config;
    config.k = 1;
    config.c = 1;
    config.max_steps = 10;
    config.seed = 12;
    const DecodeResult result = decode_top_k(lm, input, config);
    REQUIRE(result.tokens.size() == 4);
    CHECK(vocab.token(result.tokens[0]) == "left");
    CHECK(vocab.token(result.tokens[1]) == "then");
    CHECK(vocab.token(result.tokens[2]) == "right");
    CHECK(result.tokens[3] == Vocabulary::kEosId);
  }

  SUBCASE("fixed seed reproduces the output") {
    DecoderConfig config;
    config.k = 5;
    config.c = 3;
    config.max_steps = 12;
    config.seed = 13;
    CHECK(decode_top_k(lm, input, config).tokens == decode_top_k(lm, input, config).tokens);
  }

  SUBCASE("empty input is rejected") {
    DecoderConfig config;
    CHECK_THROWS_AS(decode_top_k(lm, std::vector<int>{}, config), ValidationError);
  }
}

TEST_CASE("decoder config invariants") {
  DecoderConfig config;
  config.k = 3;
  config.c = 5;  // c > k
  CHECK_THROWS_AS(config.validate(100), ValidationError);
  config = DecoderConfig{};
  config.r = 1;
  CHECK_THROWS_AS(config.validate(100), ValidationError);
  config = DecoderConfig{};
  config.k = 200;
  CHECK_THROWS_AS(config.validate(100), ValidationError);
  config = DecoderConfig{};
  config.max_steps = 0;
  CHECK_THROWS_AS(config.validate(100), ValidationError);
  config = DecoderConfig{};
  CHECK_NOTHROW(config.validate(100));
}

TEST_CASE("decode_salien_sim with an empty profile behaves like top-k") {
  Corpus corpus;
  for (int i = 0; i < 30; ++i) {
    corpus.pairs.push_back(make_pair("ping", "pong one"));
    corpus.pairs.push_back(make_pair("ping", "pang two"));
  }
  const Vocabulary vocab = build_vocab(corpus, 1);
  const BackoffNgramLM lm = train_lm(corpus, vocab, 3);
  const EmbeddingTable table = axis_table(vocab, {});
  const ConstraintProfile empty_profile;

  std::vector<int> input = vocab.encode("ping");
  input.push_back(Vocabulary::kEosId);

  DecoderConfig config;
  config.k = 6;
  config.c = 3;
  config.max_steps = 8;

  // same seed: the first sampled candidate coincides with top-k's draw
  std::map<int, int> topk_first, salien_first;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    config.seed = seed;
    const DecodeResult a = decode_top_k(lm, input, config);
    const DecodeResult b = decode_salien_sim(lm, input, empty_profile, table, vocab, config);
    REQUIRE(!a.tokens.empty());
    REQUIRE(!b.tokens.empty());
    topk_first[a.tokens[0]] += 1;
    salien_first[b.tokens[0]] += 1;
    CHECK(b.backtracks_used == 0);
  }
  CHECK(topk_first == salien_first);  // aligned streams make the first draw identical
}

TEST_CASE("planted constraint suppresses the dominant continuation") {
  Corpus corpus;
  for (int i = 0; i < 100; ++i) {
    corpus.pairs.push_back(make_pair("p1 p2", "f1 f2 f3 f4 ma mb mc md me"));
  }
  const Vocabulary vocab = build_vocab(corpus, 1);
  const BackoffNgramLM lm = train_lm(corpus, vocab, 3);

  std::set<int> marker_ids;
  for (const char* m : {"ma", "mb", "mc", "md", "me"}) marker_ids.insert(vocab.id(m));
  const EmbeddingTable table = axis_table(vocab, marker_ids);

  ConstraintProfile profile;
  profile.dim = 8;
  profile.attribute_a = kPositiveAttribute;
  profile.attribute_b = kNegativeAttribute;
  profile.matrix_a.push_back(
      {{"ma", "mb", "mc", "md", "me"}, ngram_mean({"ma", "mb", "mc", "md", "me"}, table)});
  profile.matrix_b.push_back({{"off", "axis"}, {0, 0, 0, 0, 0, 0, 0, 1}});

  std::vector<int> input = vocab.encode("p1 p2");
  input.push_back(Vocabulary::kEosId);

  DecoderConfig config;
  config.k = vocab.size();
  config.c = 5;
  config.r = 5;
  config.gamma_sim = 0.01;
  config.max_steps = 12;

  auto contains_all_markers = [&](const std::vector<int>& tokens) {
    for (int m : marker_ids) {
      if (std::find(tokens.begin(), tokens.end(), m) == tokens.end()) return false;
    }
    return true;
  };

  int topk_completions = 0, salien_completions = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    config.seed = seed;
    if (contains_all_markers(decode_top_k(lm, input, config).tokens)) ++topk_completions;
    const DecodeResult constrained =
        decode_salien_sim(lm, input, profile, table, vocab, config);
    if (contains_all_markers(constrained.tokens)) ++salien_completions;
  }
  CHECK(topk_completions > 500);
  CHECK(salien_completions * 2 < topk_completions);
}

TEST_CASE("margin acceptances hold against their recorded r-gram") {
  const testing::PlantedCorpus planted = testing::make_planted_corpus(300, 43);
  const Vocabulary vocab = build_vocab(planted.corpus, 1);
  const BackoffNgramLM lm = train_lm(planted.corpus, vocab, 3);
  const EmbeddingTable table = build_embeddings(planted.corpus, vocab, 5, 16);

  SalienceConfig sal_config;
  const SalienceTable counts = count_label_ngrams(planted.corpus, sal_config);
  const SalientSets sets = extract_salient(counts, sal_config);
  const ConstraintProfile profile =
      build_profile(sets.at(kPositiveAttribute), sets.at(kNegativeAttribute), table,
                    kPositiveAttribute, kNegativeAttribute);

  std::vector<std::vector<double>> rows_a, rows_b;
  for (const auto& e : profile.matrix_a) rows_a.push_back(e.mean);
  for (const auto& e : profile.matrix_b) rows_b.push_back(e.mean);

  DecoderConfig config;
  config.k = std::min(40, vocab.size());
  config.max_steps = 15;

  std::vector<int> input = vocab.encode(planted.corpus.pairs[0].post);
  input.push_back(Vocabulary::kEosId);

  std::size_t margin_records = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    config.seed = seed;
    const DecodeResult result = decode_salien_sim(lm, input, profile, table, vocab, config);
    CHECK(result.backtracks_used <= config.backtrack_limit);
    CHECK(result.tokens.size() <= static_cast<std::size_t>(config.max_steps));
    for (const auto& record : result.log) {
      if (record.reason != AcceptReason::kMargin) continue;
      ++margin_records;
      REQUIRE(record.recent.size() == static_cast<std::size_t>(config.r));
      CHECK(record.recent.back() == record.token);
      const std::vector<double> q = ngram_mean(record.recent, table);
      const double sim_a = max_cosine(q, rows_a);
      const double sim_b = max_cosine(q, rows_b);
      CHECK(sim_a == doctest::Approx(record.sim_a).epsilon(1e-12));
      CHECK(sim_b == doctest::Approx(record.sim_b).epsilon(1e-12));
      CHECK(record.sim_a - record.sim_b <= config.gamma_sim);
    }
  }
  CHECK(margin_records > 0);
}

TEST_CASE("backtrack budget is respected under hostile profiles") {
  Corpus corpus;
  for (int i = 0; i < 20; ++i) {
    corpus.pairs.push_back(make_pair("s1 s2", "k1 k2 k3 k4 k5 k6 k7"));
  }
  const Vocabulary vocab = build_vocab(corpus, 1);
  const BackoffNgramLM lm = train_lm(corpus, vocab, 2);
  const EmbeddingTable table = axis_table(vocab, {});

  // every token is on some axis 1..6; a profile row on each axis rejects all
  ConstraintProfile hostile;
  hostile.dim = 8;
  for (int axis = 1; axis <= 6; ++axis) {
    std::vector<double> row(8, 0.0);
    row[static_cast<std::size_t>(axis)] = 1.0;
    hostile.matrix_a.push_back({{"axis"}, row});
  }

  DecoderConfig config;
  config.k = vocab.size();
  config.c = 4;
  config.r = 3;
  config.gamma_sim = 0.01;
  config.backtrack_limit = 5;
  config.max_steps = 10;

  std::vector<int> input = vocab.encode("s1 s2");
  input.push_back(Vocabulary::kEosId);

  for (std::uint64_t seed = 0; seed < 500; ++seed) {
    config.seed = seed;
    const DecodeResult result = decode_salien_sim(lm, input, hostile, table, vocab, config);
    CHECK(result.backtracks_used <= config.backtrack_limit);
    CHECK(result.tokens.size() <= static_cast<std::size_t>(config.max_steps));
    CHECK(!result.tokens.empty());
  }
}

TEST_CASE("infinite margin accepts the first candidate everywhere") {
  const testing::PlantedCorpus planted = testing::make_planted_corpus(100, 47);
  const Vocabulary vocab = build_vocab(planted.corpus, 1);
  const BackoffNgramLM lm = train_lm(planted.corpus, vocab, 3);
  const EmbeddingTable table = build_embeddings(planted.corpus, vocab, 5, 8);

  ConstraintProfile blocked;
  blocked.dim = 8;
  blocked.matrix_a.push_back({{"x"}, table.vectors[4]});

  std::vector<int> input = vocab.encode(planted.corpus.pairs[0].post);
  input.push_back(Vocabulary::kEosId);

  DecoderConfig config;
  config.k = std::min(40, vocab.size());
  config.gamma_sim = std::numeric_limits<double>::infinity();
  config.max_steps = 10;

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    config.seed = seed;
    const DecodeResult with_profile =
        decode_salien_sim(lm, input, blocked, table, vocab, config);
    const DecodeResult without =
        decode_salien_sim(lm, input, ConstraintProfile{}, table, vocab, config);
    CHECK(with_profile.tokens == without.tokens);
    CHECK(with_profile.backtracks_used == 0);
  }
}

TEST_CASE("[EOS] is never blocked by the constraint") {
  // heavily trained one-token responses: EOS dominates after the first token
  Corpus corpus;
  for (int i = 0; i < 100; ++i) corpus.pairs.push_back(make_pair("q", "m"));
  const Vocabulary vocab = build_vocab(corpus, 1);
  const BackoffNgramLM lm = train_lm(corpus, vocab, 3);
  const EmbeddingTable table = axis_table(vocab, {vocab.id("m"), vocab.id("q")});

  // reject every token that has any axis component, including fillers
  ConstraintProfile hostile;
  hostile.dim = 8;
  for (int axis = 0; axis <= 6; ++axis) {
    std::vector<double> row(8, 0.0);
    row[static_cast<std::size_t>(axis)] = 1.0;
    hostile.matrix_a.push_back({{"axis"}, row});
  }

  std::vector<int> input = vocab.encode("q");
  input.push_back(Vocabulary::kEosId);

  DecoderConfig config;
  config.k = vocab.size();
  config.c = vocab.size();  // the full support, so [EOS] is always a candidate
  config.r = 2;
  config.gamma_sim = 0.0;
  config.max_steps = 6;

  int eos_acceptances = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    config.seed = seed;
    const DecodeResult result = decode_salien_sim(lm, input, hostile, table, vocab, config);
    REQUIRE(!result.tokens.empty());
    CHECK(result.tokens.back() == Vocabulary::kEosId);
    for (const auto& record : result.log) {
      if (record.token == Vocabulary::kEosId && record.reason == AcceptReason::kEos) {
        ++eos_acceptances;
      }
    }
  }
  CHECK(eos_acceptances > 0);
}
