#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "saliensim/classifier.hpp"
#include "saliensim/error.hpp"
#include "test_util.hpp"

using namespace saliensim;
using saliensim::testing::make_labeled;
using saliensim::testing::make_pair;

TEST_CASE("pair_features emits prefixed n-grams and separator bigrams") {
  SUBCASE("hand-enumerated 3-token post and 2-token response") {
    std::vector<std::string> features = pair_features("a b c", "d e");
    std::vector<std::string> expected = {
        "p:a",       "p:b",        "p:c",       "p:a b",   "p:b c",
        "r:d",       "r:e",        "r:d e",
        "j:[CLS] a", "j:c [SEP]",  "j:[SEP] d", "j:e [SEP]"};
    std::sort(features.begin(), features.end());
    std::sort(expected.begin(), expected.end());
    CHECK(features == expected);
  }

  SUBCASE("identical inputs give identical features") {
    CHECK(pair_features("x y", "z w") == pair_features("x y", "z w"));
  }

  SUBCASE("swapping post and response changes the features") {
    CHECK(pair_features("x y", "z w") != pair_features("z w", "x y"));
  }

  SUBCASE("trailing whitespace does not matter") {
    CHECK(pair_features("x y", "z w") == pair_features("x y  ", "z w \t"));
  }

  SUBCASE("response-only mode drops post features") {
    const auto features = pair_features("x y", "z w", /*response_only=*/true);
    for (const auto& f : features) {
      CHECK(f.substr(0, 2) != "p:");
      CHECK(f.find(" x") == std::string::npos);
    }
  }
}

namespace {

Corpus planted_split(std::size_t n, std::uint64_t seed, Corpus* heldout, std::size_t heldout_n) {
  const testing::PlantedCorpus planted = testing::make_planted_corpus(n + heldout_n, seed);
  Corpus train;
  train.pairs.assign(planted.corpus.pairs.begin(),
                     planted.corpus.pairs.begin() + static_cast<std::ptrdiff_t>(n));
  heldout->pairs.assign(planted.corpus.pairs.begin() + static_cast<std::ptrdiff_t>(n),
                        planted.corpus.pairs.end());
  return train;
}

}  // namespace

TEST_CASE("training separates the planted corpus") {
  Corpus heldout;
  const Corpus train = planted_split(600, 53, &heldout, 200);

  ClassifierConfig config;
  config.seed = 9;
  TrainReport report;
  const ClassifierModel model = train_classifier(train, config, &report);

  CHECK(report.train_accuracy >= 0.98);
  CHECK(report.final_loss < report.initial_loss);
  CHECK(evaluate(model, heldout).accuracy >= 0.95);
}

TEST_CASE("duplicating every sample leaves the decision function unchanged") {
  Corpus heldout;
  const Corpus train = planted_split(200, 59, &heldout, 50);
  Corpus doubled = train;
  doubled.pairs.insert(doubled.pairs.end(), train.pairs.begin(), train.pairs.end());

  ClassifierConfig config;  // dev_fraction 0 so the training set is exactly doubled
  const ClassifierModel base = train_classifier(train, config);
  const ClassifierModel dup = train_classifier(doubled, config);

  for (const auto& pair : heldout.pairs) {
    const double pa = base.predict(pair.post, pair.response).probability;
    const double pb = dup.predict(pair.post, pair.response).probability;
    CHECK(std::abs(pa - pb) <= 1e-6);
  }
}

TEST_CASE("fixed seed gives a byte-identical model file") {
  Corpus heldout;
  const Corpus train = planted_split(150, 61, &heldout, 10);
  ClassifierConfig config;
  config.seed = 77;
  config.dev_fraction = 0.1;

  testing::TempDir dir("clf");
  train_classifier(train, config).save(dir.file("a.json"));
  train_classifier(train, config).save(dir.file("b.json"));
  CHECK(testing::read_file(dir.file("a.json")) == testing::read_file(dir.file("b.json")));

  SUBCASE("serialization round-trips the decision function") {
    const ClassifierModel loaded = ClassifierModel::load(dir.file("a.json"));
    const ClassifierModel original = train_classifier(train, config);
    for (const auto& pair : heldout.pairs) {
      CHECK(loaded.predict(pair.post, pair.response).probability ==
            original.predict(pair.post, pair.response).probability);
    }
  }
}

TEST_CASE("predict") {
  SUBCASE("all-zero weights score exactly one half") {
    FeatureSpace space;
    space.intern("r:x");
    const ClassifierModel model(std::move(space), {0.0}, 0.0, ClassifierConfig{});
    const Prediction prediction = model.predict("anything", "x");
    CHECK(prediction.probability == 0.5);
    CHECK(prediction.is_positive);  // threshold is inclusive
  }

  SUBCASE("planted positives are detected") {
    Corpus heldout;
    const Corpus train = planted_split(400, 67, &heldout, 100);
    ClassifierConfig config;
    config.epochs = 60;
    config.learning_rate = 0.5;
    const ClassifierModel model = train_classifier(train, config);
    std::size_t correct_positives = 0, positives = 0;
    for (const auto& pair : heldout.pairs) {
      if (!pair.label->is_positive) continue;
      ++positives;
      correct_positives += model.predict(pair.post, pair.response).is_positive ? 1 : 0;
    }
    REQUIRE(positives > 0);
    CHECK(correct_positives == positives);
  }

  SUBCASE("predict is pure") {
    Corpus heldout;
    const Corpus train = planted_split(100, 71, &heldout, 1);
    const ClassifierModel model = train_classifier(train, ClassifierConfig{});
    const auto& pair = heldout.pairs.front();
    const double first = model.predict(pair.post, pair.response).probability;
    for (int i = 0; i < 10; ++i) {
      CHECK(model.predict(pair.post, pair.response).probability == first);
    }
  }
}

TEST_CASE("evaluate computes the confusion-matrix metrics") {
  SUBCASE("a perfect model scores 1.0 everywhere") {
    Corpus heldout;
    const Corpus train = planted_split(600, 73, &heldout, 100);
    const ClassifierModel model = train_classifier(train, ClassifierConfig{});
    const EvalMetrics metrics = evaluate(model, train);
    CHECK(metrics.accuracy == 1.0);
    CHECK(metrics.precision == 1.0);
    CHECK(metrics.recall == 1.0);
    CHECK(metrics.f1 == 1.0);
  }

  SUBCASE("constant-negative model on a balanced corpus") {
    Corpus corpus;
    for (int i = 0; i < 10; ++i) {
      corpus.pairs.push_back(make_labeled("p", "r" + std::to_string(i), i % 2 == 0));
    }
    const ClassifierModel constant_negative(FeatureSpace{}, {}, -5.0, ClassifierConfig{});
    const EvalMetrics metrics = evaluate(constant_negative, corpus);
    CHECK(metrics.accuracy == 0.5);
    CHECK(metrics.recall == 0.0);
  }

  SUBCASE("hand-computed confusion matrix on 20 fixed decisions") {
    std::vector<std::pair<bool, bool>> decisions;
    for (int i = 0; i < 6; ++i) decisions.emplace_back(true, true);    // TP
    for (int i = 0; i < 3; ++i) decisions.emplace_back(true, false);   // FP
    for (int i = 0; i < 4; ++i) decisions.emplace_back(false, true);   // FN
    for (int i = 0; i < 7; ++i) decisions.emplace_back(false, false);  // TN
    const EvalMetrics metrics = metrics_from_decisions(decisions);
    CHECK(metrics.tp == 6);
    CHECK(metrics.fp == 3);
    CHECK(metrics.fn == 4);
    CHECK(metrics.tn == 7);
    CHECK(metrics.accuracy == 13.0 / 20.0);
    CHECK(metrics.precision == 6.0 / 9.0);
    CHECK(metrics.recall == 6.0 / 10.0);
    CHECK(metrics.f1 == 12.0 / 19.0);
  }

  SUBCASE("errors") {
    const ClassifierModel model(FeatureSpace{}, {}, 0.0, ClassifierConfig{});
    CHECK_THROWS_AS(evaluate(model, Corpus{}), ValidationError);
    Corpus unlabeled;
    unlabeled.pairs.push_back(make_pair("p", "r"));
    CHECK_THROWS_AS(evaluate(model, unlabeled), ValidationError);
  }
}

TEST_CASE("training rejects degenerate corpora") {
  Corpus single_class;
  for (int i = 0; i < 5; ++i) single_class.pairs.push_back(make_labeled("p", "r", true));
  CHECK_THROWS_AS(train_classifier(single_class, ClassifierConfig{}), ValidationError);

  Corpus unlabeled;
  unlabeled.pairs.push_back(make_pair("p", "r"));
  CHECK_THROWS_AS(train_classifier(unlabeled, ClassifierConfig{}), ValidationError);

  CHECK_THROWS_AS(train_classifier(Corpus{}, ClassifierConfig{}), ValidationError);
}
