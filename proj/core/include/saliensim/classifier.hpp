#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "saliensim/corpus.hpp"

namespace saliensim {

struct ClassifierConfig {
  int epochs = 20;
  double learning_rate = 0.1;
  double l2 = 1e-4;
  double dev_fraction = 0.0;  // held out from training when > 0
  double threshold = 0.5;
  bool response_only = false;  // ablation: drop all post-derived features
  std::uint64_t seed = 0;
};

// Sparse feature counts, keyed by feature id.
using FeatureVector = std::map<int, int>;

// String-interned feature ids. Frozen after training; unknown features are
// dropped at predict time.
class FeatureSpace {
 public:
  int intern(const std::string& feature);
  int lookup(const std::string& feature) const;  // -1 when unknown
  std::size_t size() const { return features_.size(); }
  const std::vector<std::string>& features() const { return features_; }

 private:
  std::vector<std::string> features_;
  std::unordered_map<std::string, int> index_;
};

// Field-prefixed unigram and bigram features of post and response, plus the
// separator-adjacent bigrams of [CLS] post [SEP] response [SEP]. Multiset,
// in emission order.
std::vector<std::string> pair_features(std::string_view post, std::string_view response,
                                       bool response_only = false);

FeatureVector featurize(std::string_view post, std::string_view response,
                        const FeatureSpace& space, bool response_only = false);

struct TrainReport {
  double train_accuracy = 0.0;
  double dev_accuracy = 0.0;  // NaN when no dev split
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

struct Prediction {
  double probability = 0.0;
  bool is_positive = false;
};

class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(FeatureSpace space, std::vector<double> weights, double bias,
                  ClassifierConfig config);

  Prediction predict(std::string_view post, std::string_view response) const;
  double probability(const FeatureVector& features) const;

  const FeatureSpace& feature_space() const { return space_; }
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  const ClassifierConfig& config() const { return config_; }

  void save(const std::string& path) const;
  static ClassifierModel load(const std::string& path);

 private:
  FeatureSpace space_;
  std::vector<double> weights_;
  double bias_ = 0.0;
  ClassifierConfig config_;
};

// L2-regularized logistic regression fit by deterministic batch gradient
// descent on the mean loss (duplication-invariant); the seed only controls
// the dev split. Requires both label classes.
ClassifierModel train_classifier(const Corpus& corpus, const ClassifierConfig& config,
                                 TrainReport* report = nullptr);

struct EvalMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

EvalMetrics evaluate(const ClassifierModel& model, const Corpus& corpus);

// Metrics from already-computed decisions (prediction, truth).
EvalMetrics metrics_from_decisions(const std::vector<std::pair<bool, bool>>& decisions);

}  // namespace saliensim
