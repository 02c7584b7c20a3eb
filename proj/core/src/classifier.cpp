#include "saliensim/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "saliensim/error.hpp"
#include "saliensim/rng.hpp"
#include "saliensim/text.hpp"
#include "saliensim/version.hpp"

namespace saliensim {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kCls = "[CLS]";
constexpr std::string_view kSep = "[SEP]";

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp_prob(double p) {
  return std::min(1.0 - 1e-12, std::max(1e-12, p));
}

}  // namespace

int FeatureSpace::intern(const std::string& feature) {
  auto it = index_.find(feature);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(features_.size());
  features_.push_back(feature);
  index_.emplace(feature, id);
  return id;
}

int FeatureSpace::lookup(const std::string& feature) const {
  auto it = index_.find(feature);
  return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> pair_features(std::string_view post, std::string_view response,
                                       bool response_only) {
  const std::vector<std::string> post_tokens =
      response_only ? std::vector<std::string>{} : tokenize(post);
  const std::vector<std::string> response_tokens = tokenize(response);

  std::vector<std::string> features;
  features.reserve(2 * (post_tokens.size() + response_tokens.size()) + 4);
  auto field_features = [&](const char* prefix, const std::vector<std::string>& tokens) {
    for (const auto& t : tokens) features.push_back(std::string(prefix) + t);
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
      features.push_back(std::string(prefix) + tokens[i] + " " + tokens[i + 1]);
    }
  };
  field_features("p:", post_tokens);
  field_features("r:", response_tokens);

  // separator-adjacent bigrams of [CLS] post [SEP] response [SEP]
  std::vector<std::string> joined;
  joined.reserve(post_tokens.size() + response_tokens.size() + 3);
  joined.emplace_back(kCls);
  joined.insert(joined.end(), post_tokens.begin(), post_tokens.end());
  joined.emplace_back(kSep);
  joined.insert(joined.end(), response_tokens.begin(), response_tokens.end());
  joined.emplace_back(kSep);
  for (std::size_t i = 0; i + 1 < joined.size(); ++i) {
    if (joined[i] == kCls || joined[i] == kSep || joined[i + 1] == kCls ||
        joined[i + 1] == kSep) {
      features.push_back("j:" + joined[i] + " " + joined[i + 1]);
    }
  }
  return features;
}

FeatureVector featurize(std::string_view post, std::string_view response,
                        const FeatureSpace& space, bool response_only) {
  FeatureVector out;
  for (const auto& f : pair_features(post, response, response_only)) {
    const int id = space.lookup(f);
    if (id >= 0) ++out[id];
  }
  return out;
}

ClassifierModel::ClassifierModel(FeatureSpace space, std::vector<double> weights, double bias,
                                 ClassifierConfig config)
    : space_(std::move(space)), weights_(std::move(weights)), bias_(bias), config_(config) {}

double ClassifierModel::probability(const FeatureVector& features) const {
  double z = bias_;
  for (const auto& [id, count] : features) {
    z += weights_[static_cast<std::size_t>(id)] * static_cast<double>(count);
  }
  return sigmoid(z);
}

Prediction ClassifierModel::predict(std::string_view post, std::string_view response) const {
  const double p = probability(featurize(post, response, space_, config_.response_only));
  return {p, p >= config_.threshold};
}

namespace {

double mean_loss(const std::vector<FeatureVector>& samples, const std::vector<double>& labels,
                 const std::vector<double>& weights, double bias, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double z = bias;
    for (const auto& [id, count] : samples[i]) {
      z += weights[static_cast<std::size_t>(id)] * static_cast<double>(count);
    }
    const double p = clamp_prob(sigmoid(z));
    loss -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  loss /= static_cast<double>(samples.size());
  double reg = 0.0;
  for (double w : weights) reg += w * w;
  return loss + 0.5 * l2 * reg;
}

}  // namespace

ClassifierModel train_classifier(const Corpus& corpus, const ClassifierConfig& config,
                                 TrainReport* report) {
  if (config.epochs < 1) throw ValidationError("epochs must be >= 1");
  if (!(config.learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
  if (config.l2 < 0) throw ValidationError("l2 must be >= 0");
  if (config.dev_fraction < 0 || config.dev_fraction >= 1) {
    throw ValidationError("dev_fraction must be in [0, 1)");
  }

  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    if (!corpus.pairs[i].label) throw ValidationError("train_classifier requires labeled pairs");
    labeled.push_back(i);
  }
  if (labeled.empty()) throw ValidationError("train_classifier requires a non-empty corpus");

  std::size_t positives = 0;
  for (std::size_t i : labeled) positives += corpus.pairs[i].label->is_positive ? 1 : 0;
  if (positives == 0 || positives == labeled.size()) {
    throw ValidationError("train_classifier requires both label classes");
  }

  // dev split: shuffled by seed, then both splits restored to corpus order
  std::vector<std::size_t> order = labeled;
  Rng rng(config.seed);
  rng.shuffle(order);
  const std::size_t dev_count =
      static_cast<std::size_t>(config.dev_fraction * static_cast<double>(order.size()));
  std::vector<std::size_t> dev_idx(order.begin(), order.begin() + dev_count);
  std::vector<std::size_t> train_idx(order.begin() + dev_count, order.end());
  std::sort(dev_idx.begin(), dev_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  if (train_idx.empty()) throw ValidationError("dev_fraction leaves no training data");

  FeatureSpace space;
  std::vector<FeatureVector> train_x;
  std::vector<double> train_y;
  train_x.reserve(train_idx.size());
  for (std::size_t i : train_idx) {
    const auto& pair = corpus.pairs[i];
    FeatureVector fv;
    for (const auto& f : pair_features(pair.post, pair.response, config.response_only)) {
      ++fv[space.intern(f)];
    }
    train_x.push_back(std::move(fv));
    train_y.push_back(pair.label->is_positive ? 1.0 : 0.0);
  }

  std::vector<double> weights(space.size(), 0.0);
  double bias = 0.0;
  const double inv_n = 1.0 / static_cast<double>(train_x.size());
  const double initial_loss = mean_loss(train_x, train_y, weights, bias, config.l2);

  std::vector<double> grad(weights.size(), 0.0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_bias = 0.0;
    for (std::size_t i = 0; i < train_x.size(); ++i) {
      double z = bias;
      for (const auto& [id, count] : train_x[i]) {
        z += weights[static_cast<std::size_t>(id)] * static_cast<double>(count);
      }
      const double err = sigmoid(z) - train_y[i];
      for (const auto& [id, count] : train_x[i]) {
        grad[static_cast<std::size_t>(id)] += err * static_cast<double>(count);
      }
      grad_bias += err;
    }
    for (std::size_t d = 0; d < weights.size(); ++d) {
      weights[d] -= config.learning_rate * (grad[d] * inv_n + config.l2 * weights[d]);
    }
    bias -= config.learning_rate * grad_bias * inv_n;
  }

  ClassifierModel model(std::move(space), std::move(weights), bias, config);

  if (report) {
    report->initial_loss = initial_loss;
    report->final_loss =
        mean_loss(train_x, train_y, model.weights(), model.bias(), config.l2);
    auto accuracy_on = [&](const std::vector<std::size_t>& idx) {
      if (idx.empty()) return std::numeric_limits<double>::quiet_NaN();
      std::size_t correct = 0;
      for (std::size_t i : idx) {
        const auto& pair = corpus.pairs[i];
        if (model.predict(pair.post, pair.response).is_positive == pair.label->is_positive) {
          ++correct;
        }
      }
      return static_cast<double>(correct) / static_cast<double>(idx.size());
    };
    report->train_accuracy = accuracy_on(train_idx);
    report->dev_accuracy = accuracy_on(dev_idx);
  }
  return model;
}

EvalMetrics metrics_from_decisions(const std::vector<std::pair<bool, bool>>& decisions) {
  if (decisions.empty()) throw ValidationError("evaluate requires at least one decision");
  EvalMetrics m;
  for (const auto& [predicted, truth] : decisions) {
    if (predicted && truth) ++m.tp;
    else if (predicted && !truth) ++m.fp;
    else if (!predicted && truth) ++m.fn;
    else ++m.tn;
  }
  const double total = static_cast<double>(decisions.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;
  m.precision = (m.tp + m.fp) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = (m.tp + m.fn) > 0 ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.f1 = (2 * m.tp + m.fp + m.fn) > 0
             ? static_cast<double>(2 * m.tp) / static_cast<double>(2 * m.tp + m.fp + m.fn)
             : 0.0;
  return m;
}

EvalMetrics evaluate(const ClassifierModel& model, const Corpus& corpus) {
  if (corpus.pairs.empty()) throw ValidationError("evaluate requires a non-empty corpus");
  std::vector<std::pair<bool, bool>> decisions;
  decisions.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs) {
    if (!pair.label) throw ValidationError("evaluate requires labeled pairs");
    decisions.emplace_back(model.predict(pair.post, pair.response).is_positive,
                           pair.label->is_positive);
  }
  return metrics_from_decisions(decisions);
}

void ClassifierModel::save(const std::string& path) const {
  ordered_json j;
  j["version"] = kVersion;
  ordered_json cfg;
  cfg["epochs"] = config_.epochs;
  cfg["learning_rate"] = config_.learning_rate;
  cfg["l2"] = config_.l2;
  cfg["dev_fraction"] = config_.dev_fraction;
  cfg["threshold"] = config_.threshold;
  cfg["response_only"] = config_.response_only;
  cfg["seed"] = config_.seed;
  j["config"] = std::move(cfg);
  j["features"] = space_.features();
  j["weights"] = weights_;
  j["bias"] = bias_;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write classifier file: " + path);
  out << j.dump() << '\n';
}

ClassifierModel ClassifierModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open classifier file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid classifier JSON in " + path + ": " + e.what());
  }

  try {
    ClassifierConfig config;
    const auto& cfg = j.at("config");
    config.epochs = cfg.at("epochs").get<int>();
    config.learning_rate = cfg.at("learning_rate").get<double>();
    config.l2 = cfg.at("l2").get<double>();
    config.dev_fraction = cfg.at("dev_fraction").get<double>();
    config.threshold = cfg.at("threshold").get<double>();
    config.response_only = cfg.at("response_only").get<bool>();
    config.seed = cfg.at("seed").get<std::uint64_t>();

    FeatureSpace space;
    for (const auto& f : j.at("features")) space.intern(f.get<std::string>());
    std::vector<double> weights = j.at("weights").get<std::vector<double>>();
    if (weights.size() != space.size()) {
      throw ValidationError("classifier weights do not match feature list in " + path);
    }
    for (double w : weights) {
      if (!std::isfinite(w)) throw ValidationError("non-finite classifier weight in " + path);
    }
    return ClassifierModel(std::move(space), std::move(weights), j.at("bias").get<double>(),
                           config);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid classifier document in " + path + ": " + e.what());
  }
}

}  // namespace saliensim
