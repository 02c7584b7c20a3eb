#include "saliensim/lm.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "saliensim/error.hpp"
#include "saliensim/version.hpp"

namespace saliensim {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string context_key(std::span<const int> context) {
  std::string key;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (i > 0) key += ' ';
    key += std::to_string(context[i]);
  }
  return key;
}

}  // namespace

BackoffNgramLM::BackoffNgramLM(Vocabulary vocab, int order, double discount)
    : vocab_(std::move(vocab)), order_(order), discount_(discount) {
  if (order_ < 1) throw ValidationError("lm order must be >= 1");
  if (!(discount_ > 0.0 && discount_ < 1.0)) {
    throw ValidationError("lm discount must be in (0, 1)");
  }
  by_order_.resize(static_cast<std::size_t>(order_));
}

void BackoffNgramLM::observe_continuation(std::span<const int> context, int token) {
  if (token < 0 || token >= vocab_size()) {
    throw ValidationError("token id out of range: " + std::to_string(token));
  }
  for (int id : context) {
    if (id < 0 || id >= vocab_size()) {
      throw ValidationError("token id out of range: " + std::to_string(id));
    }
  }
  for (int n = 1; n <= order_; ++n) {
    const std::size_t ctx_len = static_cast<std::size_t>(n - 1);
    if (context.size() < ctx_len) break;
    auto& stats = by_order_[static_cast<std::size_t>(n - 1)]
                           [context_key(context.subspan(context.size() - ctx_len))];
    stats.total += 1;
    stats.continuations[token] += 1;
  }
}

void BackoffNgramLM::observe_sequence(std::span<const int> sequence) {
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    observe_continuation(sequence.subspan(0, i), sequence[i]);
  }
}

std::vector<double> BackoffNgramLM::next_distribution(std::span<const int> prefix) const {
  for (int id : prefix) {
    if (id < 0 || id >= vocab_size()) {
      throw ValidationError("token id out of range: " + std::to_string(id));
    }
  }

  const int v = vocab_size();
  std::vector<double> dist(static_cast<std::size_t>(v), 1.0 / static_cast<double>(v));
  for (int n = 1; n <= order_; ++n) {
    const std::size_t ctx_len = static_cast<std::size_t>(n - 1);
    if (prefix.size() < ctx_len) break;
    const auto& by_context = by_order_[static_cast<std::size_t>(n - 1)];
    auto it = by_context.find(context_key(prefix.subspan(prefix.size() - ctx_len)));
    if (it == by_context.end() || it->second.total == 0) break;
    const auto& stats = it->second;
    const double total = static_cast<double>(stats.total);
    const double interp =
        discount_ * static_cast<double>(stats.continuations.size()) / total;
    for (double& p : dist) p *= interp;
    for (const auto& [token, count] : stats.continuations) {
      dist[static_cast<std::size_t>(token)] += (static_cast<double>(count) - discount_) / total;
    }
  }
  return dist;
}

std::vector<int> training_sequence(const LabeledPair& pair, const Vocabulary& vocab) {
  std::vector<int> ids = vocab.encode(pair.post);
  ids.push_back(Vocabulary::kEosId);
  const std::vector<int> response = vocab.encode(pair.response);
  ids.insert(ids.end(), response.begin(), response.end());
  ids.push_back(Vocabulary::kEosId);
  return ids;
}

BackoffNgramLM train_lm(const Corpus& corpus, const Vocabulary& vocab, int order,
                        double discount) {
  if (corpus.pairs.empty()) throw ValidationError("train_lm requires a non-empty corpus");
  BackoffNgramLM lm(vocab, order, discount);
  for (const auto& pair : corpus.pairs) {
    lm.observe_sequence(training_sequence(pair, vocab));
  }
  return lm;
}

double perplexity_on_sequences(const LanguageModel& lm,
                               const std::vector<std::vector<int>>& sequences) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      const std::vector<double> dist =
          lm.next_distribution(std::span<const int>(seq.data(), i));
      const double p = dist[static_cast<std::size_t>(seq[i])];
      if (!(p > 0.0)) {
        throw std::logic_error("zero probability under a smoothed model");
      }
      nll -= std::log(p);
      ++tokens;
    }
  }
  if (tokens == 0) throw ValidationError("perplexity requires at least one token");
  return std::exp(nll / static_cast<double>(tokens));
}

double perplexity(const LanguageModel& lm, const Corpus& corpus, const Vocabulary& vocab) {
  if (corpus.pairs.empty()) throw ValidationError("perplexity requires a non-empty corpus");
  std::vector<std::vector<int>> sequences;
  sequences.reserve(corpus.pairs.size());
  for (const auto& pair : corpus.pairs) sequences.push_back(training_sequence(pair, vocab));
  return perplexity_on_sequences(lm, sequences);
}

void BackoffNgramLM::save(const std::string& path) const {
  ordered_json j;
  j["version"] = kVersion;
  j["order"] = order_;
  j["discount"] = discount_;
  j["vocab"] = vocab_.tokens();
  ordered_json orders = ordered_json::array();
  for (const auto& by_context : by_order_) {
    // plain json sorts keys, which keeps the dump byte-stable
    nlohmann::json level = nlohmann::json::object();
    for (const auto& [key, stats] : by_context) {
      nlohmann::json conts = nlohmann::json::object();
      for (const auto& [token, count] : stats.continuations) {
        conts[std::to_string(token)] = count;
      }
      level[key] = std::move(conts);
    }
    orders.push_back(ordered_json(level));
  }
  j["counts"] = std::move(orders);

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ValidationError("cannot write model file: " + path);
  out << j.dump() << '\n';
}

BackoffNgramLM BackoffNgramLM::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid model JSON in " + path + ": " + e.what());
  }

  try {
    BackoffNgramLM lm(Vocabulary(j.at("vocab").get<std::vector<std::string>>()),
                      j.at("order").get<int>(), j.at("discount").get<double>());
    const auto& orders = j.at("counts");
    if (orders.size() != lm.by_order_.size()) {
      throw ValidationError("model count levels do not match order in " + path);
    }
    for (std::size_t n = 0; n < lm.by_order_.size(); ++n) {
      for (const auto& [key, conts] : orders[n].items()) {
        ContextStats stats;
        for (const auto& [token, count] : conts.items()) {
          int id = -1;
          try {
            id = std::stoi(token);
          } catch (const std::exception&) {
            throw ValidationError("malformed model token key in " + path);
          }
          if (id < 0 || id >= lm.vocab_size()) {
            throw ValidationError("model token id out of range in " + path);
          }
          const std::uint64_t c = count.get<std::uint64_t>();
          stats.continuations[id] = c;
          stats.total += c;
        }
        lm.by_order_[n][key] = std::move(stats);
      }
    }
    return lm;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("invalid model document in " + path + ": " + e.what());
  }
}

}  // namespace saliensim
