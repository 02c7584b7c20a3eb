#include "saliensim/vocab.hpp"

#include <algorithm>
#include <map>

#include "saliensim/corpus.hpp"
#include "saliensim/error.hpp"
#include "saliensim/text.hpp"

namespace saliensim {

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>{std::string(kUnkToken), std::string(kEosToken),
                                          std::string(kSepToken)}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : id_to_token_(std::move(tokens)) {
  if (id_to_token_.size() < 3 || id_to_token_[kUnkId] != kUnkToken ||
      id_to_token_[kEosId] != kEosToken || id_to_token_[kSepId] != kSepToken) {
    throw ValidationError("vocabulary must start with [UNK], [EOS], [SEP]");
  }
  token_to_id_.reserve(id_to_token_.size());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate vocabulary token: " + id_to_token_[i]);
    }
  }
}

int Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("token id out of range: " + std::to_string(id));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  return encode_tokens(tokenize(text));
}

std::vector<int> Vocabulary::encode_tokens(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(std::span<const int> ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += token(ids[i]);
  }
  return out;
}

Vocabulary build_vocab(const Corpus& corpus, int min_count) {
  if (min_count < 1) throw ValidationError("min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& pair : corpus.pairs) {
    for (const auto& t : tokenize(pair.post)) ++counts[t];
    for (const auto& t : tokenize(pair.response)) ++counts[t];
  }

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [token, count] : counts) {
    if (count >= static_cast<std::size_t>(min_count) && token != Vocabulary::kUnkToken &&
        token != Vocabulary::kEosToken && token != Vocabulary::kSepToken) {
      kept.emplace_back(token, count);
    }
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  std::vector<std::string> tokens = {std::string(Vocabulary::kUnkToken),
                                     std::string(Vocabulary::kEosToken),
                                     std::string(Vocabulary::kSepToken)};
  tokens.reserve(tokens.size() + kept.size());
  for (auto& [token, count] : kept) tokens.push_back(std::move(token));
  return Vocabulary(std::move(tokens));
}

}  // namespace saliensim
