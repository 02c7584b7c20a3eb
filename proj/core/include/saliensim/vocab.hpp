#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace saliensim {

struct Corpus;

// Token-to-id mapping with three reserved entries at fixed ids.
class Vocabulary {
 public:
  static constexpr int kUnkId = 0;
  static constexpr int kEosId = 1;
  static constexpr int kSepId = 2;
  static constexpr std::string_view kUnkToken = "[UNK]";
  static constexpr std::string_view kEosToken = "[EOS]";
  static constexpr std::string_view kSepToken = "[SEP]";

  // Reserved tokens only.
  Vocabulary();
  // From a full id-ordered token list; the first three entries must be the
  // reserved tokens (throws ValidationError otherwise).
  explicit Vocabulary(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(id_to_token_.size()); }
  // Unknown tokens map to kUnkId.
  int id(std::string_view token) const;
  // Throws ValidationError on an out-of-range id.
  const std::string& token(int id) const;
  bool contains(std::string_view token) const;

  std::vector<int> encode(std::string_view text) const;
  std::vector<int> encode_tokens(const std::vector<std::string>& tokens) const;
  // Space-joins tokens; throws ValidationError on an out-of-range id.
  std::string decode(std::span<const int> ids) const;

  const std::vector<std::string>& tokens() const { return id_to_token_; }
  bool operator==(const Vocabulary& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Tokens seen at least min_count times across posts and responses, id-ordered
// by descending count then token. Reserved tokens always present.
Vocabulary build_vocab(const Corpus& corpus, int min_count = 1);

}  // namespace saliensim
