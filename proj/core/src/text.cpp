#include "saliensim/text.hpp"

#include <cctype>

namespace saliensim {

namespace {

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool istarts_with(std::string_view text, std::string_view prefix) {
  if (text.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (lower(text[i]) != prefix[i]) return false;
  }
  return true;
}

bool is_url_start(std::string_view rest) {
  return istarts_with(rest, "http://") || istarts_with(rest, "https://") ||
         istarts_with(rest, "www.");
}

}  // namespace

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = lower(c);
  return out;
}

std::string preprocess(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  std::size_t i = 0;
  bool token_start = true;
  while (i < raw.size()) {
    const char c = raw[i];
    if (token_start && is_url_start(raw.substr(i))) {
      while (i < raw.size() && !is_space(raw[i])) ++i;
      out += kUrlPlaceholder;
      token_start = false;
      continue;
    }
    if (c == '@' && i + 1 < raw.size() && is_word_char(raw[i + 1])) {
      ++i;
      while (i < raw.size() && is_word_char(raw[i])) ++i;
      out += kUsernamePlaceholder;
      token_start = false;
      continue;
    }
    if (c == '#' && i + 1 < raw.size() && is_word_char(raw[i + 1])) {
      ++i;
      while (i < raw.size() && is_word_char(raw[i])) ++i;
      out += kHashtagPlaceholder;
      token_start = false;
      continue;
    }
    out += c;
    token_start = is_space(c);
    ++i;
  }
  return out;
}

const std::vector<std::string>& you_phrases() {
  static const std::vector<std::string> phrases = {
      "you are",   "you were",   "you should", "you would", "you will",
      "you have",  "you can",    "you could",  "you don't", "you didn't",
      "you can't", "you're",     "you'd",      "you'll",    "you've",
      "ur",        "ya'll",      "yall",       "your",      "yours",
      "yourself",  "are you",    "were you",   "should you", "would you",
      "will you",  "have you",   "can you",    "could you"};
  return phrases;
}

namespace {

bool contains_word_bounded(std::string_view text, std::string_view phrase) {
  std::size_t pos = text.find(phrase);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
    const std::size_t end = pos + phrase.size();
    const bool right_ok = end == text.size() || !is_word_char(text[end]);
    if (left_ok && right_ok) return true;
    pos = text.find(phrase, pos + 1);
  }
  return false;
}

}  // namespace

bool is_you_response(std::string_view response) {
  const std::string lowered = ascii_lower(response);
  for (const auto& phrase : you_phrases()) {
    if (contains_word_bounded(lowered, phrase)) return true;
  }
  return false;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j == i) break;
    std::string word = ascii_lower(text.substr(i, j - i));
    std::string trailing;
    while (!word.empty() &&
           (word.back() == '.' || word.back() == ',' || word.back() == '!' || word.back() == '?')) {
      trailing.push_back(word.back());
      word.pop_back();
    }
    if (!word.empty()) tokens.push_back(std::move(word));
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) {
      tokens.emplace_back(1, *it);
    }
    i = j;
  }
  return tokens;
}

}  // namespace saliensim
