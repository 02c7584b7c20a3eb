#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace saliensim {

inline constexpr std::string_view kUsernamePlaceholder = "@[username]";
inline constexpr std::string_view kUrlPlaceholder = "[url]";
inline constexpr std::string_view kHashtagPlaceholder = "#[hashtag]";

// Replaces @-mentions with "@[username]", scheme- or www-prefixed URLs with
// "[url]", and #-hashtags with "#[hashtag]". Total and idempotent: the
// placeholders themselves never re-match.
std::string preprocess(std::string_view raw);

// The fixed second-person phrase list ("you are", "ur", "are you", ...).
const std::vector<std::string>& you_phrases();

// True iff the lowercased response contains any phrase from you_phrases()
// as a word-boundary-delimited substring (word chars: [a-z0-9_]).
bool is_you_response(std::string_view response);

// Lowercases, splits on whitespace, and peels trailing . , ! ? off each
// word into single-character tokens. Placeholder tokens stay intact.
std::vector<std::string> tokenize(std::string_view text);

// ASCII lowercase copy.
std::string ascii_lower(std::string_view text);

}  // namespace saliensim
