#pragma once

namespace saliensim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace saliensim
