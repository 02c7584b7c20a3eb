#pragma once

#include <stdexcept>
#include <string>

namespace saliensim {

// Raised for malformed inputs, schema violations, and configuration values
// that break a documented invariant. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace saliensim
