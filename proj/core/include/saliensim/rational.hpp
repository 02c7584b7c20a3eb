#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>

#include "saliensim/error.hpp"

namespace saliensim {

// Exact non-negative rational. Salience thresholding compares scores at the
// boundary with integer cross-multiplication, so hyperparameters that enter
// those comparisons are kept as rationals instead of doubles.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den <= 0) throw ValidationError("rational denominator must be positive");
    if (num < 0) throw ValidationError("rational must be non-negative");
    reduce();
  }

  // Parses a plain decimal like "0.5", "5.5", or "7".
  static Rational from_decimal(std::string_view text) {
    if (text.empty()) throw ValidationError("empty decimal");
    std::int64_t whole = 0, frac = 0, scale = 1;
    std::size_t i = 0;
    bool digits = false;
    for (; i < text.size() && text[i] != '.'; ++i) {
      if (text[i] < '0' || text[i] > '9') throw ValidationError("bad decimal: " + std::string(text));
      whole = whole * 10 + (text[i] - '0');
      digits = true;
    }
    if (i < text.size()) {  // fractional part
      for (++i; i < text.size(); ++i) {
        if (text[i] < '0' || text[i] > '9') throw ValidationError("bad decimal: " + std::string(text));
        // keeps exact cross-multiplied comparisons within 128 bits
        if (scale >= 1'000'000'000LL) throw ValidationError("decimal too precise: " + std::string(text));
        frac = frac * 10 + (text[i] - '0');
        scale *= 10;
        digits = true;
      }
    }
    if (!digits) throw ValidationError("bad decimal: " + std::string(text));
    return Rational(whole * scale + frac, scale);
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  bool operator==(const Rational& other) const = default;

 private:
  void reduce() {
    const std::int64_t g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
};

}  // namespace saliensim
