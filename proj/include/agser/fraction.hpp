#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace agser {

/// Exact rational number, kept reduced with a positive denominator.
class Fraction {
 public:
  constexpr Fraction() = default;
  Fraction(std::int64_t num, std::int64_t den);

  /// Parses "2/3", "0.67", "1" (decimals are converted exactly, 0.67 -> 67/100).
  static Fraction parse(std::string_view text);

  std::int64_t num() const noexcept { return num_; }
  std::int64_t den() const noexcept { return den_; }
  double value() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// ceil(this * n), computed in integers.
  std::int64_t ceil_times(std::int64_t n) const;

  std::string str() const;

  bool operator==(const Fraction&) const = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace agser
