#include "agser/fraction.hpp"

#include <cctype>
#include <charconv>
#include <limits>
#include <numeric>

#include "agser/error.hpp"

namespace agser {

namespace {

std::int64_t parse_int(std::string_view digits, std::string_view whole) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty())
    throw Error(ErrorKind::Configuration, "invalid number '" + std::string(whole) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Fraction::Fraction(std::int64_t num, std::int64_t den) {
  if (den == 0) throw Error(ErrorKind::Configuration, "fraction with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  num_ = g ? num / g : num;
  den_ = g ? den / g : den;
}

Fraction Fraction::parse(std::string_view text) {
  const std::string_view s = trim(text);
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    return Fraction(parse_int(trim(s.substr(0, slash)), text),
                    parse_int(trim(s.substr(slash + 1)), text));
  }
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view int_part = s.substr(0, dot);
    std::string_view frac_part = s.substr(dot + 1);
    if (frac_part.size() > 15 || (int_part.empty() && frac_part.empty()))
      throw Error(ErrorKind::Configuration, "invalid number '" + std::string(text) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac_part.size(); ++i) den *= 10;
    const std::int64_t whole = int_part.empty() ? 0 : parse_int(int_part, text);
    const std::int64_t frac = frac_part.empty() ? 0 : parse_int(frac_part, text);
    if (frac < 0) throw Error(ErrorKind::Configuration, "invalid number '" + std::string(text) + "'");
    return Fraction(whole * den + (whole < 0 ? -frac : frac), den);
  }
  return Fraction(parse_int(s, text), 1);
}

std::int64_t Fraction::ceil_times(std::int64_t n) const {
  const std::int64_t p = num_ * n;
  std::int64_t q = p / den_;
  if (p % den_ != 0 && p > 0) ++q;
  return q;
}

std::string Fraction::str() const {
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

}  // namespace agser
