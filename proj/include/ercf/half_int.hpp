#pragma once

#include <cmath>
#include <compare>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ercf {

/// Angular-momentum quantum number restricted to multiples of 1/2.
///
/// Stored as twice its value so that arithmetic stays exact.
class HalfInt {
public:
  constexpr HalfInt() = default;
  constexpr HalfInt(int value) : twice_(2 * value) {}  // NOLINT: implicit from integers is intended

  static constexpr HalfInt from_twice(int twice) {
    HalfInt h;
    h.twice_ = twice;
    return h;
  }

  /// Builds a value from a double that must be an exact multiple of 1/2.
  static HalfInt from_double(double value) {
    const double doubled = 2.0 * value;
    const long rounded = std::lround(doubled);
    if (static_cast<double>(rounded) != doubled) {
      throw std::domain_error("HalfInt: " + std::to_string(value) + " is not a multiple of 1/2");
    }
    return from_twice(static_cast<int>(rounded));
  }

  /// Parses "7", "-3" or "15/2".
  static HalfInt parse(const std::string& text) {
    const auto slash = text.find('/');
    try {
      std::size_t used = 0;
      if (slash == std::string::npos) {
        const int v = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return HalfInt(v);
      }
      if (text.substr(slash + 1) != "2") throw std::invalid_argument(text);
      const std::string num = text.substr(0, slash);
      const int v = std::stoi(num, &used);
      if (used != num.size()) throw std::invalid_argument(text);
      return from_twice(v);
    } catch (const std::logic_error&) {
      throw std::domain_error("HalfInt: cannot parse '" + text + "'");
    }
  }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }

  /// Number of magnetic substates, 2j+1.
  constexpr int multiplicity() const { return twice_ + 1; }

  constexpr HalfInt operator-() const { return from_twice(-twice_); }
  constexpr HalfInt& operator+=(HalfInt o) {
    twice_ += o.twice_;
    return *this;
  }
  constexpr HalfInt& operator-=(HalfInt o) {
    twice_ -= o.twice_;
    return *this;
  }
  friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return a += b; }
  friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return a -= b; }
  friend constexpr auto operator<=>(HalfInt, HalfInt) = default;

  std::string str() const {
    if (is_integer()) return std::to_string(twice_ / 2);
    return std::to_string(twice_) + "/2";
  }

private:
  int twice_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, HalfInt h) { return os << h.str(); }

constexpr HalfInt abs(HalfInt h) { return h.twice() < 0 ? -h : h; }

/// True when j + m is an integer, i.e. m is an allowed projection parity for j.
constexpr bool same_parity(HalfInt j, HalfInt m) { return (j.twice() - m.twice()) % 2 == 0; }

/// Projections -j, -j+1, ..., +j (2j+1 entries).
inline std::vector<HalfInt> m_range(HalfInt j) {
  if (j.twice() < 0) throw std::domain_error("m_range: negative j");
  std::vector<HalfInt> out;
  out.reserve(static_cast<std::size_t>(j.multiplicity()));
  for (int tm = -j.twice(); tm <= j.twice(); tm += 2) out.push_back(HalfInt::from_twice(tm));
  return out;
}

}  // namespace ercf
