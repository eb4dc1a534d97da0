#pragma once

#include <cstdint>
#include <compare>

namespace unitychain {

/// Arithmetic in GF(p) with p = 2^61 - 1 (Mersenne prime).
/// All values are kept reduced; operations never overflow via 128-bit
/// intermediates.
class FieldElement {
 public:
  static constexpr std::uint64_t kModulus = 2305843009213693951ULL;  // 2^61 - 1

  constexpr FieldElement() = default;
  constexpr explicit FieldElement(std::uint64_t v) : value_(v % kModulus) {}

  constexpr std::uint64_t value() const { return value_; }

  friend constexpr FieldElement operator+(FieldElement a, FieldElement b) {
    std::uint64_t s = a.value_ + b.value_;  // < 2^62, no overflow
    if (s >= kModulus) s -= kModulus;
    return from_reduced(s);
  }

  friend constexpr FieldElement operator-(FieldElement a, FieldElement b) {
    std::uint64_t s = a.value_ >= b.value_ ? a.value_ - b.value_
                                           : a.value_ + kModulus - b.value_;
    return from_reduced(s);
  }

  friend constexpr FieldElement operator*(FieldElement a, FieldElement b) {
    unsigned __int128 p = static_cast<unsigned __int128>(a.value_) * b.value_;
    return from_reduced(static_cast<std::uint64_t>(p % kModulus));
  }

  FieldElement& operator+=(FieldElement o) { return *this = *this + o; }
  FieldElement& operator-=(FieldElement o) { return *this = *this - o; }
  FieldElement& operator*=(FieldElement o) { return *this = *this * o; }

  constexpr FieldElement pow(std::uint64_t e) const {
    FieldElement base = *this;
    FieldElement acc(1);
    while (e) {
      if (e & 1) acc *= base;
      base *= base;
      e >>= 1;
    }
    return acc;
  }

  /// Multiplicative inverse; undefined for zero.
  constexpr FieldElement inverse() const { return pow(kModulus - 2); }

  constexpr bool is_zero() const { return value_ == 0; }

  friend constexpr bool operator==(FieldElement, FieldElement) = default;
  friend constexpr auto operator<=>(FieldElement, FieldElement) = default;

 private:
  static constexpr FieldElement from_reduced(std::uint64_t v) {
    FieldElement e;
    e.value_ = v;
    return e;
  }

  std::uint64_t value_ = 0;
};

}  // namespace unitychain
