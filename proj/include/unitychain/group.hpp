#pragma once

#include <array>
#include <compare>
#include <cstdint>

#include "unitychain/field.hpp"

namespace unitychain {

/// Element of a cyclic group of order p = 2^61 - 1, exposed through a
/// multiplicative API (operator*, pow, identity, generator).
///
/// The backend is transparent by design: the group is realized over Z_p, so
/// discrete logarithms are trivial and the simulation oracle can verify
/// aggregate signatures directly. Exponents live in the same GF(p) as the
/// secret-sharing field, which is what makes the commitment and aggregation
/// identities (g^v = prod c_k^{i^k}, aggregate = H(m)^s) exact.
class GroupElement {
 public:
  constexpr GroupElement() = default;  // identity

  static constexpr GroupElement identity() { return GroupElement(); }
  static constexpr GroupElement generator() {
    return GroupElement(FieldElement(7));
  }

  /// g^e for the fixed generator g.
  static constexpr GroupElement from_exponent(FieldElement e) {
    return generator().pow(e);
  }

  /// Group operation.
  friend constexpr GroupElement operator*(GroupElement a, GroupElement b) {
    return GroupElement(a.rep_ + b.rep_);
  }
  GroupElement& operator*=(GroupElement o) { return *this = *this * o; }

  constexpr GroupElement pow(FieldElement e) const {
    return GroupElement(rep_ * e);
  }

  constexpr GroupElement inverse_element() const {
    return GroupElement(FieldElement(0) - rep_);
  }

  /// Canonical 8-byte big-endian encoding.
  std::array<std::uint8_t, 8> encode() const {
    std::array<std::uint8_t, 8> out{};
    std::uint64_t v = rep_.value();
    for (int i = 7; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
      v >>= 8;
    }
    return out;
  }

  static GroupElement decode(const std::array<std::uint8_t, 8>& in) {
    std::uint64_t v = 0;
    for (auto b : in) v = (v << 8) | b;
    return GroupElement(FieldElement(v));
  }

  constexpr std::uint64_t raw() const { return rep_.value(); }

  friend constexpr bool operator==(GroupElement, GroupElement) = default;
  friend constexpr auto operator<=>(GroupElement, GroupElement) = default;

 private:
  constexpr explicit GroupElement(FieldElement rep) : rep_(rep) {}

  FieldElement rep_;
};

}  // namespace unitychain
