#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "unitychain/group.hpp"
#include "unitychain/hash.hpp"
#include "unitychain/rng.hpp"

namespace unitychain {

/// Node identity: 32-byte public identifier plus a (transparent) public key.
/// Ordering and equality are by identifier bytes only.
struct NodeId {
  Digest32 id{};
  GroupElement public_key;

  friend bool operator==(const NodeId& a, const NodeId& b) {
    return a.id == b.id;
  }
  friend auto operator<=>(const NodeId& a, const NodeId& b) {
    return a.id <=> b.id;
  }

  std::string short_hex() const { return hex(id).substr(0, 8); }
};

/// Deterministic identity for the i-th node of a simulation universe.
inline NodeId make_node_id(std::uint64_t index) {
  NodeId n;
  n.id = HashWriter().tag("unitychain.node").u64(index).finalize();
  n.public_key =
      GroupElement::from_exponent(FieldElement(seed_from_digest(n.id)));
  return n;
}

}  // namespace unitychain
