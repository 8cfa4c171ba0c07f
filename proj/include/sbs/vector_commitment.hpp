#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sbs/hash.hpp"

namespace sbs {

/// Leaf value committed for an empty slot. Certificate digests are SHA-256
/// outputs, so the all-zero value never collides with a real one in practice.
inline constexpr Digest kBottomLeaf{};

/// Binding digest of an n-slot array (Merkle root plus the slot count).
struct Commitment {
  Digest root{};
  std::uint32_t size = 0;

  friend bool operator==(const Commitment&, const Commitment&) = default;
};

/// Authentication path for one slot. `path` lists sibling hashes bottom-up.
struct Opening {
  std::uint32_t index = 0;
  Digest value{};
  std::vector<Digest> path;

  friend bool operator==(const Opening&, const Opening&) = default;
};

class VcError : public std::runtime_error {
 public:
  enum class Code { wrong_length, index_out_of_range };
  VcError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] Code code() const { return code_; }

 private:
  Code code_;
};

/// Number of sibling hashes in an opening for an n-slot array: ceil(log2 n).
std::uint32_t merkle_depth(std::uint32_t n);

/// Merkle tree over an n-slot array, padded to the next power of two with a
/// dedicated padding leaf. Build once, open many slots.
class MerkleTree {
 public:
  explicit MerkleTree(std::span<const Digest> leaves);

  [[nodiscard]] Commitment commitment() const;
  [[nodiscard]] Opening open(std::uint32_t i) const;
  [[nodiscard]] std::uint32_t size() const { return n_; }

 private:
  std::uint32_t n_;
  std::vector<Digest> values_;
  std::vector<std::vector<Digest>> levels_;  // levels_[0] = hashed leaves
};

Digest merkle_leaf_hash(const Digest& value);
Digest merkle_node_hash(const Digest& left, const Digest& right);
Digest merkle_pad_hash();

/// VC.Commit. Throws VcError::wrong_length when leaves.size() != n or n == 0.
Commitment vc_commit(std::span<const Digest> leaves, std::size_t n);
/// VC.Proof. Throws VcError::index_out_of_range.
Opening vc_prove(std::span<const Digest> leaves, std::uint32_t i);
/// VC.Verify. Total: malformed input yields false.
bool vc_verify(const Commitment& c, std::uint32_t i, const Digest& value, const Opening& opening);

}  // namespace sbs
