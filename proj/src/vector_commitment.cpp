#include "sbs/vector_commitment.hpp"

#include <string>

namespace sbs {

std::uint32_t merkle_depth(std::uint32_t n) {
  std::uint32_t depth = 0;
  while ((std::uint64_t{1} << depth) < n) ++depth;
  return depth;
}

Digest merkle_leaf_hash(const Digest& value) {
  thread_local Hasher h;
  return h.reset(HashDomain::merkle_leaf).update(value).finish();
}

Digest merkle_node_hash(const Digest& left, const Digest& right) {
  thread_local Hasher h;
  return h.reset(HashDomain::merkle_node).update(left).update(right).finish();
}

Digest merkle_pad_hash() {
  static const Digest pad = Hasher(HashDomain::merkle_pad).finish();
  return pad;
}

MerkleTree::MerkleTree(std::span<const Digest> leaves)
    : n_(static_cast<std::uint32_t>(leaves.size())), values_(leaves.begin(), leaves.end()) {
  if (leaves.empty()) throw VcError(VcError::Code::wrong_length, "vector commitment over an empty array");
  const std::uint32_t width = 1u << merkle_depth(n_);
  std::vector<Digest> level(width, merkle_pad_hash());
  for (std::uint32_t i = 0; i < n_; ++i) level[i] = merkle_leaf_hash(values_[i]);
  levels_.push_back(std::move(level));
  while (levels_.back().size() > 1) {
    const auto& below = levels_.back();
    std::vector<Digest> up(below.size() / 2);
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = merkle_node_hash(below[2 * i], below[2 * i + 1]);
    levels_.push_back(std::move(up));
  }
}

Commitment MerkleTree::commitment() const { return Commitment{levels_.back()[0], n_}; }

Opening MerkleTree::open(std::uint32_t i) const {
  if (i >= n_) {
    throw VcError(VcError::Code::index_out_of_range,
                  "opening index " + std::to_string(i) + " outside array of " + std::to_string(n_));
  }
  Opening o{i, values_[i], {}};
  std::uint32_t idx = i;
  for (std::size_t lvl = 0; lvl + 1 < levels_.size(); ++lvl) {
    o.path.push_back(levels_[lvl][idx ^ 1u]);
    idx >>= 1;
  }
  return o;
}

Commitment vc_commit(std::span<const Digest> leaves, std::size_t n) {
  if (leaves.size() != n || n == 0) {
    throw VcError(VcError::Code::wrong_length,
                  "expected " + std::to_string(n) + " slots, got " + std::to_string(leaves.size()));
  }
  return MerkleTree(leaves).commitment();
}

Opening vc_prove(std::span<const Digest> leaves, std::uint32_t i) {
  if (i >= leaves.size()) {
    throw VcError(VcError::Code::index_out_of_range, "opening index out of range");
  }
  return MerkleTree(leaves).open(i);
}

bool vc_verify(const Commitment& c, std::uint32_t i, const Digest& value, const Opening& opening) {
  if (c.size == 0 || i >= c.size || opening.index != i || opening.value != value) return false;
  if (opening.path.size() != merkle_depth(c.size)) return false;
  Digest acc = merkle_leaf_hash(value);
  std::uint32_t idx = i;
  for (const auto& sibling : opening.path) {
    acc = (idx & 1u) ? merkle_node_hash(sibling, acc) : merkle_node_hash(acc, sibling);
    idx >>= 1;
  }
  return acc == c.root;
}

}  // namespace sbs
