#include "sbs/sampling.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <unordered_map>

namespace sbs {

Digest sampling_seed(const Commitment& c) {
  return Hasher(HashDomain::sampling_seed).update(c.root).update_u32(c.size).finish();
}

Sample verifiably_sample(std::span<const Digest> prev_round, std::uint32_t quorum, const AlbaParams& params) {
  std::vector<Digest> held;
  std::unordered_map<Digest, std::uint32_t, DigestHash> slot_of;
  for (std::uint32_t i = 0; i < prev_round.size(); ++i) {
    if (prev_round[i] == kBottomLeaf) continue;
    held.push_back(prev_round[i]);
    slot_of.emplace(prev_round[i], i);
  }
  if (held.size() < quorum) {
    throw SamplingError(SamplingError::Code::insufficient_quorum,
                        "holding " + std::to_string(held.size()) + " certificates, need " + std::to_string(quorum));
  }

  MerkleTree tree(prev_round);
  Sample out;
  out.proof.commitment = tree.commitment();
  const Digest seed = sampling_seed(out.proof.commitment);
  auto alba = alba_prove(as_seed(seed), held, params);
  if (!alba) {
    throw SamplingError(SamplingError::Code::proof_search_exhausted, "no ALBA chain within d starting indices");
  }
  out.proof.alba = std::move(*alba);
  for (const auto& e : out.proof.alba.chain) {
    const std::uint32_t src = slot_of.at(e);
    if (!out.proof.openings.count(src)) out.proof.openings.emplace(src, tree.open(src));
  }
  for (const auto& [src, _] : out.proof.openings) out.sources.push_back(src);
  return out;
}

bool validate_sample(std::span<const std::pair<std::uint32_t, Digest>> sample, const SamplingProof& proof,
                     const AlbaParams& params) {
  std::set<Digest> opened;
  for (const auto& [src, op] : proof.openings) {
    if (op.index != src || op.value == kBottomLeaf) return false;
    if (!vc_verify(proof.commitment, src, op.value, op)) return false;
    if (!opened.insert(op.value).second) return false;
  }
  const std::set<Digest> chained(proof.alba.chain.begin(), proof.alba.chain.end());
  if (chained != opened) return false;

  std::set<std::pair<std::uint32_t, Digest>> claimed(sample.begin(), sample.end());
  if (claimed.size() != sample.size() || claimed.size() != proof.openings.size()) return false;
  for (const auto& [src, value] : claimed) {
    auto it = proof.openings.find(src);
    if (it == proof.openings.end() || it->second.value != value) return false;
  }
  const Digest seed = sampling_seed(proof.commitment);
  return alba_verify(as_seed(seed), proof.alba, params);
}

void encode(ByteWriter& w, const SamplingProof& proof) {
  w.digest(proof.commitment.root);
  w.u32(proof.commitment.size);
  w.u32(static_cast<std::uint32_t>(proof.openings.size()));
  for (const auto& [src, op] : proof.openings) {
    w.u32(src);
    w.digest(op.value);
    w.u32(static_cast<std::uint32_t>(op.path.size()));
    for (const auto& s : op.path) w.digest(s);
  }
  w.u32(proof.alba.start);
  w.u32(static_cast<std::uint32_t>(proof.alba.chain.size()));
  for (const auto& e : proof.alba.chain) w.digest(e);
}

std::size_t wire_size(const SamplingProof& proof) {
  std::size_t bytes = 32 + 4;  // commitment
  bytes += 4;                  // opening count
  for (const auto& [_, op] : proof.openings) bytes += 4 + 32 + 4 + 32 * op.path.size();
  bytes += 4 + 4 + 4 * proof.alba.chain.size();
  return bytes;
}

}  // namespace sbs
