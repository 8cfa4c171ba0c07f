#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sbs/alba.hpp"
#include "sbs/bytes.hpp"
#include "sbs/vector_commitment.hpp"

namespace sbs {

/// Proof that a parent sample was drawn from a committed per-round array
/// holding at least n_p certificates.
struct SamplingProof {
  Commitment commitment;
  std::map<std::uint32_t, Opening> openings;  // keyed by source index
  AlbaProof alba;

  friend bool operator==(const SamplingProof&, const SamplingProof&) = default;
};

class SamplingError : public std::runtime_error {
 public:
  enum class Code { insufficient_quorum, proof_search_exhausted };
  SamplingError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  [[nodiscard]] Code code() const { return code_; }

 private:
  Code code_;
};

struct Sample {
  std::vector<std::uint32_t> sources;  // distinct, ascending
  SamplingProof proof;
};

/// ALBA seed bound to the commitment.
Digest sampling_seed(const Commitment& c);

/// `prev_round` has one slot per validator, kBottomLeaf where nothing is held.
/// Requires at least `quorum` non-bottom slots.
Sample verifiably_sample(std::span<const Digest> prev_round, std::uint32_t quorum, const AlbaParams& params);

/// Total. `sample` lists (source, certificate digest) pairs in any order.
bool validate_sample(std::span<const std::pair<std::uint32_t, Digest>> sample, const SamplingProof& proof,
                     const AlbaParams& params);

/// Canonical full encoding (hash input for vertex ids).
void encode(ByteWriter& w, const SamplingProof& proof);

/// Bytes on the wire: chain entries travel as source indices because the
/// opened values already carry the digests.
std::size_t wire_size(const SamplingProof& proof);

}  // namespace sbs
