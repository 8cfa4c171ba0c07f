#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sbs/dag.hpp"

namespace sbs {

enum class Variant { baseline, sparse };
enum class CryptoScheme { threshold, multisig, plain };
/// How sampling proofs are charged on the wire: the Merkle proof actually
/// carried, or a pairing-style constant-size commitment and aggregated opening.
enum class VcProofModel { merkle, constant };

std::string_view to_string(Variant v);
std::string_view to_string(CryptoScheme s);
std::string_view to_string(VcProofModel m);
/// Throw std::invalid_argument on unknown names.
Variant parse_variant(std::string_view s);
CryptoScheme parse_scheme(std::string_view s);
VcProofModel parse_vc_model(std::string_view s);

/// Size calibration. Signatures and hashes are modeled, not computed.
namespace calib {
inline constexpr double kThreshold = 4.0;  // threshold signature: c_t * lambda bits
inline constexpr double kMulti = 4.0;      // aggregate: c_m * lambda bits + n-bit signer vector
inline constexpr double kPlain = 3.0;      // one plain signature: c_p * lambda bits
inline constexpr std::size_t kVertexHeader = 21;   // round u64, source u32, block len u32, edge count u32, flag u8
inline constexpr std::size_t kMessageHeader = 13;  // kind u8, instance sender u32, seq u64
inline constexpr std::size_t kGroupElement = 48;   // constant-size commitment / aggregated opening
}  // namespace calib

/// Modeled size C of one certified reference, in bytes.
std::size_t certificate_size(CryptoScheme scheme, std::uint32_t n, std::uint32_t lambda);
/// A single signature (echo messages).
std::size_t signature_size(std::uint32_t lambda);

/// Bytes charged for a sampling proof under the constant-size model.
std::size_t constant_proof_size(std::uint32_t n, std::size_t openings);

struct VertexSize {
  std::size_t metadata = 0;  // header + references + proof
  std::size_t payload = 0;
  [[nodiscard]] std::size_t total() const { return metadata + payload; }
};

struct WireModel {
  CryptoScheme scheme = CryptoScheme::threshold;
  VcProofModel vc = VcProofModel::merkle;
  std::uint32_t n = 4;
  std::uint32_t lambda = 128;
  std::size_t payload_bytes = 0;
};

std::size_t proof_wire_size(const SamplingProof& proof, const WireModel& m);
VertexSize vertex_wire_size(const Vertex& v, const WireModel& m);

/// Per-user per-round egress of vertex dissemination, as estimated for the
/// comparison table: every vertex goes to n-1 peers. Baseline vertices carry
/// 2f+1 references; sparse vertices carry D+2 with D = lambda and a
/// constant-size proof.
double table_egress_bytes(Variant variant, CryptoScheme scheme, std::uint32_t n, std::uint32_t lambda);

enum class TrafficCategory : std::uint8_t { vertex_metadata, payload, broadcast_overhead, pull_responses };
inline constexpr std::size_t kTrafficCategories = 4;
std::string_view to_string(TrafficCategory c);

/// Egress bytes per validator, per round, per category.
class TrafficLedger {
 public:
  explicit TrafficLedger(std::uint32_t n = 0) : per_validator_(n) {}

  void record(std::uint32_t validator, Round round, TrafficCategory cat, std::uint64_t bytes);
  [[nodiscard]] std::uint64_t get(std::uint32_t validator, Round round, TrafficCategory cat) const;
  [[nodiscard]] std::uint64_t validator_total(std::uint32_t validator) const;
  [[nodiscard]] std::uint64_t category_total(TrafficCategory cat) const;
  [[nodiscard]] std::uint64_t total() const;
  [[nodiscard]] Round rounds() const;
  [[nodiscard]] std::uint32_t validators() const { return static_cast<std::uint32_t>(per_validator_.size()); }

 private:
  using Row = std::array<std::uint64_t, kTrafficCategories>;
  std::vector<std::vector<Row>> per_validator_;
};

}  // namespace sbs
