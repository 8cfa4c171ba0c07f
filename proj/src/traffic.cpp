#include "sbs/traffic.hpp"

#include <cmath>

namespace sbs {

std::string_view to_string(Variant v) { return v == Variant::baseline ? "baseline" : "sparse"; }

std::string_view to_string(CryptoScheme s) {
  switch (s) {
    case CryptoScheme::threshold: return "threshold";
    case CryptoScheme::multisig: return "multisig";
    case CryptoScheme::plain: return "plain";
  }
  return "?";
}

std::string_view to_string(VcProofModel m) { return m == VcProofModel::merkle ? "merkle" : "constant"; }

std::string_view to_string(TrafficCategory c) {
  switch (c) {
    case TrafficCategory::vertex_metadata: return "vertex_metadata";
    case TrafficCategory::payload: return "payload";
    case TrafficCategory::broadcast_overhead: return "broadcast_overhead";
    case TrafficCategory::pull_responses: return "pull_responses";
  }
  return "?";
}

Variant parse_variant(std::string_view s) {
  if (s == "baseline") return Variant::baseline;
  if (s == "sparse") return Variant::sparse;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "'");
}

CryptoScheme parse_scheme(std::string_view s) {
  if (s == "threshold") return CryptoScheme::threshold;
  if (s == "multisig") return CryptoScheme::multisig;
  if (s == "plain") return CryptoScheme::plain;
  throw std::invalid_argument("unknown crypto scheme '" + std::string(s) + "'");
}

VcProofModel parse_vc_model(std::string_view s) {
  if (s == "merkle") return VcProofModel::merkle;
  if (s == "constant") return VcProofModel::constant;
  throw std::invalid_argument("unknown vector commitment model '" + std::string(s) + "'");
}

std::size_t certificate_size(CryptoScheme scheme, std::uint32_t n, std::uint32_t lambda) {
  if (n < 4 || lambda < 1) throw std::invalid_argument("certificate_size needs n >= 4 and lambda >= 1");
  const double f = max_faults(n);
  double bits = 0;
  switch (scheme) {
    case CryptoScheme::threshold: bits = calib::kThreshold * lambda; break;
    case CryptoScheme::multisig: bits = n + calib::kMulti * lambda; break;
    case CryptoScheme::plain: bits = (2 * f + 1) * calib::kPlain * lambda; break;
  }
  return static_cast<std::size_t>(std::ceil(bits / 8));
}

std::size_t signature_size(std::uint32_t lambda) {
  return static_cast<std::size_t>(std::ceil(calib::kPlain * lambda / 8));
}

std::size_t constant_proof_size(std::uint32_t n, std::size_t openings) {
  // commitment + aggregated opening + packed index list + ALBA start index
  std::size_t index_bits = 1;
  while ((std::size_t{1} << index_bits) < n) ++index_bits;
  return 2 * calib::kGroupElement + (openings * index_bits + 7) / 8 + 4;
}

std::size_t proof_wire_size(const SamplingProof& proof, const WireModel& m) {
  if (m.vc == VcProofModel::constant) return constant_proof_size(m.n, proof.openings.size());
  return wire_size(proof);
}

VertexSize vertex_wire_size(const Vertex& v, const WireModel& m) {
  VertexSize s;
  s.metadata = calib::kVertexHeader + v.edges().size() * certificate_size(m.scheme, m.n, m.lambda);
  if (v.proof()) s.metadata += proof_wire_size(*v.proof(), m);
  s.payload = m.payload_bytes;
  return s;
}

double table_egress_bytes(Variant variant, CryptoScheme scheme, std::uint32_t n, std::uint32_t lambda) {
  const double c = static_cast<double>(certificate_size(scheme, n, lambda));
  const double f = max_faults(n);
  double per_vertex = 0;
  if (variant == Variant::baseline) {
    per_vertex = (2 * f + 1) * c;
  } else {
    per_vertex = (lambda + 2.0) * c + static_cast<double>(constant_proof_size(n, lambda));
  }
  return (n - 1.0) * per_vertex;
}

void TrafficLedger::record(std::uint32_t validator, Round round, TrafficCategory cat, std::uint64_t bytes) {
  if (validator >= per_validator_.size()) per_validator_.resize(validator + 1);
  auto& rows = per_validator_[validator];
  if (rows.size() <= round) rows.resize(round + 1, Row{});
  rows[round][static_cast<std::size_t>(cat)] += bytes;
}

std::uint64_t TrafficLedger::get(std::uint32_t validator, Round round, TrafficCategory cat) const {
  if (validator >= per_validator_.size() || round >= per_validator_[validator].size()) return 0;
  return per_validator_[validator][round][static_cast<std::size_t>(cat)];
}

std::uint64_t TrafficLedger::validator_total(std::uint32_t validator) const {
  std::uint64_t t = 0;
  if (validator >= per_validator_.size()) return 0;
  for (const auto& row : per_validator_[validator]) {
    for (auto b : row) t += b;
  }
  return t;
}

std::uint64_t TrafficLedger::category_total(TrafficCategory cat) const {
  std::uint64_t t = 0;
  for (const auto& rows : per_validator_) {
    for (const auto& row : rows) t += row[static_cast<std::size_t>(cat)];
  }
  return t;
}

std::uint64_t TrafficLedger::total() const {
  std::uint64_t t = 0;
  for (std::uint32_t v = 0; v < per_validator_.size(); ++v) t += validator_total(v);
  return t;
}

Round TrafficLedger::rounds() const {
  std::size_t r = 0;
  for (const auto& rows : per_validator_) r = std::max(r, rows.size());
  return r;
}

}  // namespace sbs
