#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "sbs/hash.hpp"

namespace sbs {

/// Telescope ALBA parameters.
///
/// A proof is a start index t < d and a chain of u elements. Each element is
/// binned once per seed; the chain extends a prefix with element e only when
/// e's bin equals the prefix hash modulo n_p, so every extension succeeds with
/// probability 1/n_p and a prover holding m elements expects m/n_p children
/// per prefix. An adversary holding n_f elements therefore finds a valid
/// chain with probability at most d * (n_f/n_p)^u * q.
struct AlbaParams {
  std::uint32_t n_p = 0;     ///< honest-set lower bound
  std::uint32_t n_f = 0;     ///< adversarial-set upper bound
  std::uint32_t u = 0;       ///< chain length (sample size)
  std::uint32_t d = 0;       ///< number of starting indices
  double q = 1.0;            ///< final-test pass probability
  std::uint32_t lambda = 0;  ///< soundness bits actually achieved

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;

  /// d * (n_f/n_p)^u * q
  [[nodiscard]] double soundness_bound() const;

  /// Smallest u (and, for that u, smallest d reaching 1 - 2^-lambda_complete
  /// completeness) with soundness_bound() <= 2^-lambda_sound.
  static AlbaParams tune(std::uint32_t n_p, std::uint32_t n_f, std::uint32_t lambda_sound,
                         std::uint32_t lambda_complete, double q = 1.0);

  /// Fixed chain length u; d chosen for completeness only.
  static AlbaParams for_chain_length(std::uint32_t n_p, std::uint32_t n_f, std::uint32_t u,
                                     std::uint32_t lambda_complete, double q = 1.0);

  friend bool operator==(const AlbaParams&, const AlbaParams&) = default;
};

/// Probability that one starting index yields a valid chain for an honest
/// prover with `set_size` elements: Galton-Watson survival to depth u with
/// Binomial(set_size, 1/n_p) offspring, followed by the final q-test.
double alba_start_success(std::uint32_t set_size, std::uint32_t n_p, std::uint32_t u, double q);

/// Smallest d such that (1 - alba_start_success)^d <= 2^-lambda_complete.
std::uint32_t alba_starts_for_completeness(std::uint32_t n_p, std::uint32_t u, double q,
                                           std::uint32_t lambda_complete);

struct AlbaProof {
  std::uint32_t start = 0;
  std::vector<Digest> chain;

  friend bool operator==(const AlbaProof&, const AlbaProof&) = default;
};

/// Depth-first proof search over starts 0..d-1. Deterministic in
/// (seed, set of elements, params); duplicates in `elements` are ignored.
/// Returns nullopt when every start is exhausted.
std::optional<AlbaProof> alba_prove(std::span<const std::uint8_t> seed, std::span<const Digest> elements,
                                    const AlbaParams& params);

/// Total: never throws on malformed proofs.
bool alba_verify(std::span<const std::uint8_t> seed, const AlbaProof& proof, const AlbaParams& params);

inline std::span<const std::uint8_t> as_seed(const Digest& d) { return {d.data(), d.size()}; }

}  // namespace sbs
