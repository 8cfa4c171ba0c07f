#include "sbs/alba.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace sbs {
namespace {

std::uint64_t final_threshold(double q) {
  if (q >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ldexp(q, 64));
}

class Oracle {
 public:
  Oracle(std::span<const std::uint8_t> seed, std::uint32_t n_p) : seed_(seed), n_p_(n_p) {}

  std::uint32_t bin(const Digest& e) {
    h_.reset(HashDomain::alba_bin).update(seed_).update(e);
    return static_cast<std::uint32_t>(digest_prefix_u64(h_.finish()) % n_p_);
  }
  Digest start(std::uint32_t t) {
    return h_.reset(HashDomain::alba_start).update(seed_).update_u32(t).finish();
  }
  Digest step(const Digest& prefix, const Digest& e) {
    return h_.reset(HashDomain::alba_step).update(prefix).update(e).finish();
  }
  std::uint32_t target(const Digest& prefix) const {
    return static_cast<std::uint32_t>(digest_prefix_u64(prefix) % n_p_);
  }
  bool final_ok(const Digest& prefix, std::uint64_t threshold) {
    if (threshold == std::numeric_limits<std::uint64_t>::max()) return true;
    return digest_prefix_u64(h_.reset(HashDomain::alba_final).update(prefix).finish()) < threshold;
  }

 private:
  std::span<const std::uint8_t> seed_;
  std::uint32_t n_p_;
  Hasher h_;
};

}  // namespace

void AlbaParams::validate() const {
  if (!(n_p > n_f && n_f >= 1)) throw std::invalid_argument("ALBA: need n_p > n_f >= 1");
  if (u < 1 || d < 1) throw std::invalid_argument("ALBA: need u >= 1 and d >= 1");
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("ALBA: need 0 < q <= 1");
}

double AlbaParams::soundness_bound() const {
  return static_cast<double>(d) * std::pow(static_cast<double>(n_f) / n_p, u) * q;
}

double alba_start_success(std::uint32_t set_size, std::uint32_t n_p, std::uint32_t u, double q) {
  // p_i: probability that a valid prefix of length i completes. p_u = q.
  double p = q;
  for (std::uint32_t i = 0; i < u; ++i) {
    p = 1.0 - std::pow(1.0 - p / n_p, static_cast<double>(set_size));
  }
  return p;
}

std::uint32_t alba_starts_for_completeness(std::uint32_t n_p, std::uint32_t u, double q,
                                           std::uint32_t lambda_complete) {
  const double p = alba_start_success(n_p, n_p, u, q);
  if (p >= 1.0) return 1;
  const double d = lambda_complete * std::log(2.0) / -std::log1p(-p);
  return std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(d)));
}

AlbaParams AlbaParams::tune(std::uint32_t n_p, std::uint32_t n_f, std::uint32_t lambda_sound,
                            std::uint32_t lambda_complete, double q) {
  const double target = std::ldexp(1.0, -static_cast<int>(lambda_sound));
  for (std::uint32_t u = 1; u <= 100000; ++u) {
    AlbaParams p{n_p, n_f, u, alba_starts_for_completeness(n_p, u, q, lambda_complete), q, lambda_sound};
    p.validate();
    if (p.soundness_bound() <= target) return p;
  }
  throw std::invalid_argument("ALBA: no chain length reaches the soundness target");
}

AlbaParams AlbaParams::for_chain_length(std::uint32_t n_p, std::uint32_t n_f, std::uint32_t u,
                                        std::uint32_t lambda_complete, double q) {
  AlbaParams p{n_p, n_f, u, alba_starts_for_completeness(n_p, u, q, lambda_complete), q, 0};
  p.validate();
  p.lambda = static_cast<std::uint32_t>(std::max(0.0, std::floor(-std::log2(p.soundness_bound()))));
  return p;
}

std::optional<AlbaProof> alba_prove(std::span<const std::uint8_t> seed, std::span<const Digest> elements,
                                    const AlbaParams& params) {
  params.validate();
  std::vector<Digest> set(elements.begin(), elements.end());
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  if (set.empty()) return std::nullopt;

  Oracle oracle(seed, params.n_p);
  std::vector<std::vector<std::uint32_t>> bins(params.n_p);
  for (std::uint32_t i = 0; i < set.size(); ++i) bins[oracle.bin(set[i])].push_back(i);

  const std::uint64_t threshold = final_threshold(params.q);
  std::vector<std::uint32_t> chain(params.u);
  std::vector<Digest> prefix(params.u + 1);

  // Explicit-stack DFS; cursor[i] is the next bin entry to try at depth i.
  std::vector<std::uint32_t> cursor(params.u + 1);
  std::vector<const std::vector<std::uint32_t>*> candidates(params.u + 1);
  for (std::uint32_t t = 0; t < params.d; ++t) {
    prefix[0] = oracle.start(t);
    std::uint32_t depth = 0;
    candidates[0] = &bins[oracle.target(prefix[0])];
    cursor[0] = 0;
    while (true) {
      if (depth == params.u) {
        if (oracle.final_ok(prefix[depth], threshold)) {
          AlbaProof proof{t, {}};
          proof.chain.reserve(params.u);
          for (auto idx : chain) proof.chain.push_back(set[idx]);
          return proof;
        }
        --depth;
        continue;
      }
      const auto& cand = *candidates[depth];
      if (cursor[depth] >= cand.size()) {
        if (depth == 0) break;
        --depth;
        continue;
      }
      const std::uint32_t idx = cand[cursor[depth]++];
      chain[depth] = idx;
      prefix[depth + 1] = oracle.step(prefix[depth], set[idx]);
      ++depth;
      if (depth < params.u) {
        candidates[depth] = &bins[oracle.target(prefix[depth])];
        cursor[depth] = 0;
      }
    }
  }
  return std::nullopt;
}

bool alba_verify(std::span<const std::uint8_t> seed, const AlbaProof& proof, const AlbaParams& params) {
  if (params.n_p == 0 || params.u == 0) return false;
  if (proof.start >= params.d || proof.chain.size() != params.u) return false;
  Oracle oracle(seed, params.n_p);
  Digest prefix = oracle.start(proof.start);
  for (const auto& e : proof.chain) {
    if (oracle.bin(e) != oracle.target(prefix)) return false;
    prefix = oracle.step(prefix, e);
  }
  return oracle.final_ok(prefix, final_threshold(params.q));
}

}  // namespace sbs
