#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "sbs/alba.hpp"
#include "sbs/hash.hpp"
#include "sbs/rng.hpp"
#include "sbs/sampling.hpp"
#include "sbs/vector_commitment.hpp"

using namespace sbs;

namespace {

Digest digest_of(std::uint64_t x) {
  Hasher h(HashDomain::rng);
  h.update_u64(x);
  return h.finish();
}

std::vector<Digest> digests(std::uint32_t n, std::uint64_t salt) {
  std::vector<Digest> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(digest_of(salt * 1'000'003 + i));
  return out;
}

// Chain check written from the scheme description, independent of alba.cpp.
bool chain_ok(const Digest& seed, const AlbaProof& p, const AlbaParams& a) {
  if (p.start >= a.d || p.chain.size() != a.u) return false;
  Hasher h(HashDomain::alba_start);
  h.update(seed).update_u32(p.start);
  Digest prefix = h.finish();
  for (const auto& e : p.chain) {
    Hasher b(HashDomain::alba_bin);
    b.update(seed).update(e);
    if (digest_prefix_u64(b.finish()) % a.n_p != digest_prefix_u64(prefix) % a.n_p) return false;
    Hasher s(HashDomain::alba_step);
    s.update(prefix).update(e);
    prefix = s.finish();
  }
  return true;
}

}  // namespace

TEST_CASE("sha256 known answer") {
  Hasher h;
  h.update(std::string_view("abc"));
  CHECK(to_hex(h.finish()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  Hasher empty;
  CHECK(to_hex(empty.finish()) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("hash domains separate identical payloads") {
  Hasher a(HashDomain::merkle_leaf), b(HashDomain::merkle_node);
  a.update_u32(7);
  b.update_u32(7);
  CHECK(a.finish() != b.finish());
}

TEST_CASE("merkle depth") {
  CHECK(merkle_depth(1) == 0);
  CHECK(merkle_depth(2) == 1);
  CHECK(merkle_depth(3) == 2);
  CHECK(merkle_depth(100) == 7);
  CHECK(merkle_depth(128) == 7);
  CHECK(merkle_depth(129) == 8);
}

TEST_CASE("merkle root matches a hand-built tree") {
  const auto leaves = digests(3, 1);
  auto leaf = [](const Digest& v) {
    Hasher h(HashDomain::merkle_leaf);
    h.update(v);
    return h.finish();
  };
  auto node = [](const Digest& l, const Digest& r) {
    Hasher h(HashDomain::merkle_node);
    h.update(l).update(r);
    return h.finish();
  };
  const Digest pad = Hasher(HashDomain::merkle_pad).finish();
  const Digest root = node(node(leaf(leaves[0]), leaf(leaves[1])), node(leaf(leaves[2]), pad));
  CHECK(vc_commit(leaves, 3).root == root);
  CHECK(vc_commit(leaves, 3).size == 3);
}

TEST_CASE("vector commitment openings") {
  for (std::uint32_t n : {1u, 2u, 5u, 16u, 33u}) {
    const auto leaves = digests(n, n);
    const Commitment c = vc_commit(leaves, n);
    for (std::uint32_t i = 0; i < n; ++i) {
      const Opening o = vc_prove(leaves, i);
      CHECK(o.path.size() == merkle_depth(n));
      CHECK(vc_verify(c, i, leaves[i], o));
      CHECK_FALSE(vc_verify(c, i, digest_of(999), o));
      if (n > 1) CHECK_FALSE(vc_verify(c, (i + 1) % n, leaves[i], o));
      Opening bad = o;
      if (!bad.path.empty()) {
        bad.path[0][0] ^= 1;
        CHECK_FALSE(vc_verify(c, i, leaves[i], bad));
        bad.path.pop_back();
        CHECK_FALSE(vc_verify(c, i, leaves[i], bad));
      }
    }
  }
  const auto leaves = digests(4, 9);
  CHECK_THROWS_AS(vc_commit(leaves, 5), VcError);
  CHECK_THROWS_AS(vc_prove(leaves, 4), VcError);
  CHECK_FALSE(vc_verify(vc_commit(leaves, 4), 9, leaves[0], vc_prove(leaves, 0)));
}

TEST_CASE("alba branching recurrence") {
  // One step with q = 1: a prefix survives if any of m elements lands in its bin.
  CHECK(alba_start_success(21, 21, 1, 1.0) == doctest::Approx(1.0 - std::pow(20.0 / 21.0, 21)));
  // Survival decreases with depth and increases with the set size.
  CHECK(alba_start_success(21, 21, 10, 1.0) < alba_start_success(21, 21, 5, 1.0));
  CHECK(alba_start_success(30, 21, 10, 1.0) > alba_start_success(21, 21, 10, 1.0));
  // Subcritical branching dies out geometrically.
  CHECK(alba_start_success(10, 21, 20, 1.0) < std::pow(10.0 / 21.0, 20) * 1.0001);
}

TEST_CASE("alba tuning meets both targets") {
  const AlbaParams p = AlbaParams::tune(21, 10, 10, 20);
  CHECK(p.soundness_bound() <= std::ldexp(1.0, -10));
  const double fail = std::pow(1.0 - alba_start_success(21, 21, p.u, p.q), p.d);
  CHECK(fail <= std::ldexp(1.0, -20) * 1.0001);
  // u is minimal: one step shorter cannot reach the soundness target.
  if (p.u > 1) {
    AlbaParams shorter = p;
    shorter.u = p.u - 1;
    shorter.d = alba_starts_for_completeness(21, shorter.u, p.q, 20);
    CHECK(shorter.soundness_bound() > std::ldexp(1.0, -10));
  }
  CHECK(p.lambda >= 10);
  CHECK_THROWS(AlbaParams::tune(10, 10, 10, 20));
}

TEST_CASE("alba prove and verify") {
  const AlbaParams p = AlbaParams::for_chain_length(21, 10, 8, 20);
  int found = 0;
  for (std::uint64_t t = 0; t < 40; ++t) {
    const Digest seed = digest_of(5000 + t);
    const auto set = digests(21, 100 + t);
    const auto proof = alba_prove(as_seed(seed), set, p);
    if (!proof) continue;
    ++found;
    CHECK(alba_verify(as_seed(seed), *proof, p));
    CHECK(chain_ok(seed, *proof, p));
    for (const auto& e : proof->chain) CHECK(std::find(set.begin(), set.end(), e) != set.end());
    // Duplicates and order of the input set do not matter.
    auto shuffled = set;
    std::reverse(shuffled.begin(), shuffled.end());
    shuffled.push_back(set[0]);
    CHECK(alba_prove(as_seed(seed), shuffled, p) == proof);
    AlbaProof bad = *proof;
    bad.chain.back()[3] ^= 0x40;
    CHECK_FALSE(alba_verify(as_seed(seed), bad, p));
    bad = *proof;
    bad.chain.pop_back();
    CHECK_FALSE(alba_verify(as_seed(seed), bad, p));
    bad = *proof;
    bad.start = p.d;
    CHECK_FALSE(alba_verify(as_seed(seed), bad, p));
    CHECK_FALSE(alba_verify(as_seed(digest_of(1)), *proof, p));
  }
  CHECK(found == 40);
}

TEST_CASE("verifiable sampling round trip") {
  const std::uint32_t n = 16, quorum = 11;
  const AlbaParams p = AlbaParams::for_chain_length(quorum, 5, 6, 20);
  auto prev = digests(n, 77);
  prev[3] = kBottomLeaf;
  prev[9] = kBottomLeaf;
  const Sample s = verifiably_sample(prev, quorum, p);
  CHECK(std::is_sorted(s.sources.begin(), s.sources.end()));
  CHECK(s.sources.size() <= p.u);
  CHECK(s.proof.openings.size() == s.sources.size());
  std::vector<std::pair<std::uint32_t, Digest>> pairs;
  for (auto src : s.sources) {
    CHECK(prev[src] != kBottomLeaf);
    pairs.emplace_back(src, prev[src]);
  }
  CHECK(validate_sample(pairs, s.proof, p));
  std::reverse(pairs.begin(), pairs.end());
  CHECK(validate_sample(pairs, s.proof, p));

  SUBCASE("claimed value must match the opening") {
    auto bad = pairs;
    bad[0].second = digest_of(1);
    CHECK_FALSE(validate_sample(bad, s.proof, p));
  }
  SUBCASE("every opened slot must be claimed") {
    auto bad = pairs;
    bad.pop_back();
    CHECK_FALSE(validate_sample(bad, s.proof, p));
  }
  SUBCASE("proof under a different commitment fails") {
    SamplingProof other = s.proof;
    other.commitment.root[0] ^= 1;
    CHECK_FALSE(validate_sample(pairs, other, p));
  }
  SUBCASE("bottom slots cannot be sampled") {
    SamplingProof other = s.proof;
    const auto victim = other.openings.begin()->first;
    other.openings.erase(victim);
    other.openings[3] = vc_prove(prev, 3);
    auto bad = pairs;
    for (auto& [src, d] : bad)
      if (src == victim) src = 3, d = kBottomLeaf;
    CHECK_FALSE(validate_sample(bad, other, p));
  }
  CHECK(wire_size(s.proof) ==
        36 + 4 + s.proof.openings.size() * (40 + 32 * merkle_depth(n)) + 8 + 4 * s.proof.alba.chain.size());
}

TEST_CASE("sampling needs a quorum") {
  const AlbaParams p = AlbaParams::for_chain_length(11, 5, 6, 20);
  auto prev = digests(16, 3);
  for (std::uint32_t i = 0; i < 6; ++i) prev[i] = kBottomLeaf;
  try {
    (void)verifiably_sample(prev, 11, p);
    FAIL("expected SamplingError");
  } catch (const SamplingError& e) {
    CHECK(e.code() == SamplingError::Code::insufficient_quorum);
  }
}

TEST_CASE("sampled sources are roughly uniform over the quorum") {
  // Chi-square style sanity bound: with 400 draws of u = 6 from 11 holders,
  // each holder should appear in about 1 - (10/11)^6 of samples.
  const std::uint32_t n = 11;
  const AlbaParams p = AlbaParams::for_chain_length(n, 3, 6, 20);
  std::vector<int> hits(n, 0);
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    const Sample s = verifiably_sample(digests(n, 9000 + t), n, p);
    for (auto src : s.sources) ++hits[src];
  }
  const double expect = trials * (1.0 - std::pow(10.0 / 11.0, 6));
  for (int h : hits) CHECK(std::abs(h - expect) < 5.0 * std::sqrt(expect));
}

TEST_CASE("rng streams are independent and reproducible") {
  Rng a(1, Stream::latency, 0), b(1, Stream::latency, 0), c(1, Stream::latency, 1), d(2, Stream::latency, 0);
  const auto x = a.next();
  CHECK(x == b.next());
  CHECK(x != c.next());
  CHECK(x != d.next());
  Rng r(5, Stream::test);
  double sum = 0, sq = 0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    const double v = r.normal(50.0, 10.0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / N;
  CHECK(mean == doctest::Approx(50.0).epsilon(0.01));
  CHECK(std::sqrt(sq / N - mean * mean) == doctest::Approx(10.0).epsilon(0.03));
  std::set<std::uint32_t> picked;
  for (auto i : r.sample(20, 7)) picked.insert(i);
  CHECK(picked.size() == 7);
  CHECK(*picked.rbegin() < 20);
}
