#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace sbs {

/// 256-bit digest. Every identity, Merkle node and sampling oracle in the
/// library is one of these.
using Digest = std::array<std::uint8_t, 32>;

/// Role tags prepended to every hash input so that values computed for one
/// purpose can never be replayed as another.
enum class HashDomain : std::uint8_t {
  vertex = 0x01,
  merkle_leaf = 0x10,
  merkle_node = 0x11,
  merkle_pad = 0x12,
  alba_bin = 0x20,
  alba_start = 0x21,
  alba_step = 0x22,
  alba_final = 0x23,
  sampling_seed = 0x24,
  config = 0x30,
  rng = 0x31,
};

inline constexpr std::string_view kHashAlgorithm = "SHA-256";

/// Incremental SHA-256. Reusable: finish() resets the context.
class Hasher {
 public:
  Hasher();
  explicit Hasher(HashDomain domain);
  ~Hasher();
  Hasher(Hasher&&) noexcept;
  Hasher& operator=(Hasher&&) noexcept;
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;

  Hasher& reset();
  Hasher& reset(HashDomain domain);
  Hasher& update(std::span<const std::uint8_t> bytes);
  Hasher& update(std::string_view s);
  Hasher& update(const Digest& d) { return update(std::span<const std::uint8_t>(d)); }
  Hasher& update_u8(std::uint8_t v);
  Hasher& update_u32(std::uint32_t v);  // big-endian
  Hasher& update_u64(std::uint64_t v);  // big-endian
  Digest finish();

 private:
  struct Ctx;
  std::unique_ptr<Ctx> ctx_;
};

Digest sha256(std::span<const std::uint8_t> bytes);

/// First eight bytes of the digest as a big-endian integer.
inline std::uint64_t digest_prefix_u64(const Digest& d) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[static_cast<std::size_t>(i)];
  return v;
}

std::string to_hex(const Digest& d);

struct DigestHash {
  std::size_t operator()(const Digest& d) const noexcept {
    std::size_t v;
    std::memcpy(&v, d.data(), sizeof v);
    return v;
  }
};

}  // namespace sbs
