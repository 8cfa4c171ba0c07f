#include "sbs/hash.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace sbs {
namespace {

const EVP_MD* sha256_md() {
  static EVP_MD* md = [] {
    EVP_MD* m = EVP_MD_fetch(nullptr, "SHA256", nullptr);
    if (m == nullptr) throw std::runtime_error("OpenSSL: SHA256 unavailable");
    return m;
  }();
  return md;
}

}  // namespace

struct Hasher::Ctx {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  ~Ctx() { EVP_MD_CTX_free(ctx); }
};

Hasher::Hasher() : ctx_(std::make_unique<Ctx>()) {
  if (ctx_->ctx == nullptr) throw std::runtime_error("OpenSSL: EVP_MD_CTX_new failed");
  reset();
}

Hasher::Hasher(HashDomain domain) : Hasher() { update_u8(static_cast<std::uint8_t>(domain)); }

Hasher::~Hasher() = default;
Hasher::Hasher(Hasher&&) noexcept = default;
Hasher& Hasher::operator=(Hasher&&) noexcept = default;

Hasher& Hasher::reset() {
  EVP_DigestInit_ex2(ctx_->ctx, sha256_md(), nullptr);
  return *this;
}

Hasher& Hasher::reset(HashDomain domain) {
  reset();
  return update_u8(static_cast<std::uint8_t>(domain));
}

Hasher& Hasher::update(std::span<const std::uint8_t> bytes) {
  if (!bytes.empty()) EVP_DigestUpdate(ctx_->ctx, bytes.data(), bytes.size());
  return *this;
}

Hasher& Hasher::update(std::string_view s) {
  return update(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

Hasher& Hasher::update_u8(std::uint8_t v) {
  EVP_DigestUpdate(ctx_->ctx, &v, 1);
  return *this;
}

Hasher& Hasher::update_u32(std::uint32_t v) {
  std::uint8_t b[4] = {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
                       static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
  EVP_DigestUpdate(ctx_->ctx, b, 4);
  return *this;
}

Hasher& Hasher::update_u64(std::uint64_t v) {
  std::uint8_t b[8];
  for (int i = 7; i >= 0; --i) {
    b[i] = static_cast<std::uint8_t>(v);
    v >>= 8;
  }
  EVP_DigestUpdate(ctx_->ctx, b, 8);
  return *this;
}

Digest Hasher::finish() {
  Digest out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx_->ctx, out.data(), &len);
  reset();
  return out;
}

Digest sha256(std::span<const std::uint8_t> bytes) {
  thread_local Hasher h;
  return h.update(bytes).finish();
}

std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

}  // namespace sbs
