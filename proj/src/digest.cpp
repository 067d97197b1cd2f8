#include "gsv/digest.hpp"

#include <openssl/evp.h>

#include <stdexcept>

namespace gsv {

namespace {

EVP_MD_CTX* as_ctx(void* p) { return static_cast<EVP_MD_CTX*>(p); }

}  // namespace

void Digest::CtxDeleter::operator()(void* ctx) const { EVP_MD_CTX_free(as_ctx(ctx)); }

Digest::Digest() : ctx_(EVP_MD_CTX_new()) {
  if (!ctx_ || EVP_DigestInit_ex(as_ctx(ctx_.get()), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 init failed");
  }
}

Digest& Digest::field(std::string_view bytes) {
  std::uint8_t len[8];
  auto n = static_cast<std::uint64_t>(bytes.size());
  for (int i = 7; i >= 0; --i) {
    len[i] = static_cast<std::uint8_t>(n & 0xff);
    n >>= 8;
  }
  EVP_DigestUpdate(as_ctx(ctx_.get()), len, sizeof len);
  EVP_DigestUpdate(as_ctx(ctx_.get()), bytes.data(), bytes.size());
  return *this;
}

std::array<std::uint8_t, 32> Digest::finish() {
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(as_ctx(ctx_.get()), out.data(), &len);
  return out;
}

std::string Digest::finish_hex() {
  static constexpr char kHex[] = "0123456789abcdef";
  const auto bytes = finish();
  std::string out;
  out.reserve(64);
  for (auto b : bytes) {
    out += kHex[b >> 4];
    out += kHex[b & 0xf];
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::array<std::uint8_t, 32> out{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(64);
  for (auto b : out) {
    hex += kHex[b >> 4];
    hex += kHex[b & 0xf];
  }
  return hex;
}

std::string sha256_fields_hex(std::initializer_list<std::string_view> fields) {
  Digest d;
  for (auto f : fields) d.field(f);
  return d.finish_hex();
}

std::uint64_t sha256_fields_u64(std::initializer_list<std::string_view> fields) {
  Digest d;
  for (auto f : fields) d.field(f);
  const auto bytes = d.finish();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
  return v;
}

}  // namespace gsv
