#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <memory>
#include <string>
#include <string_view>

namespace gsv {

/// SHA-256 over a sequence of fields. Each field is length-prefixed so
/// ("ab", "c") and ("a", "bc") hash differently.
class Digest {
 public:
  Digest();

  Digest& field(std::string_view bytes);
  std::array<std::uint8_t, 32> finish();
  std::string finish_hex();

 private:
  struct CtxDeleter {
    void operator()(void* ctx) const;
  };
  std::unique_ptr<void, CtxDeleter> ctx_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_fields_hex(std::initializer_list<std::string_view> fields);

/// First eight digest bytes as a big-endian integer.
std::uint64_t sha256_fields_u64(std::initializer_list<std::string_view> fields);

}  // namespace gsv
