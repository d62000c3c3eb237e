#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tokmod {

using Hash256 = std::array<std::uint8_t, 32>;

// SHA-256 over raw bytes (OpenSSL libcrypto under the hood).
Hash256 sha256(std::span<const std::uint8_t> bytes);
Hash256 sha256(std::string_view text);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

inline std::string to_hex(const Hash256& h) {
    return to_hex(std::span<const std::uint8_t>(h.data(), h.size()));
}

Hash256 hash256_from_hex(std::string_view hex);

} // namespace tokmod
