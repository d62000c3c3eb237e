#include "tokmod/hash.hpp"

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>

#include "tokmod/errors.hpp"

namespace tokmod {

Hash256 sha256(std::span<const std::uint8_t> bytes) {
    Hash256 out{};
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1) {
        throw std::runtime_error("sha256: digest failure");
    }
    unsigned int len = 0;
    if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
        throw std::runtime_error("sha256: digest failure");
    }
    return out;
}

Hash256 sha256(std::string_view text) {
    return sha256(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

namespace {

int hex_nibble(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::vector<std::uint8_t> from_hex(std::string_view hex) {
    require(hex.size() % 2 == 0, ErrorKind::parameter, "hex string has odd length");
    std::vector<std::uint8_t> out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        int hi = hex_nibble(hex[2 * i]);
        int lo = hex_nibble(hex[2 * i + 1]);
        require(hi >= 0 && lo >= 0, ErrorKind::parameter, "invalid hex digit");
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

Hash256 hash256_from_hex(std::string_view hex) {
    auto bytes = from_hex(hex);
    require(bytes.size() == 32, ErrorKind::parameter, "expected 64 hex characters");
    Hash256 out{};
    std::copy(bytes.begin(), bytes.end(), out.begin());
    return out;
}

} // namespace tokmod
