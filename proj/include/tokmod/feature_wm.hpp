#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tokmod/ml.hpp"

namespace tokmod::wm {

// n-bit watermark string; the unit stored in tokens and codebooks.
struct WatermarkBits {
    std::vector<std::uint8_t> bits; // each 0 or 1

    std::size_t size() const { return bits.size(); }

    // Lowercase hex, big-endian bit packing, zero-padded to ceil(n/8) bytes.
    std::string to_hex() const;
    static WatermarkBits from_hex(const std::string& hex, std::size_t n);

    bool operator==(const WatermarkBits&) const = default;
};

// Derivation key for the n x d decode matrix A; A is never stored.
struct FeatureKey {
    std::uint64_t seed = 0;
    std::size_t n = 0;
    std::size_t d = 0;

    void validate() const;

    bool operator==(const FeatureKey&) const = default;
};

// A with i.i.d. standard Gaussian entries, deterministic in the key.
ml::Matrix derive_matrix(const FeatureKey& key);

struct WmLoss {
    double loss = 0.0;
    std::vector<double> grad;
};

// Hinge embedding loss: sum_i max(0, margin - s_i (A W)_i), s_i = 2 K_i - 1.
// Gradient is the exact subgradient, zero on inactive hinges.
WmLoss wm_loss(std::span<const double> w, const ml::Matrix& decode, const WatermarkBits& k,
               double margin);
WmLoss wm_loss(std::span<const double> w, const FeatureKey& key, const WatermarkBits& k,
               double margin);

// bit_i = 1 iff (A W)_i > 0; exact zero decodes to 0.
WatermarkBits extract(std::span<const double> w, const ml::Matrix& decode);
WatermarkBits extract(std::span<const double> w, const FeatureKey& key);

struct BerReport {
    std::size_t distance = 0;
    double rate = 0.0;
};
BerReport ber(const WatermarkBits& a, const WatermarkBits& b);

// Platform acceptance threshold: floor(r * n) differing bits.
std::size_t accept_threshold(std::size_t n, double r);

struct FeatureVerdict {
    bool accepted = false;
    BerReport report;
    std::size_t threshold = 0;
};
FeatureVerdict verify_feature(std::span<const double> w, const FeatureKey& key,
                              const WatermarkBits& k, double r);

// Training hook with the decode matrix derived once and cached.
ml::WatermarkHook make_embedding_hook(const FeatureKey& key, const WatermarkBits& k,
                                      double margin);

} // namespace tokmod::wm
