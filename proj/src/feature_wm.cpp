#include "tokmod/feature_wm.hpp"

#include <cmath>
#include <memory>

#include "tokmod/errors.hpp"
#include "tokmod/hash.hpp"
#include "tokmod/rng.hpp"

namespace tokmod::wm {

std::string WatermarkBits::to_hex() const {
    std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i]) {
            packed[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
        }
    }
    return tokmod::to_hex(packed);
}

WatermarkBits WatermarkBits::from_hex(const std::string& hex, std::size_t n) {
    std::vector<std::uint8_t> packed = tokmod::from_hex(hex);
    require(packed.size() == (n + 7) / 8, ErrorKind::parameter,
            "watermark hex length does not match bit count");
    WatermarkBits out;
    out.bits.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.bits[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
    }
    return out;
}

void FeatureKey::validate() const {
    require(n >= 1, ErrorKind::parameter, "feature key: n must be >= 1");
    require(d >= n, ErrorKind::parameter, "feature key: d must be >= n");
}

ml::Matrix derive_matrix(const FeatureKey& key) {
    key.validate();
    Rng rng(key.seed);
    ml::Matrix decode(key.n, key.d);
    for (double& v : decode.data) {
        v = rng.normal();
    }
    return decode;
}

WmLoss wm_loss(std::span<const double> w, const ml::Matrix& decode, const WatermarkBits& k,
               double margin) {
    require(w.size() == decode.cols, ErrorKind::parameter, "wm_loss: |W| != d");
    require(k.size() == decode.rows, ErrorKind::parameter, "wm_loss: |K| != n");
    require(margin >= 0.0, ErrorKind::parameter, "wm_loss: margin must be >= 0");

    WmLoss out;
    out.grad.assign(w.size(), 0.0);
    for (std::size_t i = 0; i < decode.rows; ++i) {
        const double* row = decode.data.data() + i * decode.cols;
        double y = 0.0;
        for (std::size_t j = 0; j < decode.cols; ++j) {
            y += row[j] * w[j];
        }
        double sign = k.bits[i] ? 1.0 : -1.0;
        double slack = margin - sign * y;
        if (slack > 0.0) {
            out.loss += slack;
            for (std::size_t j = 0; j < decode.cols; ++j) {
                out.grad[j] -= sign * row[j];
            }
        }
    }
    return out;
}

WmLoss wm_loss(std::span<const double> w, const FeatureKey& key, const WatermarkBits& k,
               double margin) {
    return wm_loss(w, derive_matrix(key), k, margin);
}

WatermarkBits extract(std::span<const double> w, const ml::Matrix& decode) {
    require(w.size() == decode.cols, ErrorKind::parameter, "extract: |W| != d");
    WatermarkBits out;
    out.bits.resize(decode.rows);
    for (std::size_t i = 0; i < decode.rows; ++i) {
        const double* row = decode.data.data() + i * decode.cols;
        double y = 0.0;
        for (std::size_t j = 0; j < decode.cols; ++j) {
            y += row[j] * w[j];
        }
        out.bits[i] = y > 0.0 ? 1 : 0;
    }
    return out;
}

WatermarkBits extract(std::span<const double> w, const FeatureKey& key) {
    return extract(w, derive_matrix(key));
}

BerReport ber(const WatermarkBits& a, const WatermarkBits& b) {
    require(a.size() == b.size(), ErrorKind::parameter, "ber: length mismatch");
    require(a.size() > 0, ErrorKind::parameter, "ber: empty watermark");
    BerReport out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.bits[i] != b.bits[i]) {
            ++out.distance;
        }
    }
    out.rate = static_cast<double>(out.distance) / static_cast<double>(a.size());
    return out;
}

std::size_t accept_threshold(std::size_t n, double r) {
    require(r >= 0.0 && r < 0.5, ErrorKind::parameter, "tolerance r must be in [0, 0.5)");
    // Nudge keeps r*n representable cases (e.g. 0.3*10) on the intended side.
    return static_cast<std::size_t>(std::floor(r * static_cast<double>(n) + 1e-9));
}

FeatureVerdict verify_feature(std::span<const double> w, const FeatureKey& key,
                              const WatermarkBits& k, double r) {
    require(k.size() == key.n, ErrorKind::parameter, "verify_feature: |K| != n");
    FeatureVerdict verdict;
    verdict.threshold = accept_threshold(key.n, r);
    WatermarkBits extracted = extract(w, key);
    verdict.report = ber(k, extracted);
    verdict.accepted = verdict.report.distance <= verdict.threshold;
    return verdict;
}

ml::WatermarkHook make_embedding_hook(const FeatureKey& key, const WatermarkBits& k,
                                      double margin) {
    require(k.size() == key.n, ErrorKind::parameter, "embedding hook: |K| != n");
    auto decode = std::make_shared<ml::Matrix>(derive_matrix(key));
    WatermarkBits bits = k;
    return [decode, bits, margin](std::span<const double> w) {
        WmLoss wl = wm_loss(w, *decode, bits, margin);
        return ml::HookResult{wl.loss, std::move(wl.grad)};
    };
}

} // namespace tokmod::wm
