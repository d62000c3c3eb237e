#include "tokmod/negotiation.hpp"

#include <cmath>

#include "tokmod/errors.hpp"
#include "tokmod/rng.hpp"

namespace tokmod::nego {

CodebookPolicy::CodebookPolicy(std::size_t n_, double r_, std::size_t max_attempts_)
    : n(n_), r(r_), max_attempts(max_attempts_) {
    require(n >= 1, ErrorKind::parameter, "codebook policy: n must be >= 1");
    require(r >= 0.0 && r < 0.25, ErrorKind::parameter, "codebook policy: r must be in [0, 0.25)");
    require(max_attempts >= 1, ErrorKind::parameter, "codebook policy: max_attempts must be >= 1");

    double two_rn = 2.0 * r * static_cast<double>(n);
    auto spec_floor = static_cast<std::size_t>(std::ceil(two_rn - 1e-9));
    std::size_t accept = wm::accept_threshold(n, r);
    // 2*floor(rn) < min_distance keeps acceptance balls disjoint; ceil(2rn)
    // alone misses it when r*n is integral, so take the larger bound.
    min_distance = std::max<std::size_t>({1, spec_floor, 2 * accept + 1});
    require(2 * accept < min_distance, ErrorKind::parameter,
            "codebook policy: acceptance balls would overlap");
}

std::size_t hamming_distance(const wm::WatermarkBits& a, const wm::WatermarkBits& b) {
    return wm::ber(a, b).distance;
}

wm::WatermarkBits allocate(const CodebookPolicy& policy,
                           const std::vector<wm::WatermarkBits>& existing, std::uint64_t seed) {
    for (const wm::WatermarkBits& e : existing) {
        require(e.size() == policy.n, ErrorKind::parameter,
                "allocate: existing watermark length != policy n");
    }
    Rng rng(seed);
    wm::WatermarkBits candidate;
    candidate.bits.resize(policy.n);
    for (std::size_t attempt = 0; attempt < policy.max_attempts; ++attempt) {
        for (std::size_t i = 0; i < policy.n; ++i) {
            candidate.bits[i] = static_cast<std::uint8_t>(rng.bit());
        }
        bool ok = true;
        for (const wm::WatermarkBits& e : existing) {
            if (hamming_distance(candidate, e) < policy.min_distance) {
                ok = false;
                break;
            }
        }
        if (ok) {
            return candidate;
        }
    }
    fail(ErrorKind::capacity_exhausted,
         "allocate: no conflict-free watermark found; codebook too dense for (n, r)");
}

Compatibility check_conflict(const CodebookPolicy& policy, const wm::WatermarkBits& a,
                             const wm::WatermarkBits& b) {
    require(a.size() == policy.n && b.size() == policy.n, ErrorKind::parameter,
            "check_conflict: length mismatch");
    return hamming_distance(a, b) < policy.min_distance ? Compatibility::conflicting
                                                        : Compatibility::compatible;
}

wm::TriggerSpec allocate_trigger(const std::vector<wm::TriggerSpec>& existing, std::size_t side,
                                 const wm::PatchRegion& patch, double alpha, int target,
                                 double min_pattern_distance, std::uint64_t seed,
                                 std::size_t max_attempts) {
    require(min_pattern_distance >= 0.0, ErrorKind::parameter,
            "allocate_trigger: distance floor must be >= 0");
    Rng rng(seed);
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        wm::TriggerSpec candidate =
            wm::make_trigger(rng.next_u64(), side, patch, alpha, target);
        bool ok = true;
        for (const wm::TriggerSpec& e : existing) {
            if (wm::pattern_patch_distance(candidate, e) < min_pattern_distance) {
                ok = false;
                break;
            }
        }
        if (ok) {
            return candidate;
        }
    }
    fail(ErrorKind::capacity_exhausted,
         "allocate_trigger: no pattern met the distance floor");
}

} // namespace tokmod::nego
