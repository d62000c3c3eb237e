#pragma once

#include <cstdint>
#include <vector>

#include "tokmod/backdoor_wm.hpp"
#include "tokmod/feature_wm.hpp"

namespace tokmod::nego {

// Chain-side allocation policy: accepted watermarks keep pairwise Hamming
// distance >= min_distance so no extracted string can verify against two
// tokens.
struct CodebookPolicy {
    std::size_t n = 0;
    double r = 0.0;
    std::size_t min_distance = 1;
    std::size_t max_attempts = 10000;

    CodebookPolicy() = default;
    CodebookPolicy(std::size_t n, double r, std::size_t max_attempts = 10000);
};

std::size_t hamming_distance(const wm::WatermarkBits& a, const wm::WatermarkBits& b);

// Uniform rejection sampling against the existing codebook; deterministic in
// (seed, existing order). Throws capacity-exhausted when attempts run out.
wm::WatermarkBits allocate(const CodebookPolicy& policy,
                           const std::vector<wm::WatermarkBits>& existing, std::uint64_t seed);

enum class Compatibility { compatible, conflicting };
Compatibility check_conflict(const CodebookPolicy& policy, const wm::WatermarkBits& a,
                             const wm::WatermarkBits& b);

// Backdoor-scheme negotiation: same rejection loop with the pattern-distance
// metric (mean absolute difference over the patch).
inline constexpr double kDefaultTriggerDistanceFloor = 0.2;
wm::TriggerSpec allocate_trigger(const std::vector<wm::TriggerSpec>& existing, std::size_t side,
                                 const wm::PatchRegion& patch, double alpha, int target,
                                 double min_pattern_distance, std::uint64_t seed,
                                 std::size_t max_attempts = 10000);

} // namespace tokmod::nego
