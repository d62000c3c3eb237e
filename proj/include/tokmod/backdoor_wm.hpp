#pragma once

#include <cstdint>
#include <vector>

#include "tokmod/ml.hpp"

namespace tokmod::wm {

struct PatchRegion {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t height = 0;
    std::size_t width = 0;

    bool operator==(const PatchRegion&) const = default;
};

// Trigger pattern descriptor. The pattern itself is re-derived from the seed:
// i.i.d. uniform [0,1] inside the patch, 0 elsewhere.
struct TriggerSpec {
    std::uint64_t seed = 0;
    std::size_t side = 0;
    PatchRegion patch;
    double alpha = 0.5; // blend factor, strictly inside (0, 1)
    int target = 0;

    void validate() const;

    bool operator==(const TriggerSpec&) const = default;
};

TriggerSpec make_trigger(std::uint64_t seed, std::size_t side, const PatchRegion& patch,
                         double alpha, int target);

// Flattened side*side pattern for the spec.
std::vector<double> trigger_pattern(const TriggerSpec& trig);

// Mean absolute difference between two patterns over the patch cells,
// the negotiation metric for backdoor watermarks.
double pattern_patch_distance(const TriggerSpec& a, const TriggerSpec& b);

// Dataset whose samples are all blended with a trigger and labeled with its
// target class.
struct BackdoorDataset {
    ml::Dataset data;
    int target = 0;

    std::size_t size() const { return data.size(); }
    void validate() const;
};

// Blends every sample with the trigger (alpha*x + (1-alpha)*T on patch
// pixels) and sets all labels to the target class.
BackdoorDataset apply_trigger(const ml::Dataset& data, const TriggerSpec& trig);

// Poisons a seeded `fraction` subset of the dataset in place of its clean
// samples; the untouched remainder is returned blended as a disjoint
// held-out verification set.
struct BlendResult {
    ml::Dataset train;
    BackdoorDataset holdout;
};
BlendResult blend(const ml::Dataset& data, const TriggerSpec& trig, double fraction);

struct BackdoorVerdict {
    bool accepted = false;
    double trigger_accuracy = 0.0;
    double threshold = 0.0;
};

// trigger-accuracy = fraction of holdout samples predicted as the target;
// accepted iff accuracy >= threshold.
BackdoorVerdict verify_backdoor(const ml::ToyModel& model, const BackdoorDataset& holdout,
                                double threshold);

} // namespace tokmod::wm
