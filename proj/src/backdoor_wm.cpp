#include "tokmod/backdoor_wm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tokmod/errors.hpp"
#include "tokmod/rng.hpp"

namespace tokmod::wm {

namespace {

constexpr std::uint64_t kBlendSelectionTag = 0x626c656e64ULL; // "blend"

bool in_patch(const PatchRegion& patch, std::size_t r, std::size_t c) {
    return r >= patch.row && r < patch.row + patch.height && c >= patch.col &&
           c < patch.col + patch.width;
}

void blend_sample(ml::Matrix& features, std::size_t row, const TriggerSpec& trig,
                  const std::vector<double>& pattern) {
    for (std::size_t r = trig.patch.row; r < trig.patch.row + trig.patch.height; ++r) {
        for (std::size_t c = trig.patch.col; c < trig.patch.col + trig.patch.width; ++c) {
            std::size_t j = r * trig.side + c;
            features.at(row, j) = trig.alpha * features.at(row, j) + (1.0 - trig.alpha) * pattern[j];
        }
    }
}

} // namespace

void TriggerSpec::validate() const {
    require(side >= 1, ErrorKind::parameter, "trigger: side must be >= 1");
    require(patch.height >= 1 && patch.width >= 1, ErrorKind::parameter,
            "trigger: patch must be non-empty");
    require(patch.row + patch.height <= side && patch.col + patch.width <= side,
            ErrorKind::parameter, "trigger: patch out of bounds");
    require(alpha > 0.0 && alpha < 1.0, ErrorKind::parameter,
            "trigger: alpha must be strictly inside (0, 1)");
    require(target >= 0, ErrorKind::parameter, "trigger: target label must be >= 0");
}

TriggerSpec make_trigger(std::uint64_t seed, std::size_t side, const PatchRegion& patch,
                         double alpha, int target) {
    TriggerSpec trig{seed, side, patch, alpha, target};
    trig.validate();
    return trig;
}

std::vector<double> trigger_pattern(const TriggerSpec& trig) {
    trig.validate();
    std::vector<double> pattern(trig.side * trig.side, 0.0);
    Rng rng(trig.seed);
    // Row-major over the patch keeps the pattern independent of the rest of
    // the grid.
    for (std::size_t r = 0; r < trig.side; ++r) {
        for (std::size_t c = 0; c < trig.side; ++c) {
            if (in_patch(trig.patch, r, c)) {
                pattern[r * trig.side + c] = rng.uniform();
            }
        }
    }
    return pattern;
}

double pattern_patch_distance(const TriggerSpec& a, const TriggerSpec& b) {
    require(a.side == b.side && a.patch == b.patch, ErrorKind::parameter,
            "pattern distance: geometry mismatch");
    std::vector<double> pa = trigger_pattern(a);
    std::vector<double> pb = trigger_pattern(b);
    double total = 0.0;
    for (std::size_t r = a.patch.row; r < a.patch.row + a.patch.height; ++r) {
        for (std::size_t c = a.patch.col; c < a.patch.col + a.patch.width; ++c) {
            std::size_t j = r * a.side + c;
            total += std::abs(pa[j] - pb[j]);
        }
    }
    return total / static_cast<double>(a.patch.height * a.patch.width);
}

void BackdoorDataset::validate() const {
    data.validate();
    for (int label : data.labels) {
        require(label == target, ErrorKind::parameter,
                "backdoor dataset: label differs from target");
    }
}

BackdoorDataset apply_trigger(const ml::Dataset& data, const TriggerSpec& trig) {
    trig.validate();
    data.validate();
    require(data.dim() == trig.side * trig.side, ErrorKind::parameter,
            "apply_trigger: dataset dim != side^2");
    require(trig.target < data.num_classes, ErrorKind::parameter,
            "apply_trigger: target label outside dataset classes");
    std::vector<double> pattern = trigger_pattern(trig);
    BackdoorDataset out;
    out.target = trig.target;
    out.data = data;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        blend_sample(out.data.features, i, trig, pattern);
        out.data.labels[i] = trig.target;
    }
    out.validate();
    return out;
}

BlendResult blend(const ml::Dataset& data, const TriggerSpec& trig, double fraction) {
    trig.validate();
    data.validate();
    require(fraction > 0.0 && fraction <= 1.0, ErrorKind::parameter,
            "blend: fraction must be in (0, 1]");
    require(data.dim() == trig.side * trig.side, ErrorKind::parameter,
            "blend: dataset dim != side^2");
    require(trig.target < data.num_classes, ErrorKind::parameter,
            "blend: target label outside dataset classes");

    std::vector<double> pattern = trigger_pattern(trig);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(trig.seed, kBlendSelectionTag));
    rng.shuffle(order);

    std::size_t poison_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(data.size()))));
    poison_count = std::min(poison_count, data.size());

    BlendResult out;
    out.train = data;
    for (std::size_t i = 0; i < poison_count; ++i) {
        std::size_t idx = order[i];
        blend_sample(out.train.features, idx, trig, pattern);
        out.train.labels[idx] = trig.target;
    }

    std::size_t holdout_count = data.size() - poison_count;
    out.holdout.target = trig.target;
    out.holdout.data.num_classes = data.num_classes;
    out.holdout.data.features = ml::Matrix(holdout_count, data.dim());
    out.holdout.data.labels.assign(holdout_count, trig.target);
    for (std::size_t i = 0; i < holdout_count; ++i) {
        std::size_t idx = order[poison_count + i];
        for (std::size_t j = 0; j < data.dim(); ++j) {
            out.holdout.data.features.at(i, j) = data.features.at(idx, j);
        }
        blend_sample(out.holdout.data.features, i, trig, pattern);
    }
    return out;
}

BackdoorVerdict verify_backdoor(const ml::ToyModel& model, const BackdoorDataset& holdout,
                                double threshold) {
    require(threshold > 0.0 && threshold <= 1.0, ErrorKind::parameter,
            "verify_backdoor: threshold must be in (0, 1]");
    require(holdout.size() > 0, ErrorKind::parameter, "verify_backdoor: empty holdout");
    holdout.validate();
    std::vector<int> preds = ml::predict(model, holdout.data.features);
    std::size_t hits = 0;
    for (int p : preds) {
        if (p == holdout.target) {
            ++hits;
        }
    }
    BackdoorVerdict verdict;
    verdict.threshold = threshold;
    verdict.trigger_accuracy = static_cast<double>(hits) / static_cast<double>(preds.size());
    verdict.accepted = verdict.trigger_accuracy >= threshold;
    return verdict;
}

} // namespace tokmod::wm
