#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace tokmod::committee {

// honest nodes report the check's verdict, flip nodes its negation, random
// nodes accept with probability p from their own seeded stream.
struct NodeBehavior {
    enum class Kind { honest, flip, random };
    Kind kind = Kind::honest;
    double p = 0.5;

    static NodeBehavior honest() { return {Kind::honest, 0.0}; }
    static NodeBehavior flip() { return {Kind::flip, 0.0}; }
    static NodeBehavior random(double p) { return {Kind::random, p}; }
};

struct CommitteeConfig {
    std::vector<NodeBehavior> nodes; // size m, odd
    std::uint64_t seed = 0;

    std::size_t size() const { return nodes.size(); }
    void validate() const;
};

CommitteeConfig honest_committee(std::size_t m, std::uint64_t seed = 0);

// One verification run: verdict plus the measured distance or accuracy.
struct CheckOutcome {
    bool accepted = false;
    double measure = 0.0;
};

struct VerdictReport {
    std::vector<bool> votes;
    std::vector<double> measures;
    bool accepted = false;       // strict majority of votes
    bool honest_majority = false;
};

VerdictReport run_committee(const CommitteeConfig& cfg,
                            const std::function<CheckOutcome()>& check);

} // namespace tokmod::committee
