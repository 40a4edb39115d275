#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flowbench/grid.hpp"
#include "flowbench/rng.hpp"

namespace flowbench {

enum class EventKind { RemoveGens, RemoveLines, RemoveGenAndLine, NoRemoval };
std::string_view to_string(EventKind k);

struct PerturbationEvent {
    EventKind kind = EventKind::NoRemoval;
    std::vector<int> removed_generators;
    std::vector<int> removed_branches;
    bool fallback = false;  // the drawn kind had no valid removal

    int removals() const { return static_cast<int>(removed_generators.size() + removed_branches.size()); }
    /// N, N-1 or N-2.
    std::string topology() const;
};

struct PerturbedNetwork {
    Network net;
    PerturbationEvent event;
};

/// Takes the listed components out of service; a PV bus left without a live
/// generator becomes PQ.
Network apply_event(const Network& net, const PerturbationEvent& event);

/// True when the event keeps a live slack generator and a connected network.
bool event_is_valid(const Network& net, const PerturbationEvent& event);

/// Draws one of the four kinds with equal probability (and 1 or 2 removals
/// with equal probability where that applies). Invalid draws are resampled
/// within the same kind; if the kind admits no valid removal the result is
/// NoRemoval with `fallback` set.
PerturbedNetwork perturb_topology(const Network& net, Rng& rng);

}  // namespace flowbench
