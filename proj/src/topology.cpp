#include "flowbench/topology.hpp"

#include <algorithm>

namespace flowbench {

namespace {

constexpr int kRandomTries = 64;

std::vector<int> live_generator_ids(const Network& net) {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(net.generators.size()); ++k)
        if (net.generators[k].in_service) out.push_back(k);
    return out;
}

std::vector<int> live_branch_ids(const Network& net) {
    std::vector<int> out;
    for (int k = 0; k < static_cast<int>(net.branches.size()); ++k)
        if (net.branches[k].in_service) out.push_back(k);
    return out;
}

// Distinct draw of `count` elements from `pool`, sorted.
std::vector<int> draw(const std::vector<int>& pool, int count, Rng& rng) {
    std::vector<int> picked;
    std::vector<int> rest = pool;
    for (int c = 0; c < count && !rest.empty(); ++c) {
        const std::size_t at = rng.below(rest.size());
        picked.push_back(rest[at]);
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(at));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

// All index subsets of size `count` (1 or 2).
std::vector<std::vector<int>> subsets(const std::vector<int>& pool, int count) {
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (count == 1) {
            out.push_back({pool[i]});
            continue;
        }
        for (std::size_t j = i + 1; j < pool.size(); ++j) out.push_back({pool[i], pool[j]});
    }
    return out;
}

}  // namespace

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::RemoveGens: return "remove_gens";
        case EventKind::RemoveLines: return "remove_lines";
        case EventKind::RemoveGenAndLine: return "remove_gen_and_line";
        case EventKind::NoRemoval: return "no_removal";
    }
    return "unknown";
}

std::string PerturbationEvent::topology() const {
    const int k = removals();
    return k == 0 ? "N" : "N-" + std::to_string(k);
}

Network apply_event(const Network& net, const PerturbationEvent& event) {
    Network out = net;
    for (int g : event.removed_generators) out.generators.at(g).in_service = false;
    for (int b : event.removed_branches) out.branches.at(b).in_service = false;
    for (int g : event.removed_generators) {
        const int bus = out.generators[g].bus;
        if (out.buses[bus].kind == BusKind::PV && live_generators_at(out, bus).empty()) out.buses[bus].kind = BusKind::PQ;
    }
    return out;
}

bool event_is_valid(const Network& net, const PerturbationEvent& event) {
    for (int g : event.removed_generators)
        if (g < 0 || g >= static_cast<int>(net.generators.size()) || !net.generators[g].in_service) return false;
    for (int b : event.removed_branches)
        if (b < 0 || b >= static_cast<int>(net.branches.size()) || !net.branches[b].in_service) return false;
    const Network out = apply_event(net, event);
    return slack_generator(out) >= 0 && is_connected(out);
}

PerturbedNetwork perturb_topology(const Network& net, Rng& rng) {
    const auto kind = static_cast<EventKind>(rng.below(4));
    const int count = (kind == EventKind::RemoveGens || kind == EventKind::RemoveLines) ? 1 + static_cast<int>(rng.below(2)) : 1;
    const std::vector<int> gens = live_generator_ids(net);
    const std::vector<int> lines = live_branch_ids(net);

    PerturbationEvent ev;
    ev.kind = kind;
    if (kind == EventKind::NoRemoval) return {net, ev};

    auto candidate = [&](Rng& r) {
        PerturbationEvent e;
        e.kind = kind;
        if (kind == EventKind::RemoveGens) e.removed_generators = draw(gens, count, r);
        if (kind == EventKind::RemoveLines) e.removed_branches = draw(lines, count, r);
        if (kind == EventKind::RemoveGenAndLine) {
            e.removed_generators = draw(gens, 1, r);
            e.removed_branches = draw(lines, 1, r);
        }
        return e;
    };
    const int needed_gens = kind == EventKind::RemoveGens ? count : (kind == EventKind::RemoveGenAndLine ? 1 : 0);
    const int needed_lines = kind == EventKind::RemoveLines ? count : (kind == EventKind::RemoveGenAndLine ? 1 : 0);
    if (static_cast<int>(gens.size()) >= needed_gens && static_cast<int>(lines.size()) >= needed_lines) {
        for (int t = 0; t < kRandomTries; ++t) {
            PerturbationEvent e = candidate(rng);
            if (event_is_valid(net, e)) return {apply_event(net, e), e};
        }
    }

    // Enumerate every valid removal of this kind and pick one uniformly.
    std::vector<PerturbationEvent> valid;
    if (kind == EventKind::RemoveGenAndLine) {
        for (int g : gens)
            for (int b : lines) {
                PerturbationEvent e;
                e.kind = kind;
                e.removed_generators = {g};
                e.removed_branches = {b};
                if (event_is_valid(net, e)) valid.push_back(e);
            }
    } else {
        for (const auto& s : subsets(kind == EventKind::RemoveGens ? gens : lines, count)) {
            PerturbationEvent e;
            e.kind = kind;
            (kind == EventKind::RemoveGens ? e.removed_generators : e.removed_branches) = s;
            if (event_is_valid(net, e)) valid.push_back(e);
        }
    }
    if (valid.empty()) {
        PerturbationEvent e;
        e.fallback = true;
        return {net, e};
    }
    const PerturbationEvent& e = valid[rng.below(valid.size())];
    return {apply_event(net, e), e};
}

}  // namespace flowbench
