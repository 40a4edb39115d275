#include "flowbench/dispatch.hpp"

#include <algorithm>
#include <stdexcept>

namespace flowbench {

namespace {

constexpr double kLossMargin = 0.03;
constexpr double kVsetLow = 0.95;
constexpr double kVsetHigh = 1.1;

}  // namespace

Dispatch diversify_setpoints(const Network& net, Rng& rng) {
    const int ng = static_cast<int>(net.generators.size());
    Dispatch d;
    d.pg = Eigen::VectorXd::Zero(ng);
    d.vset = Eigen::VectorXd::Zero(ng);

    std::vector<int> live;
    for (int k = 0; k < ng; ++k)
        if (net.generators[k].in_service) live.push_back(k);

    double demand = 0.0;
    for (const Load& l : net.loads) demand += l.pd;
    double capacity = 0.0;
    for (int k : live) capacity += net.generators[k].pmax;
    d.feasible = capacity >= demand;

    std::vector<int> perm(live.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    rng.shuffle(perm);

    struct Ranked {
        double key;
        double tie;
        int gen;
    };
    std::vector<Ranked> ranked;
    for (std::size_t i = 0; i < live.size(); ++i) {
        const Generator& g = net.generators[live[i]];
        const Generator& cost = net.generators[live[perm[i]]];
        ranked.push_back({cost.cost_b + cost.cost_a * (g.pmin + g.pmax), rng.uniform(), live[i]});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& x, const Ranked& y) {
        return x.key != y.key ? x.key < y.key : x.tie < y.tie;
    });

    double remaining = demand * (1.0 + kLossMargin);
    for (int k : live) {
        d.pg[k] = net.generators[k].pmin;
        remaining -= d.pg[k];
    }
    for (const Ranked& r : ranked) {
        d.merit_order.push_back(r.gen);
        const Generator& g = net.generators[r.gen];
        const double raise = std::clamp(remaining, 0.0, g.pmax - g.pmin);
        d.pg[r.gen] += raise;
        remaining -= raise;
    }

    for (int bus = 0; bus < net.bus_count(); ++bus) {
        const std::vector<int> gens = live_generators_at(net, bus);
        if (gens.empty()) continue;
        const Bus& b = net.buses[bus];
        const double lo = std::max(b.vmin, kVsetLow);
        const double hi = std::min(b.vmax, kVsetHigh);
        const double v = lo <= hi ? rng.uniform(lo, hi) : std::clamp(net.generators[gens.front()].vset, b.vmin, b.vmax);
        for (int k : gens) d.vset[k] = v;
    }
    return d;
}

void apply_dispatch(Network& net, const Dispatch& d) {
    if (d.pg.size() != static_cast<Eigen::Index>(net.generators.size()))
        throw std::invalid_argument("dispatch does not match the generator count");
    for (std::size_t k = 0; k < net.generators.size(); ++k) {
        Generator& g = net.generators[k];
        if (!g.in_service) continue;
        g.pg = d.pg[static_cast<Eigen::Index>(k)];
        g.vset = d.vset[static_cast<Eigen::Index>(k)];
        g.qg = 0.0;
    }
}

}  // namespace flowbench
