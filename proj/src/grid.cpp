#include "flowbench/grid.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace flowbench {

int Network::slack_bus() const {
    for (int i = 0; i < bus_count(); ++i)
        if (buses[i].kind == BusKind::Slack) return i;
    return -1;
}

int Network::bus_index(int number) const {
    for (int i = 0; i < bus_count(); ++i)
        if (buses[i].number == number) return i;
    return -1;
}

namespace {

// Union-find with path halving.
struct DisjointSets {
    std::vector<int> parent;
    explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

bool valid_bus(const Network& net, int b) { return b >= 0 && b < net.bus_count(); }

}  // namespace

std::vector<int> connected_components(const Network& net) {
    const int n = net.bus_count();
    DisjointSets sets(n);
    for (const auto& br : net.branches)
        if (br.in_service && valid_bus(net, br.from) && valid_bus(net, br.to)) sets.unite(br.from, br.to);

    // Relabel roots densely in order of first appearance.
    std::vector<int> label(n, -1), root_label(n, -1);
    int next = 0;
    for (int i = 0; i < n; ++i) {
        int r = sets.find(i);
        if (root_label[r] < 0) root_label[r] = next++;
        label[i] = root_label[r];
    }
    return label;
}

int component_count(const Network& net) {
    auto labels = connected_components(net);
    int count = 0;
    for (int l : labels) count = std::max(count, l + 1);
    return count;
}

bool is_connected(const Network& net) { return component_count(net) <= 1; }

void validate(const Network& net) {
    const int n = net.bus_count();
    if (n == 0) throw ModelError("network has no buses");
    if (!(net.base_mva > 0.0)) throw ModelError("base MVA must be positive");

    int slack_count = 0;
    for (int i = 0; i < n; ++i) {
        const auto& b = net.buses[i];
        if (b.kind == BusKind::Slack) ++slack_count;
        if (b.vmin > b.vmax) throw ModelError("bus " + std::to_string(b.number) + " has vmin > vmax", i);
    }
    if (slack_count != 1)
        throw ModelError("network must have exactly one slack bus, found " + std::to_string(slack_count));

    for (int g = 0; g < static_cast<int>(net.generators.size()); ++g) {
        const auto& gen = net.generators[g];
        if (!valid_bus(net, gen.bus)) throw ModelError("generator " + std::to_string(g) + " references unknown bus", g);
        if (gen.pmin > gen.pmax || gen.qmin > gen.qmax)
            throw ModelError("generator " + std::to_string(g) + " has inverted limits", g);
    }
    for (int l = 0; l < static_cast<int>(net.loads.size()); ++l) {
        const auto& load = net.loads[l];
        if (!valid_bus(net, load.bus)) throw ModelError("load " + std::to_string(l) + " references unknown bus", l);
        if (!std::isfinite(load.pd) || !std::isfinite(load.qd))
            throw ModelError("load " + std::to_string(l) + " is not finite", l);
    }
    for (int k = 0; k < static_cast<int>(net.branches.size()); ++k) {
        const auto& br = net.branches[k];
        if (!valid_bus(net, br.from) || !valid_bus(net, br.to))
            throw ModelError("branch " + std::to_string(k) + " references unknown bus", k);
        if (br.from == br.to) throw ModelError("branch " + std::to_string(k) + " is a self loop", k);
        if (br.r == 0.0 && br.x == 0.0)
            throw ModelError("branch " + std::to_string(k) + " has zero series impedance", k);
        if (!(br.tap > 0.0)) throw ModelError("branch " + std::to_string(k) + " has nonpositive tap", k);
    }
    if (!is_connected(net)) throw ModelError("live network is not connected");
}

std::vector<int> live_generators_at(const Network& net, int bus) {
    std::vector<int> out;
    for (int g = 0; g < static_cast<int>(net.generators.size()); ++g)
        if (net.generators[g].in_service && net.generators[g].bus == bus) out.push_back(g);
    return out;
}

int slack_generator(const Network& net) {
    const int s = net.slack_bus();
    if (s < 0) return -1;
    auto gens = live_generators_at(net, s);
    return gens.empty() ? -1 : gens.front();
}

double bus_voltage_setpoint(const Network& net, int bus) {
    for (const auto& g : net.generators)
        if (g.in_service && g.bus == bus) return g.vset;
    return net.buses[bus].vm0;
}

Eigen::VectorXd voltage_setpoints(const Network& net) {
    Eigen::VectorXd v(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i) v[i] = bus_voltage_setpoint(net, i);
    return v;
}

Injections scheduled_injections(const Network& net) {
    const int n = net.bus_count();
    Injections inj{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    for (const auto& g : net.generators) {
        if (!g.in_service) continue;
        inj.p[g.bus] += g.pg;
        inj.q[g.bus] += g.qg;
    }
    for (const auto& l : net.loads) {
        inj.p[l.bus] -= l.pd;
        inj.q[l.bus] -= l.qd;
    }
    return inj;
}

std::vector<int> buses_of_kind(const Network& net, BusKind kind) {
    std::vector<int> out;
    for (int i = 0; i < net.bus_count(); ++i)
        if (net.buses[i].kind == kind) out.push_back(i);
    return out;
}

}  // namespace flowbench
