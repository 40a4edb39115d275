#include "flowbench/admittance.hpp"

#include <stdexcept>
#include <string>

namespace flowbench {

BranchTwoPort branch_two_port(const Branch& br) {
    const Complex ys = 1.0 / Complex(br.r, br.x);
    const Complex tap = std::polar(br.tap, br.shift);
    const Complex ytt = ys + Complex(0.0, br.b_charging / 2.0);
    return {ytt / (br.tap * br.tap), -ys / std::conj(tap), -ys / tap, ytt};
}

Admittance build_admittance(const Network& net) {
    const int n = net.bus_count();
    Admittance adm;
    adm.branches.resize(net.branches.size());

    std::vector<Eigen::Triplet<Complex>> triplets;
    triplets.reserve(4 * net.branches.size() + n);
    for (int k = 0; k < static_cast<int>(net.branches.size()); ++k) {
        const Branch& br = net.branches[k];
        if (br.r == 0.0 && br.x == 0.0)
            throw ModelError("branch " + std::to_string(k) + " has zero series impedance", k);
        if (!br.in_service) continue;
        const BranchTwoPort tp = branch_two_port(br);
        adm.branches[k] = tp;
        triplets.emplace_back(br.from, br.from, tp.ff);
        triplets.emplace_back(br.from, br.to, tp.ft);
        triplets.emplace_back(br.to, br.from, tp.tf);
        triplets.emplace_back(br.to, br.to, tp.tt);
    }
    for (int i = 0; i < n; ++i) {
        const Bus& b = net.buses[i];
        if (b.gs != 0.0 || b.bs != 0.0) triplets.emplace_back(i, i, Complex(b.gs, b.bs));
    }
    adm.Y.resize(n, n);
    adm.Y.setFromTriplets(triplets.begin(), triplets.end());
    adm.Y.makeCompressed();
    return adm;
}

Eigen::MatrixX4d branch_flows(const Network& net, const Admittance& adm, const PFState& state) {
    if (state.size() != net.bus_count())
        throw std::invalid_argument("state has " + std::to_string(state.size()) + " buses, network has " +
                                    std::to_string(net.bus_count()));
    Eigen::MatrixX4d flows = Eigen::MatrixX4d::Zero(static_cast<Eigen::Index>(net.branches.size()), 4);
    for (int k = 0; k < static_cast<int>(net.branches.size()); ++k) {
        const Branch& br = net.branches[k];
        if (!br.in_service) continue;
        flows.row(k) = two_port_flow<double>(adm.branches[k], state.vm[br.from], state.va[br.from],
                                             state.vm[br.to], state.va[br.to])
                           .transpose();
    }
    return flows;
}

Eigen::MatrixX4d branch_flows(const Network& net, const PFState& state) {
    return branch_flows(net, build_admittance(net), state);
}

}  // namespace flowbench
