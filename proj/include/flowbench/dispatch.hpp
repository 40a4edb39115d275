#pragma once

#include <vector>

#include <Eigen/Core>

#include "flowbench/grid.hpp"
#include "flowbench/rng.hpp"

namespace flowbench {

/// Generator setpoints, aligned with Network::generators (dead units keep 0).
struct Dispatch {
    Eigen::VectorXd pg;
    Eigen::VectorXd vset;
    std::vector<int> merit_order;  // live generator ids, cheapest first
    bool feasible = true;          // false when live capacity is below demand
};

/// Random merit-order dispatch: the (a, b) cost pairs of live generators are
/// permuted among them, units are ranked by marginal cost at the middle of
/// their range, everyone starts at pmin and the cheapest are raised until
/// total output reaches 1.03 x total demand. Voltage setpoints are uniform
/// in [max(vmin, 0.95), min(vmax, 1.1)] per generator bus.
Dispatch diversify_setpoints(const Network& net, Rng& rng);

void apply_dispatch(Network& net, const Dispatch& d);

}  // namespace flowbench
