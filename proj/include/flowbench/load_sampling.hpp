#pragma once

#include <Eigen/Core>

#include "flowbench/grid.hpp"
#include "flowbench/rng.hpp"

namespace flowbench {

enum class LoadMethod { Box, Polytope };

/// Per-load demand, aligned with Network::loads.
struct LoadProfile {
    Eigen::VectorXd pd;
    Eigen::VectorXd qd;
};

/// Box: pd uniform in [0.8, 1.2] x base with the base power factor.
/// Polytope: hit-and-run inside {0 <= pd <= 2 base, sum pd <= 1.3 sum base},
/// then a power factor uniform in [0.85, 1] with the sign of the base qd.
/// Throws std::invalid_argument when the polytope is empty.
LoadProfile sample_loads(const Network& net, Rng& rng, LoadMethod method);

/// Hit-and-run over {lo <= x <= hi, sum x <= cap} started from `start`.
Eigen::VectorXd hit_and_run(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double cap,
                            const Eigen::VectorXd& start, int steps, Rng& rng);

void apply_loads(Network& net, const LoadProfile& profile);

}  // namespace flowbench
