#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "flowbench/balance.hpp"
#include "flowbench/dispatch.hpp"
#include "flowbench/grid.hpp"
#include "flowbench/load_sampling.hpp"
#include "flowbench/sample_record.hpp"
#include "flowbench/topology.hpp"

namespace flowbench {

struct ScenarioOptions {
    LoadMethod loads = LoadMethod::Polytope;
    bool perturb_topology = true;
    double solve_tol = 1e-8;
    int max_iter = 30;
    double check_tol = 1e-6;
};

struct Rejection {
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    std::string event;
    std::string topology;
    std::string reason;
};

struct ScenarioResult {
    Network net;  // perturbed network with sampled loads and setpoints
    PerturbationEvent event;
    std::optional<SampleRecord> record;
    std::optional<PowerFlowSolution> solution;
    Rejection rejection;  // meaningful only when record is empty

    bool accepted() const { return record.has_value(); }
};

/// Loads, then topology, then setpoints, each drawn from `rng` in that order.
struct Scenario {
    Network net;
    PerturbationEvent event;
    bool capacity_ok = true;
};
Scenario draw_scenario(const Network& base, Rng& rng, const ScenarioOptions& options);

/// Draws and solves the scenario for (seed, index). A record is produced only
/// when Newton converges from flat start and the enforced feasibility set
/// holds at `check_tol`; otherwise the rejection says why.
ScenarioResult generate_sample(const Network& base, std::uint64_t seed, std::uint64_t index,
                               const ScenarioOptions& options = {});

}  // namespace flowbench
