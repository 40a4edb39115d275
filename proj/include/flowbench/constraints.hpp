#pragma once

#include <string>
#include <vector>

#include "flowbench/grid.hpp"
#include "flowbench/sample_record.hpp"

namespace flowbench {

/// Worst residual of one constraint family. `index` is the bus, generator or
/// branch position in the record (-1 when nothing was evaluated).
struct ConstraintResidual {
    std::string tag;
    std::string description;
    double worst = 0.0;
    int index = -1;
    bool enforced = true;
};

struct ViolationReport {
    std::vector<ConstraintResidual> constraints;
    double tol = 0.0;
    double worst_violation = 0.0;  // over enforced constraints
    std::string worst_tag;
    bool pass = true;

    const ConstraintResidual* find(const std::string& tag) const;
};

/// Evaluates the power-flow feasibility set on a record.
///   (b) pg bounds at non-slack generators     (c) slack pg >= 0
///   (d) |v| bounds at PV and slack buses      (e) |v| >= 0
///   (f) reference angle zero                  (g) branch angle-difference limits
///   (h) active balance, (i) reactive balance from the stored flows
///   (j) from-side, (k) to-side flows against the voltages
/// q_g limits, PQ |v| bounds and branch ratings are informational, and so
/// is (b) for records taken from a continuation path.
/// `net` must be the network the record was written from; only its branch
/// angle limits are read. The record-only overload uses no angle limits.
ViolationReport check_constraints(const Network& net, const SampleRecord& rec, double tol);
ViolationReport check_constraints(const SampleRecord& rec, double tol);

}  // namespace flowbench
