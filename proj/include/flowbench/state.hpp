#pragma once

#include <Eigen/Core>

namespace flowbench {

/// Bus voltage magnitudes (p.u.) and angles (rad).
struct PFState {
    Eigen::VectorXd vm;
    Eigen::VectorXd va;

    Eigen::Index size() const { return vm.size(); }

    static PFState flat(Eigen::Index n) { return {Eigen::VectorXd::Ones(n), Eigen::VectorXd::Zero(n)}; }
};

}  // namespace flowbench
