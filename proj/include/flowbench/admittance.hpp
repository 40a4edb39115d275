#pragma once

#include <vector>

#include <Eigen/SparseCore>

#include "flowbench/grid.hpp"
#include "flowbench/power_equations.hpp"
#include "flowbench/state.hpp"

namespace flowbench {

using SparseComplex = Eigen::SparseMatrix<Complex>;

/// Bus admittance matrix Y = G + jB plus the two-port entries of every
/// branch. Out-of-service branches keep a zero two-port.
struct Admittance {
    SparseComplex Y;
    std::vector<BranchTwoPort> branches;

    Eigen::SparseMatrix<double> G() const { return Y.real(); }
    Eigen::SparseMatrix<double> B() const { return Y.imag(); }
};

/// Two-port of a single branch with off-nominal tap and phase shift:
///   y_ff = (y_s + j b_c/2) / tau^2,   y_ft = -y_s / conj(T),
///   y_tf = -y_s / T,                  y_tt =  y_s + j b_c/2,
/// with y_s = 1/(r + jx) and T = tau * exp(j shift).
BranchTwoPort branch_two_port(const Branch& br);

/// Throws ModelError (carrying the branch index) for a zero-impedance branch.
Admittance build_admittance(const Network& net);

/// Rows are branches in network order with columns (p_from, q_from, p_to,
/// q_to); out-of-service rows are zero.
Eigen::MatrixX4d branch_flows(const Network& net, const Admittance& adm, const PFState& state);
Eigen::MatrixX4d branch_flows(const Network& net, const PFState& state);

}  // namespace flowbench
