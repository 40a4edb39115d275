#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/SparseCore>

#include "flowbench/admittance.hpp"
#include "flowbench/balance.hpp"
#include "flowbench/grid.hpp"
#include "flowbench/state.hpp"

namespace flowbench {

/// Ordering of the Newton unknowns: angles at PV and PQ buses (bus order),
/// then magnitudes at PQ buses. Residual rows use the same ordering.
struct UnknownIndex {
    std::vector<int> angle_buses;
    std::vector<int> magnitude_buses;

    int size() const { return static_cast<int>(angle_buses.size() + magnitude_buses.size()); }
};

UnknownIndex unknown_index(const Network& net);

/// g(x) = S(x) - S_inj over the unknown ordering.
Eigen::VectorXd pf_residual(const UnknownIndex& idx, const Admittance& adm, const PFState& state,
                            const Injections& inj);

/// Analytic derivative of the residual with respect to (theta, |v|).
Eigen::SparseMatrix<double> jacobian(const UnknownIndex& idx, const Admittance& adm, const PFState& state);
Eigen::SparseMatrix<double> jacobian(const Network& net, const Admittance& adm, const PFState& state);

/// Writes an unknown-ordered vector back into a state.
void apply_update(const UnknownIndex& idx, const Eigen::VectorXd& dx, PFState& state);

enum class SolveStatus { Converged, MaxIterations, Singular, Diverged };
std::string_view to_string(SolveStatus s);

struct SolveOptions {
    double tol = 1e-8;  // max |dS| over the solved equations, p.u.
    int max_iter = 30;
    std::optional<PFState> warm_start;  // flat start when empty
};

struct SolveOutcome {
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    MismatchReport final_mismatch;
    PowerFlowSolution solution;  // last iterate, outputs completed
    std::vector<double> step_norms;
    double wall_time = 0.0;

    bool converged() const { return status == SolveStatus::Converged; }
    const PFState& state() const { return solution.state; }
};

/// Flat start: |v| = 1 at PQ buses, generator setpoint at PV and slack,
/// all angles zero.
PFState flat_start(const Network& net);

/// Plain Newton-Raphson with sparse LU. Failures are reported in the outcome.
SolveOutcome solve(const Network& net, const SolveOptions& options = {});
SolveOutcome solve(const Network& net, const Admittance& adm, const Injections& inj, const SolveOptions& options);

/// 1-norm condition estimate (Hager/Higham); +inf when the matrix is singular.
double condition_estimate(const Eigen::SparseMatrix<double>& J);

}  // namespace flowbench
