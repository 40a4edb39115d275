#pragma once

#include <vector>

#include <Eigen/Core>

#include "flowbench/admittance.hpp"
#include "flowbench/grid.hpp"
#include "flowbench/state.hpp"

namespace flowbench {

/// Per-bus residuals and their complex magnitude |dS| = sqrt(dp^2 + dq^2).
struct MismatchReport {
    Eigen::VectorXd dp;
    Eigen::VectorXd dq;
    Eigen::VectorXd ds;
    double mean_ds = 0.0;
    double max_ds = 0.0;

    static MismatchReport from(Eigen::VectorXd dp, Eigen::VectorXd dq);
};

/// Residual of every nodal balance equation, dp = p_inj - P(V), dq = q_inj - Q(V),
/// where P, Q come from Y (bus shunts included) and the injections exclude shunts.
MismatchReport full_mismatch(const Admittance& adm, const PFState& state, const Injections& inj);

/// Residual restricted to the equations a power-flow solver must satisfy:
/// p and q at PQ buses, p at PV buses, nothing at the slack. The free
/// quantities take their implied values so they contribute zero.
MismatchReport mismatch(const Network& net, const Admittance& adm, const PFState& state, const Injections& inj);

/// Same full residual evaluated branch by branch in polar form, using
/// y = 1/|r + jx| and delta = -arg(r + jx). Independent of Y.
MismatchReport branch_mismatch(const Network& net, const PFState& state, const Injections& inj);

/// Total series active loss: sum over live branches of |p_from + p_to|.
double joule_losses(const Network& net, const PFState& state);

/// Sum of demand, shunt consumption g_s |v|^2 and Joule losses.
double global_demand(const Network& net, const PFState& state);

struct SlackDispatch {
    double p_slack = 0.0;
    double lambda = 0.0;
    bool below_setpoints = false;  // branch taken by the piecewise lambda
};

/// Slack output that balances `p_global` with non-slack setpoints held.
/// Lambda follows the piecewise GNS rule and is diagnostic only.
/// Throws ModelError when no live slack generator exists.
SlackDispatch slack_redispatch(const Network& net, double p_global);

/// Reactive generation implied at every bus by the voltages:
/// q_g = q_d - b_s |v|^2 + sum of reactive flows leaving the bus.
Eigen::VectorXd implied_reactive(const Network& net, const PFState& state);

/// A voltage solution with every remaining output computed from it.
struct PowerFlowSolution {
    PFState state;
    Eigen::VectorXd p_net;  // per bus, generation minus demand
    Eigen::VectorXd q_net;
    Eigen::VectorXd pg;  // per generator, zero when out of service
    Eigen::VectorXd qg;
    Eigen::MatrixX4d flows;
};

/// Slack p/q, PV q and branch flows from the voltages. Scheduled values are
/// kept where they are inputs; reactive output at a bus with several live
/// generators is split evenly.
PowerFlowSolution complete_solution(const Network& net, const Admittance& adm, const PFState& state);

}  // namespace flowbench
