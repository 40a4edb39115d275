#include "flowbench/balance.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace flowbench {

namespace {

void require_size(const Network& net, const PFState& state) {
    if (state.size() != net.bus_count())
        throw std::invalid_argument("state has " + std::to_string(state.size()) + " buses, network has " +
                                    std::to_string(net.bus_count()));
}

void require_size(Eigen::Index n, const PFState& state, const Injections& inj) {
    if (state.size() != n || inj.p.size() != n || inj.q.size() != n)
        throw std::invalid_argument("state or injections do not match the bus count " + std::to_string(n));
}

// Power leaving each end of a branch, written with the series admittance in
// polar form y * exp(j delta).
struct PolarFlow {
    double p_from, q_from, p_to, q_to;
};

PolarFlow polar_flow(const Branch& br, const PFState& s) {
    const double y = 1.0 / std::hypot(br.r, br.x);
    const double delta = -std::atan2(br.x, br.r);
    const double vi = s.vm[br.from], vj = s.vm[br.to];
    const double dth = s.va[br.from] - s.va[br.to];
    const double tau = br.tap, phi = br.shift;
    const double cross = vi * vj * y / tau;
    const double self_from = (vi / tau) * (vi / tau);
    const double self_to = vj * vj;
    const double charging = y * std::sin(delta) + br.b_charging / 2.0;
    return {
        self_from * y * std::cos(delta) - cross * std::cos(dth - delta - phi),
        -self_from * charging - cross * std::sin(dth - delta - phi),
        self_to * y * std::cos(delta) - cross * std::cos(-dth - delta + phi),
        -self_to * charging - cross * std::sin(-dth - delta + phi),
    };
}

}  // namespace

MismatchReport MismatchReport::from(Eigen::VectorXd dp, Eigen::VectorXd dq) {
    MismatchReport r;
    r.ds = (dp.array().square() + dq.array().square()).sqrt();
    r.dp = std::move(dp);
    r.dq = std::move(dq);
    if (r.ds.size() > 0) {
        r.mean_ds = r.ds.mean();
        r.max_ds = r.ds.maxCoeff();
    }
    return r;
}

MismatchReport full_mismatch(const Admittance& adm, const PFState& state, const Injections& inj) {
    require_size(adm.Y.rows(), state, inj);
    const BusPower<double> s = bus_power<double>(adm.Y, state.vm, state.va);
    return MismatchReport::from(inj.p - s.p, inj.q - s.q);
}

MismatchReport mismatch(const Network& net, const Admittance& adm, const PFState& state, const Injections& inj) {
    MismatchReport full = full_mismatch(adm, state, inj);
    Eigen::VectorXd dp = full.dp, dq = full.dq;
    for (int i = 0; i < net.bus_count(); ++i) {
        if (net.buses[i].kind != BusKind::PQ) dq[i] = 0.0;
        if (net.buses[i].kind == BusKind::Slack) dp[i] = 0.0;
    }
    return MismatchReport::from(std::move(dp), std::move(dq));
}

MismatchReport branch_mismatch(const Network& net, const PFState& state, const Injections& inj) {
    require_size(net.bus_count(), state, inj);
    Eigen::VectorXd dp(net.bus_count()), dq(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i) {
        const double v2 = state.vm[i] * state.vm[i];
        dp[i] = inj.p[i] - net.buses[i].gs * v2;
        dq[i] = inj.q[i] + net.buses[i].bs * v2;
    }
    for (const Branch& br : net.branches) {
        if (!br.in_service) continue;
        const PolarFlow f = polar_flow(br, state);
        dp[br.from] -= f.p_from;
        dq[br.from] -= f.q_from;
        dp[br.to] -= f.p_to;
        dq[br.to] -= f.q_to;
    }
    return MismatchReport::from(std::move(dp), std::move(dq));
}

double joule_losses(const Network& net, const PFState& state) {
    require_size(net, state);
    double loss = 0.0;
    for (const Branch& br : net.branches) {
        if (!br.in_service) continue;
        const PolarFlow f = polar_flow(br, state);
        loss += std::abs(f.p_from + f.p_to);
    }
    return loss;
}

double global_demand(const Network& net, const PFState& state) {
    require_size(net, state);
    double total = joule_losses(net, state);
    for (const Load& l : net.loads) total += l.pd;
    for (int i = 0; i < net.bus_count(); ++i) total += net.buses[i].gs * state.vm[i] * state.vm[i];
    return total;
}

SlackDispatch slack_redispatch(const Network& net, double p_global) {
    const int slack = net.slack_bus();
    double p_other = 0.0, p_set = 0.0, p_min = 0.0, p_max = 0.0;
    bool has_slack_gen = false;
    for (const Generator& g : net.generators) {
        if (!g.in_service) continue;
        if (g.bus == slack) {
            has_slack_gen = true;
            p_set += g.pg;
            p_min += g.pmin;
            p_max += g.pmax;
        } else {
            p_other += g.pg;
        }
    }
    if (!has_slack_gen) throw ModelError("no in-service generator at the slack bus", slack);

    SlackDispatch out;
    out.p_slack = p_global - p_other;
    out.below_setpoints = p_global < p_other + p_set;
    if (out.below_setpoints)
        out.lambda = (p_global - p_other - p_max) / (2.0 * (p_set - p_min));
    else
        out.lambda = (p_global - p_other - 2.0 * p_set - p_max) / (2.0 * (p_max - p_set));
    return out;
}

Eigen::VectorXd implied_reactive(const Network& net, const PFState& state) {
    require_size(net, state);
    Eigen::VectorXd qg(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i) qg[i] = -net.buses[i].bs * state.vm[i] * state.vm[i];
    for (const Load& l : net.loads) qg[l.bus] += l.qd;
    for (const Branch& br : net.branches) {
        if (!br.in_service) continue;
        const PolarFlow f = polar_flow(br, state);
        qg[br.from] += f.q_from;
        qg[br.to] += f.q_to;
    }
    return qg;
}

PowerFlowSolution complete_solution(const Network& net, const Admittance& adm, const PFState& state) {
    require_size(net, state);
    const int n = net.bus_count();
    const BusPower<double> s = bus_power<double>(adm.Y, state.vm, state.va);
    const Injections sched = scheduled_injections(net);

    PowerFlowSolution sol;
    sol.state = state;
    sol.p_net = sched.p;
    sol.q_net = sched.q;
    for (int i = 0; i < n; ++i) {
        const BusKind kind = net.buses[i].kind;
        if (kind == BusKind::Slack) sol.p_net[i] = s.p[i];
        if (kind != BusKind::PQ) sol.q_net[i] = s.q[i];
    }

    const int ng = static_cast<int>(net.generators.size());
    sol.pg = Eigen::VectorXd::Zero(ng);
    sol.qg = Eigen::VectorXd::Zero(ng);
    for (int k = 0; k < ng; ++k)
        if (net.generators[k].in_service) {
            sol.pg[k] = net.generators[k].pg;
            sol.qg[k] = net.generators[k].qg;
        }

    Eigen::VectorXd pd = Eigen::VectorXd::Zero(n), qd = Eigen::VectorXd::Zero(n);
    for (const Load& l : net.loads) {
        pd[l.bus] += l.pd;
        qd[l.bus] += l.qd;
    }
    const int slack = net.slack_bus();
    const int slack_gen = slack_generator(net);
    if (slack_gen >= 0) {
        double others = 0.0;
        for (int k : live_generators_at(net, slack))
            if (k != slack_gen) others += sol.pg[k];
        sol.pg[slack_gen] = sol.p_net[slack] + pd[slack] - others;
    }
    for (int i = 0; i < n; ++i) {
        if (net.buses[i].kind == BusKind::PQ) continue;
        const std::vector<int> gens = live_generators_at(net, i);
        if (gens.empty()) continue;
        const double share = (sol.q_net[i] + qd[i]) / static_cast<double>(gens.size());
        for (int k : gens) sol.qg[k] = share;
    }

    sol.flows = branch_flows(net, adm, state);
    return sol;
}

}  // namespace flowbench
