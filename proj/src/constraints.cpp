#include "flowbench/constraints.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "flowbench/admittance.hpp"
#include "flowbench/power_equations.hpp"

namespace flowbench {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Tracker {
    ConstraintResidual r;
    void see(double v, int index) {
        if (r.index < 0 || v > r.worst) {
            r.worst = std::max(v, 0.0);
            r.index = index;
        }
    }
};

Tracker make(const char* tag, const char* description, bool enforced = true) {
    return {{tag, description, 0.0, -1, enforced}};
}

double above(double v, double hi) { return std::max(v - hi, 0.0); }
double below(double v, double lo) { return std::max(lo - v, 0.0); }

ViolationReport evaluate(const SampleRecord& rec, const std::vector<double>& angmin, const std::vector<double>& angmax,
                         double tol) {
    const Eigen::Index n = rec.bus_count();
    const Eigen::Index ng = rec.gen_limits.rows();
    const Eigen::Index ne = rec.edge_index.cols();
    const Eigen::VectorXd va = rec.bus_voltages.col(0);
    const Eigen::VectorXd vm = rec.bus_voltages.col(1);

    // Continuation scales every generator, so its points leave the pg box.
    Tracker pg_bounds = make("b", "active generation within limits at non-slack generators",
                             rec.provenance.regime == "feasible");
    Tracker slack_pg = make("c", "slack active generation nonnegative");
    Tracker vm_bounds = make("d", "voltage magnitude within limits at PV and slack buses");
    Tracker vm_pos = make("e", "voltage magnitude nonnegative");
    Tracker ref_angle = make("f", "reference bus angle is zero");
    Tracker ang_diff = make("g", "branch angle difference within limits");
    Tracker p_bal = make("h", "active power balance");
    Tracker q_bal = make("i", "reactive power balance");
    Tracker from_flow = make("j", "from-side branch flow");
    Tracker to_flow = make("k", "to-side branch flow");
    Tracker qg_limits = make("qg_limits", "reactive generation within limits", false);
    Tracker pq_vm = make("pq_vm_bounds", "voltage magnitude within limits at PQ buses", false);
    Tracker rating = make("branch_rating", "apparent branch flow within rating", false);

    for (Eigen::Index g = 0; g < ng; ++g) {
        const double pg = rec.gen_generation(g, 0), qg = rec.gen_generation(g, 1);
        if (rec.gen_slack[static_cast<std::size_t>(g)])
            slack_pg.see(below(pg, 0.0), static_cast<int>(g));
        else
            pg_bounds.see(std::max(below(pg, rec.gen_limits(g, 0)), above(pg, rec.gen_limits(g, 1))), static_cast<int>(g));
        qg_limits.see(std::max(below(qg, rec.gen_limits(g, 2)), above(qg, rec.gen_limits(g, 3))), static_cast<int>(g));
    }

    Eigen::VectorXd p_out = Eigen::VectorXd::Zero(n), q_out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index e = 0; e < ne; ++e) {
        const int f = rec.edge_index(0, e), t = rec.edge_index(1, e);
        p_out[f] += rec.edge_label(e, 0);
        q_out[f] += rec.edge_label(e, 1);
        p_out[t] += rec.edge_label(e, 2);
        q_out[t] += rec.edge_label(e, 3);

        const double diff = va[f] - va[t];
        ang_diff.see(std::max(below(diff, angmin[static_cast<std::size_t>(e)]), above(diff, angmax[static_cast<std::size_t>(e)])),
                     static_cast<int>(e));

        Branch br;
        br.r = rec.edge_attr(e, 0);
        br.x = rec.edge_attr(e, 1);
        br.b_charging = rec.edge_attr(e, 3) + rec.edge_attr(e, 5);
        br.tap = rec.edge_attr(e, 6);
        br.shift = rec.edge_attr(e, 7) * kDeg;
        const Eigen::Vector4d s = two_port_flow<double>(branch_two_port(br), vm[f], va[f], vm[t], va[t]);
        from_flow.see(std::hypot(s[0] - rec.edge_label(e, 0), s[1] - rec.edge_label(e, 1)), static_cast<int>(e));
        to_flow.see(std::hypot(s[2] - rec.edge_label(e, 2), s[3] - rec.edge_label(e, 3)), static_cast<int>(e));

        const double limit = rec.edge_limits[e];
        if (limit > 0.0)
            rating.see(std::max(above(std::hypot(rec.edge_label(e, 0), rec.edge_label(e, 1)), limit),
                                above(std::hypot(rec.edge_label(e, 2), rec.edge_label(e, 3)), limit)),
                       static_cast<int>(e));
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const int idx = static_cast<int>(i);
        const auto kind = static_cast<BusKind>(rec.bus_type[i]);
        const double bound = std::max(below(vm[i], rec.bus_limits(i, 0)), above(vm[i], rec.bus_limits(i, 1)));
        if (kind == BusKind::PQ)
            pq_vm.see(bound, idx);
        else
            vm_bounds.see(bound, idx);
        vm_pos.see(below(vm[i], 0.0), idx);
        if (kind == BusKind::Slack) ref_angle.see(std::abs(va[i]), idx);

        const double v2 = vm[i] * vm[i];
        const double dp = rec.bus_gen(i, 0) - rec.bus_demand(i, 0) - rec.bus_shunt(i, 0) * v2 - p_out[i];
        const double dq = rec.bus_gen(i, 1) - rec.bus_demand(i, 1) + rec.bus_shunt(i, 1) * v2 - q_out[i];
        p_bal.see(std::abs(dp), idx);
        q_bal.see(std::abs(dq), idx);
    }

    ViolationReport rep;
    rep.tol = tol;
    for (Tracker* t : {&pg_bounds, &slack_pg, &vm_bounds, &vm_pos, &ref_angle, &ang_diff, &p_bal, &q_bal, &from_flow,
                       &to_flow, &qg_limits, &pq_vm, &rating}) {
        rep.constraints.push_back(t->r);
        if (!t->r.enforced) continue;
        const bool bad = !(t->r.worst <= tol);
        if (bad) rep.pass = false;
        if (t->r.worst > rep.worst_violation || (bad && rep.worst_tag.empty())) {
            rep.worst_violation = t->r.worst;
            rep.worst_tag = t->r.tag;
        }
    }
    return rep;
}

}  // namespace

const ConstraintResidual* ViolationReport::find(const std::string& tag) const {
    for (const auto& c : constraints)
        if (c.tag == tag) return &c;
    return nullptr;
}

ViolationReport check_constraints(const Network& net, const SampleRecord& rec, double tol) {
    std::vector<double> lo, hi;
    for (const Branch& br : net.branches)
        if (br.in_service) {
            lo.push_back(br.angmin);
            hi.push_back(br.angmax);
        }
    if (static_cast<Eigen::Index>(lo.size()) != rec.edge_index.cols())
        throw std::invalid_argument("record branches do not match the network");
    return evaluate(rec, lo, hi, tol);
}

ViolationReport check_constraints(const SampleRecord& rec, double tol) {
    const auto ne = static_cast<std::size_t>(rec.edge_index.cols());
    return evaluate(rec, std::vector<double>(ne, -2.0 * std::numbers::pi), std::vector<double>(ne, 2.0 * std::numbers::pi),
                    tol);
}

}  // namespace flowbench
