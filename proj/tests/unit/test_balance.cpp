#include <doctest.h>

#include <cmath>
#include <complex>

#include "flowbench/admittance.hpp"
#include "flowbench/balance.hpp"
#include "flowbench/newton.hpp"
#include "oracles.hpp"

using namespace flowbench;

namespace {

// Slack at bus 0 feeding a PQ load at bus 1 through r + jx.
Network feeder(double r, double x, double pd, double qd, double v1 = 1.0) {
    Network net;
    Bus a;
    a.number = 1;
    a.kind = BusKind::Slack;
    Bus b;
    b.number = 2;
    net.buses = {a, b};
    Generator g;
    g.bus = 0;
    g.vset = v1;
    g.pmax = 5.0;
    net.generators = {g};
    net.loads = {{1, pd, qd}};
    Branch br;
    br.from = 0;
    br.to = 1;
    br.r = r;
    br.x = x;
    net.branches = {br};
    return net;
}

// Receiving-end voltage by fixed-point iteration on V2 = V1 - Z conj(S / V2).
std::complex<double> fixed_point_voltage(double r, double x, double pd, double qd, double v1) {
    const std::complex<double> z(r, x), s(pd, qd);
    std::complex<double> v2(v1, 0.0);
    for (int k = 0; k < 500; ++k) v2 = v1 - z * std::conj(s / v2);
    return v2;
}

}  // namespace

TEST_CASE("mismatch magnitude is the Euclidean norm of dp and dq") {
    Eigen::VectorXd dp(1), dq(1);
    dp << 0.3;
    dq << 0.4;
    const MismatchReport r = MismatchReport::from(dp, dq);
    CHECK(r.ds[0] == doctest::Approx(0.5));
    CHECK(r.mean_ds == doctest::Approx(0.5));
    CHECK(r.max_ds == doctest::Approx(0.5));
}

TEST_CASE("zero-injection network at flat state balances") {
    Network net = feeder(0.01, 0.1, 0.0, 0.0);
    net.loads.clear();
    const MismatchReport r = mismatch(net, build_admittance(net), PFState::flat(2), scheduled_injections(net));
    CHECK(r.max_ds == 0.0);
}

TEST_CASE("converged IEEE-14 solution has small mismatch") {
    const Network net = oracle::load_case("case14");
    const SolveOutcome o = solve(net);
    const MismatchReport r = mismatch(net, build_admittance(net), o.state(), scheduled_injections(net));
    CHECK(r.max_ds < 1e-6);
    CHECK(r.max_ds >= r.mean_ds);
}

TEST_CASE("two-bus fixed-point solution satisfies the balance equations") {
    const double r = 0.02, x = 0.15, pd = 0.8, qd = 0.3, v1 = 1.04;
    const Network net = feeder(r, x, pd, qd, v1);
    const std::complex<double> v2 = fixed_point_voltage(r, x, pd, qd, v1);
    PFState s = PFState::flat(2);
    s.vm[0] = v1;
    s.vm[1] = std::abs(v2);
    s.va[1] = std::arg(v2);
    const MismatchReport m = mismatch(net, build_admittance(net), s, scheduled_injections(net));
    CHECK(m.max_ds < 1e-10);
    CHECK(branch_mismatch(net, s, scheduled_injections(net)).ds[1] < 1e-10);
}

TEST_CASE("solver-restricted mismatch drops free quantities") {
    const Network net = oracle::load_case("case14");
    Rng rng(4);
    const PFState s = oracle::random_state(rng, 14);
    const MismatchReport m = mismatch(net, build_admittance(net), s, scheduled_injections(net));
    const MismatchReport full = full_mismatch(build_admittance(net), s, scheduled_injections(net));
    for (int i = 0; i < 14; ++i) {
        const BusKind k = net.buses[i].kind;
        if (k == BusKind::Slack) CHECK(m.ds[i] == 0.0);
        if (k == BusKind::PV) {
            CHECK(m.dq[i] == 0.0);
            CHECK(m.dp[i] == full.dp[i]);
        }
        if (k == BusKind::PQ) CHECK(m.ds[i] == full.ds[i]);
    }
}

TEST_CASE("admittance and branch forms agree on random networks") {
    Rng rng(77);
    for (int k = 0; k < 30; ++k) {
        const int n = 2 + static_cast<int>(rng.below(29));
        const Network net = oracle::random_network(rng, n);
        const PFState s = oracle::random_state(rng, n);
        const Injections inj = scheduled_injections(net);
        const MismatchReport a = full_mismatch(build_admittance(net), s, inj);
        const MismatchReport b = branch_mismatch(net, s, inj);
        CHECK((a.dp - b.dp).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((a.dq - b.dq).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("mismatch is invariant under a global angle shift") {
    const Network net = oracle::load_case("case30");
    Rng rng(12);
    PFState s = oracle::random_state(rng, net.bus_count());
    const Admittance adm = build_admittance(net);
    const MismatchReport before = full_mismatch(adm, s, scheduled_injections(net));
    s.va.array() += 0.7;
    const MismatchReport after = full_mismatch(adm, s, scheduled_injections(net));
    CHECK((before.ds - after.ds).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("joule losses") {
    Rng rng(5);
    SUBCASE("lossless network") {
        Network net = oracle::random_network(rng, 10);
        for (Branch& br : net.branches) br.r = 0.0;
        CHECK(joule_losses(net, oracle::random_state(rng, 10)) == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("flat state") {
        const Network net = feeder(0.01, 0.1, 0.5, 0.1);
        CHECK(joule_losses(net, PFState::flat(2)) == 0.0);
    }
    SUBCASE("solved two-bus equals the summed branch flows") {
        const Network net = feeder(0.01, 0.1, 0.9, 0.2);
        const SolveOutcome o = solve(net);
        REQUIRE(o.converged());
        const Eigen::MatrixX4d f = branch_flows(net, o.state());
        CHECK(joule_losses(net, o.state()) == doctest::Approx(f(0, 0) + f(0, 2)).epsilon(1e-10));
        CHECK(joule_losses(net, o.state()) > 0.0);
    }
}

TEST_CASE("global demand") {
    SUBCASE("lossless shuntless network") {
        Network net = feeder(0.0, 0.1, 0.7, 0.1);
        const SolveOutcome o = solve(net);
        CHECK(global_demand(net, o.state()) == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("empty network at flat state") {
        Network net = feeder(0.01, 0.1, 0.0, 0.0);
        CHECK(global_demand(net, PFState::flat(2)) == 0.0);
    }
    SUBCASE("IEEE-14 demand equals generation at the solution") {
        const Network net = oracle::load_case("case14");
        const SolveOutcome o = solve(net);
        CHECK(global_demand(net, o.state()) == doctest::Approx(o.solution.pg.sum()).epsilon(1e-8));
    }
}

TEST_CASE("slack redispatch") {
    Network net = oracle::load_case("case14");
    double all = 0.0, other = 0.0, slack_set = 0.0;
    for (const Generator& g : net.generators) {
        all += g.pg;
        (g.bus == net.slack_bus() ? slack_set : other) += g.pg;
    }
    CHECK(slack_redispatch(net, all).p_slack == doctest::Approx(slack_set));
    CHECK(slack_redispatch(net, other + 0.5).p_slack == doctest::Approx(0.5));
    CHECK(slack_redispatch(net, all - 1e-9).below_setpoints);
    CHECK_FALSE(slack_redispatch(net, all).below_setpoints);

    Network no_slack = net;
    for (Generator& g : no_slack.generators)
        if (g.bus == net.slack_bus()) g.in_service = false;
    CHECK_THROWS_AS(slack_redispatch(no_slack, 1.0), ModelError);
}

TEST_CASE("slack redispatch closes the active balance for any state") {
    Rng rng(19);
    for (int k = 0; k < 20; ++k) {
        Network net = oracle::random_network(rng, 15);
        const PFState s = oracle::random_state(rng, 15);
        const SlackDispatch d = slack_redispatch(net, global_demand(net, s));
        net.generators[static_cast<std::size_t>(slack_generator(net))].pg = d.p_slack;
        CHECK(std::abs(branch_mismatch(net, s, scheduled_injections(net)).dp.sum()) < 1e-10);
    }
}

TEST_CASE("implied reactive generation") {
    SUBCASE("matches the solver at IEEE-14 generator buses") {
        const Network net = oracle::load_case("case14");
        const SolveOutcome o = solve(net);
        const Eigen::VectorXd q = implied_reactive(net, o.state());
        Eigen::VectorXd solver_q = Eigen::VectorXd::Zero(14);
        for (std::size_t g = 0; g < net.generators.size(); ++g)
            solver_q[net.generators[g].bus] += o.solution.qg[static_cast<Eigen::Index>(g)];
        for (int i = 0; i < 14; ++i)
            if (net.buses[i].kind != BusKind::PQ) CHECK(q[i] == doctest::Approx(solver_q[i]).epsilon(1e-8));
    }
    SUBCASE("isolated shunt bus") {
        Network net = feeder(0.01, 0.1, 0.0, 0.0);
        net.branches.clear();
        net.buses[0].bs = 0.3;
        net.loads = {{0, 0.0, 0.2}};
        CHECK(implied_reactive(net, PFState::flat(2))[0] == doctest::Approx(0.2 - 0.3));
    }
    SUBCASE("charging splits evenly on a symmetric line") {
        Network net = feeder(0.0, 0.1, 0.0, 0.0);
        net.loads.clear();
        net.branches[0].b_charging = 0.4;
        const Eigen::VectorXd q = implied_reactive(net, PFState::flat(2));
        CHECK(q[0] == doctest::Approx(-0.2));
        CHECK(q[1] == doctest::Approx(-0.2));
    }
}

TEST_CASE("completed solution is consistent with the flows") {
    const Network net = oracle::load_case("case118");
    const SolveOutcome o = solve(net);
    const Eigen::MatrixX4d f = branch_flows(net, o.state());
    Eigen::VectorXd p_out = Eigen::VectorXd::Zero(net.bus_count());
    for (std::size_t e = 0; e < net.branches.size(); ++e) {
        p_out[net.branches[e].from] += f(static_cast<Eigen::Index>(e), 0);
        p_out[net.branches[e].to] += f(static_cast<Eigen::Index>(e), 2);
    }
    for (int i = 0; i < net.bus_count(); ++i) {
        const double shunt = net.buses[i].gs * o.state().vm[i] * o.state().vm[i];
        CHECK(std::abs(o.solution.p_net[i] - shunt - p_out[i]) < 1e-8);
    }
}
