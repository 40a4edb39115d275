#include <doctest.h>

#include <cmath>

#include "flowbench/admittance.hpp"
#include "flowbench/balance.hpp"
#include "flowbench/newton.hpp"
#include "oracles.hpp"

using namespace flowbench;

namespace {

Network line(double r, double x) {
    Network net;
    Bus a;
    a.number = 1;
    a.kind = BusKind::Slack;
    Bus b;
    b.number = 2;
    net.buses = {a, b};
    Generator g;
    g.bus = 0;
    net.generators = {g};
    Branch br;
    br.from = 0;
    br.to = 1;
    br.r = r;
    br.x = x;
    net.branches = {br};
    return net;
}

}  // namespace

TEST_CASE("pure reactance branch gives the textbook admittance") {
    const Eigen::MatrixXcd Y = Eigen::MatrixXcd(build_admittance(line(0.0, 0.1)).Y);
    CHECK(std::abs(Y(0, 0) - Complex(0, -10)) < 1e-12);
    CHECK(std::abs(Y(0, 1) - Complex(0, 10)) < 1e-12);
    CHECK(std::abs(Y(1, 0) - Complex(0, 10)) < 1e-12);
    CHECK(std::abs(Y(1, 1) - Complex(0, -10)) < 1e-12);
}

TEST_CASE("open branch contributes nothing") {
    Network net = line(0.0, 0.1);
    net.branches[0].in_service = false;
    CHECK(Eigen::MatrixXcd(build_admittance(net).Y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tap two-port matches a hand-coded pi model") {
    Branch br;
    br.from = 0;
    br.to = 1;
    br.r = 0.02;
    br.x = 0.2;
    br.b_charging = 0.1;
    br.tap = 1.05;
    const BranchTwoPort tp = branch_two_port(br);
    const Complex y = 1.0 / Complex(0.02, 0.2);
    CHECK(std::abs(tp.ff - (y + Complex(0, 0.05)) / (1.05 * 1.05)) < 1e-12);
    CHECK(std::abs(tp.ft - (-y / 1.05)) < 1e-12);
    CHECK(std::abs(tp.tf - (-y / 1.05)) < 1e-12);
    CHECK(std::abs(tp.tt - (y + Complex(0, 0.05))) < 1e-12);

    br.shift = 0.1;
    const BranchTwoPort ps = branch_two_port(br);
    const Complex t = std::polar(1.05, 0.1);
    CHECK(std::abs(ps.ft - (-y / std::conj(t))) < 1e-12);
    CHECK(std::abs(ps.tf - (-y / t)) < 1e-12);
}

TEST_CASE("sparse admittance equals the dense oracle on IEEE cases") {
    for (const char* name : {"case14", "case30", "case57", "case118"}) {
        const Network net = oracle::load_case(name);
        const Eigen::MatrixXcd Y = Eigen::MatrixXcd(build_admittance(net).Y);
        CHECK((Y - oracle::dense_ybus(net)).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("zero-impedance branch is rejected with its index") {
    Network net = line(0.0, 0.0);
    try {
        build_admittance(net);
        FAIL("expected ModelError");
    } catch (const ModelError& e) {
        CHECK(e.index() == 0);
    }
}

TEST_CASE("branch flows") {
    SUBCASE("flat state carries no flow") {
        const Network net = line(0.0, 0.1);
        CHECK(branch_flows(net, PFState::flat(2)).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("lossless line follows v_i v_j sin(theta) / x") {
        const Network net = line(0.0, 0.1);
        PFState s = PFState::flat(2);
        s.va[0] = 0.1;
        const Eigen::MatrixX4d f = branch_flows(net, s);
        CHECK(f(0, 0) == doctest::Approx(10.0 * std::sin(0.1)).epsilon(1e-12));
        CHECK(f(0, 2) == doctest::Approx(-10.0 * std::sin(0.1)).epsilon(1e-12));
    }
    SUBCASE("untapped lines agree with the direct g/b flow formula") {
        Rng rng(8);
        for (int k = 0; k < 20; ++k) {
            const double r = 0.01 + 0.1 * rng.uniform(), x = 0.05 + 0.3 * rng.uniform();
            const Network net = line(r, x);
            const PFState s = oracle::random_state(rng, 2);
            const double g = r / (r * r + x * x), b = -x / (r * r + x * x);
            const double th = s.va[0] - s.va[1], vi = s.vm[0], vj = s.vm[1];
            const double p = vi * vi * g - vi * vj * (g * std::cos(th) + b * std::sin(th));
            const double q = -vi * vi * b - vi * vj * (g * std::sin(th) - b * std::cos(th));
            const Eigen::MatrixX4d f = branch_flows(net, s);
            CHECK(std::abs(f(0, 0) - p) < 1e-12);
            CHECK(std::abs(f(0, 1) - q) < 1e-12);
        }
    }
    SUBCASE("series losses are nonnegative at a solution") {
        const Network net = oracle::load_case("case118");
        const SolveOutcome o = solve(net);
        REQUIRE(o.converged());
        const Eigen::MatrixX4d f = o.solution.flows;
        for (Eigen::Index e = 0; e < f.rows(); ++e) CHECK(f(e, 0) + f(e, 2) >= -1e-12);
    }
}

TEST_CASE("net injection from Y equals series losses plus shunt conductance") {
    Rng rng(31);
    for (int k = 0; k < 10; ++k) {
        const Network net = oracle::random_network(rng, 12);
        const PFState s = oracle::random_state(rng, 12);
        const Eigen::VectorXcd S = oracle::dense_power(build_admittance(net).Y, s);
        double shunt = 0.0;
        for (int i = 0; i < 12; ++i) shunt += net.buses[i].gs * s.vm[i] * s.vm[i];
        CHECK(S.real().sum() == doctest::Approx(joule_losses(net, s) + shunt).epsilon(1e-9));
    }
}

TEST_CASE("admittance is permutation equivariant") {
    const Network net = oracle::load_case("case14");
    std::vector<int> perm(14);
    for (int i = 0; i < 14; ++i) perm[i] = (i * 5 + 3) % 14;
    Network shuffled = net;
    for (int i = 0; i < 14; ++i) shuffled.buses[perm[i]] = net.buses[i];
    for (Branch& br : shuffled.branches) {
        br.from = perm[br.from];
        br.to = perm[br.to];
    }
    const Eigen::MatrixXcd Y = Eigen::MatrixXcd(build_admittance(net).Y);
    const Eigen::MatrixXcd Z = Eigen::MatrixXcd(build_admittance(shuffled).Y);
    double worst = 0.0;
    for (int i = 0; i < 14; ++i)
        for (int j = 0; j < 14; ++j) worst = std::max(worst, std::abs(Y(i, j) - Z(perm[i], perm[j])));
    CHECK(worst < 1e-12);
}

TEST_CASE("connectivity") {
    const Network net = oracle::load_case("case14");
    CHECK(component_count(net) == 1);

    Network leaf = net;
    for (Branch& br : leaf.branches)
        if (leaf.buses[br.from].number == 7 && leaf.buses[br.to].number == 8) br.in_service = false;
    CHECK(component_count(leaf) == 2);
    CHECK_FALSE(is_connected(leaf));
    CHECK_THROWS_AS(validate(leaf), ModelError);

    Network bare = net;
    bare.buses.resize(3);
    bare.branches.clear();
    CHECK(component_count(bare) == 3);
}

TEST_CASE("validation catches structural errors") {
    Network net = line(0.0, 0.1);
    CHECK_NOTHROW(validate(net));
    Network two_slack = net;
    two_slack.buses[1].kind = BusKind::Slack;
    CHECK_THROWS_AS(validate(two_slack), ModelError);
    Network dangling = net;
    dangling.branches[0].to = 5;
    CHECK_THROWS_AS(validate(dangling), ModelError);
    Network bad_tap = net;
    bad_tap.branches[0].tap = 0.0;
    CHECK_THROWS_AS(validate(bad_tap), ModelError);
}
