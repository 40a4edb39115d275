#include <doctest.h>

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "flowbench/admittance.hpp"
#include "flowbench/cpf.hpp"
#include "flowbench/newton.hpp"
#include "oracles.hpp"

using namespace flowbench;

namespace {

Eigen::MatrixXd finite_difference(const Network& net, const PFState& s, double h) {
    const Admittance adm = build_admittance(net);
    const UnknownIndex idx = unknown_index(net);
    const Injections inj = scheduled_injections(net);
    Eigen::MatrixXd fd(idx.size(), idx.size());
    for (int c = 0; c < idx.size(); ++c) {
        Eigen::VectorXd dx = Eigen::VectorXd::Zero(idx.size());
        dx[c] = h;
        PFState plus = s, minus = s;
        apply_update(idx, dx, plus);
        apply_update(idx, -dx, minus);
        fd.col(c) = (pf_residual(idx, adm, plus, inj) - pf_residual(idx, adm, minus, inj)) / (2.0 * h);
    }
    return fd;
}

double smallest_singular_value(const Eigen::MatrixXd& J) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(J).singularValues().minCoeff();
}

}  // namespace

TEST_CASE("unknown ordering: angles at non-slack buses, then PQ magnitudes") {
    const Network net = oracle::load_case("case14");
    const UnknownIndex idx = unknown_index(net);
    CHECK(idx.angle_buses.size() == 13);
    CHECK(idx.magnitude_buses.size() == 9);
    CHECK(std::is_sorted(idx.angle_buses.begin(), idx.angle_buses.end()));
}

TEST_CASE("jacobian matches central differences") {
    for (const char* name : {"case14", "case30"}) {
        const Network net = oracle::load_case(name);
        const Admittance adm = build_admittance(net);
        Rng rng(6);
        for (int k = 0; k < 5; ++k) {
            const PFState s = oracle::random_state(rng, net.bus_count());
            const Eigen::MatrixXd J = Eigen::MatrixXd(jacobian(net, adm, s));
            const Eigen::MatrixXd fd = finite_difference(net, s, 1e-6);
            CHECK((J - fd).cwiseAbs().maxCoeff() / J.cwiseAbs().maxCoeff() < 1e-5);
        }
    }
}

TEST_CASE("network without branches has a bus-local jacobian") {
    Network net = oracle::load_case("case14");
    for (Branch& br : net.branches) br.in_service = false;
    for (Bus& b : net.buses) b.bs = 0.1;
    const UnknownIndex idx = unknown_index(net);
    Rng rng(2);
    const Eigen::MatrixXd J = Eigen::MatrixXd(jacobian(net, build_admittance(net), oracle::random_state(rng, 14)));
    std::vector<int> bus_of(static_cast<std::size_t>(idx.size()));
    for (std::size_t k = 0; k < idx.angle_buses.size(); ++k) bus_of[k] = idx.angle_buses[k];
    for (std::size_t k = 0; k < idx.magnitude_buses.size(); ++k)
        bus_of[idx.angle_buses.size() + k] = idx.magnitude_buses[k];
    for (int r = 0; r < J.rows(); ++r)
        for (int c = 0; c < J.cols(); ++c)
            if (bus_of[static_cast<std::size_t>(r)] != bus_of[static_cast<std::size_t>(c)]) CHECK(J(r, c) == 0.0);
}

TEST_CASE("IEEE cases agree with the frozen reference solutions") {
    for (const char* name : {"case14", "case30", "case57", "case118"}) {
        const Network net = oracle::load_case(name);
        const SolveOutcome o = solve(net);
        REQUIRE(o.converged());
        CHECK(o.final_mismatch.max_ds <= 1e-8);
        const auto ref = oracle::reference_solution(name);
        REQUIRE(ref.size() == static_cast<std::size_t>(net.bus_count()));
        const int slack = net.slack_bus();
        const double ref_slack = ref[static_cast<std::size_t>(slack)].va_deg;
        for (int i = 0; i < net.bus_count(); ++i) {
            const auto& r = ref[static_cast<std::size_t>(i)];
            CHECK(r.bus == net.buses[i].number);
            CHECK(std::abs(o.state().vm[i] - r.vm) < 1e-7);
            const double va = (o.state().va[i] - o.state().va[slack]) * 180.0 / 3.14159265358979323846;
            CHECK(std::abs(va - (r.va_deg - ref_slack)) < 1e-5);
        }
    }
}

TEST_CASE("solver behaviour") {
    SUBCASE("zero injections converge at once") {
        Network net = oracle::load_case("case14");
        net.loads.clear();
        for (Generator& g : net.generators) {
            g.pg = 0.0;
            g.vset = 1.0;
        }
        for (Bus& b : net.buses) b.bs = 0.0;
        for (Branch& br : net.branches) {
            br.b_charging = 0.0;
            br.tap = 1.0;
        }
        const SolveOutcome o = solve(net);
        CHECK(o.converged());
        CHECK(o.iterations <= 1);
    }
    SUBCASE("repeat solves are bitwise identical") {
        const Network net = oracle::load_case("case57");
        const SolveOutcome a = solve(net), b = solve(net);
        CHECK(a.state().vm == b.state().vm);
        CHECK(a.state().va == b.state().va);
    }
    SUBCASE("steps shrink on converging runs") {
        const SolveOutcome o = solve(oracle::load_case("case118"));
        REQUIRE(o.step_norms.size() >= 2);
        CHECK(o.step_norms.back() <= o.step_norms.front());
    }
    SUBCASE("iteration cap is an outcome") {
        SolveOptions opts;
        opts.max_iter = 1;
        const SolveOutcome o = solve(oracle::load_case("case118"), opts);
        CHECK(o.status == SolveStatus::MaxIterations);
        CHECK(o.iterations == 1);
        CHECK(o.state().size() == 118);
    }
    SUBCASE("isolated PQ bus makes the system singular") {
        Network net = oracle::load_case("case14");
        for (Branch& br : net.branches)
            if (net.buses[br.from].number == 8 || net.buses[br.to].number == 8) br.in_service = false;
        net.buses[7].kind = BusKind::PQ;
        CHECK(solve(net).status == SolveStatus::Singular);
    }
    SUBCASE("impossible load does not converge") {
        Network net = oracle::load_case("case14");
        for (Load& l : net.loads) {
            l.pd *= 20.0;
            l.qd *= 20.0;
        }
        CHECK_FALSE(solve(net).converged());
    }
}

TEST_CASE("condition estimate") {
    SUBCASE("diagonal system") {
        Eigen::SparseMatrix<double> D(4, 4);
        D.insert(0, 0) = 2.0;
        D.insert(1, 1) = -50.0;
        D.insert(2, 2) = 0.5;
        D.insert(3, 3) = 7.0;
        CHECK(condition_estimate(D) == doctest::Approx(100.0));
    }
    SUBCASE("scale invariant and close to the exact value") {
        const Network net = oracle::load_case("case14");
        const SolveOutcome o = solve(net);
        const Eigen::SparseMatrix<double> J = jacobian(net, build_admittance(net), o.state());
        const double est = condition_estimate(J);
        const double exact = oracle::cond1(Eigen::MatrixXd(J));
        CHECK(est <= exact * (1.0 + 1e-9));
        CHECK(est >= exact / 3.0);
        const Eigen::SparseMatrix<double> scaled = 10.0 * J;
        CHECK(condition_estimate(scaled) == doctest::Approx(est).epsilon(1e-9));
    }
    SUBCASE("singular matrix") {
        Eigen::SparseMatrix<double> S(2, 2);
        S.insert(0, 0) = 1.0;
        S.insert(0, 1) = 2.0;
        S.insert(1, 0) = 2.0;
        S.insert(1, 1) = 4.0;
        CHECK(condition_estimate(S) == std::numeric_limits<double>::infinity());
    }
}

TEST_CASE("jacobian is nearly singular at the nose") {
    const Network net = oracle::load_case("case14");
    const ContinuationSpec spec = proportional_spec(net, 2.5);
    const CPFPath path = trace(net, spec);
    REQUIRE(path.nose_index);
    const Admittance adm = build_admittance(net);
    const double base = smallest_singular_value(Eigen::MatrixXd(jacobian(net, adm, path.points.front().state)));
    const double nose = smallest_singular_value(Eigen::MatrixXd(jacobian(net, adm, path.points[*path.nose_index].state)));
    CHECK(nose < 1e-2 * base);

    const ExtractedCases cases = extract_cases(net, spec, path);
    const SolveOutcome from_flat = solve(cases.nose.net);
    CHECK((!from_flat.converged() || from_flat.iterations > 2 * solve(net).iterations));
}
