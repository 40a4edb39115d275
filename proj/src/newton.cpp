#include "flowbench/newton.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

namespace flowbench {

namespace {

struct Positions {
    std::vector<int> angle;
    std::vector<int> magnitude;  // offset by the angle count
};

Positions positions(const UnknownIndex& idx, Eigen::Index n) {
    Positions pos{std::vector<int>(n, -1), std::vector<int>(n, -1)};
    const int na = static_cast<int>(idx.angle_buses.size());
    for (int k = 0; k < na; ++k) pos.angle[idx.angle_buses[k]] = k;
    for (int k = 0; k < static_cast<int>(idx.magnitude_buses.size()); ++k) pos.magnitude[idx.magnitude_buses[k]] = na + k;
    return pos;
}

constexpr double kDivergence = 1e10;

}  // namespace

UnknownIndex unknown_index(const Network& net) {
    UnknownIndex idx;
    for (int i = 0; i < net.bus_count(); ++i) {
        const BusKind k = net.buses[i].kind;
        if (k != BusKind::Slack) idx.angle_buses.push_back(i);
        if (k == BusKind::PQ) idx.magnitude_buses.push_back(i);
    }
    return idx;
}

Eigen::VectorXd pf_residual(const UnknownIndex& idx, const Admittance& adm, const PFState& state,
                            const Injections& inj) {
    const BusPower<double> s = bus_power<double>(adm.Y, state.vm, state.va);
    Eigen::VectorXd g(idx.size());
    const int na = static_cast<int>(idx.angle_buses.size());
    for (int k = 0; k < na; ++k) g[k] = s.p[idx.angle_buses[k]] - inj.p[idx.angle_buses[k]];
    for (int k = 0; k < static_cast<int>(idx.magnitude_buses.size()); ++k)
        g[na + k] = s.q[idx.magnitude_buses[k]] - inj.q[idx.magnitude_buses[k]];
    return g;
}

Eigen::SparseMatrix<double> jacobian(const UnknownIndex& idx, const Admittance& adm, const PFState& state) {
    const Eigen::Index n = adm.Y.rows();
    const Positions pos = positions(idx, n);
    const BusPower<double> s = bus_power<double>(adm.Y, state.vm, state.va);
    const Eigen::VectorXd& vm = state.vm;
    const Eigen::VectorXd& va = state.va;

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(4 * adm.Y.nonZeros());
    auto put = [&](int row, int col, double v) {
        if (row >= 0 && col >= 0) t.emplace_back(row, col, v);
    };

    Eigen::VectorXd gii = Eigen::VectorXd::Zero(n), bii = Eigen::VectorXd::Zero(n);
    for (Eigen::Index j = 0; j < adm.Y.outerSize(); ++j) {
        for (SparseComplex::InnerIterator it(adm.Y, j); it; ++it) {
            const Eigen::Index i = it.row();
            const double G = it.value().real(), B = it.value().imag();
            if (i == j) {
                gii[i] = G;
                bii[i] = B;
                continue;
            }
            const double c = std::cos(va[i] - va[j]), sn = std::sin(va[i] - va[j]);
            const double vv = vm[i] * vm[j];
            put(pos.angle[i], pos.angle[j], vv * (G * sn - B * c));
            put(pos.angle[i], pos.magnitude[j], vm[i] * (G * c + B * sn));
            put(pos.magnitude[i], pos.angle[j], -vv * (G * c + B * sn));
            put(pos.magnitude[i], pos.magnitude[j], vm[i] * (G * sn - B * c));
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = vm[i], P = s.p[i], Q = s.q[i];
        put(pos.angle[i], pos.angle[i], -Q - bii[i] * v * v);
        put(pos.angle[i], pos.magnitude[i], P / v + gii[i] * v);
        put(pos.magnitude[i], pos.angle[i], P - gii[i] * v * v);
        put(pos.magnitude[i], pos.magnitude[i], Q / v - bii[i] * v);
    }

    Eigen::SparseMatrix<double> J(idx.size(), idx.size());
    J.setFromTriplets(t.begin(), t.end());
    J.makeCompressed();
    return J;
}

Eigen::SparseMatrix<double> jacobian(const Network& net, const Admittance& adm, const PFState& state) {
    return jacobian(unknown_index(net), adm, state);
}

void apply_update(const UnknownIndex& idx, const Eigen::VectorXd& dx, PFState& state) {
    const int na = static_cast<int>(idx.angle_buses.size());
    for (int k = 0; k < na; ++k) state.va[idx.angle_buses[k]] += dx[k];
    for (int k = 0; k < static_cast<int>(idx.magnitude_buses.size()); ++k) state.vm[idx.magnitude_buses[k]] += dx[na + k];
}

std::string_view to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::Singular: return "singular";
        case SolveStatus::Diverged: return "diverged";
    }
    return "unknown";
}

PFState flat_start(const Network& net) {
    PFState s = PFState::flat(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i)
        if (net.buses[i].kind != BusKind::PQ) s.vm[i] = bus_voltage_setpoint(net, i);
    return s;
}

SolveOutcome solve(const Network& net, const SolveOptions& options) {
    return solve(net, build_admittance(net), scheduled_injections(net), options);
}

SolveOutcome solve(const Network& net, const Admittance& adm, const Injections& inj, const SolveOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const UnknownIndex idx = unknown_index(net);
    PFState state = options.warm_start ? *options.warm_start : flat_start(net);

    SolveOutcome out;
    for (int it = 0;; ++it) {
        out.final_mismatch = mismatch(net, adm, state, inj);
        const double worst = out.final_mismatch.max_ds;
        if (!std::isfinite(worst) || worst > kDivergence) {
            out.status = SolveStatus::Diverged;
            break;
        }
        if (worst <= options.tol) {
            out.status = SolveStatus::Converged;
            break;
        }
        if (it >= options.max_iter) {
            out.status = SolveStatus::MaxIterations;
            break;
        }

        const Eigen::SparseMatrix<double> J = jacobian(idx, adm, state);
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
        lu.compute(J);
        if (lu.info() != Eigen::Success) {
            out.status = SolveStatus::Singular;
            break;
        }
        const Eigen::VectorXd dx = lu.solve(-pf_residual(idx, adm, state, inj));
        if (lu.info() != Eigen::Success || !dx.allFinite()) {
            out.status = SolveStatus::Singular;
            break;
        }
        out.step_norms.push_back(dx.lpNorm<Eigen::Infinity>());
        apply_update(idx, dx, state);
        ++out.iterations;
    }
    out.solution = complete_solution(net, adm, state);
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

double condition_estimate(const Eigen::SparseMatrix<double>& J) {
    const Eigen::Index n = J.rows();
    if (n == 0) return 1.0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(J);
    if (lu.info() != Eigen::Success) return std::numeric_limits<double>::infinity();

    double norm_a = 0.0;
    for (Eigen::Index j = 0; j < J.outerSize(); ++j) {
        double col = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(J, j); it; ++it) col += std::abs(it.value());
        norm_a = std::max(norm_a, col);
    }

    // Hager's iteration for ||J^-1||_1 with Higham's alternating-sign safeguard.
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    double est = 0.0;
    Eigen::Index last = -1;
    for (int iter = 0; iter < 5; ++iter) {
        const Eigen::VectorXd y = lu.solve(x);
        if (!y.allFinite()) return std::numeric_limits<double>::infinity();
        est = std::max(est, y.lpNorm<1>());
        const Eigen::VectorXd xi = y.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : -1.0; });
        const Eigen::VectorXd z = lu.transpose().solve(xi);
        Eigen::Index j;
        const double zmax = z.cwiseAbs().maxCoeff(&j);
        if (zmax <= z.dot(x) || j == last) break;
        x.setZero();
        x[j] = 1.0;
        last = j;
    }
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i)
        b[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + (n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0));
    const Eigen::VectorXd yb = lu.solve(b);
    if (!yb.allFinite()) return std::numeric_limits<double>::infinity();
    est = std::max(est, 2.0 * yb.lpNorm<1>() / (3.0 * static_cast<double>(n)));
    return norm_a * est;
}

}  // namespace flowbench
