#include "flowbench/load_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowbench {

namespace {

constexpr double kBoxLow = 0.8;
constexpr double kBoxHigh = 1.2;
constexpr double kPerLoadCap = 2.0;
constexpr double kTotalCap = 1.3;
constexpr double kMinPowerFactor = 0.85;
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Eigen::VectorXd hit_and_run(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, double cap,
                            const Eigen::VectorXd& start, int steps, Rng& rng) {
    const Eigen::Index d = start.size();
    Eigen::VectorXd x = start;
    if (d == 0) return x;
    Eigen::VectorXd u(d);
    for (int s = 0; s < steps; ++s) {
        for (Eigen::Index i = 0; i < d; ++i) u[i] = rng.normal();
        const double norm = u.norm();
        if (norm == 0.0) continue;
        u /= norm;

        // Chord through x along u, clipped by the box faces.
        const Eigen::ArrayXd to_lo = (lo - x).array() / u.array();
        const Eigen::ArrayXd to_hi = (hi - x).array() / u.array();
        const Eigen::ArrayXd low = (u.array() > 0.0).select(to_lo, (u.array() < 0.0).select(to_hi, -kInf));
        const Eigen::ArrayXd high = (u.array() > 0.0).select(to_hi, (u.array() < 0.0).select(to_lo, kInf));
        double tmin = low.maxCoeff();
        double tmax = high.minCoeff();
        const double slope = u.sum();
        const double room = cap - x.sum();
        if (slope > 0.0)
            tmax = std::min(tmax, room / slope);
        else if (slope < 0.0)
            tmin = std::max(tmin, room / slope);
        if (!(tmax > tmin)) continue;
        x += rng.uniform(tmin, tmax) * u;
        x = x.cwiseMax(lo).cwiseMin(hi);
    }
    return x;
}

LoadProfile sample_loads(const Network& net, Rng& rng, LoadMethod method) {
    const Eigen::Index n = static_cast<Eigen::Index>(net.loads.size());
    Eigen::VectorXd base_p(n), base_q(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        base_p[i] = net.loads[i].pd;
        base_q[i] = net.loads[i].qd;
    }

    LoadProfile out{base_p, base_q};
    if (method == LoadMethod::Box) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = rng.uniform(kBoxLow, kBoxHigh);
            out.pd[i] = base_p[i] * u;
            out.qd[i] = base_q[i] * u;
        }
        return out;
    }

    const Eigen::VectorXd lo = (kPerLoadCap * base_p).cwiseMin(0.0);
    const Eigen::VectorXd hi = (kPerLoadCap * base_p).cwiseMax(0.0);
    const double cap = kTotalCap * base_p.sum();
    if (lo.sum() > cap) throw std::invalid_argument("load polytope is empty");
    const int steps = static_cast<int>(std::clamp<Eigen::Index>(n * n, 100, 20000));
    Eigen::VectorXd start = base_p;
    if (start.sum() > cap) start = lo;
    out.pd = hit_and_run(lo, hi, cap, start, steps, rng);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double pf = rng.uniform(kMinPowerFactor, 1.0);
        const double sign = base_q[i] > 0.0 ? 1.0 : (base_q[i] < 0.0 ? -1.0 : 0.0);
        out.qd[i] = sign * std::abs(out.pd[i]) * std::tan(std::acos(pf));
    }
    return out;
}

void apply_loads(Network& net, const LoadProfile& profile) {
    if (profile.pd.size() != static_cast<Eigen::Index>(net.loads.size()) || profile.qd.size() != profile.pd.size())
        throw std::invalid_argument("load profile does not match the load count");
    for (std::size_t i = 0; i < net.loads.size(); ++i) {
        net.loads[i].pd = profile.pd[static_cast<Eigen::Index>(i)];
        net.loads[i].qd = profile.qd[static_cast<Eigen::Index>(i)];
    }
}

}  // namespace flowbench
