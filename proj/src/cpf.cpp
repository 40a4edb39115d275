#include "flowbench/cpf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <Eigen/SparseLU>

#include "flowbench/newton.hpp"

namespace flowbench {

namespace {

// Direction of the injection change over the solved equations.
Eigen::VectorXd direction(const UnknownIndex& idx, const ContinuationSpec& spec) {
    Eigen::VectorXd d(idx.size());
    const int na = static_cast<int>(idx.angle_buses.size());
    for (int k = 0; k < na; ++k) {
        const int b = idx.angle_buses[k];
        d[k] = spec.target.p[b] - spec.base.p[b];
    }
    for (int k = 0; k < static_cast<int>(idx.magnitude_buses.size()); ++k) {
        const int b = idx.magnitude_buses[k];
        d[na + k] = spec.target.q[b] - spec.base.q[b];
    }
    return d;
}

void append(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, ptr);
}

}  // namespace

Injections ContinuationSpec::at(double lambda) const {
    return {base.p + lambda * (target.p - base.p), base.q + lambda * (target.q - base.q)};
}

ContinuationSpec proportional_spec(const Network& net, double factor) {
    ContinuationSpec spec;
    spec.base = scheduled_injections(net);
    spec.target = {factor * spec.base.p, factor * spec.base.q};
    spec.factor = factor;
    return spec;
}

std::string_view to_string(PathStatus s) {
    switch (s) {
        case PathStatus::NoseFound: return "nose_found";
        case PathStatus::TargetReached: return "target_reached";
        case PathStatus::Failed: return "failed";
    }
    return "unknown";
}

Prediction predictor(const Network& net, const Admittance& adm, const ContinuationSpec& spec, const PathPoint& from,
                     double step) {
    const UnknownIndex idx = unknown_index(net);
    Prediction out{from.state, from.lambda, false};
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(jacobian(idx, adm, from.state));
    if (lu.info() != Eigen::Success) {
        out.tangent_singular = true;
        return out;
    }
    const Eigen::VectorXd xdot = lu.solve(direction(idx, spec));
    if (lu.info() != Eigen::Success || !xdot.allFinite()) {
        out.tangent_singular = true;
        return out;
    }
    const double norm = std::sqrt(xdot.squaredNorm() + 1.0);
    apply_update(idx, xdot * (step / norm), out.state);
    out.lambda = from.lambda + step / norm;
    return out;
}

Correction corrector(const Network& net, const Admittance& adm, const ContinuationSpec& spec,
                     const Prediction& predicted) {
    SolveOptions opt;
    opt.tol = spec.corrector_tol;
    opt.max_iter = spec.corrector_max_iter;
    opt.warm_start = predicted.state;
    const SolveOutcome o = solve(net, adm, spec.at(predicted.lambda), opt);
    return {o.converged(), {predicted.lambda, o.state(), o.iterations}};
}

CPFPath trace(const Network& net, const ContinuationSpec& spec) {
    if (!(spec.min_step > 0.0) || spec.min_step > spec.max_step || !(spec.initial_step > 0.0))
        throw std::invalid_argument("continuation steps must be positive with min_step <= max_step");
    const Admittance adm = build_admittance(net);
    const UnknownIndex idx = unknown_index(net);
    if (direction(idx, spec).lpNorm<Eigen::Infinity>() == 0.0)
        throw std::invalid_argument("target injections equal the base injections");

    SolveOptions base_opt;
    base_opt.tol = spec.corrector_tol;
    const SolveOutcome base = solve(net, adm, spec.base, base_opt);
    if (!base.converged())
        throw ContinuationError(std::string("base case does not solve: ") + std::string(to_string(base.status)));

    CPFPath path;
    path.points.push_back({0.0, base.state(), base.iterations});
    path.condition_trace.push_back(condition_estimate(jacobian(idx, adm, base.state())));

    double step = std::clamp(spec.initial_step, spec.min_step, spec.max_step);
    int clean_successes = 0;
    bool retrying = false;
    while (true) {
        const PathPoint& last = path.points.back();
        Prediction pred = predictor(net, adm, spec, last, step);
        ++path.predictor_steps;
        if (pred.tangent_singular) {
            path.status = PathStatus::NoseFound;
            path.nose_index = path.points.size() - 1;
            break;
        }
        if (spec.stop == StopAt::Target && pred.lambda > 1.0) {
            // Shorten the step so the prediction lands on lambda = 1.
            const double frac = (1.0 - last.lambda) / (pred.lambda - last.lambda);
            pred.state.vm = last.state.vm + frac * (pred.state.vm - last.state.vm);
            pred.state.va = last.state.va + frac * (pred.state.va - last.state.va);
            pred.lambda = 1.0;
        }

        Correction corr = corrector(net, adm, spec, pred);
        if (corr.converged) {
            path.points.push_back(std::move(corr.point));
            path.condition_trace.push_back(condition_estimate(jacobian(idx, adm, path.points.back().state)));
            const double lambda = path.points.back().lambda;
            if (spec.stop == StopAt::Target && lambda >= 1.0) {
                path.status = PathStatus::TargetReached;
                break;
            }
            if (lambda > spec.max_lambda) {
                path.status = PathStatus::Failed;
                break;
            }
            clean_successes = retrying ? 0 : clean_successes + 1;
            retrying = false;
            if (clean_successes >= 3) {
                step = std::min(2.0 * step, spec.max_step);
                clean_successes = 0;
            }
            continue;
        }

        if (step <= spec.min_step) {
            path.status = PathStatus::NoseFound;
            path.nose_index = path.points.size() - 1;
            break;
        }
        step = std::max(step / 2.0, spec.min_step);
        retrying = true;
        clean_successes = 0;
    }
    return path;
}

Network scaled_network(const Network& net, const ContinuationSpec& spec, double lambda) {
    if (!(spec.factor > 0.0)) throw std::invalid_argument("scaled_network needs a proportional continuation spec");
    const double s = 1.0 + lambda * (spec.factor - 1.0);
    Network out = net;
    for (Load& l : out.loads) {
        l.pd *= s;
        l.qd *= s;
    }
    const int slack = net.slack_bus();
    for (Generator& g : out.generators)
        if (g.in_service && g.bus != slack) {
            g.pg *= s;
            g.qg *= s;
        }
    return out;
}

ExtractedCases extract_cases(const Network& net, const ContinuationSpec& spec, const CPFPath& path) {
    if (path.status != PathStatus::NoseFound || !path.nose_index)
        throw std::invalid_argument("extract_cases needs a path that found the nose");
    auto make = [&](const PathPoint& p) {
        ExtractedCase c;
        c.net = scaled_network(net, spec, p.lambda);
        c.solution = complete_solution(c.net, build_admittance(c.net), p.state);
        c.lambda = p.lambda;
        return c;
    };
    const std::size_t nose = *path.nose_index;
    ExtractedCases out;
    out.nose = make(path.points[nose]);
    const std::size_t first = nose >= 4 ? nose - 4 : 0;
    for (std::size_t k = first; k < nose; ++k) out.approaching.push_back(make(path.points[k]));
    out.truncated = out.approaching.size() < 4;
    return out;
}

int weakest_bus(const Network& net, const CPFPath& path) {
    if (path.points.empty()) return -1;
    const PFState& s = path.points.back().state;
    int best = -1;
    for (int i = 0; i < net.bus_count(); ++i)
        if (net.buses[i].kind == BusKind::PQ && (best < 0 || s.vm[i] < s.vm[best])) best = i;
    return best;
}

std::string path_csv(const CPFPath& path, int bus) {
    std::string out = "lambda,vm,condition\n";
    for (std::size_t k = 0; k < path.points.size(); ++k) {
        append(out, path.points[k].lambda);
        out += ',';
        append(out, bus >= 0 ? path.points[k].state.vm[bus] : std::nan(""));
        out += ',';
        append(out, path.condition_trace[k]);
        out += '\n';
    }
    return out;
}

}  // namespace flowbench
