#include "flowbench/scenario.hpp"

#include "flowbench/constraints.hpp"
#include "flowbench/newton.hpp"

namespace flowbench {

Scenario draw_scenario(const Network& base, Rng& rng, const ScenarioOptions& options) {
    Scenario s;
    Network loaded = base;
    apply_loads(loaded, sample_loads(base, rng, options.loads));
    if (options.perturb_topology) {
        PerturbedNetwork p = perturb_topology(loaded, rng);
        s.net = std::move(p.net);
        s.event = std::move(p.event);
    } else {
        s.net = std::move(loaded);
    }
    const Dispatch d = diversify_setpoints(s.net, rng);
    apply_dispatch(s.net, d);
    s.capacity_ok = d.feasible;
    return s;
}

ScenarioResult generate_sample(const Network& base, std::uint64_t seed, std::uint64_t index,
                               const ScenarioOptions& options) {
    Rng rng(seed, index);
    Scenario s = draw_scenario(base, rng, options);

    ScenarioResult out;
    out.net = std::move(s.net);
    out.event = std::move(s.event);
    out.rejection = {seed, index, std::string(to_string(out.event.kind)), out.event.topology(), ""};
    if (!s.capacity_ok) {
        out.rejection.reason = "capacity";
        return out;
    }

    SolveOptions opt;
    opt.tol = options.solve_tol;
    opt.max_iter = options.max_iter;
    SolveOutcome solved = solve(out.net, opt);
    if (!solved.converged()) {
        out.rejection.reason = "solver:" + std::string(to_string(solved.status));
        return out;
    }

    Provenance prov;
    prov.case_name = base.name;
    prov.seed = seed;
    prov.index = index;
    prov.event = out.rejection.event;
    prov.removed_generators = out.event.removed_generators;
    prov.removed_branches = out.event.removed_branches;
    prov.topology = out.event.topology();
    prov.iterations = solved.iterations;
    SampleRecord rec = make_record(out.net, solved.solution, std::move(prov));

    const ViolationReport check = check_constraints(out.net, rec, options.check_tol);
    if (!check.pass) {
        out.rejection.reason = "constraint:" + check.worst_tag;
        return out;
    }
    out.solution = std::move(solved.solution);
    out.record = std::move(rec);
    return out;
}

}  // namespace flowbench
