#include "flowbench/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowbench/constraints.hpp"
#include "flowbench/corpus.hpp"
#include "flowbench/cpf.hpp"
#include "flowbench/manifest.hpp"
#include "flowbench/matpower.hpp"
#include "flowbench/metrics.hpp"
#include "flowbench/newton.hpp"
#include "flowbench/sample_record.hpp"

namespace flowbench::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

class Failure : public std::runtime_error {
  public:
    Failure(int code, std::string kind, const std::string& what)
        : std::runtime_error(what), code(code), kind(std::move(kind)) {}
    int code;
    std::string kind;
};

struct Args {
    std::string case_path;
    std::vector<std::string> corpora;
    std::string task;
    std::uint64_t seed = 0;
    double scale = 1.0;
    unsigned workers = 1;
    std::optional<double> tol;
    std::string out;
    std::size_t count = 100;
    std::string loads = "polytope";
    bool no_topology = false;
    std::size_t c2i = 0;
    double factor = 2.5;
    std::optional<int> bus_size;
    std::string predictions;
    std::string sample;
};

fs::path output_root() {
    const char* env = std::getenv("FLOWBENCH_OUT");
    return env && *env ? fs::path(env) : fs::path("flowbench-out");
}

fs::path output_path(const Args& a, const std::string& fallback) {
    return a.out.empty() ? output_root() / fallback : fs::path(a.out);
}

fs::path resolve_case(const std::string& spec) {
    if (fs::exists(spec)) return spec;
    for (const fs::path& candidate : {fs::path(FLOWBENCH_CASE_DIR) / spec, fs::path(FLOWBENCH_CASE_DIR) / (spec + ".m")})
        if (fs::exists(candidate)) return candidate;
    throw Failure(kDataError, "io", "case not found: " + spec);
}

Network read_case(const std::string& spec) {
    Network net = load_matpower(resolve_case(spec));
    validate(net);
    return net;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Failure(kDataError, "io", "cannot write " + path.string());
    f << text;
}

const char* kind_name(BusKind k) {
    switch (k) {
        case BusKind::PQ: return "PQ";
        case BusKind::PV: return "PV";
        case BusKind::Slack: return "slack";
    }
    return "?";
}

int cmd_parse(const Args& a, std::ostream& out) {
    const Network net = read_case(a.case_path);
    int live = 0;
    for (const Branch& b : net.branches) live += b.in_service;
    json doc = json::object();
    doc["case"] = net.name;
    doc["base_mva"] = net.base_mva;
    doc["buses"] = net.bus_count();
    doc["pq"] = buses_of_kind(net, BusKind::PQ).size();
    doc["pv"] = buses_of_kind(net, BusKind::PV).size();
    doc["slack_bus"] = net.buses[net.slack_bus()].number;
    doc["generators"] = net.generators.size();
    doc["loads"] = net.loads.size();
    doc["branches"] = net.branches.size();
    doc["in_service_branches"] = live;
    doc["valid"] = true;
    out << doc.dump(1) << "\n";
    return kOk;
}

int cmd_solve(const Args& a, std::ostream& out) {
    const Network net = read_case(a.case_path);
    SolveOptions opts;
    if (a.tol) opts.tol = *a.tol;
    const SolveOutcome o = solve(net, opts);
    json doc = json::object();
    doc["case"] = net.name;
    doc["status"] = std::string(to_string(o.status));
    doc["iterations"] = o.iterations;
    doc["max_ds"] = o.final_mismatch.max_ds;
    doc["mean_ds"] = o.final_mismatch.mean_ds;
    doc["wall_time"] = o.wall_time;
    doc["step_norms"] = o.step_norms;
    json buses = json::array();
    for (int i = 0; i < net.bus_count(); ++i)
        buses.push_back({{"bus", net.buses[i].number},
                         {"kind", kind_name(net.buses[i].kind)},
                         {"vm", o.solution.state.vm[i]},
                         {"va_deg", o.solution.state.va[i] * kRadToDeg},
                         {"p_net", o.solution.p_net[i]},
                         {"q_net", o.solution.q_net[i]}});
    doc["buses"] = std::move(buses);
    json gens = json::array();
    for (std::size_t g = 0; g < net.generators.size(); ++g)
        gens.push_back({{"bus", net.buses[net.generators[g].bus].number},
                        {"pg", o.solution.pg[static_cast<Eigen::Index>(g)]},
                        {"qg", o.solution.qg[static_cast<Eigen::Index>(g)]}});
    doc["generators"] = std::move(gens);
    const std::string text = doc.dump(1) + "\n";
    if (!a.out.empty()) write_file(a.out, text);
    out << text;
    if (!o.converged())
        throw Failure(kSolverFailure, "solver", "Newton did not converge: " + std::string(to_string(o.status)));
    return kOk;
}

int cmd_cpf(const Args& a, std::ostream& out) {
    const Network net = read_case(a.case_path);
    ContinuationSpec spec = proportional_spec(net, a.factor);
    if (a.tol) spec.corrector_tol = *a.tol;
    CPFPath path;
    try {
        path = trace(net, spec);
    } catch (const ContinuationError& e) {
        throw Failure(kSolverFailure, "solver", e.what());
    }
    const fs::path dir = output_path(a, "cpf-" + net.name);
    const int bus = weakest_bus(net, path);
    write_file(dir / "path.csv", path_csv(path, bus));

    std::vector<double> sorted = path.condition_trace;
    std::sort(sorted.begin(), sorted.end());
    json doc = json::object();
    doc["case"] = net.name;
    doc["factor"] = a.factor;
    doc["status"] = std::string(to_string(path.status));
    doc["points"] = path.points.size();
    doc["predictor_steps"] = path.predictor_steps;
    doc["weakest_bus"] = bus >= 0 ? json(net.buses[bus].number) : json(nullptr);
    doc["condition_median"] = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
    doc["out"] = dir.generic_string();
    if (path.status == PathStatus::NoseFound) {
        const ExtractedCases cases = extract_cases(net, spec, path);
        const std::size_t nose = *path.nose_index;
        doc["nose_lambda"] = path.points[nose].lambda;
        doc["condition_at_nose"] = path.condition_trace[nose];
        auto save = [&](const ExtractedCase& c, const std::string& regime, const std::string& file, int iterations) {
            Provenance p;
            p.case_name = net.name;
            p.regime = regime;
            p.lambda = c.lambda;
            p.iterations = iterations;
            write_file(dir / file, write_sample(make_record(c.net, c.solution, p)));
        };
        save(cases.nose, "close-to-infeasible", "nose.json", path.points[nose].corrector_iterations);
        const std::size_t first = nose - cases.approaching.size();
        for (std::size_t k = 0; k < cases.approaching.size(); ++k)
            save(cases.approaching[k], "approaching-infeasible", "approaching-" + std::to_string(k) + ".json",
                 path.points[first + k].corrector_iterations);
        doc["approaching"] = cases.approaching.size();
    }
    out << doc.dump(1) << "\n";
    if (path.status != PathStatus::NoseFound)
        throw Failure(kSolverFailure, "solver", "continuation ended without a nose: " + std::string(to_string(path.status)));
    return kOk;
}

int cmd_generate(const Args& a, std::ostream& out) {
    const Network net = read_case(a.case_path);
    CorpusOptions opts;
    opts.seed = a.seed;
    opts.count = a.count;
    opts.workers = a.workers;
    opts.c2i_traces = a.c2i;
    opts.c2i_factor = a.factor;
    opts.scenario.loads = a.loads == "box" ? LoadMethod::Box : LoadMethod::Polytope;
    opts.scenario.perturb_topology = !a.no_topology;
    if (a.tol) opts.scenario.solve_tol = *a.tol;
    const fs::path dir = output_path(a, "corpus-" + net.name + "-" + std::to_string(a.seed));
    const CorpusIndex index = generate_corpus(net, opts, dir);

    std::size_t feasible = 0, c2i = 0, approaching = 0;
    for (const CorpusEntry& e : index.samples) {
        feasible += e.regime == "feasible";
        c2i += e.regime == "close-to-infeasible";
        approaching += e.regime == "approaching-infeasible";
    }
    json doc = json::object();
    doc["case"] = net.name;
    doc["seed"] = a.seed;
    doc["requested"] = a.count;
    doc["feasible"] = feasible;
    doc["close_to_infeasible"] = c2i;
    doc["approaching_infeasible"] = approaching;
    doc["attempts"] = index.attempts;
    doc["rejections"] = index.rejections;
    doc["out"] = dir.generic_string();
    out << doc.dump(1) << "\n";
    if (feasible < a.count)
        throw Failure(kSolverFailure, "solver",
                      "only " + std::to_string(feasible) + " of " + std::to_string(a.count) +
                          " scenarios were accepted within the attempt budget");
    return kOk;
}

int cmd_manifest(const Args& a, std::ostream& out) {
    if (std::find(task_ids().begin(), task_ids().end(), a.task) == task_ids().end())
        throw Failure(kUsage, "usage", UnknownTaskError(a.task).what());
    std::vector<CorpusIndex> corpora;
    for (const std::string& c : a.corpora) corpora.push_back(load_corpus(c));
    DatasetManifest m;
    try {
        m = build_manifest(corpora, a.task, a.scale, a.bus_size);
    } catch (const UnknownTaskError& e) {
        throw Failure(kUsage, "usage", e.what());
    } catch (const std::invalid_argument& e) {
        throw Failure(kUsage, "usage", e.what());
    }
    const fs::path file = output_path(a, "manifest-" + a.task + ".json");
    write_file(file, write_manifest(m));

    json doc = json::object();
    doc["task"] = m.task;
    doc["scale"] = m.scale;
    doc["train"] = m.requested("train");
    doc["test"] = m.requested("test");
    doc["shortfall"] = m.shortfall();
    doc["out"] = file.generic_string();
    json cells = json::array();
    for (const ManifestCell& c : m.cells)
        if (c.shortfall())
            cells.push_back({{"split", c.split}, {"bus_size", c.bus_size}, {"regime", c.regime},
                             {"topology", c.topology}, {"requested", c.requested}, {"available", c.ids.size()}});
    doc["short_cells"] = std::move(cells);
    out << doc.dump(1) << "\n";
    if (!m.complete())
        throw Failure(kDataError, "shortfall",
                      std::to_string(m.shortfall()) + " sample(s) missing; see short_cells in the manifest summary");
    return kOk;
}

int cmd_evaluate(const Args& a, std::ostream& out) {
    if (a.corpora.size() != 1) throw Failure(kUsage, "usage", "evaluate takes exactly one --corpus");
    const CorpusIndex corpus = load_corpus(a.corpora.front());
    std::optional<PredictionSet> preds;
    if (!a.predictions.empty()) {
        std::vector<std::string> ids;
        for (const CorpusEntry& e : corpus.samples) ids.push_back(e.id);
        preds = load_predictions(a.predictions, ids);
    }
    const EvaluationReport report = evaluate_predictions(corpus, preds, a.workers);
    if (!a.out.empty()) write_file(a.out, write_report_json(report));
    out << write_report_text(report);
    return kOk;
}

int cmd_check(const Args& a, std::ostream& out) {
    const double tol = a.tol.value_or(1e-6);
    std::vector<std::pair<std::string, fs::path>> files;
    if (!a.sample.empty()) files.emplace_back(fs::path(a.sample).stem().string(), a.sample);
    for (const std::string& dir : a.corpora) {
        const CorpusIndex c = load_corpus(dir);
        for (const CorpusEntry& e : c.samples) files.emplace_back(e.id, c.root / e.file);
    }
    if (files.empty()) throw Failure(kUsage, "usage", "check needs --sample or --corpus");

    json failed = json::array();
    double worst = 0.0;
    std::string worst_tag;
    ViolationReport single;
    for (const auto& [id, path] : files) {
        const ViolationReport r = check_constraints(load_sample(path.string()), tol);
        if (r.worst_violation > worst) {
            worst = r.worst_violation;
            worst_tag = r.worst_tag;
        }
        if (!r.pass) failed.push_back({{"id", id}, {"tag", r.worst_tag}, {"violation", r.worst_violation}});
        single = r;
    }
    json doc = json::object();
    doc["checked"] = files.size();
    doc["passed"] = files.size() - failed.size();
    doc["tol"] = tol;
    doc["worst_violation"] = worst;
    doc["worst_tag"] = worst_tag;
    doc["failed"] = failed;
    if (files.size() == 1) {
        json rows = json::array();
        for (const ConstraintResidual& c : single.constraints)
            rows.push_back({{"tag", c.tag}, {"description", c.description}, {"worst", c.worst},
                            {"index", c.index}, {"enforced", c.enforced}});
        doc["constraints"] = std::move(rows);
    }
    out << doc.dump(1) << "\n";
    if (!failed.empty())
        throw Failure(kDataError, "constraint", std::to_string(failed.size()) + " record(s) violate the enforced set");
    return kOk;
}

void report(std::ostream& err, int code, const std::string& kind, const std::string& message,
            std::optional<int> line = std::nullopt) {
    json e = json::object();
    e["error"] = kind;
    e["message"] = message;
    if (line) e["line"] = *line;
    e["exit_code"] = code;
    err << e.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Power-flow scenario generation and evaluation"};
    app.require_subcommand(1);
    Args a;

    auto add_case = [&](CLI::App* sub) { sub->add_option("--case", a.case_path, "MATPOWER case file or bundled case name")->required(); };
    auto add_out = [&](CLI::App* sub, const std::string& what) { sub->add_option("--out", a.out, what); };
    auto add_tol = [&](CLI::App* sub) { sub->add_option("--tol", a.tol, "tolerance override")->check(CLI::PositiveNumber); };
    auto add_workers = [&](CLI::App* sub) { sub->add_option("--workers", a.workers, "worker threads")->check(CLI::Range(1u, 1024u)); };

    CLI::App* parse = app.add_subcommand("parse", "parse and validate a case file");
    add_case(parse);

    CLI::App* solve_cmd = app.add_subcommand("solve", "solve a case from flat start");
    add_case(solve_cmd);
    add_tol(solve_cmd);
    add_out(solve_cmd, "also write the result to this file");

    CLI::App* cpf = app.add_subcommand("cpf", "trace the nose curve of a case");
    add_case(cpf);
    add_tol(cpf);
    cpf->add_option("--factor", a.factor, "target injection multiple")->check(CLI::PositiveNumber);
    add_out(cpf, "output directory");

    CLI::App* gen = app.add_subcommand("generate", "generate a sample corpus");
    add_case(gen);
    gen->add_option("--count", a.count, "feasible samples to keep")->check(CLI::PositiveNumber);
    gen->add_option("--seed", a.seed, "corpus seed")->required();
    add_workers(gen);
    add_tol(gen);
    gen->add_option("--loads", a.loads, "load sampler")->check(CLI::IsMember({"box", "polytope"}));
    gen->add_flag("--no-topology", a.no_topology, "keep the base topology");
    gen->add_option("--c2i", a.c2i, "feasible samples to trace to the nose");
    gen->add_option("--factor", a.factor, "continuation target multiple")->check(CLI::PositiveNumber);
    add_out(gen, "corpus directory");

    CLI::App* man = app.add_subcommand("manifest", "build a task manifest");
    man->add_option("--task", a.task, "task id")->required();
    man->add_option("--corpus", a.corpora, "corpus directory (repeatable)")->required();
    man->add_option("--scale", a.scale, "count scale factor")->check(CLI::PositiveNumber);
    man->add_option("--bus-size", a.bus_size, "training bus size");
    add_out(man, "manifest file");

    CLI::App* eval = app.add_subcommand("evaluate", "score predictions against a corpus");
    eval->add_option("--corpus", a.corpora, "corpus directory")->required();
    eval->add_option("--predictions", a.predictions, "prediction directory or container file");
    add_workers(eval);
    add_out(eval, "write the JSON report here");

    CLI::App* check = app.add_subcommand("check", "check records against the feasibility set");
    check->add_option("--sample", a.sample, "single record file");
    check->add_option("--corpus", a.corpora, "corpus directory");
    add_tol(check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        report(err, kUsage, "usage", e.what());
        return kUsage;
    }

    try {
        if (parse->parsed()) return cmd_parse(a, out);
        if (solve_cmd->parsed()) return cmd_solve(a, out);
        if (cpf->parsed()) return cmd_cpf(a, out);
        if (gen->parsed()) return cmd_generate(a, out);
        if (man->parsed()) return cmd_manifest(a, out);
        if (eval->parsed()) return cmd_evaluate(a, out);
        if (check->parsed()) return cmd_check(a, out);
    } catch (const Failure& e) {
        report(err, e.code, e.kind, e.what());
        return e.code;
    } catch (const ParseError& e) {
        report(err, kDataError, "parse", e.what(), e.line());
        return kDataError;
    } catch (const ModelError& e) {
        report(err, kDataError, "model", e.what());
        return kDataError;
    } catch (const SchemaError& e) {
        report(err, kDataError, "schema", e.what());
        return kDataError;
    } catch (const PredictionError& e) {
        report(err, kDataError, "prediction", e.what());
        return kDataError;
    } catch (const std::exception& e) {
        report(err, kDataError, "error", e.what());
        return kDataError;
    }
    return kUsage;
}

}  // namespace flowbench::cli
