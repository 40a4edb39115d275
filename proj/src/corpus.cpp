#include "flowbench/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "flowbench/cpf.hpp"

namespace flowbench {

using json = nlohmann::ordered_json;

namespace {

constexpr std::size_t kBatch = 64;

std::string padded(std::uint64_t v, int width = 6) {
    std::string s = std::to_string(v);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return s;
}

struct Produced {
    CorpusEntry entry;
    SampleRecord record;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::vector<Produced> trace_cases(const Network& scenario, const SampleRecord& feasible, double factor) {
    const ContinuationSpec spec = proportional_spec(scenario, factor);
    const CPFPath path = trace(scenario, spec);
    if (path.status != PathStatus::NoseFound) return {};
    const ExtractedCases cases = extract_cases(scenario, spec, path);

    const std::string& name = feasible.provenance.case_name;
    const std::uint64_t index = feasible.provenance.index;
    const int n = scenario.bus_count();
    auto produce = [&](const ExtractedCase& c, const std::string& regime, const std::string& id,
                       int iterations) -> Produced {
        Provenance p = feasible.provenance;
        p.regime = regime;
        p.lambda = c.lambda;
        p.iterations = iterations;
        return {{id, "samples/" + id + ".json", regime, p.topology, n, index}, make_record(c.net, c.solution, p)};
    };

    std::vector<Produced> out;
    const std::size_t nose = *path.nose_index;
    out.push_back(produce(cases.nose, "close-to-infeasible", name + "-close-to-infeasible-" + padded(index),
                          path.points[nose].corrector_iterations));
    const std::size_t first = nose - cases.approaching.size();
    for (std::size_t k = 0; k < cases.approaching.size(); ++k)
        out.push_back(produce(cases.approaching[k], "approaching-infeasible",
                              name + "-approaching-infeasible-" + padded(index) + "-" + std::to_string(k),
                              path.points[first + k].corrector_iterations));
    return out;
}

}  // namespace

CorpusIndex generate_corpus(const Network& base, const CorpusOptions& options, const std::filesystem::path& out) {
    validate(base);
    const std::size_t cap = options.max_attempts ? options.max_attempts : 50 * std::max<std::size_t>(options.count, 1);

    std::vector<Produced> produced;
    std::vector<Network> trace_nets;
    std::vector<Rejection> rejections;
    std::size_t attempts = 0;
    for (std::size_t start = 0; produced.size() < options.count && start < cap; start += kBatch) {
        const std::size_t n = std::min(kBatch, cap - start);
        std::vector<std::optional<ScenarioResult>> batch(n);
        parallel_for(n, options.workers, [&](std::size_t i) {
            batch[i] = generate_sample(base, options.seed, start + i, options.scenario);
        });
        for (std::size_t i = 0; i < n && produced.size() < options.count; ++i) {
            ScenarioResult& r = *batch[i];
            attempts = start + i + 1;
            if (!r.accepted()) {
                rejections.push_back(r.rejection);
                continue;
            }
            const std::uint64_t index = start + i;
            const std::string id = base.name + "-feasible-" + padded(index);
            CorpusEntry entry{id, "samples/" + id + ".json", "feasible", r.record->provenance.topology,
                              base.bus_count(), index};
            if (trace_nets.size() < options.c2i_traces) trace_nets.push_back(r.net);
            produced.push_back({std::move(entry), std::move(*r.record)});
        }
    }

    const std::size_t traces = trace_nets.size();
    std::vector<std::vector<Produced>> traced(traces);
    std::vector<std::string> trace_errors(traces);
    parallel_for(traces, options.workers, [&](std::size_t t) {
        try {
            traced[t] = trace_cases(trace_nets[t], produced[t].record, options.c2i_factor);
        } catch (const std::exception& e) {
            trace_errors[t] = e.what();
        }
    });
    for (std::size_t t = 0; t < traces; ++t) {
        if (traced[t].empty()) {
            const Provenance& p = produced[t].record.provenance;
            rejections.push_back({options.seed, p.index, p.event, p.topology,
                                  trace_errors[t].empty() ? "cpf:no_nose" : "cpf:" + trace_errors[t]});
        }
    }
    for (auto& group : traced)
        for (auto& p : group) produced.push_back(std::move(p));

    CorpusIndex index;
    index.case_name = base.name;
    index.seed = options.seed;
    index.attempts = attempts;
    index.rejections = rejections.size();
    index.requested = options.count;

    std::filesystem::create_directories(out / "samples");
    for (const auto& entry : std::filesystem::directory_iterator(out / "samples"))
        if (entry.is_regular_file() && entry.path().extension() == ".json") std::filesystem::remove(entry.path());
    for (const Produced& p : produced) {
        write_text(out / p.entry.file, write_sample(p.record));
        index.samples.push_back(p.entry);
    }
    write_text(out / "corpus.json", write_corpus_index(index));

    std::string log;
    for (const Rejection& r : rejections) {
        json line = json::object();
        line["seed"] = r.seed;
        line["index"] = r.index;
        line["event"] = r.event;
        line["topology"] = r.topology;
        line["reason"] = r.reason;
        log += line.dump() + "\n";
    }
    write_text(out / "rejections.jsonl", log);
    index.root = out;
    return index;
}

std::string write_corpus_index(const CorpusIndex& index) {
    json doc = json::object();
    doc["case"] = index.case_name;
    doc["seed"] = index.seed;
    doc["requested"] = index.requested;
    doc["attempts"] = index.attempts;
    doc["rejections"] = index.rejections;
    json samples = json::array();
    for (const CorpusEntry& e : index.samples) {
        json s = json::object();
        s["id"] = e.id;
        s["file"] = e.file;
        s["regime"] = e.regime;
        s["topology"] = e.topology;
        s["bus_count"] = e.bus_count;
        s["index"] = e.index;
        samples.push_back(std::move(s));
    }
    doc["samples"] = std::move(samples);
    return doc.dump(1) + "\n";
}

CorpusIndex load_corpus(const std::filesystem::path& dir) {
    std::ifstream in(dir / "corpus.json");
    if (!in) throw std::runtime_error("no corpus.json in " + dir.string());
    std::stringstream ss;
    ss << in.rdbuf();
    CorpusIndex index;
    try {
        const json doc = json::parse(ss.str());
        index.case_name = doc.at("case").get<std::string>();
        index.seed = doc.at("seed").get<std::uint64_t>();
        index.requested = doc.at("requested").get<std::size_t>();
        index.attempts = doc.at("attempts").get<std::size_t>();
        index.rejections = doc.at("rejections").get<std::size_t>();
        for (const json& s : doc.at("samples"))
            index.samples.push_back({s.at("id").get<std::string>(), s.at("file").get<std::string>(),
                                     s.at("regime").get<std::string>(), s.at("topology").get<std::string>(),
                                     s.at("bus_count").get<int>(), s.at("index").get<std::uint64_t>()});
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed corpus.json in " + dir.string() + ": " + e.what());
    }
    index.root = dir;
    return index;
}

}  // namespace flowbench
