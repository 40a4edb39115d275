#include "flowbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "flowbench/admittance.hpp"

namespace flowbench {

using json = nlohmann::ordered_json;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

// Buses and branches from the input arrays only.
Network scoring_network(const SampleRecord& r) {
    Network net;
    const Eigen::Index n = r.bus_count();
    for (Eigen::Index i = 0; i < n; ++i) {
        Bus b;
        b.number = static_cast<int>(i) + 1;
        b.kind = static_cast<BusKind>(r.bus_type[i]);
        b.gs = r.bus_shunt(i, 0);
        b.bs = r.bus_shunt(i, 1);
        net.buses.push_back(b);
    }
    for (Eigen::Index e = 0; e < r.edge_index.cols(); ++e) {
        Branch br;
        br.from = r.edge_index(0, e);
        br.to = r.edge_index(1, e);
        br.r = r.edge_attr(e, 0);
        br.x = r.edge_attr(e, 1);
        br.b_charging = r.edge_attr(e, 3) + r.edge_attr(e, 5);
        br.tap = r.edge_attr(e, 6);
        br.shift = r.edge_attr(e, 7) * kDeg;
        net.branches.push_back(br);
    }
    return net;
}

void check_matrix(const MatrixX2d& m, Eigen::Index rows, const std::string& what) {
    if (m.rows() != rows)
        throw PredictionError(what + " has " + std::to_string(m.rows()) + " rows, expected " + std::to_string(rows));
    if (!m.allFinite()) throw PredictionError(what + " contains non-finite values");
}

MatrixX2d rows_from(const json& j, const std::string& what) {
    if (!j.is_array()) throw PredictionError(what + " must be an array of rows");
    MatrixX2d m(static_cast<Eigen::Index>(j.size()), 2);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& row = j[i];
        if (!row.is_array() || row.size() != 2) throw PredictionError(what + " rows must have two entries");
        for (int c = 0; c < 2; ++c) {
            if (row[c].is_null()) {
                m(static_cast<Eigen::Index>(i), c) = std::numeric_limits<double>::quiet_NaN();
            } else if (row[c].is_number()) {
                m(static_cast<Eigen::Index>(i), c) = row[c].get<double>();
            } else {
                throw PredictionError(what + " entries must be numbers");
            }
        }
    }
    return m;
}

ModelOutput prediction_from_json(const std::string& id, const json& j) {
    ModelOutput p;
    p.id = id;
    if (j.contains("bus_y")) p.bus_y = rows_from(j.at("bus_y"), id + ": bus_y");
    if (j.contains("bus_voltages")) p.bus_voltages = rows_from(j.at("bus_voltages"), id + ": bus_voltages");
    if (!p.bus_y && !p.bus_voltages && j.contains("bus") && j.at("bus").is_object() && j.at("bus").contains("y"))
        p.bus_y = rows_from(j.at("bus").at("y"), id + ": bus.y");
    if (!p.bus_y && !p.bus_voltages) throw PredictionError(id + ": prediction has neither bus_y nor bus_voltages");
    return p;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PredictionError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Accumulator {
    std::vector<double> means;
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();

    void add(const std::vector<double>& values) {
        if (values.empty()) return;
        means.push_back(std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size()));
        min = std::min(min, *std::min_element(values.begin(), values.end()));
        max = std::max(max, *std::max_element(values.begin(), values.end()));
    }

    StatBlock block() const {
        StatBlock b;
        if (means.empty()) return b;
        b.present = true;
        b.samples = means.size();
        const double n = static_cast<double>(means.size());
        b.mean = std::accumulate(means.begin(), means.end(), 0.0) / n;
        double var = 0.0;
        for (double m : means) var += (m - b.mean) * (m - b.mean);
        b.mean_std = std::sqrt(var / n);
        b.min = min;
        b.max = max;
        return b;
    }
};

json block_json(const StatBlock& b) {
    if (!b.present) return json{{"present", false}};
    return json{{"present", true}, {"samples", b.samples}, {"mean", b.mean}, {"mean_std", b.mean_std},
                {"min", b.min},    {"max", b.max}};
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), pattern, v);
    return buf;
}

}  // namespace

PBL pbl(const MismatchReport& report) { return {report.mean_ds, report.max_ds}; }

ScoredSample score_prediction(const SampleRecord& r, const ModelOutput& pred) {
    const Eigen::Index n = r.bus_count();
    if (!pred.bus_y && !pred.bus_voltages) throw PredictionError(pred.id + ": empty prediction");
    if (pred.bus_y) check_matrix(*pred.bus_y, n, pred.id + ": bus_y");
    if (pred.bus_voltages) check_matrix(*pred.bus_voltages, n, pred.id + ": bus_voltages");

    ScoredSample s;
    s.state = PFState::flat(n);
    Injections inj{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    std::vector<bool> free_p(n, false), free_q(n, false);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto kind = static_cast<BusKind>(r.bus_type[i]);
        auto va = [&] { return pred.bus_y ? (*pred.bus_y)(i, kind == BusKind::PQ ? 0 : 1) : (*pred.bus_voltages)(i, 0); };
        switch (kind) {
            case BusKind::PQ:
                s.state.va[i] = va();
                s.state.vm[i] = pred.bus_y ? (*pred.bus_y)(i, 1) : (*pred.bus_voltages)(i, 1);
                inj.p[i] = -r.bus_x(i, 0);
                inj.q[i] = -r.bus_x(i, 1);
                break;
            case BusKind::PV:
                s.state.va[i] = va();
                s.state.vm[i] = r.bus_x(i, 1);
                inj.p[i] = r.bus_x(i, 0);
                if (pred.bus_y)
                    inj.q[i] = (*pred.bus_y)(i, 0);
                else
                    free_q[i] = true;
                break;
            case BusKind::Slack:
                s.state.va[i] = r.bus_x(i, 0);
                s.state.vm[i] = r.bus_x(i, 1);
                if (pred.bus_y) {
                    inj.p[i] = (*pred.bus_y)(i, 0);
                    inj.q[i] = (*pred.bus_y)(i, 1);
                } else {
                    free_p[i] = free_q[i] = true;
                }
                break;
        }
    }

    const Admittance adm = build_admittance(scoring_network(r));
    const BusPower<double> flow = bus_power<double>(adm.Y, s.state.vm, s.state.va);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (free_p[i]) inj.p[i] = flow.p[i];
        if (free_q[i]) inj.q[i] = flow.q[i];
    }
    s.p_net = inj.p;
    s.q_net = inj.q;
    s.mismatch = full_mismatch(adm, s.state, inj);
    return s;
}

ModelOutput label_prediction(const std::string& id, const SampleRecord& rec) { return {id, rec.bus_y, std::nullopt}; }

double runtime_stat(const std::vector<BatchTiming>& batches) {
    double weighted = 0.0;
    std::size_t total = 0;
    for (const BatchTiming& b : batches) {
        weighted += b.seconds_per_sample * static_cast<double>(b.size);
        total += b.size;
    }
    if (total == 0) throw std::invalid_argument("runtime statistic needs at least one sample");
    return weighted / static_cast<double>(total);
}

InterpretabilityStats interpretability(const std::vector<SolutionView>& samples) {
    Accumulator pq_vm, pv_q, dtheta, slack_p, slack_q;
    for (const SolutionView& s : samples) {
        std::vector<double> vm, q, dth;
        for (Eigen::Index i = 0; i < s.bus_type.size(); ++i) {
            switch (static_cast<BusKind>(s.bus_type[i])) {
                case BusKind::PQ: vm.push_back(s.state.vm[i]); break;
                case BusKind::PV: q.push_back(s.q_net[i]); break;
                case BusKind::Slack:
                    slack_p.add({s.p_net[i]});
                    slack_q.add({s.q_net[i]});
                    break;
            }
        }
        for (Eigen::Index e = 0; e < s.edge_index.cols(); ++e)
            dth.push_back(std::abs(s.state.va[s.edge_index(0, e)] - s.state.va[s.edge_index(1, e)]));
        pq_vm.add(vm);
        pv_q.add(q);
        dtheta.add(dth);
    }
    return {pq_vm.block(), pv_q.block(), dtheta.block(), slack_p.block(), slack_q.block()};
}

ModelOutput parse_prediction(const std::string& id, std::string_view text) {
    try {
        return prediction_from_json(id, json::parse(text));
    } catch (const json::exception& e) {
        throw PredictionError(id + ": " + e.what());
    }
}

PredictionSet load_predictions(const std::filesystem::path& source, const std::vector<std::string>& ids) {
    PredictionSet set;
    if (std::filesystem::is_directory(source)) {
        for (const std::string& id : ids) {
            const std::filesystem::path file = source / (id + ".json");
            if (std::filesystem::exists(file)) set.by_id.emplace(id, parse_prediction(id, read_file(file)));
        }
        return set;
    }
    try {
        const json doc = json::parse(read_file(source));
        for (const json& entry : doc.at("predictions")) {
            const std::string id = entry.at("id").get<std::string>();
            set.by_id.insert_or_assign(id, prediction_from_json(id, entry));
        }
        if (doc.contains("batches"))
            for (const json& b : doc.at("batches"))
                set.batches.push_back({b.at("seconds_per_sample").get<double>(), b.at("size").get<std::size_t>()});
        if (doc.contains("hardware")) set.hardware = doc.at("hardware").get<std::string>();
    } catch (const json::exception& e) {
        throw PredictionError(source.string() + ": " + e.what());
    }
    return set;
}

EvaluationReport evaluate_predictions(const CorpusIndex& corpus, const std::optional<PredictionSet>& predictions,
                                      unsigned workers) {
    const std::size_t n = corpus.samples.size();
    if (predictions) {
        std::vector<std::string> missing;
        for (const CorpusEntry& e : corpus.samples)
            if (!predictions->by_id.count(e.id)) missing.push_back(e.id);
        if (!missing.empty()) {
            std::string msg = std::to_string(missing.size()) + " sample(s) have no prediction:";
            for (const std::string& id : missing) msg += " " + id;
            throw PredictionError(msg);
        }
    }

    EvaluationReport report;
    report.samples.resize(n);
    std::vector<SolutionView> views(n);
    parallel_for(n, workers, [&](std::size_t k) {
        const CorpusEntry& e = corpus.samples[k];
        const SampleRecord rec = load_sample((corpus.root / e.file).string());
        const ModelOutput pred = predictions ? predictions->by_id.at(e.id) : label_prediction(e.id, rec);
        ScoredSample s = score_prediction(rec, pred);
        report.samples[k] = {e.id, e.regime, e.topology, s.mismatch.mean_ds, s.mismatch.max_ds};
        views[k] = {rec.bus_type, rec.edge_index, std::move(s.state), std::move(s.p_net), std::move(s.q_net)};
    });

    std::map<std::pair<std::string, std::string>, GroupScore> groups;
    GroupScore all{"all", "all", 0, 0.0, 0.0};
    for (const SampleScore& s : report.samples) {
        GroupScore& g = groups[{s.topology, s.regime}];
        g.topology = s.topology;
        g.regime = s.regime;
        for (GroupScore* t : {&g, &all}) {
            ++t->count;
            t->mean_ds += s.mean_ds;
            t->max_ds = std::max(t->max_ds, s.max_ds);
        }
    }
    for (auto& [key, g] : groups) {
        g.mean_ds /= static_cast<double>(g.count);
        report.groups.push_back(g);
    }
    if (all.count) all.mean_ds /= static_cast<double>(all.count);
    report.groups.push_back(all);

    report.stats = interpretability(views);
    if (predictions) {
        if (!predictions->batches.empty()) report.runtime = runtime_stat(predictions->batches);
        report.hardware = predictions->hardware;
    }
    return report;
}

std::string write_report_json(const EvaluationReport& r) {
    json doc = json::object();
    json groups = json::array();
    for (const GroupScore& g : r.groups)
        groups.push_back({{"topology", g.topology}, {"regime", g.regime}, {"count", g.count},
                          {"pbl_mean", g.mean_ds}, {"pbl_max", g.max_ds}});
    doc["groups"] = std::move(groups);
    doc["runtime_seconds_per_sample"] = r.runtime ? json(*r.runtime) : json(nullptr);
    doc["hardware"] = r.hardware;
    doc["interpretability"] = {{"pq_vm", block_json(r.stats.pq_vm)},
                               {"pv_q_net", block_json(r.stats.pv_q)},
                               {"branch_abs_dtheta", block_json(r.stats.branch_dtheta)},
                               {"slack_p", block_json(r.stats.slack_p)},
                               {"slack_q", block_json(r.stats.slack_q)}};
    json samples = json::array();
    for (const SampleScore& s : r.samples)
        samples.push_back({{"id", s.id}, {"regime", s.regime}, {"topology", s.topology},
                           {"pbl_mean", s.mean_ds}, {"pbl_max", s.max_ds}});
    doc["samples"] = std::move(samples);
    return doc.dump(1) + "\n";
}

std::string write_report_text(const EvaluationReport& r) {
    std::string out = "topology  regime                  count  PBL mean      PBL max\n";
    for (const GroupScore& g : r.groups) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-9s %-23s %5zu  %.3e    %.3e\n", g.topology.c_str(), g.regime.c_str(),
                      g.count, g.mean_ds, g.max_ds);
        out += line;
    }
    out += "runtime: " + (r.runtime ? fmt("%.3e s/sample", *r.runtime) : std::string("n/a")) + " (" + r.hardware + ")\n";
    auto row = [&](const char* name, const StatBlock& b) {
        out += std::string(name) + ": ";
        if (!b.present) {
            out += "absent\n";
            return;
        }
        out += "mean " + fmt("%.4f", b.mean) + " +/- " + fmt("%.4f", b.mean_std) + ", min " + fmt("%.4f", b.min) +
               ", max " + fmt("%.4f", b.max) + "\n";
    };
    row("PQ |v|", r.stats.pq_vm);
    row("PV q_net", r.stats.pv_q);
    row("branch |dtheta|", r.stats.branch_dtheta);
    row("slack p", r.stats.slack_p);
    row("slack q", r.stats.slack_q);
    return out;
}

}  // namespace flowbench
