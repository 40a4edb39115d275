#include "flowbench/sample_record.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

namespace flowbench {

using json = nlohmann::ordered_json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

const char* const kBranchKey = "(bus, branch, bus)";
const char* const kGenBusKey = "(gen, gen_link, bus)";
const char* const kBusGenKey = "(bus, gen_link, gen)";
const char* const kLoadBusKey = "(load, load_link, bus)";
const char* const kBusLoadKey = "(bus, load_link, load)";

template <typename A, typename B>
bool same(const A& a, const B& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

template <typename Derived>
json rows_json(const Eigen::MatrixBase<Derived>& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(std::move(row));
    }
    return out;
}

json coo_json(const Matrix2Xi& m) {
    json out = json::array();
    for (int r = 0; r < 2; ++r) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(r, j));
        out.push_back(std::move(row));
    }
    return out;
}

json object_json(std::initializer_list<std::pair<const char*, json>> items) {
    json out = json::object();
    for (const auto& [k, v] : items) out[k] = v;
    return out;
}

// Reading helpers. Every accessor names the full key path in its errors.

const json& member(const json& obj, const std::string& path, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(path + "." + key, "missing key");
    return *it;
}

void only_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw SchemaError(path, "expected an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw SchemaError(path.empty() ? it.key() : path + "." + it.key(), "unknown key");
}

double finite_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw SchemaError(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw SchemaError(path, "non-finite value");
    return d;
}

template <int Cols>
Eigen::Matrix<double, Eigen::Dynamic, Cols> read_rows(const json& v, const std::string& path, Eigen::Index expected_rows) {
    if (!v.is_array()) throw SchemaError(path, "expected an array of rows");
    if (expected_rows >= 0 && static_cast<Eigen::Index>(v.size()) != expected_rows)
        throw SchemaError(path, "has " + std::to_string(v.size()) + " rows, expected " + std::to_string(expected_rows));
    Eigen::Matrix<double, Eigen::Dynamic, Cols> m(static_cast<Eigen::Index>(v.size()), Cols);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_array() || v[i].size() != Cols)
            throw SchemaError(path, "row " + std::to_string(i) + " has " +
                                        std::to_string(v[i].is_array() ? v[i].size() : 0) + " columns, expected " +
                                        std::to_string(Cols));
        for (int j = 0; j < Cols; ++j) m(static_cast<Eigen::Index>(i), j) = finite_number(v[i][j], path);
    }
    return m;
}

Matrix2Xi read_coo(const json& v, const std::string& path, Eigen::Index expected_cols) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_array() || !v[1].is_array() || v[0].size() != v[1].size())
        throw SchemaError(path, "expected two index rows of equal length");
    if (expected_cols >= 0 && static_cast<Eigen::Index>(v[0].size()) != expected_cols)
        throw SchemaError(path, "has " + std::to_string(v[0].size()) + " columns, expected " +
                                    std::to_string(expected_cols));
    Matrix2Xi m(2, static_cast<Eigen::Index>(v[0].size()));
    for (int r = 0; r < 2; ++r)
        for (std::size_t j = 0; j < v[r].size(); ++j) {
            if (!v[r][j].is_number_integer()) throw SchemaError(path, "expected integer indices");
            m(r, static_cast<Eigen::Index>(j)) = v[r][j].get<int>();
        }
    return m;
}

void check_range(const Matrix2Xi& m, int row, Eigen::Index bound, const std::string& path) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        if (m(row, j) < 0 || m(row, j) >= bound) throw SchemaError(path, "index out of range");
}

}  // namespace

bool SampleRecord::operator==(const SampleRecord& o) const {
    return provenance == o.provenance && base_mva == o.base_mva && same(bus_x, o.bus_x) && same(bus_y, o.bus_y) &&
           same(bus_gen, o.bus_gen) && same(bus_demand, o.bus_demand) && same(bus_voltages, o.bus_voltages) &&
           same(bus_type, o.bus_type) && same(bus_shunt, o.bus_shunt) && same(bus_limits, o.bus_limits) &&
           same(gen_limits, o.gen_limits) && same(gen_generation, o.gen_generation) && gen_slack == o.gen_slack &&
           same(load_demand, o.load_demand) && same(edge_index, o.edge_index) && same(edge_attr, o.edge_attr) &&
           same(edge_label, o.edge_label) && same(edge_limits, o.edge_limits) && same(gen_to_bus, o.gen_to_bus) &&
           same(bus_to_gen, o.bus_to_gen) && same(load_to_bus, o.load_to_bus) && same(bus_to_load, o.bus_to_load);
}

SampleRecord make_record(const Network& net, const PowerFlowSolution& sol, Provenance provenance) {
    const int n = net.bus_count();
    if (sol.state.size() != n || sol.p_net.size() != n || sol.q_net.size() != n)
        throw std::invalid_argument("solution does not cover every bus");
    if (sol.pg.size() != static_cast<Eigen::Index>(net.generators.size()) || sol.qg.size() != sol.pg.size())
        throw std::invalid_argument("solution is missing generator outputs");
    if (sol.flows.rows() != static_cast<Eigen::Index>(net.branches.size()))
        throw std::invalid_argument("solution is missing branch flows");

    std::vector<int> gens, branches;
    for (int k = 0; k < static_cast<int>(net.generators.size()); ++k)
        if (net.generators[k].in_service) gens.push_back(k);
    for (int k = 0; k < static_cast<int>(net.branches.size()); ++k)
        if (net.branches[k].in_service) branches.push_back(k);
    const int ng = static_cast<int>(gens.size()), ne = static_cast<int>(branches.size());
    const int nl = static_cast<int>(net.loads.size());
    const int slack = net.slack_bus();

    SampleRecord r;
    r.provenance = std::move(provenance);
    r.base_mva = net.base_mva;

    r.bus_gen = MatrixX2d::Zero(n, 2);
    r.bus_demand = MatrixX2d::Zero(n, 2);
    for (int k : gens) {
        r.bus_gen(net.generators[k].bus, 0) += sol.pg[k];
        r.bus_gen(net.generators[k].bus, 1) += sol.qg[k];
    }
    for (const Load& l : net.loads) {
        r.bus_demand(l.bus, 0) += l.pd;
        r.bus_demand(l.bus, 1) += l.qd;
    }

    r.bus_x.resize(n, 2);
    r.bus_y.resize(n, 2);
    r.bus_voltages.resize(n, 2);
    r.bus_type.resize(n);
    r.bus_shunt.resize(n, 2);
    r.bus_limits.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        const Bus& b = net.buses[i];
        const double vm = sol.state.vm[i], va = sol.state.va[i];
        r.bus_voltages.row(i) << va, vm;
        r.bus_type[i] = static_cast<int>(b.kind);
        r.bus_shunt.row(i) << b.gs, b.bs;
        r.bus_limits.row(i) << b.vmin, b.vmax;
        switch (b.kind) {
            case BusKind::PQ:
                r.bus_x.row(i) << r.bus_demand(i, 0) - r.bus_gen(i, 0), r.bus_demand(i, 1) - r.bus_gen(i, 1);
                r.bus_y.row(i) << va, vm;
                break;
            case BusKind::PV:
                r.bus_x.row(i) << sol.p_net[i], vm;
                r.bus_y.row(i) << sol.q_net[i], va;
                break;
            case BusKind::Slack:
                r.bus_x.row(i) << va, vm;
                r.bus_y.row(i) << sol.p_net[i], sol.q_net[i];
                break;
        }
    }

    r.gen_limits.resize(ng, 4);
    r.gen_generation.resize(ng, 2);
    r.gen_slack.resize(ng);
    r.gen_to_bus.resize(2, ng);
    r.bus_to_gen.resize(2, ng);
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators[gens[g]];
        r.gen_limits.row(g) << gen.pmin, gen.pmax, gen.qmin, gen.qmax;
        r.gen_generation.row(g) << sol.pg[gens[g]], sol.qg[gens[g]];
        r.gen_slack[g] = gen.bus == slack;
        r.gen_to_bus.col(g) << g, gen.bus;
        r.bus_to_gen.col(g) << gen.bus, g;
    }

    r.load_demand.resize(nl, 2);
    r.load_to_bus.resize(2, nl);
    r.bus_to_load.resize(2, nl);
    for (int l = 0; l < nl; ++l) {
        r.load_demand.row(l) << net.loads[l].pd, net.loads[l].qd;
        r.load_to_bus.col(l) << l, net.loads[l].bus;
        r.bus_to_load.col(l) << net.loads[l].bus, l;
    }

    r.edge_index.resize(2, ne);
    r.edge_attr.resize(ne, 8);
    r.edge_label.resize(ne, 4);
    r.edge_limits.resize(ne);
    for (int e = 0; e < ne; ++e) {
        const Branch& br = net.branches[branches[e]];
        r.edge_index.col(e) << br.from, br.to;
        r.edge_attr.row(e) << br.r, br.x, 0.0, br.b_charging / 2.0, 0.0, br.b_charging / 2.0, br.tap, br.shift / kDeg;
        r.edge_label.row(e) = sol.flows.row(branches[e]);
        r.edge_limits[e] = br.rate;
    }
    return r;
}

std::string write_sample(const SampleRecord& r) {
    const Provenance& p = r.provenance;
    json doc = json::object();
    doc["provenance"] = object_json({{"case", p.case_name},
                                     {"seed", p.seed},
                                     {"index", p.index},
                                     {"event", p.event},
                                     {"removed_generators", p.removed_generators},
                                     {"removed_branches", p.removed_branches},
                                     {"regime", p.regime},
                                     {"topology", p.topology},
                                     {"iterations", p.iterations},
                                     {"lambda", p.lambda}});
    doc["base_mva"] = r.base_mva;

    json types = json::array();
    for (Eigen::Index i = 0; i < r.bus_type.size(); ++i) types.push_back(r.bus_type[i]);
    doc["bus"] = object_json({{"x", rows_json(r.bus_x)},
                              {"y", rows_json(r.bus_y)},
                              {"bus_gen", rows_json(r.bus_gen)},
                              {"bus_demand", rows_json(r.bus_demand)},
                              {"bus_voltages", rows_json(r.bus_voltages)},
                              {"bus_type", types},
                              {"shunt", rows_json(r.bus_shunt)},
                              {"limits", rows_json(r.bus_limits)}});

    json slack = json::array();
    for (bool b : r.gen_slack) slack.push_back(b);
    doc["gen"] = object_json(
        {{"limits", rows_json(r.gen_limits)}, {"generation", rows_json(r.gen_generation)}, {"slack_gen", slack}});
    doc["load"] = object_json({{"demand", rows_json(r.load_demand)}});
    doc[kBranchKey] = object_json({{"edge_index", coo_json(r.edge_index)},
                                   {"edge_attr", rows_json(r.edge_attr)},
                                   {"edge_label", rows_json(r.edge_label)},
                                   {"edge_limits", rows_json(r.edge_limits)}});
    doc[kGenBusKey] = object_json({{"edge_index", coo_json(r.gen_to_bus)}});
    doc[kBusGenKey] = object_json({{"edge_index", coo_json(r.bus_to_gen)}});
    doc[kLoadBusKey] = object_json({{"edge_index", coo_json(r.load_to_bus)}});
    doc[kBusLoadKey] = object_json({{"edge_index", coo_json(r.bus_to_load)}});
    return doc.dump(1) + "\n";
}

SampleRecord read_sample(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw SchemaError("<document>", e.what());
    }
    only_keys(doc, "",
              {"provenance", "base_mva", "bus", "gen", "load", kBranchKey, kGenBusKey, kBusGenKey, kLoadBusKey,
               kBusLoadKey});

    SampleRecord r;
    const json& prov = member(doc, "", "provenance");
    only_keys(prov, "provenance",
              {"case", "seed", "index", "event", "removed_generators", "removed_branches", "regime", "topology",
               "iterations", "lambda"});
    try {
        Provenance& p = r.provenance;
        p.case_name = member(prov, "provenance", "case").get<std::string>();
        p.seed = member(prov, "provenance", "seed").get<std::uint64_t>();
        p.index = member(prov, "provenance", "index").get<std::uint64_t>();
        p.event = member(prov, "provenance", "event").get<std::string>();
        p.removed_generators = member(prov, "provenance", "removed_generators").get<std::vector<int>>();
        p.removed_branches = member(prov, "provenance", "removed_branches").get<std::vector<int>>();
        p.regime = member(prov, "provenance", "regime").get<std::string>();
        p.topology = member(prov, "provenance", "topology").get<std::string>();
        p.iterations = member(prov, "provenance", "iterations").get<int>();
        p.lambda = member(prov, "provenance", "lambda").get<double>();
    } catch (const json::exception& e) {
        throw SchemaError("provenance", e.what());
    }
    r.base_mva = finite_number(member(doc, "", "base_mva"), "base_mva");

    const json& bus = member(doc, "", "bus");
    only_keys(bus, "bus", {"x", "y", "bus_gen", "bus_demand", "bus_voltages", "bus_type", "shunt", "limits"});
    const json& types = member(bus, "bus", "bus_type");
    if (!types.is_array()) throw SchemaError("bus.bus_type", "expected an array");
    const Eigen::Index n = static_cast<Eigen::Index>(types.size());
    r.bus_type.resize(n);
    int slack_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& t = types[static_cast<std::size_t>(i)];
        if (!t.is_number_integer()) throw SchemaError("bus.bus_type", "expected integers");
        const int code = t.get<int>();
        if (code < 1 || code > 3) throw SchemaError("bus.bus_type", "invalid bus type " + std::to_string(code));
        slack_count += code == 3;
        r.bus_type[i] = code;
    }
    if (slack_count != 1)
        throw SchemaError("bus.bus_type", "expected exactly one slack bus, found " + std::to_string(slack_count));
    r.bus_x = read_rows<2>(member(bus, "bus", "x"), "bus.x", n);
    r.bus_y = read_rows<2>(member(bus, "bus", "y"), "bus.y", n);
    r.bus_gen = read_rows<2>(member(bus, "bus", "bus_gen"), "bus.bus_gen", n);
    r.bus_demand = read_rows<2>(member(bus, "bus", "bus_demand"), "bus.bus_demand", n);
    r.bus_voltages = read_rows<2>(member(bus, "bus", "bus_voltages"), "bus.bus_voltages", n);
    r.bus_shunt = read_rows<2>(member(bus, "bus", "shunt"), "bus.shunt", n);
    r.bus_limits = read_rows<2>(member(bus, "bus", "limits"), "bus.limits", n);

    const json& gen = member(doc, "", "gen");
    only_keys(gen, "gen", {"limits", "generation", "slack_gen"});
    r.gen_limits = read_rows<4>(member(gen, "gen", "limits"), "gen.limits", -1);
    const Eigen::Index ng = r.gen_limits.rows();
    r.gen_generation = read_rows<2>(member(gen, "gen", "generation"), "gen.generation", ng);
    const json& slack = member(gen, "gen", "slack_gen");
    if (!slack.is_array() || static_cast<Eigen::Index>(slack.size()) != ng)
        throw SchemaError("gen.slack_gen", "expected " + std::to_string(ng) + " booleans");
    for (const json& b : slack) {
        if (!b.is_boolean()) throw SchemaError("gen.slack_gen", "expected booleans");
        r.gen_slack.push_back(b.get<bool>());
    }

    const json& load = member(doc, "", "load");
    only_keys(load, "load", {"demand"});
    r.load_demand = read_rows<2>(member(load, "load", "demand"), "load.demand", -1);
    const Eigen::Index nl = r.load_demand.rows();

    const std::string bk = kBranchKey;
    const json& branch = member(doc, "", kBranchKey);
    only_keys(branch, bk, {"edge_index", "edge_attr", "edge_label", "edge_limits"});
    r.edge_index = read_coo(member(branch, bk, "edge_index"), bk + ".edge_index", -1);
    const Eigen::Index ne = r.edge_index.cols();
    check_range(r.edge_index, 0, n, bk + ".edge_index");
    check_range(r.edge_index, 1, n, bk + ".edge_index");
    r.edge_attr = read_rows<8>(member(branch, bk, "edge_attr"), bk + ".edge_attr", ne);
    r.edge_label = read_rows<4>(member(branch, bk, "edge_label"), bk + ".edge_label", ne);
    r.edge_limits = read_rows<1>(member(branch, bk, "edge_limits"), bk + ".edge_limits", ne);

    auto link = [&](const char* key, Eigen::Index count, int comp_row, Eigen::Index comp_bound) {
        const std::string path = key;
        const json& obj = member(doc, "", key);
        only_keys(obj, path, {"edge_index"});
        Matrix2Xi m = read_coo(member(obj, path, "edge_index"), path + ".edge_index", count);
        check_range(m, comp_row, comp_bound, path + ".edge_index");
        check_range(m, 1 - comp_row, n, path + ".edge_index");
        return m;
    };
    r.gen_to_bus = link(kGenBusKey, ng, 0, ng);
    r.bus_to_gen = link(kBusGenKey, ng, 1, ng);
    r.load_to_bus = link(kLoadBusKey, nl, 0, nl);
    r.bus_to_load = link(kBusLoadKey, nl, 1, nl);
    return r;
}

SampleRecord load_sample(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open record " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return read_sample(ss.str());
}

Network network_from_record(const SampleRecord& r) {
    Network net;
    net.name = r.provenance.case_name;
    net.base_mva = r.base_mva;
    const Eigen::Index n = r.bus_count();
    for (Eigen::Index i = 0; i < n; ++i) {
        Bus b;
        b.number = static_cast<int>(i) + 1;
        b.kind = static_cast<BusKind>(r.bus_type[i]);
        b.gs = r.bus_shunt(i, 0);
        b.bs = r.bus_shunt(i, 1);
        b.vmin = r.bus_limits(i, 0);
        b.vmax = r.bus_limits(i, 1);
        b.va0 = r.bus_voltages(i, 0);
        b.vm0 = r.bus_voltages(i, 1);
        net.buses.push_back(b);
    }
    for (Eigen::Index g = 0; g < r.gen_limits.rows(); ++g) {
        Generator gen;
        gen.bus = r.gen_to_bus(1, g);
        gen.pmin = r.gen_limits(g, 0);
        gen.pmax = r.gen_limits(g, 1);
        gen.qmin = r.gen_limits(g, 2);
        gen.qmax = r.gen_limits(g, 3);
        gen.pg = r.gen_generation(g, 0);
        gen.qg = r.gen_generation(g, 1);
        gen.vset = r.bus_voltages(gen.bus, 1);
        gen.mbase = r.base_mva;
        net.generators.push_back(gen);
    }
    for (Eigen::Index l = 0; l < r.load_demand.rows(); ++l)
        net.loads.push_back({r.load_to_bus(1, l), r.load_demand(l, 0), r.load_demand(l, 1)});
    for (Eigen::Index e = 0; e < r.edge_index.cols(); ++e) {
        Branch br;
        br.from = r.edge_index(0, e);
        br.to = r.edge_index(1, e);
        br.r = r.edge_attr(e, 0);
        br.x = r.edge_attr(e, 1);
        br.b_charging = r.edge_attr(e, 3) + r.edge_attr(e, 5);
        br.tap = r.edge_attr(e, 6);
        br.shift = r.edge_attr(e, 7) * kDeg;
        br.rate = r.edge_limits[e];
        net.branches.push_back(br);
    }
    return net;
}

PFState state_from_record(const SampleRecord& r) { return {r.bus_voltages.col(1), r.bus_voltages.col(0)}; }

}  // namespace flowbench
