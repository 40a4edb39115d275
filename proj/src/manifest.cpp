#include "flowbench/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>

#include <json.hpp>

namespace flowbench {

namespace {

const std::vector<std::string> kAllTopologies = {"N", "N-1", "N-2"};
constexpr int kTestFeasible = 2000;
constexpr int kTestC2I = 200;

std::string joined_ids() {
    std::string out;
    for (const std::string& id : task_ids()) out += (out.empty() ? "" : ", ") + id;
    return out;
}

std::vector<int> others(int size) {
    std::vector<int> out;
    for (int s : grid_bus_sizes())
        if (s != size) out.push_back(s);
    return out;
}

}  // namespace

UnknownTaskError::UnknownTaskError(const std::string& id)
    : std::invalid_argument("unknown task '" + id + "'; valid tasks: " + joined_ids()) {}

const std::vector<std::string>& task_ids() {
    static const std::vector<std::string> ids = {"1.1", "1.2", "1.3", "2.1", "2.2", "2.3",
                                                 "3.1", "3.2", "3.3", "4.1", "4.2", "4.3"};
    return ids;
}

const std::vector<int>& grid_bus_sizes() {
    static const std::vector<int> sizes = {14, 30, 57, 118, 500};
    return sizes;
}

TaskRecipe task_recipe(const std::string& id, std::optional<int> bus_size) {
    if (std::find(task_ids().begin(), task_ids().end(), id) == task_ids().end()) throw UnknownTaskError(id);
    TaskRecipe r;
    r.id = id;
    r.train_topologies = kAllTopologies;
    r.train_regimes = {{"feasible", 54000}};

    if (id == "1.1") {
        r.description = "unperturbed training topology";
        r.train_topologies = {"N"};
    } else if (id == "1.2") {
        r.description = "N-1 perturbed training topology";
        r.train_topologies = {"N", "N-1"};
    } else if (id == "1.3") {
        r.description = "N-2 perturbed training topology";
    } else if (id == "2.1") {
        r.description = "low data efficiency";
    } else if (id == "2.2") {
        r.description = "medium data efficiency";
        r.train_regimes = {{"feasible", 36000}};
    } else if (id == "2.3") {
        r.description = "high data efficiency";
        r.train_regimes = {{"feasible", 18000}};
    } else if (id == "3.1") {
        r.description = "fixed training grid size";
    } else if (id == "3.2") {
        r.description = "small grid size training group";
        r.train_sizes = {14, 30, 57};
        r.test_sizes = {118, 500};
    } else if (id == "3.3") {
        r.description = "large grid size training group";
        r.train_sizes = {118, 500};
        r.test_sizes = {14, 30, 57};
    } else if (id == "4.1") {
        r.description = "training with hard power flow cases";
        r.train_regimes = {{"feasible", 48600}, {"close-to-infeasible", 5400}};
    } else if (id == "4.2") {
        r.description = "training with augmented hard power flow cases";
        r.train_regimes = {{"feasible", 27000}, {"close-to-infeasible", 5400}, {"approaching-infeasible", 21600}};
    } else {
        r.description = "training only with hard power flow cases";
        r.train_regimes = {{"close-to-infeasible", 10800}, {"approaching-infeasible", 43200}};
    }

    if (r.train_sizes.empty()) {
        if (!bus_size) throw std::invalid_argument("task " + id + " needs a training bus size");
        r.train_sizes = {*bus_size};
        r.test_sizes = id == "3.1" ? others(*bus_size) : r.train_sizes;
    }
    return r;
}

std::size_t DatasetManifest::requested(const std::string& split) const {
    std::size_t n = 0;
    for (const ManifestCell& c : cells)
        if (c.split == split) n += c.requested;
    return n;
}

std::size_t DatasetManifest::shortfall() const {
    std::size_t n = 0;
    for (const ManifestCell& c : cells) n += c.shortfall();
    return n;
}

DatasetManifest plan_manifest(const TaskRecipe& recipe, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("scale must be positive");

    struct Raw {
        ManifestCell cell;
        int count;
    };
    std::vector<Raw> raw;
    const int per_topology = static_cast<int>(recipe.train_topologies.size());
    for (int size : recipe.test_sizes)
        for (const std::string& topo : kAllTopologies) {
            raw.push_back({{"test", size, "feasible", topo, 0, {}, {}}, kTestFeasible});
            raw.push_back({{"test", size, "close-to-infeasible", topo, 0, {}, {}}, kTestC2I});
        }
    for (int size : recipe.train_sizes)
        for (const RegimeCount& rc : recipe.train_regimes)
            for (const std::string& topo : recipe.train_topologies) {
                if (rc.count % per_topology != 0)
                    throw std::logic_error("train count does not split evenly across topologies");
                raw.push_back({{"train", size, rc.regime, topo, 0, {}, {}}, rc.count / per_topology});
            }

    int granule = 0;
    for (const Raw& r : raw) granule = std::gcd(granule, r.count);
    const auto unit = static_cast<std::size_t>(std::max(1.0, std::round(granule * scale)));

    DatasetManifest m;
    m.task = recipe.id;
    m.scale = scale;
    m.unit = unit;
    for (Raw& r : raw) {
        r.cell.requested = static_cast<std::size_t>(r.count / granule) * unit;
        m.cells.push_back(std::move(r.cell));
    }
    return m;
}

DatasetManifest build_manifest(const std::vector<CorpusIndex>& corpora, const std::string& task, double scale,
                               std::optional<int> bus_size) {
    if (std::find(task_ids().begin(), task_ids().end(), task) == task_ids().end()) throw UnknownTaskError(task);
    if (!bus_size && task != "3.2" && task != "3.3") {
        std::set<int> sizes;
        for (const CorpusIndex& c : corpora)
            for (const CorpusEntry& e : c.samples) sizes.insert(e.bus_count);
        if (sizes.size() != 1)
            throw std::invalid_argument("task " + task + " needs --bus-size when the corpora do not share one size");
        bus_size = *sizes.begin();
    }
    DatasetManifest m = plan_manifest(task_recipe(task, bus_size), scale);

    using Key = std::tuple<int, std::string, std::string>;
    std::map<Key, std::vector<std::pair<std::string, std::string>>> pool;
    for (const CorpusIndex& c : corpora)
        for (const CorpusEntry& e : c.samples)
            pool[{e.bus_count, e.regime, e.topology}].emplace_back(e.id, (c.root / e.file).generic_string());
    for (auto& [key, entries] : pool) std::sort(entries.begin(), entries.end());

    std::map<Key, std::size_t> used;
    for (const char* split : {"test", "train"})
        for (ManifestCell& cell : m.cells) {
            if (cell.split != split) continue;
            const Key key{cell.bus_size, cell.regime, cell.topology};
            const auto it = pool.find(key);
            if (it == pool.end()) continue;
            std::size_t& next = used[key];
            while (cell.ids.size() < cell.requested && next < it->second.size()) {
                cell.ids.push_back(it->second[next].first);
                cell.files.push_back(it->second[next].second);
                ++next;
            }
        }
    return m;
}

std::string write_manifest(const DatasetManifest& m) {
    using json = nlohmann::ordered_json;
    json doc = json::object();
    doc["task"] = m.task;
    doc["scale"] = m.scale;
    doc["unit"] = m.unit;
    doc["requested"] = {{"train", m.requested("train")}, {"test", m.requested("test")}};
    doc["shortfall"] = m.shortfall();
    json cells = json::array();
    for (const ManifestCell& c : m.cells) {
        json j = json::object();
        j["split"] = c.split;
        j["bus_size"] = c.bus_size;
        j["regime"] = c.regime;
        j["topology"] = c.topology;
        j["requested"] = c.requested;
        j["allocated"] = c.ids.size();
        j["shortfall"] = c.shortfall();
        j["ids"] = c.ids;
        j["files"] = c.files;
        cells.push_back(std::move(j));
    }
    doc["cells"] = std::move(cells);
    return doc.dump(1) + "\n";
}

}  // namespace flowbench
