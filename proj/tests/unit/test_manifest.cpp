#include <doctest.h>

#include <map>
#include <set>

#include <json.hpp>

#include "flowbench/manifest.hpp"

using namespace flowbench;

namespace {

std::map<std::string, std::size_t> by_regime(const DatasetManifest& m, const std::string& split) {
    std::map<std::string, std::size_t> out;
    for (const ManifestCell& c : m.cells)
        if (c.split == split) out[c.regime] += c.requested;
    return out;
}

CorpusIndex fake_corpus(int buses, std::size_t per_cell) {
    CorpusIndex idx;
    idx.case_name = "case" + std::to_string(buses);
    for (const char* regime : {"feasible", "close-to-infeasible", "approaching-infeasible"})
        for (const char* topo : {"N", "N-1", "N-2"})
            for (std::size_t k = 0; k < per_cell; ++k) {
                CorpusEntry e;
                e.id = idx.case_name + "-" + regime + "-" + topo + "-" + std::to_string(1000 + k);
                e.file = "samples/" + e.id + ".json";
                e.regime = regime;
                e.topology = topo;
                e.bus_count = buses;
                idx.samples.push_back(e);
            }
    return idx;
}

}  // namespace

TEST_CASE("task grid") {
    CHECK(task_ids().size() == 12);
    for (const std::string& id : task_ids()) {
        const TaskRecipe r = task_recipe(id, 118);
        CHECK(r.id == id);
        CHECK_FALSE(r.description.empty());
        CHECK_FALSE(r.train_sizes.empty());
        CHECK_FALSE(r.test_sizes.empty());
    }
}

TEST_CASE("unknown task lists the valid ids") {
    try {
        task_recipe("5.1", 14);
        FAIL("expected UnknownTaskError");
    } catch (const UnknownTaskError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("5.1") != std::string::npos);
        for (const std::string& id : task_ids()) CHECK(msg.find(id) != std::string::npos);
    }
    CHECK_THROWS_AS(task_recipe("1.1", std::nullopt), std::invalid_argument);
    CHECK_NOTHROW(task_recipe("3.2", std::nullopt));
}

TEST_CASE("topology tasks") {
    const DatasetManifest m11 = plan_manifest(task_recipe("1.1", 30), 1.0);
    std::set<std::string> train_topos, test_topos;
    for (const ManifestCell& c : m11.cells) (c.split == "train" ? train_topos : test_topos).insert(c.topology);
    CHECK(train_topos == std::set<std::string>{"N"});
    CHECK(test_topos == std::set<std::string>{"N", "N-1", "N-2"});
    CHECK(m11.requested("train") == 54000);
    CHECK(by_regime(m11, "test")["feasible"] == 6000);
    CHECK(by_regime(m11, "test")["close-to-infeasible"] == 600);

    const DatasetManifest m12 = plan_manifest(task_recipe("1.2", 30), 1.0);
    std::map<std::string, std::size_t> per_topo;
    for (const ManifestCell& c : m12.cells)
        if (c.split == "train") per_topo[c.topology] += c.requested;
    CHECK(per_topo.size() == 2);
    CHECK(per_topo["N"] == per_topo["N-1"]);
}

TEST_CASE("data efficiency tasks shrink only the training set") {
    const std::size_t low = plan_manifest(task_recipe("2.1", 14), 1.0).requested("train");
    const std::size_t mid = plan_manifest(task_recipe("2.2", 14), 1.0).requested("train");
    const std::size_t high = plan_manifest(task_recipe("2.3", 14), 1.0).requested("train");
    CHECK(low == 3 * high);
    CHECK(mid == 2 * high);
    CHECK(plan_manifest(task_recipe("2.3", 14), 1.0).requested("test") ==
          plan_manifest(task_recipe("2.1", 14), 1.0).requested("test"));
}

TEST_CASE("grid size tasks") {
    const TaskRecipe r31 = task_recipe("3.1", 57);
    CHECK(r31.train_sizes == std::vector<int>{57});
    CHECK(r31.test_sizes == std::vector<int>{14, 30, 118, 500});
    const TaskRecipe r32 = task_recipe("3.2", std::nullopt);
    CHECK(r32.train_sizes == std::vector<int>{14, 30, 57});
    CHECK(r32.test_sizes == std::vector<int>{118, 500});
    const TaskRecipe r33 = task_recipe("3.3", 14);
    CHECK(r33.train_sizes == std::vector<int>{118, 500});
    CHECK(r33.test_sizes == std::vector<int>{14, 30, 57});
}

TEST_CASE("hard case task ratios hold under scaling") {
    for (double scale : {1.0, 0.5, 0.1, 0.01, 0.003, 2.0}) {
        CAPTURE(scale);
        const DatasetManifest m = plan_manifest(task_recipe("4.2", 118), scale);
        auto train = by_regime(m, "train");
        CHECK(train["feasible"] * 54 == train["close-to-infeasible"] * 270);
        CHECK(train["approaching-infeasible"] * 54 == train["close-to-infeasible"] * 216);
        auto test = by_regime(m, "test");
        CHECK(test["feasible"] == 10 * test["close-to-infeasible"]);
        for (const ManifestCell& c : m.cells) CHECK(c.requested % m.unit == 0);
    }
    const auto t41 = by_regime(plan_manifest(task_recipe("4.1", 14), 1.0), "train");
    CHECK(t41.at("feasible") == 9 * t41.at("close-to-infeasible"));
    const auto t43 = by_regime(plan_manifest(task_recipe("4.3", 14), 1.0), "train");
    CHECK(t43.at("approaching-infeasible") == 4 * t43.at("close-to-infeasible"));
    CHECK_FALSE(t43.count("feasible"));
}

TEST_CASE("small scales keep at least one granule") {
    const DatasetManifest m = plan_manifest(task_recipe("4.2", 14), 1e-6);
    CHECK(m.unit == 1);
    for (const ManifestCell& c : m.cells) CHECK(c.requested > 0);
    CHECK_THROWS_AS(plan_manifest(task_recipe("4.2", 14), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(plan_manifest(task_recipe("4.2", 14), -1.0), std::invalid_argument);
}

TEST_CASE("manifest allocation from corpora") {
    const CorpusIndex corpus = fake_corpus(14, 120);
    SUBCASE("enough samples fill every cell without reuse") {
        const DatasetManifest m = build_manifest({corpus}, "4.2", 0.01);
        CHECK(m.complete());
        std::set<std::string> seen;
        for (const ManifestCell& c : m.cells) {
            CHECK(c.ids.size() == c.requested);
            CHECK(c.files.size() == c.ids.size());
            for (const std::string& id : c.ids) {
                CHECK(seen.insert(id).second);
                CHECK(id.find(c.regime) != std::string::npos);
                CHECK(id.find("-" + c.topology + "-") != std::string::npos);
            }
        }
        CHECK(build_manifest({corpus}, "4.2", 0.01).cells.front().ids == m.cells.front().ids);
    }
    SUBCASE("missing samples become shortfalls") {
        const DatasetManifest m = build_manifest({fake_corpus(14, 2)}, "4.2", 0.01);
        CHECK_FALSE(m.complete());
        CHECK(m.shortfall() > 0);
        const auto doc = nlohmann::json::parse(write_manifest(m));
        CHECK(doc.at("task") == "4.2");
        CHECK(doc.at("cells").size() == m.cells.size());
    }
    SUBCASE("bus size is inferred from a single grid") {
        CHECK(build_manifest({corpus}, "1.1", 0.01).cells.front().bus_size == 14);
        CHECK_THROWS(build_manifest({corpus, fake_corpus(30, 1)}, "1.1", 0.01));
    }
}
