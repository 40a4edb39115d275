#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "flowbench/constraints.hpp"
#include "flowbench/corpus.hpp"
#include "oracles.hpp"

using namespace flowbench;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("flowbench-corpus-" + name)) {
        fs::remove_all(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = oracle::read_file(e.path());
    return files;
}

}  // namespace

TEST_CASE("corpus generation writes an indexed directory") {
    const Network net = oracle::load_case("case14");
    Scratch s("index");
    CorpusOptions opt;
    opt.seed = 17;
    opt.count = 12;
    opt.c2i_traces = 1;
    const CorpusIndex idx = generate_corpus(net, opt, s.dir);

    CHECK(idx.requested == 12);
    CHECK(idx.attempts == idx.rejections + 12);
    int feasible = 0, nose = 0, approaching = 0;
    std::set<std::string> ids;
    for (const CorpusEntry& e : idx.samples) {
        CHECK(ids.insert(e.id).second);
        CHECK(fs::exists(s.dir / e.file));
        CHECK(e.bus_count == 14);
        const SampleRecord rec = load_sample(s.dir / e.file);
        CHECK(rec.provenance.regime == e.regime);
        CHECK(check_constraints(rec, 1e-6).pass);
        if (e.regime == "feasible") {
            ++feasible;
            CHECK(e.id.rfind("case14-feasible-", 0) == 0);
        } else if (e.regime == "close-to-infeasible") {
            ++nose;
        } else {
            ++approaching;
            CHECK(e.regime == "approaching-infeasible");
        }
    }
    CHECK(feasible == 12);
    CHECK(nose == 1);
    CHECK(approaching == 4);

    const CorpusIndex back = load_corpus(s.dir);
    CHECK(back.root == s.dir);
    CHECK(write_corpus_index(back) == write_corpus_index(idx));

    std::ifstream log(s.dir / "rejections.jsonl");
    std::string line;
    std::size_t lines = 0;
    while (std::getline(log, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.at("seed").get<std::uint64_t>() == 17);
        CHECK(j.contains("index"));
        CHECK(j.contains("event"));
        CHECK(j.contains("topology"));
        CHECK_FALSE(j.at("reason").get<std::string>().empty());
        ++lines;
    }
    CHECK(lines == idx.rejections);
}

TEST_CASE("corpus output does not depend on worker count") {
    const Network net = oracle::load_case("case14");
    Scratch a("w1"), b("w3");
    CorpusOptions opt;
    opt.seed = 5;
    opt.count = 40;
    opt.c2i_traces = 2;
    generate_corpus(net, opt, a.dir);
    opt.workers = 3;
    generate_corpus(net, opt, b.dir);
    CHECK(snapshot(a.dir) == snapshot(b.dir));
}

TEST_CASE("regenerating replaces stale samples") {
    const Network net = oracle::load_case("case14");
    Scratch s("stale");
    CorpusOptions opt;
    opt.seed = 1;
    opt.count = 6;
    generate_corpus(net, opt, s.dir);
    opt.count = 3;
    generate_corpus(net, opt, s.dir);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(s.dir / "samples")) files += e.is_regular_file();
    CHECK(files == 3);
}

TEST_CASE("attempt budget bounds the search") {
    Network net = oracle::load_case("case14");
    for (Generator& g : net.generators) g.pmax = 0.01;
    Scratch s("budget");
    CorpusOptions opt;
    opt.count = 5;
    opt.max_attempts = 70;
    const CorpusIndex idx = generate_corpus(net, opt, s.dir);
    CHECK(idx.samples.empty());
    CHECK(idx.attempts <= 128);
    CHECK(idx.attempts >= 70);
}

TEST_CASE("malformed corpus index is reported") {
    Scratch s("bad");
    fs::create_directories(s.dir);
    CHECK_THROWS(load_corpus(s.dir));
    std::ofstream(s.dir / "corpus.json") << "{\"case\": 3";
    CHECK_THROWS(load_corpus(s.dir));
}

TEST_CASE("parallel_for visits every index and rethrows") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) CHECK(h.load() == 1);

    CHECK_THROWS_AS(parallel_for(100, 4,
                                 [](std::size_t i) {
                                     if (i == 37) throw std::runtime_error("boom");
                                 }),
                    std::runtime_error);
    CHECK_THROWS_AS(parallel_for(3, 1, [](std::size_t) { throw std::logic_error("serial"); }), std::logic_error);
}
