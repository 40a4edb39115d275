#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowbench/cli.hpp"
#include "flowbench/matpower.hpp"
#include "flowbench/sample_record.hpp"
#include "oracles.hpp"

using namespace flowbench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "flowbench");
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("flowbench-cli-" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = oracle::read_file(e.path());
    return files;
}

std::string case_file(const std::string& name) { return (oracle::data_dir() / "cases" / (name + ".m")).string(); }

}  // namespace

TEST_CASE("parse and solve") {
    const Run p = run({"parse", "--case", "case14"});
    REQUIRE(p.code == cli::kOk);
    CHECK(json::parse(p.out).dump().find("14") != std::string::npos);

    const Run s = run({"solve", "--case", case_file("case14")});
    REQUIRE(s.code == cli::kOk);
    const json doc = json::parse(s.out);
    CHECK(doc.at("status") == "converged");
    CHECK(doc.at("iterations").get<int>() <= 10);
}

TEST_CASE("solver failure exits 3") {
    Scratch s("heavy");
    Network net = oracle::load_case("case14");
    for (Load& l : net.loads) {
        l.pd *= 20.0;
        l.qd *= 20.0;
    }
    const fs::path file = s.dir / "heavy.m";
    std::ofstream(file) << emit_matpower(net);
    const Run r = run({"solve", "--case", file.string()});
    CHECK(r.code == cli::kSolverFailure);
}

TEST_CASE("bad input is a data error with a line number") {
    Scratch s("bad");
    const fs::path file = s.dir / "bad.m";
    std::ofstream(file) << "function mpc = bad\nmpc.baseMVA = 100;\nmpc.bus = [\n1 3 0 0;\n];\n";
    const Run r = run({"parse", "--case", file.string()});
    CHECK(r.code == cli::kDataError);
    const json err = json::parse(r.err);
    CHECK(err.contains("message"));
    CHECK(err.at("exit_code") == cli::kDataError);

    CHECK(run({"parse", "--case", "no-such-case"}).code == cli::kDataError);
}

TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == cli::kUsage);
    CHECK(run({"frobnicate"}).code == cli::kUsage);
    CHECK(run({"generate", "--case", "case14", "--count", "3"}).code == cli::kUsage);
    CHECK(run({"generate", "--case", "case14", "--seed", "1", "--loads", "gaussian"}).code == cli::kUsage);

    Scratch s("task");
    const Run r = run({"manifest", "--task", "9.9", "--corpus", s.dir.string()});
    CHECK(r.code == cli::kUsage);
    for (const char* id : {"1.1", "2.3", "3.2", "4.3"}) CHECK(r.err.find(id) != std::string::npos);
}

TEST_CASE("generate is reproducible and the corpus checks clean") {
    Scratch s("generate");
    const std::string a = (s.dir / "a").string(), b = (s.dir / "b").string();
    REQUIRE(run({"generate", "--case", "case14", "--seed", "9", "--count", "15", "--c2i", "1", "--out", a}).code ==
            cli::kOk);
    REQUIRE(run({"generate", "--case", "case14", "--seed", "9", "--count", "15", "--c2i", "1", "--workers", "4",
                 "--out", b})
                .code == cli::kOk);
    CHECK(snapshot(a) == snapshot(b));

    CHECK(run({"check", "--corpus", a}).code == cli::kOk);
    const Run e = run({"evaluate", "--corpus", a, "--out", (s.dir / "report.json").string()});
    CHECK(e.code == cli::kOk);
    CHECK(json::parse(oracle::read_file(s.dir / "report.json")).contains("groups"));

    SUBCASE("tampered record fails the check") {
        const fs::path first = fs::directory_iterator(fs::path(a) / "samples")->path();
        SampleRecord rec = load_sample(first.string());
        rec.edge_label(0, 0) += 0.5;
        std::ofstream(first) << write_sample(rec);
        CHECK(run({"check", "--sample", first.string()}).code == cli::kDataError);
        CHECK(run({"check", "--corpus", a}).code == cli::kDataError);
    }
    SUBCASE("manifest shortfall still writes the manifest") {
        const fs::path m = s.dir / "m.json";
        const Run r = run({"manifest", "--task", "4.2", "--corpus", a, "--scale", "0.01", "--out", m.string()});
        CHECK(r.code == cli::kDataError);
        CHECK(fs::exists(m));
    }
}

TEST_CASE("output root comes from the environment") {
    Scratch s("env");
    ::setenv("FLOWBENCH_OUT", s.dir.c_str(), 1);
    const Run r = run({"generate", "--case", "case14", "--seed", "4", "--count", "2", "--no-topology"});
    ::unsetenv("FLOWBENCH_OUT");
    REQUIRE(r.code == cli::kOk);
    CHECK(fs::exists(s.dir / "corpus-case14-4" / "corpus.json"));
}

TEST_CASE("installed binary runs") {
    Scratch s("binary");
    const std::string cmd = std::string("\"") + FLOWBENCH_CLI + "\" solve --case case30 > \"" +
                            (s.dir / "out.json").string() + "\" 2>&1";
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(json::parse(oracle::read_file(s.dir / "out.json")).at("status") == "converged");
}
