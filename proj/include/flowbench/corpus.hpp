#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowbench/grid.hpp"
#include "flowbench/scenario.hpp"

namespace flowbench {

/// One record file in a corpus directory.
struct CorpusEntry {
    std::string id;
    std::string file;  // relative to the corpus directory
    std::string regime;
    std::string topology;
    int bus_count = 0;
    std::uint64_t index = 0;
};

struct CorpusIndex {
    std::string case_name;
    std::uint64_t seed = 0;
    std::vector<CorpusEntry> samples;
    std::size_t attempts = 0;
    std::size_t rejections = 0;
    std::size_t requested = 0;
    std::filesystem::path root;  // set by load_corpus
};

struct CorpusOptions {
    std::uint64_t seed = 0;
    std::size_t count = 100;
    unsigned workers = 1;
    ScenarioOptions scenario;
    std::size_t c2i_traces = 0;  // CPF traces over the first feasible samples
    double c2i_factor = 2.5;
    std::size_t max_attempts = 0;  // 0 means 50 x count
};

/// Generates records for indices 0, 1, 2, ... and keeps the first `count`
/// accepted ones, so the corpus depends only on (seed, options), not on the
/// number of workers. Writes samples/<id>.json, corpus.json and
/// rejections.jsonl under `out`.
CorpusIndex generate_corpus(const Network& base, const CorpusOptions& options, const std::filesystem::path& out);

std::string write_corpus_index(const CorpusIndex& index);
CorpusIndex load_corpus(const std::filesystem::path& dir);

/// Runs fn(i) for i in [0, n) on `workers` threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn);

}  // namespace flowbench

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

template <typename Fn>
void flowbench::parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                    next = n;
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}
