#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flowbench/corpus.hpp"

namespace flowbench {

/// Raised for a task id outside the evaluation grid; the message lists the valid ids.
class UnknownTaskError : public std::invalid_argument {
  public:
    explicit UnknownTaskError(const std::string& id);
};

const std::vector<std::string>& task_ids();
const std::vector<int>& grid_bus_sizes();

struct RegimeCount {
    std::string regime;
    int count = 0;  // per train bus size, before splitting across topologies
};

struct TaskRecipe {
    std::string id;
    std::string description;
    std::vector<std::string> train_topologies;
    std::vector<RegimeCount> train_regimes;
    std::vector<int> train_sizes;
    std::vector<int> test_sizes;
};

/// Recipe at full size. Tasks trained on one grid take `bus_size`; 3.2 and
/// 3.3 ignore it. Throws UnknownTaskError, or std::invalid_argument when a
/// needed bus size is missing.
TaskRecipe task_recipe(const std::string& id, std::optional<int> bus_size);

struct ManifestCell {
    std::string split;  // train | test
    int bus_size = 0;
    std::string regime;
    std::string topology;
    std::size_t requested = 0;
    std::vector<std::string> ids;
    std::vector<std::string> files;

    std::size_t shortfall() const { return requested > ids.size() ? requested - ids.size() : 0; }
};

struct DatasetManifest {
    std::string task;
    double scale = 1.0;
    std::size_t unit = 0;  // scaled count of the smallest cell granule
    std::vector<ManifestCell> cells;

    std::size_t requested(const std::string& split) const;
    std::size_t shortfall() const;
    bool complete() const { return shortfall() == 0; }
};

/// Requested counts only. Every cell count is an integer multiple of a
/// common granule, and the granule is scaled and rounded once, so ratios
/// between cells hold exactly at any scale.
DatasetManifest plan_manifest(const TaskRecipe& recipe, double scale);

/// Fills the plan from the corpora: test cells first, then train, each from
/// entries sorted by id, never reusing an entry. Missing samples show up as
/// per-cell shortfalls. Without `bus_size`, single-grid tasks use the size
/// of the corpora when they all share one.
DatasetManifest build_manifest(const std::vector<CorpusIndex>& corpora, const std::string& task, double scale,
                               std::optional<int> bus_size = std::nullopt);

std::string write_manifest(const DatasetManifest& manifest);

}  // namespace flowbench
