#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "flowbench/balance.hpp"
#include "flowbench/corpus.hpp"
#include "flowbench/sample_record.hpp"

namespace flowbench {

struct PBL {
    double mean = 0.0;
    double max = 0.0;
};

PBL pbl(const MismatchReport& report);

/// Model output for one sample. Either the per-role targets (`bus_y`, same
/// layout as the record) or voltages as (theta, |v|) rows. Quantities the
/// prediction leaves out are completed from the voltages.
struct ModelOutput {
    std::string id;
    std::optional<MatrixX2d> bus_y;
    std::optional<MatrixX2d> bus_voltages;
};

class PredictionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A scored sample: the voltages and net injections assembled from the
/// record inputs and the prediction, with the resulting residual.
struct ScoredSample {
    PFState state;
    Eigen::VectorXd p_net;
    Eigen::VectorXd q_net;
    MismatchReport mismatch;
};

/// Uses only bus.x, bus_type, shunt, edge_index and edge_attr from the record.
/// Throws PredictionError on shape mismatch or non-finite values.
ScoredSample score_prediction(const SampleRecord& inputs, const ModelOutput& prediction);

/// ModelOutput made of the record's own targets.
ModelOutput label_prediction(const std::string& id, const SampleRecord& rec);

struct BatchTiming {
    double seconds_per_sample = 0.0;
    std::size_t size = 0;
};

/// Size-weighted mean seconds per sample. Throws std::invalid_argument when
/// the batches hold no samples.
double runtime_stat(const std::vector<BatchTiming>& batches);

struct StatBlock {
    bool present = false;
    std::size_t samples = 0;
    double mean = 0.0;      // mean over samples of the per-sample mean
    double mean_std = 0.0;  // population std of the per-sample means
    double min = 0.0;
    double max = 0.0;
};

struct InterpretabilityStats {
    StatBlock pq_vm;
    StatBlock pv_q;
    StatBlock branch_dtheta;
    StatBlock slack_p;
    StatBlock slack_q;
};

/// Per-sample view needed by the interpretability statistics.
struct SolutionView {
    Eigen::VectorXi bus_type;
    Matrix2Xi edge_index;
    PFState state;
    Eigen::VectorXd p_net;
    Eigen::VectorXd q_net;
};

InterpretabilityStats interpretability(const std::vector<SolutionView>& samples);

struct SampleScore {
    std::string id;
    std::string regime;
    std::string topology;
    double mean_ds = 0.0;
    double max_ds = 0.0;
};

struct GroupScore {
    std::string topology;  // "all" for the corpus-wide row
    std::string regime;
    std::size_t count = 0;
    double mean_ds = 0.0;
    double max_ds = 0.0;
};

struct EvaluationReport {
    std::vector<SampleScore> samples;
    std::vector<GroupScore> groups;  // per (topology, regime), then the overall row last
    InterpretabilityStats stats;
    std::optional<double> runtime;
    std::string hardware = "unspecified";

    const GroupScore& overall() const { return groups.back(); }
};

/// Predictions for a corpus: either a directory with one <id>.json per
/// sample or one file holding {"predictions": [{"id", ...}], "batches": [...]}.
struct PredictionSet {
    std::map<std::string, ModelOutput> by_id;
    std::vector<BatchTiming> batches;
    std::string hardware = "unspecified";
};

PredictionSet load_predictions(const std::filesystem::path& source, const std::vector<std::string>& ids);
ModelOutput parse_prediction(const std::string& id, std::string_view text);

/// Scores `predictions` (the stored labels when absent) against the corpus.
/// Throws PredictionError listing every sample id with no prediction.
EvaluationReport evaluate_predictions(const CorpusIndex& corpus, const std::optional<PredictionSet>& predictions,
                                      unsigned workers = 1);

std::string write_report_json(const EvaluationReport& report);
std::string write_report_text(const EvaluationReport& report);

}  // namespace flowbench
