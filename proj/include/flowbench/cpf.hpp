#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flowbench/admittance.hpp"
#include "flowbench/balance.hpp"
#include "flowbench/grid.hpp"
#include "flowbench/state.hpp"

namespace flowbench {

class ContinuationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class StopAt { Nose, Target };

/// Injections follow base + lambda * (target - base).
struct ContinuationSpec {
    Injections base;
    Injections target;
    double initial_step = 0.05;
    double min_step = 1e-4;
    double max_step = 0.1;
    double corrector_tol = 1e-8;
    int corrector_max_iter = 10;
    StopAt stop = StopAt::Nose;
    double max_lambda = 50.0;
    double factor = 0.0;  // set by proportional_spec; needed by extract_cases

    Injections at(double lambda) const;
};

/// Target = factor * scheduled injections of `net`.
ContinuationSpec proportional_spec(const Network& net, double factor);

struct PathPoint {
    double lambda = 0.0;
    PFState state;
    int corrector_iterations = 0;
};

enum class PathStatus { NoseFound, TargetReached, Failed };
std::string_view to_string(PathStatus s);

struct CPFPath {
    std::vector<PathPoint> points;
    std::vector<double> condition_trace;
    std::optional<std::size_t> nose_index;
    PathStatus status = PathStatus::Failed;
    int predictor_steps = 0;
};

struct Prediction {
    PFState state;
    double lambda = 0.0;
    bool tangent_singular = false;
};

/// Step of length `step` along the normalized tangent [dx/dlambda; 1].
Prediction predictor(const Network& net, const Admittance& adm, const ContinuationSpec& spec, const PathPoint& from,
                     double step);

struct Correction {
    bool converged = false;
    PathPoint point;
};

/// Newton at fixed lambda from the predicted state.
Correction corrector(const Network& net, const Admittance& adm, const ContinuationSpec& spec,
                     const Prediction& predicted);

/// Throws std::invalid_argument for a zero direction and ContinuationError
/// when the base case does not solve.
CPFPath trace(const Network& net, const ContinuationSpec& spec);

/// A path point re-expressed as a standalone scenario.
struct ExtractedCase {
    Network net;
    PowerFlowSolution solution;
    double lambda = 0.0;
};

struct ExtractedCases {
    ExtractedCase nose;
    std::vector<ExtractedCase> approaching;  // path order, up to four
    bool truncated = false;
};

/// Nose point plus its four predecessors. Requires a NoseFound path traced
/// with a proportional spec on `net`.
ExtractedCases extract_cases(const Network& net, const ContinuationSpec& spec, const CPFPath& path);

/// Network whose scheduled injections equal the spec at `lambda`.
Network scaled_network(const Network& net, const ContinuationSpec& spec, double lambda);

/// PQ bus with the lowest magnitude at the last point.
int weakest_bus(const Network& net, const CPFPath& path);

/// Columns: lambda, |v| at `bus`, condition estimate.
std::string path_csv(const CPFPath& path, int bus);

}  // namespace flowbench
