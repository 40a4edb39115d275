#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "flowbench/balance.hpp"
#include "flowbench/grid.hpp"

namespace flowbench {

/// Schema violation while reading a record; `key()` is the offending key path.
class SchemaError : public std::runtime_error {
  public:
    SchemaError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

/// Where a record came from.
struct Provenance {
    std::string case_name;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    std::string event = "no_removal";
    std::vector<int> removed_generators;  // indices into the base case
    std::vector<int> removed_branches;
    std::string regime = "feasible";  // feasible | approaching-infeasible | close-to-infeasible
    std::string topology = "N";       // N | N-1 | N-2
    int iterations = 0;
    double lambda = 0.0;  // continuation parameter for CPF-derived records

    bool operator==(const Provenance&) const = default;
};

using MatrixX2d = Eigen::Matrix<double, Eigen::Dynamic, 2>;
using MatrixX4d = Eigen::Matrix<double, Eigen::Dynamic, 4>;
using MatrixX8d = Eigen::Matrix<double, Eigen::Dynamic, 8>;
using Matrix2Xi = Eigen::Matrix<int, 2, Eigen::Dynamic>;

/// One solved scenario in the component-level layout. Only in-service
/// generators and branches appear; link arrays index into the live lists.
struct SampleRecord {
    Provenance provenance;
    double base_mva = 100.0;

    MatrixX2d bus_x;
    MatrixX2d bus_y;
    MatrixX2d bus_gen;       // (pg, qg) summed per bus
    MatrixX2d bus_demand;    // (pd, qd) summed per bus
    MatrixX2d bus_voltages;  // (theta, |v|)
    Eigen::VectorXi bus_type;
    MatrixX2d bus_shunt;   // (gs, bs)
    MatrixX2d bus_limits;  // (vmin, vmax)

    MatrixX4d gen_limits;  // (pmin, pmax, qmin, qmax)
    MatrixX2d gen_generation;
    std::vector<bool> gen_slack;

    MatrixX2d load_demand;

    Matrix2Xi edge_index;
    MatrixX8d edge_attr;  // (r, x, g_from, b_from, g_to, b_to, tap, shift[deg])
    MatrixX4d edge_label;  // (p_from, q_from, p_to, q_to)
    Eigen::VectorXd edge_limits;

    Matrix2Xi gen_to_bus;
    Matrix2Xi bus_to_gen;
    Matrix2Xi load_to_bus;
    Matrix2Xi bus_to_load;

    Eigen::Index bus_count() const { return bus_type.size(); }
    bool operator==(const SampleRecord& o) const;
};

/// Builds a record from a completed solution. Throws std::invalid_argument
/// when the solution does not cover the network.
SampleRecord make_record(const Network& net, const PowerFlowSolution& sol, Provenance provenance);

std::string write_sample(const SampleRecord& rec);
/// Validates key names, shapes, finiteness and bus-type codes.
SampleRecord read_sample(std::string_view text);
SampleRecord load_sample(const std::string& path);

/// Network described by a record: topology, impedances, shunts, limits,
/// demand and generator setpoints (vset from the stored voltages).
Network network_from_record(const SampleRecord& rec);
PFState state_from_record(const SampleRecord& rec);

}  // namespace flowbench
