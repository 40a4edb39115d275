#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace flowbench {

using Complex = std::complex<double>;

/// Bus classification. Numeric values are the flags written to sample records.
enum class BusKind : int { PQ = 1, PV = 2, Slack = 3 };

/// Raised when a network violates a structural invariant (bad reference,
/// zero impedance, missing slack, islanding). `index` names the offending
/// component when there is one, otherwise -1.
class ModelError : public std::runtime_error {
  public:
    ModelError(const std::string& what, int index = -1)
        : std::runtime_error(what), index_(index) {}
    int index() const noexcept { return index_; }

  private:
    int index_;
};

struct Bus {
    int number = 0;  // external bus number from the case file
    BusKind kind = BusKind::PQ;
    double gs = 0.0;  // shunt conductance, p.u.
    double bs = 0.0;  // shunt susceptance, p.u.
    double vmin = 0.9;
    double vmax = 1.1;
    // Case-file voltage (informational; setpoints come from generators).
    double vm0 = 1.0;
    double va0 = 0.0;  // rad
    double base_kv = 0.0;
    int area = 1;
    int zone = 1;

    bool operator==(const Bus&) const = default;
};

struct Generator {
    int bus = 0;
    double pg = 0.0;
    double qg = 0.0;
    double pmin = 0.0;
    double pmax = 0.0;
    double qmin = 0.0;
    double qmax = 0.0;
    double vset = 1.0;
    double mbase = 100.0;
    // cost(pg) = cost_a * pg^2 + cost_b * pg + cost_c, pg in p.u.
    double cost_a = 0.0;
    double cost_b = 0.0;
    double cost_c = 0.0;
    bool in_service = true;

    bool operator==(const Generator&) const = default;
};

struct Load {
    int bus = 0;
    double pd = 0.0;
    double qd = 0.0;

    bool operator==(const Load&) const = default;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r = 0.0;
    double x = 0.0;
    double b_charging = 0.0;  // total line-charging susceptance
    double tap = 1.0;
    double shift = 0.0;  // rad
    bool in_service = true;
    double rate = 0.0;  // p.u., 0 means unlimited
    double angmin = -2.0 * 3.14159265358979323846;  // rad
    double angmax = 2.0 * 3.14159265358979323846;   // rad

    bool operator==(const Branch&) const = default;
};

/// Per-unit network. Bus indices are dense (0..n-1); `Bus::number` keeps the
/// external numbering for file boundaries.
struct Network {
    std::string name;
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    std::vector<Branch> branches;

    int bus_count() const { return static_cast<int>(buses.size()); }
    int slack_bus() const;
    /// Dense index of an external bus number, or -1.
    int bus_index(int number) const;

    bool operator==(const Network&) const = default;
};

/// Throws ModelError on the first violated invariant: dangling references,
/// from == to, zero series impedance, nonpositive tap, bad bounds, slack
/// count != 1, or a live graph that is disconnected.
void validate(const Network& net);

/// Component label for every bus using only in-service branches.
std::vector<int> connected_components(const Network& net);
int component_count(const Network& net);
bool is_connected(const Network& net);

/// Voltage setpoint of a bus: the first in-service generator's vset, or the
/// case-file magnitude when the bus has none.
double bus_voltage_setpoint(const Network& net, int bus);
Eigen::VectorXd voltage_setpoints(const Network& net);

/// Net injections implied by in-service generators and loads.
struct Injections {
    Eigen::VectorXd p;
    Eigen::VectorXd q;
};
Injections scheduled_injections(const Network& net);

std::vector<int> buses_of_kind(const Network& net, BusKind kind);
std::vector<int> live_generators_at(const Network& net, int bus);
int slack_generator(const Network& net);

}  // namespace flowbench
