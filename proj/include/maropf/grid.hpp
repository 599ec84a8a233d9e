#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace maropf {

// Voltage base is line-to-line.
struct Bases {
    double v_kv = 12.66;
    double s_mva = 1.0;

    double z_ohm() const { return v_kv * v_kv / s_mva; }
    double i_amp() const;
};

// All quantities per-unit; voltages and currents squared.
struct Bus {
    int id = 0;
    double load_p = 0.0;
    double load_q = 0.0;
    double shunt_g = 0.0;
    double shunt_b = 0.0;
    double v_min = 0.81;
    double v_max = 1.1025;
    double v_target = 1.0;
    double v_threshold = 0.1;
    std::string load_class = "residential";
};

// A line carries the index of its ending bus.
struct Line {
    int id = 0;
    int up = 0;
    double r = 0.0;
    double x = 0.0;
    double i_max = 1.0;
    double p_max = 0.0;
    double q_max = 0.0;
};

struct IbdgSpec {
    std::string name;
    int bus = 0;
    bool dispatchable = true;
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double s_max = 0.0;
    double mu_min = 1.0;
    std::string availability;  // profile column id
    std::optional<double> taylor_v0;
};

struct RadialNetwork {
    std::string name;
    std::vector<Bus> buses;
    std::vector<Line> lines;  // sorted by id once validated: lines[k].id == k + 1
    std::vector<IbdgSpec> ibdgs;
    double v0 = 1.0;
    Bases bases;
    double design_epsilon = 1.0;
    std::string profiles;  // default profile file, relative to the case file

    int num_buses() const { return static_cast<int>(buses.size()); }
    int num_lines() const { return static_cast<int>(lines.size()); }
    const Line& line(int id) const { return lines[static_cast<std::size_t>(id - 1)]; }
    const Bus& bus(int id) const { return buses[static_cast<std::size_t>(id)]; }

    Eigen::VectorXd line_r() const;
    Eigen::VectorXd line_x() const;
    // Per-line vectors of the ending-bus data (slack excluded).
    Eigen::VectorXd load_p() const;
    Eigen::VectorXd load_q() const;
    Eigen::VectorXd shunt_g() const;
    Eigen::VectorXd shunt_b() const;
    Eigen::VectorXd v_min() const;
    Eigen::VectorXd v_max() const;
};

struct TopologyMatrices {
    Eigen::MatrixXd G;
    Eigen::MatrixXd H;
    Eigen::MatrixXd R;
    Eigen::MatrixXd X;
    std::vector<int> order;  // bus ids, parents before children (slack excluded)
    std::vector<std::vector<int>> children;  // per bus id
};

enum class DiagnosticKind { CycleDetected, DisconnectedBus, InvalidIndex };

struct Diagnostic {
    DiagnosticKind kind;
    int bus;
    std::string message;
};

std::vector<Diagnostic> validate_radial(const RadialNetwork& network);

// Throws CycleDetected / DisconnectedBus / InvalidIndex on the first diagnostic.
TopologyMatrices build_topology(const RadialNetwork& network);

// Physical-unit case description, one-to-one with the case file.
struct RawBus {
    int id = 0;
    double load_kw = 0.0;
    double load_kvar = 0.0;
    double shunt_kw = 0.0;    // constant-impedance consumption at 1 p.u.
    double shunt_kvar = 0.0;
    double v_min_pu = 0.90;   // magnitude
    double v_max_pu = 1.05;
    double v_target_pu = 1.0;
    double v_threshold = 0.1; // already squared p.u.
    std::string load_class = "residential";
};

struct RawLine {
    int from = 0;
    int to = 0;
    double r_ohm = 0.0;
    double x_ohm = 0.0;
    double ampacity_a = 0.0;
    double p_max_kw = 0.0;
    double q_max_kvar = 0.0;
};

struct RawIbdg {
    std::string name;
    int bus = 0;
    bool dispatchable = true;
    double p_max_kw = 0.0;
    double q_min_kvar = 0.0;
    double q_max_kvar = 0.0;
    double s_max_kva = 0.0;
    double mu_min = 1.0;
    std::string availability;
    std::optional<double> taylor_v0;
};

struct RawCase {
    std::string name;
    std::vector<RawBus> buses;
    std::vector<RawLine> lines;
    std::vector<RawIbdg> ibdgs;
    double slack_v0_pu = 1.0;
    double design_epsilon = 1.0;
    std::string profiles;
};

// Lines come out sorted by ending bus; radiality is not checked here.
RadialNetwork to_per_unit(const RawCase& raw, const Bases& bases);
RawCase to_physical(const RadialNetwork& network);

struct ScenarioHorizon {
    int step_minutes = 15;
    std::vector<std::string> labels;
    Eigen::MatrixXd load_mult;  // T x num_buses, column 0 unused
    Eigen::MatrixXd p_ava;      // T x num_ibdgs, per-unit available power

    int size() const { return static_cast<int>(labels.size()); }
};

// Single-step horizon with uniform load multiplier and PV availability fraction.
ScenarioHorizon uniform_snapshot(const RadialNetwork& network, double load_mult, double pv_fraction);

}  // namespace maropf
