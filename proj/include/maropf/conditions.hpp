#pragma once

#include "maropf/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace maropf {

// Per-line (= per ending bus) admittance vectors.
struct ShuntVector {
    Eigen::VectorXd g;
    Eigen::VectorXd b;
};

// Flow/injection bounds entering pi and rho. All vectors per line.
struct Envelope {
    Eigen::VectorXd p_load;
    Eigen::VectorXd q_load;
    Eigen::VectorXd p_gen_max;
    Eigen::VectorXd q_gen_max;
    Eigen::VectorXd P_max;
    Eigen::VectorXd Q_max;
    Eigen::VectorXd v_min;
};

struct SlopePair {
    double alpha_p = 0.0;
    double alpha_q = 0.0;
};

struct ConditionMatrices {
    Eigen::MatrixXd H;
    Eigen::MatrixXd M1;
    Eigen::MatrixXd M2;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    Eigen::VectorXd pi;
    Eigen::VectorXd rho;
    Eigen::VectorXd theta;
    Eigen::MatrixXd E;
    int det_sign = 0;           // of C^-1 = I - G^T + M1 + M2
    double log_abs_det = 0.0;
};

struct ConditionTolerances {
    double tol_neg = 1e-12;
    double tol_pos = 1e-12;
};

struct ConditionReport {
    double norm_8a = 0.0;
    double min_D = 0.0;
    double norm_E = 0.0;
    std::optional<double> eta;
    bool pass_8a = false;
    bool pass_8b = false;
    bool pass_8c = false;
    bool pass_8d = false;
    bool overall = false;
    int det_sign = 0;
    double log_abs_det = 0.0;
};

// Network shunts alone.
ShuntVector network_shunts(const RadialNetwork& network);
// Network shunts plus alpha^p + j alpha^q at every dispatchable IBDG bus.
ShuntVector effective_shunts(const RadialNetwork& network, const std::vector<SlopePair>& slopes);

// Nominal loads, IBDG p_max/q_max aggregated per bus, case flow caps.
Envelope nominal_envelope(const RadialNetwork& network);

Eigen::MatrixXd voltage_sensitivity(const RadialNetwork& network, const TopologyMatrices& topo,
                                    const ShuntVector& shunts);

ConditionMatrices compute_condition_matrices(const RadialNetwork& network, const TopologyMatrices& topo,
                                             const ShuntVector& shunts, const Envelope& envelope);

ConditionReport check_conditions(const ConditionMatrices& m, const ConditionTolerances& tol = {});

// One entry per IBDG; non-dispatchable units get zero slopes.
std::vector<SlopePair> tune_droop_slopes(const RadialNetwork& network, const TopologyMatrices& topo,
                                         double epsilon);

struct SweepRow {
    double epsilon = 0.0;
    int det_sign = 0;
    double log_abs_det = 0.0;
    double min_D = 0.0;
    double norm_8a = 0.0;
};

std::vector<SweepRow> sweep_epsilon(const RadialNetwork& network, const TopologyMatrices& topo,
                                    const std::vector<double>& grid);

std::vector<double> default_epsilon_grid(int points = 20);

struct BreakOptions {
    double scan_start = 0.25;
    double scan_limit = 1e3;
    double rel_tol = 1e-6;
};

struct BreakResult {
    double scale = 0.0;
    std::string violated;  // "8a", "8b", "8c" or "8d"
    ConditionReport report;  // just past the break
    double net_injection = 0.0;  // total active injection minus load at the break, p.u.
    double max_voltage = 0.0;    // oracle, p.u. magnitude
};

// Scales p_gen_max/q_gen_max = s * direction with everything else from `base`.
BreakResult find_condition_break(const RadialNetwork& network, const TopologyMatrices& topo,
                                 const ShuntVector& shunts, const Envelope& base,
                                 const Eigen::VectorXd& dir_p, const Eigen::VectorXd& dir_q,
                                 const BreakOptions& options = {});

}  // namespace maropf
