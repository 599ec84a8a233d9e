#pragma once

#include "maropf/conditions.hpp"
#include "maropf/droop.hpp"
#include "maropf/grid.hpp"

#include <string>
#include <vector>

namespace maropf {

struct PowerFlowState {
    Eigen::VectorXd v;  // per bus, v(0) = v0
    Eigen::VectorXd f;  // per line
    Eigen::VectorXd P;  // per line, sending end
    Eigen::VectorXd Q;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

struct Violation {
    std::string quantity;  // "v_hi", "v_lo" or "current"
    int index = 0;         // bus or line id
    int step = 0;
    double amount = 0.0;   // p.u. magnitude above/below the limit, or f - I_max
};

struct SecurityVerdict {
    double worst_v_hi = 0.0;  // p.u. magnitude
    double worst_v_lo = 0.0;
    double worst_current_ratio = 0.0;  // max f / I_max
    std::vector<Violation> violations;

    bool clean() const { return violations.empty(); }
};

struct SweepOptions {
    double tol = 1e-13;
    int max_iters = 1000;
};

// Solves the DistFlow equations for per-line net consumption pn, qn
// (load minus generation) and constant-impedance shunts.
PowerFlowState constant_injection_powerflow(const RadialNetwork& network, const TopologyMatrices& topo,
                                            const Eigen::VectorXd& pn, const Eigen::VectorXd& qn,
                                            const ShuntVector& shunts, const SweepOptions& options = {},
                                            const PowerFlowState* warm = nullptr);

// Max residual of the DistFlow equations (balance, voltage drop, current definition).
double distflow_residual(const RadialNetwork& network, const TopologyMatrices& topo, const PowerFlowState& s,
                         const Eigen::VectorXd& pn, const Eigen::VectorXd& qn, const ShuntVector& shunts);

// Lossless voltages with constant-impedance shunts, per line.
Eigen::VectorXd lossless_voltage(const RadialNetwork& network, const TopologyMatrices& topo, const ShuntVector& shunts,
                                 const Eigen::VectorXd& pn, const Eigen::VectorXd& qn);

struct AdhocOptions {
    double eps_stop = 1e-10;
    int max_iters = 10000;
    int divergence_window = 50;
};

PowerFlowState adhoc_iteration(const RadialNetwork& network, const TopologyMatrices& topo,
                               const Eigen::VectorXd& v_hat, const Eigen::MatrixXd& D, const Eigen::VectorXd& pn,
                               const Eigen::VectorXd& qn, const ShuntVector& shunts, const PowerFlowState& start,
                               const AdhocOptions& options = {});

struct OracleOptions {
    double tol = 1e-8;        // on voltage magnitude between outer passes
    int max_outer = 200;
    int relax_after = 20;
    double relax = 0.5;
    SweepOptions sweep;
};

struct OracleResult {
    PowerFlowState state;
    std::vector<PowerPair> injections;  // per IBDG after clipping
    int outer_iterations = 0;
};

// Capability clipping: q bounds, power-factor wedge, then the apparent-power
// cap by shrinking p with q held, then the wedge again.
PowerPair clip_capability(const IbdgSpec& spec, PowerPair pq);

// curves[i] is used for dispatchable IBDG i; the others inject (p_ava, 0).
OracleResult exact_droop_powerflow(const RadialNetwork& network, const TopologyMatrices& topo,
                                   const std::vector<ExactDroopCurve>& curves, const Eigen::VectorXd& p_ava,
                                   const Eigen::VectorXd& load_mult, const OracleOptions& options = {});

struct SecurityOptions {
    double v_tol = 1e-6;  // p.u. magnitude
    double i_tol = 1e-6;  // relative on squared current
};

SecurityVerdict verify_security(const std::vector<PowerFlowState>& states, const RadialNetwork& network,
                                const SecurityOptions& options = {});

// Two- and three-bus networks only; closed-form line quadratics.
PowerFlowState brute_force_small(const RadialNetwork& network, const Eigen::VectorXd& pn, const Eigen::VectorXd& qn,
                                 const ShuntVector& shunts);

}  // namespace maropf
