#pragma once

#include "maropf/conditions.hpp"
#include "maropf/grid.hpp"
#include "maropf/opf_builder.hpp"
#include "maropf/socp.hpp"

#include <vector>

namespace maropf {

// Shunts seen by the flow systems at program step t: network shunts plus
// y * alpha^p and alpha^q of every droop unit (binary state read from x).
ShuntVector step_shunts(const OpfProgram& opf, const RadialNetwork& network, const Eigen::VectorXd& x, int t);

// Per-line values of H (diag(r) - diag(g) D) f and H (diag(x) - diag(b) D) f at step t.
struct LossShift {
    Eigen::VectorXd p;
    Eigen::VectorXd q;
};
LossShift loss_shift(const OpfProgram& opf, const RadialNetwork& network, const TopologyMatrices& topo,
                     const Eigen::VectorXd& x, int t);

// Pairs where the lower flow bound may be replaced by the lossless flow magnitude.
ActivationSets compute_activation_sets(const OpfProgram& opf, const Eigen::VectorXd& x, const RadialNetwork& network,
                                       const TopologyMatrices& topo);

// True when every listed pair still satisfies the membership test at x.
bool activation_holds(const OpfProgram& opf, const Eigen::VectorXd& x, const RadialNetwork& network,
                      const TopologyMatrices& topo, const ActivationSets& pairs);

struct RefineConfig {
    int max_iters = 10;
    double tol = 1e-8;  // absolute, on accepted objectives
    SolverConfig solver;
};

struct RefinementStep {
    int h = 0;
    SolveStatus status = SolveStatus::Optimal;
    double objective = kInf;
    ActivationSets applied;   // substitutions in this iteration's program
    ActivationSets computed;  // sets found at this iteration's solution
    bool consistent = false;
    bool accepted = false;
    long nodes = 0;
};

struct RefinementTrace {
    std::vector<RefinementStep> steps;
    bool converged = false;
    bool capped = false;  // max_iters reached before two equal accepted objectives
};

struct RefineResult {
    Solution best;
    OpfProgram program;  // the program whose solution is `best`
    int best_iteration = 0;
    RefinementTrace trace;
};

// Iteration 1 solves `base` as is. The returned incumbent is always an accepted
// solution; best.has_point() is false only when iteration 1 fails.
RefineResult refine_loop(const OpfProgram& base, const RadialNetwork& network, const TopologyMatrices& topo,
                         const RefineConfig& config = {});

// Without refinement: one solve, same result shape.
RefineResult solve_once(const OpfProgram& base, const SolverConfig& config = {});

}  // namespace maropf
