#pragma once

#include "maropf/program.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <string>
#include <vector>

namespace maropf {

struct SolverConfig {
    double feas_tol = 1e-8;
    double opt_tol = 1e-8;
    int max_iters = 100;
    double bb_gap = 1e-6;  // relative, with denominator max(1, |incumbent|)
    long bb_node_limit = 200000;
    double time_limit = 1800.0;  // seconds, branch-and-bound only
    double int_tol = 1e-6;

    bool equilibrate = true;
    bool presolve_fixed = true;
    bool presolve_dedup = true;
    bool presolve_tighten = true;
    bool rounding_heuristic = true;
    bool dive_heuristic = true;  // at the root, then every dive_interval nodes until an incumbent exists
    long dive_interval = 64;

    std::ostream* log = nullptr;

    // Throws InvalidProgram on nonpositive tolerances or a negative gap.
    void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterLimit, NumericalBreakdown, GapLimit, NodeLimit };

std::string to_string(SolveStatus s);

struct BbStats {
    long nodes = 0;
    long socp_solves = 0;
    double best_bound = -kInf;
    std::vector<double> bound_trace;      // bound of each processed node, in processing order
    std::vector<double> incumbent_trace;  // incumbent after each processed node (inf when none)
    std::vector<std::vector<double>> node_fixings;  // binary bounds fixed at each processed node, for determinism checks
};

struct Solution {
    SolveStatus status = SolveStatus::NumericalBreakdown;
    Eigen::VectorXd x;  // indexed by program variable id
    double objective = kInf;
    double dual_objective = -kInf;
    int iterations = 0;
    double pres = 0.0;
    double dres = 0.0;
    double gap = 0.0;
    // Set when the final iterate only meets the relaxed tolerances (about 1e-5).
    bool inaccurate = false;
    BbStats bb;

    bool has_point() const { return x.size() > 0 && (status == SolveStatus::Optimal || inaccurate ||
                                                     status == SolveStatus::GapLimit || status == SolveStatus::NodeLimit); }
};

// Interior-point solve of the continuous part; binaries are relaxed to their bounds.
Solution solve_socp(const ConicProgram& program, const SolverConfig& config = {});

// Best-first branch-and-bound over the binaries. `warm`, when given, is a point whose
// rounded binaries seed the incumbent.
Solution solve_misocp(const ConicProgram& program, const SolverConfig& config = {},
                      const Eigen::VectorXd* warm = nullptr);

// Activity-based tightening of binary bounds; returns the number of binaries fixed.
// Sets infeasible when some row cannot be satisfied at the current bounds.
int tighten_binaries(ConicProgram& program, bool& infeasible);

}  // namespace maropf
