#include "maropf/errors.hpp"
#include "maropf/socp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <queue>

namespace maropf {

int tighten_binaries(ConicProgram& program, bool& infeasible) {
    infeasible = false;
    auto& vars = program.variables();
    int fixed = 0;
    const double tol = 1e-9;
    for (int pass = 0; pass < 5; ++pass) {
        int changed = 0;
        for (const LinearRow& row : program.rows()) {
            // Activity range of the whole row at the current bounds.
            double lo = 0.0, hi = 0.0;
            bool has_free_binary = false;
            for (const Term& t : row.terms) {
                const Variable& v = vars[t.var];
                lo += t.coef > 0 ? t.coef * v.lo : t.coef * v.hi;
                hi += t.coef > 0 ? t.coef * v.hi : t.coef * v.lo;
                has_free_binary = has_free_binary || (v.binary && v.lo < v.hi);
            }
            bool le = row.sense != Sense::Ge, ge = row.sense != Sense::Le;
            if ((le && lo > row.rhs + tol * (1.0 + std::abs(row.rhs))) ||
                (ge && hi < row.rhs - tol * (1.0 + std::abs(row.rhs)))) {
                infeasible = true;
                return fixed;
            }
            if (!has_free_binary || !std::isfinite(lo + hi)) continue;
            for (const Term& t : row.terms) {
                Variable& v = vars[t.var];
                if (!v.binary || !(v.lo < v.hi)) continue;
                // Range of the other terms.
                double olo = lo - (t.coef > 0 ? t.coef * v.lo : t.coef * v.hi);
                double ohi = hi - (t.coef > 0 ? t.coef * v.hi : t.coef * v.lo);
                auto feasible = [&](double val) {
                    double a = olo + t.coef * val, b = ohi + t.coef * val;
                    double slack = tol * (1.0 + std::abs(row.rhs));
                    if (le && a > row.rhs + slack) return false;
                    if (ge && b < row.rhs - slack) return false;
                    return true;
                };
                bool f0 = feasible(0.0), f1 = feasible(1.0);
                if (!f0 && !f1) {
                    infeasible = true;
                    return fixed;
                }
                if (f0 != f1) {
                    v.lo = v.hi = f1 ? 1.0 : 0.0;
                    ++changed;
                    ++fixed;
                    break;  // the row's activity range changed
                }
            }
        }
        if (changed == 0) break;
    }
    return fixed;
}

namespace {

struct Node {
    long id = 0;
    int depth = 0;
    double bound = -kInf;
    std::vector<double> lo, hi;  // per binary
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

bool usable(const Solution& s) { return s.status == SolveStatus::Optimal || s.inaccurate; }

}  // namespace

Solution solve_misocp(const ConicProgram& program, const SolverConfig& cfg, const Eigen::VectorXd* warm) {
    cfg.validate();
    std::vector<int> bins;
    for (int i = 0; i < program.num_variables(); ++i)
        if (program.variables()[i].binary) bins.push_back(i);
    if (bins.empty()) {
        Solution s = solve_socp(program, cfg);
        s.bb.nodes = 1;
        s.bb.socp_solves = 1;
        s.bb.best_bound = s.objective;
        s.bb.bound_trace.push_back(s.objective);
        s.bb.incumbent_trace.push_back(s.objective);
        return s;
    }

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    SolverConfig inner = cfg;
    inner.log = nullptr;

    ConicProgram work = program;
    BbStats stats;
    Solution best;
    best.status = SolveStatus::Infeasible;
    double incumbent = kInf;
    double global_bound = -kInf;
    char line[320];

    auto apply = [&](const Node& nd) {
        for (std::size_t k = 0; k < bins.size(); ++k) work.set_bounds(bins[k], nd.lo[k], nd.hi[k]);
    };
    auto gap_closed = [&]() {
        return std::isfinite(incumbent) && incumbent - global_bound <= cfg.bb_gap * std::max(1.0, std::abs(incumbent));
    };
    auto accept = [&](const Solution& s) {
        if (usable(s) && s.objective < incumbent) {
            incumbent = s.objective;
            best = s;
            return true;
        }
        return false;
    };
    // Fix every binary at its rounded value (mode < 0 down, 0 nearest, > 0 up) and re-solve.
    auto polish = [&](const Eigen::VectorXd& x, const Node& nd, int mode = 0) {
        Node fixed = nd;
        for (std::size_t k = 0; k < bins.size(); ++k) {
            double v = std::clamp(x(bins[k]), 0.0, 1.0);
            double r = mode == 0 ? std::round(v) : mode > 0 ? (v > cfg.int_tol ? 1.0 : 0.0) : (v < 1.0 - cfg.int_tol ? 0.0 : 1.0);
            r = std::clamp(r, nd.lo[k], nd.hi[k]);
            fixed.lo[k] = fixed.hi[k] = r;
        }
        apply(fixed);
        Solution s = solve_socp(work, inner);
        ++stats.socp_solves;
        return s;
    };

    // Fractional dive: fix the least fractional free binary at its rounding and
    // re-solve, flipping once when the fixing is infeasible.
    auto dive = [&](Solution cur, Node nd) {
        for (std::size_t step = 0; step <= bins.size(); ++step) {
            int pick = -1;
            double least = 1.0;
            for (std::size_t k = 0; k < bins.size(); ++k) {
                if (nd.lo[k] == nd.hi[k]) continue;
                double v = cur.x(bins[k]);
                double frac = std::abs(v - std::round(v));
                if (frac > cfg.int_tol && frac < least) {
                    least = frac;
                    pick = static_cast<int>(k);
                }
            }
            if (pick < 0) return accept(polish(cur.x, nd));
            double val = std::round(std::clamp(cur.x(bins[pick]), 0.0, 1.0));
            Solution next;
            for (int attempt = 0; attempt < 2; ++attempt) {
                Node trial = nd;
                trial.lo[pick] = trial.hi[pick] = attempt == 0 ? val : 1.0 - val;
                apply(trial);
                next = solve_socp(work, inner);
                ++stats.socp_solves;
                if (usable(next)) {
                    nd = trial;
                    break;
                }
            }
            if (!usable(next) || next.objective >= incumbent) return false;
            cur = next;
        }
        return false;
    };

    Node root;
    root.lo.resize(bins.size());
    root.hi.resize(bins.size());
    for (std::size_t k = 0; k < bins.size(); ++k) {
        root.lo[k] = program.variables()[bins[k]].lo;
        root.hi[k] = program.variables()[bins[k]].hi;
    }
    if (warm && warm->size() == program.num_variables()) accept(polish(*warm, root));
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(root);
    long next_id = 1;
    SolveStatus stop = SolveStatus::Optimal;
    bool root_done = false;

    while (!open.empty()) {
        if (stats.nodes >= cfg.bb_node_limit) {
            stop = SolveStatus::NodeLimit;
            break;
        }
        if (std::chrono::duration<double>(clock::now() - t0).count() > cfg.time_limit) {
            stop = SolveStatus::GapLimit;
            break;
        }
        Node nd = open.top();
        open.pop();
        ++stats.nodes;
        global_bound = std::max(global_bound, std::min(nd.bound, incumbent));

        double node_obj = kInf;
        const char* fate = "pruned";
        if (nd.bound < incumbent) {
            apply(nd);
            bool infeasible = false;
            if (cfg.presolve_tighten) {
                tighten_binaries(work, infeasible);
                for (std::size_t k = 0; k < bins.size(); ++k) {
                    nd.lo[k] = work.variables()[bins[k]].lo;
                    nd.hi[k] = work.variables()[bins[k]].hi;
                }
            }
            Solution rel;
            if (infeasible) {
                rel.status = SolveStatus::Infeasible;
            } else {
                rel = solve_socp(work, inner);
                ++stats.socp_solves;
            }
            if (!usable(rel)) {
                fate = rel.status == SolveStatus::Infeasible ? "infeasible" : "failed";
                if (!root_done && rel.status != SolveStatus::Infeasible) {
                    best.status = rel.status;
                    best.iterations = rel.iterations;
                    best.bb = stats;
                    return best;
                }
            } else {
                node_obj = rel.objective;
                double bound = std::max(nd.bound, node_obj);
                if (!root_done && cfg.rounding_heuristic) {
                    for (int mode : {0, 1, -1})
                        if (accept(polish(rel.x, nd, mode))) fate = "heuristic";
                }
                if (cfg.dive_heuristic && !std::isfinite(incumbent) &&
                    (!root_done || stats.nodes % cfg.dive_interval == 0)) {
                    if (dive(rel, nd)) fate = "dive";
                }
                if (bound >= incumbent - cfg.bb_gap * std::max(1.0, std::abs(incumbent))) {
                    fate = "bound";
                } else {
                    int pick = -1;
                    double worst = cfg.int_tol;
                    for (std::size_t k = 0; k < bins.size(); ++k) {
                        double v = rel.x(bins[k]);
                        double frac = std::abs(v - std::round(v));
                        if (frac > worst) {
                            worst = frac;
                            pick = static_cast<int>(k);
                        }
                    }
                    if (pick < 0) {
                        Solution s = polish(rel.x, nd);
                        fate = accept(s) ? "incumbent" : "integral";
                    } else {
                        Node down = nd, up = nd;
                        down.hi[pick] = 0.0;
                        up.lo[pick] = 1.0;
                        down.depth = up.depth = nd.depth + 1;
                        down.bound = up.bound = bound;
                        bool up_first = rel.x(bins[pick]) >= 0.5;
                        (up_first ? up : down).id = next_id++;
                        (up_first ? down : up).id = next_id++;
                        open.push(down);
                        open.push(up);
                        fate = "branch";
                    }
                }
            }
        }
        root_done = true;
        double open_min = open.empty() ? kInf : open.top().bound;
        global_bound = std::max(global_bound, std::min(open_min, incumbent));
        stats.bound_trace.push_back(global_bound);
        stats.incumbent_trace.push_back(incumbent);
        std::vector<double> fix;
        fix.reserve(2 * bins.size());
        for (std::size_t k = 0; k < bins.size(); ++k) {
            fix.push_back(nd.lo[k]);
            fix.push_back(nd.hi[k]);
        }
        stats.node_fixings.push_back(std::move(fix));
        if (cfg.log) {
            std::snprintf(line, sizeof line, "bb node=%ld id=%ld depth=%d obj=%.9e bound=%.9e incumbent=%.9e open=%zu %s\n",
                          stats.nodes, nd.id, nd.depth, node_obj, global_bound, incumbent, open.size(), fate);
            *cfg.log << line;
        }
        if (gap_closed()) break;
    }

    if (!std::isfinite(incumbent)) {
        best = Solution{};
        best.status = stop == SolveStatus::Optimal ? SolveStatus::Infeasible : stop;
        stats.best_bound = global_bound;
        best.bb = stats;
        return best;
    }
    // An exhausted tree proves the incumbent optimal.
    if (open.empty()) global_bound = std::max(global_bound, incumbent);
    stats.best_bound = global_bound;
    best.status = open.empty() || gap_closed() ? SolveStatus::Optimal : stop;
    best.dual_objective = global_bound;
    best.bb = stats;
    return best;
}

}  // namespace maropf
