#include "maropf/refine.hpp"

#include <cmath>

namespace maropf {

namespace {

// Slack on the membership inequalities, absorbing solver noise around zero.
constexpr double kSetTol = 1e-9;

Solution solve_program(const OpfProgram& opf, const SolverConfig& cfg, const Eigen::VectorXd* warm = nullptr) {
    return opf.program.num_binaries() > 0 ? solve_misocp(opf.program, cfg, warm) : solve_socp(opf.program, cfg);
}

bool member(const OpfProgram& opf, const Eigen::VectorXd& x, const LossShift& s, int l, int t, bool reactive) {
    double shift = reactive ? s.q(l - 1) : s.p(l - 1);
    double hat = x(opf.vars.at(reactive ? Quantity::QHat : Quantity::PHat, l, t));
    double lo = x(opf.vars.at(reactive ? Quantity::QLo : Quantity::PLo, l, t));
    return shift >= -kSetTol && std::abs(hat) <= lo + kSetTol;
}

}  // namespace

ShuntVector step_shunts(const OpfProgram& opf, const RadialNetwork& network, const Eigen::VectorXd& x, int t) {
    ShuntVector s = network_shunts(network);
    if (!opf.droop) return s;
    for (int g : opf.droop_units) {
        int bus = network.ibdgs[g].bus;
        double y = std::round(x(opf.vars.at(Quantity::Y, g, t)));
        s.g(bus - 1) += y * opf.slopes[g].alpha_p;
        s.b(bus - 1) += opf.slopes[g].alpha_q;
    }
    return s;
}

LossShift loss_shift(const OpfProgram& opf, const RadialNetwork& network, const TopologyMatrices& topo,
                     const Eigen::VectorXd& x, int t) {
    const int L = network.num_lines();
    ShuntVector sh = step_shunts(opf, network, x, t);
    Eigen::MatrixXd D = voltage_sensitivity(network, topo, sh);
    Eigen::VectorXd f(L);
    for (int l = 1; l <= L; ++l) f(l - 1) = x(opf.vars.at(Quantity::F, l, t));
    Eigen::VectorXd Df = D * f;
    LossShift out;
    out.p = topo.H * (network.line_r().cwiseProduct(f) - sh.g.cwiseProduct(Df));
    out.q = topo.H * (network.line_x().cwiseProduct(f) - sh.b.cwiseProduct(Df));
    return out;
}

ActivationSets compute_activation_sets(const OpfProgram& opf, const Eigen::VectorXd& x, const RadialNetwork& network,
                                       const TopologyMatrices& topo) {
    ActivationSets sets;
    if (opf.families.empty()) return sets;
    std::vector<LossShift> shift;
    for (int t = 0; t < opf.steps; ++t) shift.push_back(loss_shift(opf, network, topo, x, t));
    for (const ConeFamily& fam : opf.families) {
        if (member(opf, x, shift[fam.t], fam.line, fam.t, false)) sets.Wp.insert({fam.line, fam.t});
        if (member(opf, x, shift[fam.t], fam.line, fam.t, true)) sets.Wq.insert({fam.line, fam.t});
    }
    return sets;
}

bool activation_holds(const OpfProgram& opf, const Eigen::VectorXd& x, const RadialNetwork& network,
                      const TopologyMatrices& topo, const ActivationSets& pairs) {
    if (pairs.empty()) return true;
    std::vector<LossShift> shift;
    for (int t = 0; t < opf.steps; ++t) shift.push_back(loss_shift(opf, network, topo, x, t));
    for (const auto& [l, t] : pairs.Wp)
        if (!member(opf, x, shift[t], l, t, false)) return false;
    for (const auto& [l, t] : pairs.Wq)
        if (!member(opf, x, shift[t], l, t, true)) return false;
    return true;
}

RefineResult solve_once(const OpfProgram& base, const SolverConfig& config) {
    RefineResult r;
    r.program = base;
    r.best = solve_program(base, config);
    r.best_iteration = 1;
    RefinementStep step;
    step.h = 1;
    step.status = r.best.status;
    step.objective = r.best.objective;
    step.consistent = step.accepted = r.best.has_point();
    step.nodes = r.best.bb.nodes;
    r.trace.steps.push_back(step);
    return r;
}

RefineResult refine_loop(const OpfProgram& base, const RadialNetwork& network, const TopologyMatrices& topo,
                         const RefineConfig& config) {
    RefineResult r = solve_once(base, config.solver);
    if (!r.best.has_point()) return r;
    r.trace.steps[0].computed = compute_activation_sets(base, r.best.x, network, topo);
    ActivationSets next = r.trace.steps[0].computed;
    double last = r.best.objective;

    for (int h = 2; h <= config.max_iters; ++h) {
        RefinementStep step;
        step.h = h;
        step.applied = next;
        OpfProgram prog = apply_refinement(base, next);
        // Seed the search with the incumbent binaries; it stays feasible when its own sets are applied.
        Solution sol = solve_program(prog, config.solver, &r.best.x);
        step.status = sol.status;
        step.objective = sol.objective;
        step.nodes = sol.bb.nodes;
        if (!sol.has_point()) {
            // Nothing to recompute the sets from; the incumbent stands.
            r.trace.steps.push_back(step);
            break;
        }
        step.consistent = activation_holds(prog, sol.x, network, topo, next);
        step.computed = compute_activation_sets(prog, sol.x, network, topo);
        // A consistent restriction of a feasible point cannot be worse beyond solver noise.
        step.accepted = step.consistent && sol.objective <= last + config.tol;
        bool done = false;
        if (step.accepted) {
            done = std::abs(sol.objective - last) <= config.tol;
            last = sol.objective;
            r.best = std::move(sol);
            r.program = std::move(prog);
            r.best_iteration = h;
        }
        next = step.computed;
        r.trace.steps.push_back(std::move(step));
        if (done) {
            r.trace.converged = true;
            return r;
        }
    }
    r.trace.capped = static_cast<int>(r.trace.steps.size()) >= config.max_iters;
    return r;
}

}  // namespace maropf
