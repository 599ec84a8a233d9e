// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit when any fails.

#include "maropf/case_io.hpp"
#include "maropf/conditions.hpp"
#include "maropf/droop.hpp"
#include "maropf/opf_builder.hpp"
#include "maropf/pipeline.hpp"
#include "maropf/powerflow.hpp"
#include "maropf/refine.hpp"
#include "maropf/report.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>

using namespace maropf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

std::string num(double v, const char* f = "%.4g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Eigen::VectorXd at_line(const OpfProgram& opf, const Eigen::VectorXd& x, Quantity q, int L, int t) {
    Eigen::VectorXd v(L);
    for (int l = 1; l <= L; ++l) v(l - 1) = x(opf.vars.at(q, l, t));
    return v;
}

// Net consumption per line (load minus injection) at a horizon step.
void net_consumption(const RadialNetwork& net, const ScenarioHorizon& h, int step,
                     const std::vector<PowerPair>& inj, Eigen::VectorXd& pn, Eigen::VectorXd& qn) {
    pn = net.load_p();
    qn = net.load_q();
    for (int b = 1; b <= net.num_lines(); ++b) {
        pn(b - 1) *= h.load_mult(step, b);
        qn(b - 1) *= h.load_mult(step, b);
    }
    for (std::size_t g = 0; g < net.ibdgs.size(); ++g) {
        pn(net.ibdgs[g].bus - 1) -= inj[g].p;
        qn(net.ibdgs[g].bus - 1) -= inj[g].q;
    }
}

// Relative residual of v = v_hat - D f, with v_hat the lossless voltage and D the
// sensitivity under the network's own shunts.
double identity_residual(const RadialNetwork& net, const TopologyMatrices& topo, const PowerFlowState& s,
                         const Eigen::VectorXd& pn, const Eigen::VectorXd& qn) {
    ShuntVector sh = network_shunts(net);
    Eigen::VectorXd v_hat = lossless_voltage(net, topo, sh, pn, qn);
    Eigen::MatrixXd D = voltage_sensitivity(net, topo, sh);
    Eigen::VectorXd v = s.v.tail(net.num_lines());
    return (v - (v_hat - D * s.f)).norm() / v.norm();
}

// Physical point under the scheduled injections of a snapshot solve, by the ad-hoc
// iteration started from the relaxed point.
struct PhysicalPoint {
    PowerFlowState state;
    Eigen::VectorXd pn, qn;
};

PhysicalPoint physical_point(const OpfProgram& m, const Solution& s, const RadialNetwork& net,
                             const TopologyMatrices& topo, const ScenarioHorizon& h, int step) {
    const int L = net.num_lines();
    PhysicalPoint out;
    auto inj = extract_injections(m, net, h, s.x)[0];
    net_consumption(net, h, step, inj, out.pn, out.qn);
    ShuntVector sh = network_shunts(net);
    PowerFlowState start;
    start.v = Eigen::VectorXd::Constant(L + 1, net.v0);
    start.v.tail(L) = at_line(m, s.x, Quantity::V, L, 0);
    start.f = at_line(m, s.x, Quantity::F, L, 0);
    start.P = at_line(m, s.x, Quantity::P, L, 0);
    start.Q = at_line(m, s.x, Quantity::Q, L, 0);
    Eigen::VectorXd v_hat = at_line(m, s.x, Quantity::VHat, L, 0);
    Eigen::MatrixXd D = voltage_sensitivity(net, topo, sh);
    out.state = adhoc_iteration(net, topo, v_hat, D, out.pn, out.qn, sh, start);
    return out;
}

struct Case34 {
    RadialNetwork net = load_case("ieee34");
    TopologyMatrices topo = build_topology(net);
    ScenarioHorizon horizon;
    int peak = 0;

    Case34() {
        HorizonSpec hs = window_preset("morning");
        hs.stride = 5;
        horizon = load_profiles(default_profiles(net), net, hs);
        Eigen::VectorXd sums = horizon.p_ava.rowwise().sum();
        sums.maxCoeff(&peak);
    }
};

PipelineOptions design_options(const std::string& command, const std::string& case_name, long node_limit) {
    PipelineOptions o;
    o.command = command;
    o.case_name = case_name;
    o.stride = 5;
    o.node_limit = node_limit;
    return o;
}

PipelineOutcome quiet(const PipelineOptions& o) {
    std::ostringstream a, b;
    return run_pipeline(o, a, b);
}

bool within_limits(const SecurityVerdict& s) {
    return s.clean() && s.worst_v_hi <= 1.05 + 1e-9 && s.worst_v_lo >= 0.90 - 1e-9 &&
           s.worst_current_ratio <= 1.0 + 1e-9;
}

// Shared between criteria 4, 5 and 6.
std::optional<CompareReport> g_compare34;

Outcome conditions_sweep() {
    Outcome o;
    Case34 c;
    std::vector<SweepRow> rows = sweep_epsilon(c.net, c.topo, default_epsilon_grid(20));
    o.require(rows.size() == 20, "grid has " + std::to_string(rows.size()) + " points");
    int sign = rows.empty() ? 0 : rows[0].det_sign;
    double min_d = kInf;
    int norm_fail = 0;
    for (const SweepRow& r : rows) {
        o.require(r.det_sign != 0 && r.det_sign == sign, "det sign changes at eps=" + num(r.epsilon));
        o.require(std::isfinite(r.log_abs_det), "singular C^-1 at eps=" + num(r.epsilon));
        o.require(r.min_D >= -1e-12, "min(D)=" + num(r.min_D) + " at eps=" + num(r.epsilon));
        min_d = std::min(min_d, r.min_D);
        if (r.norm_8a >= 1.0) ++norm_fail;
    }
    o.note("det sign " + std::to_string(sign) + ", min(D) " + num(min_d) + ", series-norm test fails at " +
           std::to_string(norm_fail) + " low-eps points");
    return o;
}

Outcome condition_break() {
    Outcome o;
    Case34 c;
    ShuntVector sh = effective_shunts(c.net, tune_droop_slopes(c.net, c.topo, c.net.design_epsilon));
    Envelope env = nominal_envelope(c.net);
    BreakResult b = find_condition_break(c.net, c.topo, sh, env, env.p_load, env.q_load);
    o.require(b.violated == "8d", "first failure is " + b.violated);
    o.require(b.max_voltage > 1.05, "max voltage " + num(b.max_voltage));
    o.note("scale " + num(b.scale) + ", net injection " + num(b.net_injection) + " p.u., max V " +
           num(b.max_voltage, "%.4f"));
    return o;
}

double g_identity_worst = 0.0;  // criterion 6, over all fixed points
int g_identity_points = 0;

Outcome flow_bound_properties() {
    Outcome o;
    Case34 c;
    const int L = c.net.num_lines();
    const Eigen::MatrixXd& H = c.topo.H;
    auto g = testing::rng(34);
    double worst = -kInf;
    int solved = 0;
    for (int k = 0; k < 50; ++k) {
        BuildOptions bo;
        bo.weights = {testing::uniform(g, 0.01, 1.0), testing::uniform(g, 0.01, 1.0), testing::uniform(g, 0.0, 1.0)};
        int step = k % 2 == 0 ? c.peak : static_cast<int>(g() % static_cast<unsigned>(c.horizon.size()));
        OpfProgram m = build_maropf(c.net, c.topo, c.horizon, step, bo);
        Solution s = solve_socp(m.program);
        if (s.status != SolveStatus::Optimal) {
            o.require(false, "solve " + std::to_string(k) + " " + to_string(s.status));
            continue;
        }
        ++solved;
        PhysicalPoint p = physical_point(m, s, c.net, c.topo, c.horizon, step);
        if (!p.state.converged) {
            o.require(false, "ad-hoc iteration diverged at solve " + std::to_string(k));
            continue;
        }
        // The physical point against the outer bounds.
        Eigen::VectorXd vhat = at_line(m, s.x, Quantity::VHat, L, 0);
        Eigen::VectorXd fu = at_line(m, s.x, Quantity::FUp, L, 0);
        Eigen::VectorXd Pl = at_line(m, s.x, Quantity::PLo, L, 0), Pu = at_line(m, s.x, Quantity::PUp, L, 0);
        Eigen::VectorXd Ql = at_line(m, s.x, Quantity::QLo, L, 0), Qu = at_line(m, s.x, Quantity::QUp, L, 0);
        const PowerFlowState& st = p.state;
        double viol = std::max({(st.v.tail(L) - vhat).maxCoeff(), (Pl - st.P).maxCoeff(), (st.P - Pu).maxCoeff(),
                                (Ql - st.Q).maxCoeff(), (st.Q - Qu).maxCoeff(), (st.f - fu).maxCoeff()});
        worst = std::max(worst, viol);
        // Lower bounds are exact identities in the relaxed variables.
        Eigen::VectorXd P = at_line(m, s.x, Quantity::P, L, 0), f = at_line(m, s.x, Quantity::F, L, 0);
        o.require((Pl - (P - H * c.net.line_r().cwiseProduct(f))).cwiseAbs().maxCoeff() <= 1e-7,
                  "P lower-bound identity at solve " + std::to_string(k));
        g_identity_worst = std::max(g_identity_worst, identity_residual(c.net, c.topo, st, p.pn, p.qn));
        ++g_identity_points;
    }
    o.require(worst <= 1e-7, "worst bound excess " + num(worst));
    o.note(std::to_string(solved) + " solves, worst bound excess " + num(worst));
    return o;
}

Outcome end_to_end() {
    Outcome o;
    PipelineOutcome r = quiet(design_options("compare", "ieee34", 200));
    o.require(r.exit_code == exit_codes::kOk, "compare exit " + std::to_string(r.exit_code) + " " + r.error);
    if (!r.comparison) return o;
    g_compare34 = r.comparison;
    const RunReport& m = r.comparison->maropf;
    int droop = 0;
    for (const DroopRecord& d : m.droop) droop += d.dispatchable ? 1 : 0;
    o.require(m.steps.size() == 4, "T=" + std::to_string(m.steps.size()));
    o.require(droop == 8, std::to_string(droop) + " droop units");
    o.require(m.solver && m.solver->binaries == 32, "binaries");
    o.require(within_limits(m.security), std::to_string(m.security.violations.size()) + " violations");
    o.note("max V " + num(m.security.worst_v_hi, "%.4f") + ", min V " + num(m.security.worst_v_lo, "%.4f") +
           ", max f/I_max " + num(m.security.worst_current_ratio, "%.3f") + ", solver " +
           (m.solver ? m.solver->status : std::string("none")));
    return o;
}

Outcome ropf_inexactness() {
    Outcome o;
    if (!g_compare34) {
        o.require(false, "no comparison run");
        return o;
    }
    const RunReport& rp = g_compare34->ropf;
    o.require(rp.solver && rp.solver->status == "optimal", "ropf solve");
    o.require(rp.security.worst_v_hi > 1.05, "ropf max V " + num(rp.security.worst_v_hi));
    bool flagged = false;
    for (const Violation& v : rp.security.violations) flagged = flagged || v.quantity == "v_hi";
    o.require(flagged, "no v_hi violation recorded");
    o.require(g_compare34->maropf.security.clean(), "maropf branch not clean");
    // The rendered comparison carries the violation counts of both branches.
    std::string table = render_comparison(*g_compare34);
    o.require(table.find("violations") != std::string::npos, "comparison table");
    o.note("ropf max V " + num(rp.security.worst_v_hi, "%.4f") + ", " +
           std::to_string(rp.security.violations.size()) + " violations");
    return o;
}

Outcome affine_identity() {
    Outcome o;
    if (!g_compare34) {
        o.require(false, "no comparison run");
        return o;
    }
    PipelineOptions po = design_options("simulate", "ieee34", 200);
    Scenario s = load_scenario(po);
    Validation v = validate_droop(s, g_compare34->maropf.droop);
    for (int t = 0; t < s.horizon.size(); ++t) {
        Eigen::VectorXd pn, qn;
        net_consumption(s.network, s.horizon, t, v.results[static_cast<std::size_t>(t)].injections, pn, qn);
        g_identity_worst = std::max(
            g_identity_worst, identity_residual(s.network, s.topo, v.results[static_cast<std::size_t>(t)].state, pn, qn));
        ++g_identity_points;
    }
    o.require(g_identity_points == 54, std::to_string(g_identity_points) + " fixed points");
    o.require(g_identity_worst <= 1e-6, "relative residual " + num(g_identity_worst));
    o.note(std::to_string(g_identity_points) + " fixed points, worst relative residual " + num(g_identity_worst));
    return o;
}

struct BindingPoint {
    bool found = false;
    double scale = 0.0;
    int line = 0;
    double gap = 0.0;
};

// Scales PV at the 11:00 step with upper-voltage limits relaxed until the first
// current bound binds, then compares it with the physical current on that line.
BindingPoint first_binding(ConeVariant cone, Outcome& o) {
    RadialNetwork net = load_case("ieee34");
    for (Bus& b : net.buses) b.v_max = 1.3 * 1.3;
    auto topo = build_topology(net);
    HorizonSpec hs;
    hs.start = "11:00";
    hs.end = "11:15";
    ScenarioHorizon base = load_profiles(default_profiles(net), net, hs);
    BuildOptions bo;
    bo.weights = {1.0, 0.0, 0.0};
    bo.cone = cone;
    const int L = net.num_lines();
    BindingPoint out;
    for (double scale = 1.0; scale < 30.0; scale *= 1.01) {
        RadialNetwork scaled = net;
        for (IbdgSpec& g : scaled.ibdgs) {
            g.p_max *= scale;
            g.q_min *= scale;
            g.q_max *= scale;
            g.s_max *= scale;
        }
        ScenarioHorizon h = base;
        h.p_ava *= scale;
        OpfProgram m = build_maropf(scaled, topo, h, 0, bo);
        Solution s = solve_socp(m.program);
        if (!s.has_point()) {
            o.require(false, "solve at scale " + num(scale) + " " + to_string(s.status));
            return out;
        }
        Eigen::VectorXd fu = at_line(m, s.x, Quantity::FUp, L, 0);
        int line = 0;
        double ratio = 0.0;
        for (int l = 1; l <= L; ++l) {
            double r = fu(l - 1) / net.line(l).i_max;
            if (r > ratio) {
                ratio = r;
                line = l;
            }
        }
        if (ratio < 1.0 - 1e-6) continue;
        PhysicalPoint p = physical_point(m, s, scaled, topo, h, 0);
        o.require(p.state.converged, "ad-hoc iteration diverged");
        out.found = true;
        out.scale = scale;
        out.line = line;
        out.gap = (fu(line - 1) - p.state.f(line - 1)) / fu(line - 1);
        return out;
    }
    o.require(false, "no current limit binds");
    return out;
}

Outcome conservatism() {
    Outcome o;
    BindingPoint send = first_binding(ConeVariant::SendingEnd, o);
    if (!send.found) return o;
    o.require(send.gap >= -1e-7 && send.gap <= 0.10, "relative gap " + num(100 * send.gap, "%.3f") + "%");
    BindingPoint recv = first_binding(ConeVariant::ReceivingEnd, o);
    o.note("PV scale " + num(send.scale) + ", binding line " + std::to_string(send.line) + ", gap " +
           num(100 * send.gap, "%.3f") + "%; receiving-end cones: line " + std::to_string(recv.line) + ", gap " +
           num(100 * recv.gap, "%.3f") + "%");
    return o;
}

Outcome droop_formula() {
    Outcome o;
    auto g = testing::rng(8);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        double t = testing::uniform(g, 0.9, 1.1);
        t *= t;
        DroopParameters d{testing::uniform(g, 0, 5), testing::uniform(g, 0, 5), testing::uniform(g, 0.9, 1.1),
                          testing::uniform(g, 0.9, 1.1), testing::uniform(g, -0.5, 0.5)};
        ExactDroopCurve c = approx_to_exact(d, t);
        double V = testing::uniform(g, 0.9, 1.1), pa = testing::uniform(g, 0, 1);
        double sq = (V - std::sqrt(t)) * (V - std::sqrt(t));
        PowerPair e = eval_exact_droop(c, V, pa);
        // Both curves on the branch selected by the exact knee.
        int y = V > c.vref_p_star ? 1 : 0;
        PowerPair a{pa - y * d.alpha_p * (V * V - d.v0p), d.q_g0 - d.alpha_q * (V * V - d.v0q)};
        if ((y == 1) == (V * V > d.v0p)) a = eval_approx_droop(d, V * V, pa, y);
        worst = std::max(worst, std::abs(std::abs(a.q - e.q) - d.alpha_q * sq));
        worst = std::max(worst, std::abs(std::abs(a.p - e.p) - y * d.alpha_p * sq));
        PowerPair z = approximation_error(d, c, std::sqrt(t), pa);
        o.require(std::abs(z.p) <= 1e-12 && std::abs(z.q) <= 1e-12, "mismatch at the expansion point");
    }
    o.require(worst <= 1e-12, "worst deviation " + num(worst));
    o.note("1000 samples, worst deviation " + num(worst));
    return o;
}

Outcome oracle_equivalence() {
    Outcome o;
    auto g = testing::rng(2024);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        testing::OracleInstance in = testing::random_oracle_instance(g);
        auto topo = build_topology(in.net);
        OracleResult r = exact_droop_powerflow(in.net, topo, {in.curve}, in.p_ava,
                                               Eigen::VectorXd::Ones(in.net.num_buses()));
        Eigen::VectorXd pn = in.net.load_p(), qn = in.net.load_q();
        pn(in.bus - 1) -= r.injections[0].p;
        qn(in.bus - 1) -= r.injections[0].q;
        PowerFlowState b = brute_force_small(in.net, pn, qn, network_shunts(in.net));
        worst = std::max({worst, (r.state.v - b.v).cwiseAbs().maxCoeff(), (r.state.f - b.f).cwiseAbs().maxCoeff()});
    }
    o.require(worst <= 1e-8, "brute force deviation " + num(worst));

    testing::DroopChain dc;
    auto topo = build_topology(dc.net);
    OracleOptions opt;
    opt.tol = 1e-12;
    OracleResult r = exact_droop_powerflow(dc.net, topo, dc.curves, dc.p_ava, Eigen::VectorXd::Ones(5), opt);
    testing::PolarResult n = testing::newton_polar(dc.net, [&](int b, double V) { return dc.injection(b, V); });
    o.require(n.converged, "Newton solve");
    double newton = 0.0;
    for (int b = 0; b < 5; ++b)
        newton = std::max(newton, std::abs(std::abs(n.V[static_cast<std::size_t>(b)]) - std::sqrt(r.state.v(b))));
    o.require(newton <= 1e-6, "Newton deviation " + num(newton));
    o.note("brute force " + num(worst) + ", Newton " + num(newton));
    return o;
}

Outcome misocp_correctness() {
    Outcome o;
    RadialNetwork net = testing::chain(4, 0.03, 0.05);
    for (int b = 1; b < 4; ++b) {
        net.buses[static_cast<std::size_t>(b)].load_p = 0.05;
        net.buses[static_cast<std::size_t>(b)].load_q = 0.02;
        net.buses[static_cast<std::size_t>(b)].v_max = 1.05 * 1.05;
    }
    net.ibdgs.push_back(testing::pv("a", 3, 1.0));
    net.ibdgs.push_back(testing::pv("b", 2, 0.6));
    auto topo = build_topology(net);
    const double avail[4][2] = {{0.5, 0.3}, {1.0, 0.6}, {0.8, 0.5}, {0.2, 0.1}};
    for (int steps : {2, 4}) {
        ScenarioHorizon h;
        h.step_minutes = 60;
        h.load_mult = Eigen::MatrixXd::Ones(steps, 4);
        h.p_ava.resize(steps, 2);
        for (int t = 0; t < steps; ++t) {
            h.labels.push_back(std::to_string(9 + t) + ":00");
            h.p_ava(t, 0) = avail[t][0];
            h.p_ava(t, 1) = avail[t][1];
        }
        for (double eps : {0.5, 1.0}) {
            OpfProgram opf = build_droop_design(net, topo, h, tune_droop_slopes(net, topo, eps), BuildOptions{});
            const std::string tag = std::to_string(opf.program.num_binaries()) + " binaries eps " + num(eps);
            double ref = testing::enumerate_binaries(opf.program);
            Solution s = solve_misocp(opf.program);
            o.require(s.status == SolveStatus::Optimal, tag + ": " + to_string(s.status));
            o.require(std::abs(s.objective - ref) <= 1e-6 * std::max(1.0, std::abs(ref)),
                      tag + ": objective " + num(s.objective, "%.9g") + " vs " + num(ref, "%.9g"));
            for (std::size_t k = 1; k < s.bb.bound_trace.size(); ++k)
                o.require(s.bb.bound_trace[k] >= s.bb.bound_trace[k - 1], tag + ": bound decreases");
        }
    }
    o.note("2 and 4 steps, 2 slope designs each");
    return o;
}

void check_refinement(Outcome& o, const RunReport& r, const std::string& name) {
    if (!r.refinement) {
        o.require(false, name + ": no refinement trace");
        return;
    }
    const RefinementTrace& tr = *r.refinement;
    o.require(!tr.steps.empty() && tr.steps.size() <= 10, name + ": " + std::to_string(tr.steps.size()) + " iterations");
    double last = kInf;
    for (const RefinementStep& s : tr.steps) {
        if (!s.accepted) continue;
        o.require(s.objective <= last + 1e-8, name + ": accepted objective rises at h=" + std::to_string(s.h));
        last = s.objective;
    }
    o.require(within_limits(r.security), name + ": incumbent violates limits");
}

Outcome refinement() {
    Outcome o;
    PipelineOptions a = design_options("optimize", "ieee34", 50);
    a.refine = true;
    PipelineOutcome r34 = quiet(a);
    o.require(r34.exit_code == exit_codes::kOk, "34-bus exit " + std::to_string(r34.exit_code));
    if (r34.report) check_refinement(o, *r34.report, "ieee34");

    // Five-bus design with non-empty activation sets.
    Scenario s;
    s.network = testing::chain(5, 0.02, 0.04);
    for (int b = 1; b < 5; ++b) {
        s.network.buses[static_cast<std::size_t>(b)].load_p = 0.2;
        s.network.buses[static_cast<std::size_t>(b)].load_q = 0.08;
        s.network.buses[static_cast<std::size_t>(b)].v_max = 1.05 * 1.05;
    }
    s.network.buses[2].shunt_g = 0.01;
    s.network.ibdgs.push_back(testing::pv("a", 4, 0.8));
    s.network.ibdgs.push_back(testing::pv("b", 2, 0.4));
    s.topo = build_topology(s.network);
    s.horizon.labels = {"09:00", "12:00", "15:00"};
    s.horizon.load_mult = Eigen::MatrixXd::Ones(3, 5);
    s.horizon.p_ava.resize(3, 2);
    s.horizon.p_ava << 0.06, 0.03, 0.24, 0.12, 0.15, 0.09;
    s.epsilon = 0.5;
    s.slopes = tune_droop_slopes(s.network, s.topo, s.epsilon);
    OpfProgram opf = build_droop_design(s.network, s.topo, s.horizon, s.slopes, BuildOptions{});
    RefineResult rr = refine_loop(opf, s.network, s.topo);
    RunReport small;
    small.refinement = rr.trace;
    bool nonempty = false;
    for (const RefinementStep& st : rr.trace.steps) nonempty = nonempty || !st.computed.empty();
    o.require(nonempty, "chain5: activation sets empty");
    if (rr.best.has_point()) {
        std::vector<DroopRecord> recs = droop_records(s.network, extract_droop(rr.program, s.network, rr.best.x));
        small.security = validate_droop(s, recs).security;
    }
    check_refinement(o, small, "chain5");

    auto t0 = std::chrono::steady_clock::now();
    fs::path dir = fs::temp_directory_path() / "maropf_acceptance_85";
    fs::remove_all(dir);
    PipelineOptions b = design_options("optimize", "ieee85", 200);
    b.refine = true;
    b.out = dir;
    PipelineOutcome r85 = quiet(b);
    o.require(r85.exit_code == exit_codes::kOk, "85-bus optimize exit " + std::to_string(r85.exit_code));
    if (r85.report) check_refinement(o, *r85.report, "ieee85");
    PipelineOptions sim = design_options("simulate", "ieee85", 200);
    sim.droop = dir / "droop.json";
    PipelineOutcome s85 = quiet(sim);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(s85.exit_code == exit_codes::kOk, "85-bus simulate exit " + std::to_string(s85.exit_code));
    o.require(secs <= 900.0, "85-bus took " + num(secs) + " s");
    if (s85.report) {
        o.require(within_limits(s85.report->security), "85-bus limits");
        o.note("85-bus max V " + num(s85.report->security.worst_v_hi, "%.4f") + ", min V " +
               num(s85.report->security.worst_v_lo, "%.4f") + ", " + num(secs, "%.0f") + " s");
    }
    o.note("34-bus " + std::to_string(r34.report && r34.report->refinement ? r34.report->refinement->steps.size() : 0) +
           " iterations, chain5 " + std::to_string(rr.trace.steps.size()) + " iterations");
    fs::remove_all(dir);
    return o;
}

struct Criterion {
    int id;
    const char* name;
    double budget;  // seconds, 0 when none
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const Criterion all[] = {
        {1, "conditions sweep", 10.0, conditions_sweep},
        {2, "condition break", 0.0, condition_break},
        {3, "flow-bound properties", 120.0, flow_bound_properties},
        {4, "end-to-end droop design", 300.0, end_to_end},
        {5, "R-OPF inexactness", 0.0, ropf_inexactness},
        {6, "affine voltage identity", 0.0, affine_identity},
        {7, "current conservatism", 0.0, conservatism},
        {8, "droop approximation formula", 0.0, droop_formula},
        {9, "oracle equivalence", 0.0, oracle_equivalence},
        {10, "MISOCP correctness", 0.0, misocp_correctness},
        {11, "refinement and 85-bus run", 0.0, refinement},
    };
    int failed = 0;
    for (const Criterion& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget > 0.0) o.require(secs <= c.budget, "over the " + num(c.budget) + " s budget");
        if (!o.pass) ++failed;
        std::printf("%s criterion %2d %-28s %7.1f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
