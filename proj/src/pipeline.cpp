#include "maropf/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

namespace maropf {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::SingularSystem:
        case ErrorCode::ZeroPathImpedance:
        case ErrorCode::NoBreakFound:
            return exit_codes::kConditionFail;
        case ErrorCode::Diverged:
        case ErrorCode::NonPositiveVoltage:
        case ErrorCode::NotConverged:
        case ErrorCode::UnconvergedState:
        case ErrorCode::NoRealSolution:
            // The parameters could not be validated as secure.
            return exit_codes::kSecurityViolation;
        case ErrorCode::InconsistentActivation:
        case ErrorCode::InfeasibleBigM:
        case ErrorCode::UnknownPair:
        case ErrorCode::InvalidProgram:
        case ErrorCode::IterLimit:
        case ErrorCode::NumericalBreakdown:
        case ErrorCode::IterationCap:
            return exit_codes::kSolverFailure;
        default:
            return exit_codes::kIo;
    }
}

Formulation parse_mode(const std::string& mode) {
    if (mode == "maropf") return Formulation::Maropf;
    if (mode == "ropf") return Formulation::Ropf;
    throw Error(ErrorCode::ParseError, "mode '" + mode + "' is not maropf or ropf");
}

Scenario load_scenario(const PipelineOptions& o) {
    Scenario s;
    s.network = load_case(o.case_name);
    s.topo = build_topology(s.network);
    s.spec = window_preset(o.window);
    if (o.stride < 1) throw Error(ErrorCode::ParseError, "stride must be >= 1");
    s.spec.stride = o.stride;
    s.profiles = o.profiles.empty() ? default_profiles(s.network).string() : o.profiles;
    s.horizon = load_profiles(s.profiles, s.network, s.spec);
    s.epsilon = o.epsilon.value_or(s.network.design_epsilon);
    s.slopes = tune_droop_slopes(s.network, s.topo, s.epsilon);
    return s;
}

ConditionReport scenario_conditions(const Scenario& s) {
    ConditionMatrices m = compute_condition_matrices(s.network, s.topo, effective_shunts(s.network, s.slopes),
                                                     nominal_envelope(s.network));
    return check_conditions(m);
}

std::vector<DroopRecord> droop_records(const RadialNetwork& net, const std::vector<DroopParameters>& params) {
    std::vector<DroopRecord> out;
    for (std::size_t g = 0; g < net.ibdgs.size(); ++g) {
        const IbdgSpec& u = net.ibdgs[g];
        DroopRecord r;
        r.name = u.name;
        r.bus = u.bus;
        r.dispatchable = u.dispatchable;
        r.approx = params.at(g);
        r.exact = approx_to_exact(r.approx, u.taylor_v0.value_or(net.bus(u.bus).v_max));
        out.push_back(r);
    }
    return out;
}

std::vector<DroopRecord> uncontrolled_records(const RadialNetwork& net) {
    std::vector<DroopParameters> params(net.ibdgs.size());
    for (std::size_t g = 0; g < net.ibdgs.size(); ++g) {
        const Bus& b = net.bus(net.ibdgs[g].bus);
        params[g].v0p = b.v_max;
        params[g].v0q = b.v_target;
    }
    return droop_records(net, params);
}

Validation validate_droop(const Scenario& s, const std::vector<DroopRecord>& records, const OracleOptions& options) {
    std::map<std::string, const DroopRecord*> by_name;
    for (const DroopRecord& r : records) by_name[r.name] = &r;
    std::vector<ExactDroopCurve> curves;
    for (const IbdgSpec& u : s.network.ibdgs) {
        auto it = by_name.find(u.name);
        if (it == by_name.end()) throw Error(ErrorCode::UnknownId, "no droop record for unit '" + u.name + "'");
        if (it->second->bus != u.bus)
            throw Error(ErrorCode::UnknownId, "droop record '" + u.name + "' names bus " +
                                                  std::to_string(it->second->bus));
        curves.push_back(it->second->exact);
    }
    Validation v;
    std::vector<PowerFlowState> states;
    for (int t = 0; t < s.horizon.size(); ++t) {
        OracleResult r = exact_droop_powerflow(s.network, s.topo, curves, s.horizon.p_ava.row(t).transpose(),
                                               s.horizon.load_mult.row(t).transpose(), options);
        SecurityVerdict one = verify_security({r.state}, s.network);
        StepVerdict sv;
        sv.label = s.horizon.labels[static_cast<std::size_t>(t)];
        sv.v_hi = one.worst_v_hi;
        sv.v_lo = one.worst_v_lo;
        sv.current_ratio = one.worst_current_ratio;
        sv.oracle_iterations = r.outer_iterations;
        for (Violation x : one.violations) {
            x.step = t;
            sv.violations.push_back(x);
        }
        v.steps.push_back(std::move(sv));
        states.push_back(r.state);
        v.results.push_back(std::move(r));
    }
    v.security = verify_security(states, s.network);
    return v;
}

DesignRun run_design(const Scenario& s, Formulation mode, const PipelineOptions& o, std::ostream* log) {
    o.weights.validate();
    BuildOptions bo;
    bo.mode = mode;
    bo.weights = o.weights;
    DesignRun d;
    auto t0 = std::chrono::steady_clock::now();
    d.base = build_droop_design(s.network, s.topo, s.horizon, s.slopes, bo);

    SolverConfig cfg;
    cfg.time_limit = o.time_limit;
    cfg.bb_node_limit = o.node_limit;
    cfg.bb_gap = o.gap;
    cfg.log = log;
    if (o.refine) {
        RefineConfig rc;
        rc.max_iters = o.refine_iters;
        rc.solver = cfg;
        d.result = refine_loop(d.base, s.network, s.topo, rc);
    } else {
        d.result = solve_once(d.base, cfg);
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const Solution& best = d.result.best;
    SolverStats& st = d.stats;
    st.status = to_string(best.status);
    st.objective = best.objective;
    st.best_bound = best.bb.best_bound;
    st.gap = std::isfinite(best.objective) && std::isfinite(best.bb.best_bound)
                 ? (best.objective - best.bb.best_bound) / std::max(1.0, std::abs(best.objective))
                 : kInf;
    for (const RefinementStep& step : d.result.trace.steps) st.nodes += step.nodes;
    st.socp_solves = best.bb.socp_solves;
    st.iterations = best.iterations;
    st.seconds = seconds;
    const ConicProgram& p = d.result.program.program;
    st.variables = p.num_variables();
    st.rows = p.num_rows();
    st.cones = p.num_cones();
    st.binaries = p.num_binaries();

    if (best.has_point()) {
        d.objective = objective_breakdown(d.result.program, best.x);
        // Records travel through the file format so simulate sees exactly these values.
        d.droop = parse_droop_file(
            droop_file_text(s.network.name, droop_records(s.network, extract_droop(d.result.program, s.network, best.x))));
    }
    return d;
}

namespace {

ScenarioMeta meta_of(const Scenario& s, const PipelineOptions& o, const std::string& mode) {
    ScenarioMeta m;
    m.case_name = s.network.name;
    m.profiles = s.profiles;
    m.window_start = s.spec.start;
    m.window_end = s.spec.end;
    m.stride = s.spec.stride;
    m.step_minutes = s.horizon.step_minutes;
    m.labels = s.horizon.labels;
    m.mode = mode;
    m.weights = o.weights;
    m.epsilon = s.epsilon;
    m.refine = o.refine;
    return m;
}

std::vector<PowerFlowState> states_of(const Validation& v) {
    std::vector<PowerFlowState> out;
    for (const OracleResult& r : v.results) out.push_back(r.state);
    return out;
}

void write_tables(const fs::path& dir, const Scenario& s, const Validation& v) {
    std::vector<PowerFlowState> st = states_of(v);
    std::vector<std::vector<PowerPair>> inj;
    for (const OracleResult& r : v.results) inj.push_back(r.injections);
    write_text(dir / "voltages.csv", voltage_table(s.network, s.horizon.labels, st));
    write_text(dir / "currents.csv", current_table(s.network, s.horizon.labels, st));
    write_text(dir / "injections.csv", injection_table(s.network, s.horizon.labels, inj, s.horizon.p_ava));
}

struct BranchOutcome {
    int code = exit_codes::kOk;
    RunReport report;
};

// Design, then oracle validation of the designed parameters.
BranchOutcome optimize_branch(const Scenario& s, const PipelineOptions& o, Formulation mode, const fs::path& dir,
                              std::ostream& err) {
    BranchOutcome b;
    RunReport& r = b.report;
    r.command = "optimize";
    r.scenario = meta_of(s, o, to_string(mode));
    ConditionReport cond = scenario_conditions(s);
    r.conditions = cond;
    if (mode == Formulation::Maropf && !cond.overall) {
        err << "a-priori conditions fail at the design slopes\n";
        b.code = exit_codes::kConditionFail;
        return b;
    }

    DesignRun d = run_design(s, mode, o, o.solver_log ? &err : nullptr);
    if (!o.dump_program.empty()) {
        std::ofstream f(o.dump_program);
        if (!f) throw Error(ErrorCode::Io, "cannot write " + o.dump_program.string());
        d.result.program.program.dump(f);
    }
    r.solver = d.stats;
    if (o.refine) r.refinement = d.result.trace;
    if (!d.result.best.has_point()) {
        err << "design solve failed: " << d.stats.status << "\n";
        b.code = exit_codes::kSolverFailure;
        return b;
    }
    r.objective = d.objective;
    r.droop = d.droop;
    Validation v = validate_droop(s, d.droop, o.oracle);
    r.steps = v.steps;
    r.security = v.security;
    if (!dir.empty()) {
        write_text(dir / "droop.json", droop_file_text(s.network.name, d.droop));
        if (o.tables) write_tables(dir, s, v);
    }
    b.code = v.security.clean() ? exit_codes::kOk : exit_codes::kSecurityViolation;
    return b;
}

int run_check(const PipelineOptions& o, PipelineOutcome& out, std::ostream& os) {
    Scenario s = load_scenario(o);
    RunReport r;
    r.command = "check";
    r.scenario = meta_of(s, o, o.mode);
    r.conditions = scenario_conditions(s);
    r.security.worst_v_hi = r.security.worst_v_lo = std::sqrt(s.network.v0);
    if (o.sweep) out.sweep = sweep_epsilon(s.network, s.topo, default_epsilon_grid(o.sweep_points));
    if (!o.out.empty()) {
        write_text(o.out / "report.json", to_json_text(r));
        if (o.sweep) write_text(o.out / "sweep.csv", sweep_table(out.sweep));
    }
    os << render_summary(r);
    if (o.sweep) os << sweep_table(out.sweep);
    int code = r.conditions->overall ? exit_codes::kOk : exit_codes::kConditionFail;
    out.report = std::move(r);
    return code;
}

int run_optimize(const PipelineOptions& o, PipelineOutcome& out, std::ostream& os, std::ostream& err) {
    Scenario s = load_scenario(o);
    BranchOutcome b = optimize_branch(s, o, parse_mode(o.mode), o.out, err);
    if (!o.out.empty()) write_text(o.out / "report.json", to_json_text(b.report));
    os << render_summary(b.report);
    out.report = std::move(b.report);
    return b.code;
}

int run_simulate(const PipelineOptions& o, PipelineOutcome& out, std::ostream& os) {
    if (o.droop.empty()) throw Error(ErrorCode::Io, "simulate needs a droop parameter file");
    Scenario s = load_scenario(o);
    std::vector<DroopRecord> records = parse_droop_file(read_text(o.droop));
    RunReport r;
    r.command = "simulate";
    r.scenario = meta_of(s, o, o.mode);
    r.droop = records;
    Validation v = validate_droop(s, records, o.oracle);
    r.steps = v.steps;
    r.security = v.security;
    if (!o.out.empty()) {
        write_text(o.out / "report.json", to_json_text(r));
        if (o.tables) write_tables(o.out, s, v);
    }
    os << render_summary(r);
    out.report = std::move(r);
    return v.security.clean() ? exit_codes::kOk : exit_codes::kSecurityViolation;
}

int run_compare(const PipelineOptions& o, PipelineOutcome& out, std::ostream& os, std::ostream& err) {
    Scenario s = load_scenario(o);
    fs::path dm = o.out.empty() ? fs::path() : o.out / "maropf";
    fs::path dr = o.out.empty() ? fs::path() : o.out / "ropf";
    BranchOutcome a = optimize_branch(s, o, Formulation::Maropf, dm, err);
    BranchOutcome b = optimize_branch(s, o, Formulation::Ropf, dr, err);
    CompareReport c;
    c.maropf = std::move(a.report);
    c.ropf = std::move(b.report);
    if (!o.out.empty()) {
        write_text(dm / "report.json", to_json_text(c.maropf));
        write_text(dr / "report.json", to_json_text(c.ropf));
        write_text(o.out / "compare.json", to_json_text(c));
    }
    os << render_comparison(c);
    if (!c.ropf.security.clean()) os << "ropf branch: " << c.ropf.security.violations.size() << " violations\n";
    out.comparison = std::move(c);
    if (a.code == exit_codes::kConditionFail) return a.code;
    if (a.code == exit_codes::kSolverFailure || b.code == exit_codes::kSolverFailure) return exit_codes::kSolverFailure;
    // Only the maropf branch is expected to be secure.
    return a.code;
}

int run_report(const PipelineOptions& o, PipelineOutcome& out, std::ostream& os) {
    if (o.report.empty()) throw Error(ErrorCode::Io, "report needs a stored report file");
    std::string text = read_text(o.report);
    if (text.find("\"command\": \"compare\"") != std::string::npos) {
        CompareReport c = parse_compare(text);
        os << render_comparison(c);
        out.comparison = std::move(c);
    } else {
        RunReport r = parse_report(text);
        os << render_summary(r);
        out.report = std::move(r);
    }
    return exit_codes::kOk;
}

}  // namespace

PipelineOutcome run_pipeline(const PipelineOptions& o, std::ostream& os, std::ostream& err) {
    PipelineOutcome out;
    try {
        if (o.command == "check") out.exit_code = run_check(o, out, os);
        else if (o.command == "optimize") out.exit_code = run_optimize(o, out, os, err);
        else if (o.command == "simulate") out.exit_code = run_simulate(o, out, os);
        else if (o.command == "compare") out.exit_code = run_compare(o, out, os, err);
        else if (o.command == "report") out.exit_code = run_report(o, out, os);
        else throw Error(ErrorCode::ParseError, "unknown command '" + o.command + "'");
    } catch (const Error& e) {
        out.error = e.what();
        out.exit_code = exit_code_for(e.code());
        err << e.what() << "\n";
    }
    return out;
}

}  // namespace maropf
