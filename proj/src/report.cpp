#include "maropf/report.hpp"

#include "maropf/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

namespace maropf {

using nlohmann::json;

bool operator==(const ObjectiveWeights& a, const ObjectiveWeights& b) {
    return std::tie(a.w_pc, a.w_pl, a.w_v) == std::tie(b.w_pc, b.w_pl, b.w_v);
}
bool operator==(const ObjectiveBreakdown& a, const ObjectiveBreakdown& b) {
    return std::tie(a.f_obj, a.f_pc, a.f_pl, a.f_v) == std::tie(b.f_obj, b.f_pc, b.f_pl, b.f_v);
}
bool operator==(const DroopParameters& a, const DroopParameters& b) {
    return std::tie(a.alpha_p, a.alpha_q, a.v0p, a.v0q, a.q_g0) == std::tie(b.alpha_p, b.alpha_q, b.v0p, b.v0q, b.q_g0);
}
bool operator==(const ExactDroopCurve& a, const ExactDroopCurve& b) {
    return std::tie(a.alpha_p_star, a.alpha_q_star, a.vref_p_star, a.vref_q_star, a.q_g0, a.taylor_v0) ==
           std::tie(b.alpha_p_star, b.alpha_q_star, b.vref_p_star, b.vref_q_star, b.q_g0, b.taylor_v0);
}
bool operator==(const Violation& a, const Violation& b) {
    return std::tie(a.quantity, a.index, a.step, a.amount) == std::tie(b.quantity, b.index, b.step, b.amount);
}
bool operator==(const SecurityVerdict& a, const SecurityVerdict& b) {
    return std::tie(a.worst_v_hi, a.worst_v_lo, a.worst_current_ratio) ==
               std::tie(b.worst_v_hi, b.worst_v_lo, b.worst_current_ratio) &&
           a.violations == b.violations;
}
bool operator==(const ConditionReport& a, const ConditionReport& b) {
    return std::tie(a.norm_8a, a.min_D, a.norm_E, a.eta, a.pass_8a, a.pass_8b, a.pass_8c, a.pass_8d, a.overall,
                    a.det_sign, a.log_abs_det) == std::tie(b.norm_8a, b.min_D, b.norm_E, b.eta, b.pass_8a, b.pass_8b,
                                                           b.pass_8c, b.pass_8d, b.overall, b.det_sign, b.log_abs_det);
}
bool operator==(const RefinementStep& a, const RefinementStep& b) {
    return std::tie(a.h, a.status, a.objective, a.applied, a.computed, a.consistent, a.accepted, a.nodes) ==
           std::tie(b.h, b.status, b.objective, b.applied, b.computed, b.consistent, b.accepted, b.nodes);
}
bool operator==(const RefinementTrace& a, const RefinementTrace& b) {
    return a.steps == b.steps && a.converged == b.converged && a.capped == b.capped;
}

namespace {

// JSON has no infinities; they travel as strings.
json num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

double num_of(const json& j, const char* key) {
    const json& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        std::string s = v.get<std::string>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        if (s == "nan") return std::nan("");
    }
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': expected a number");
}

SolveStatus status_of(const std::string& s) {
    for (SolveStatus st : {SolveStatus::Optimal, SolveStatus::Infeasible, SolveStatus::Unbounded, SolveStatus::IterLimit,
                           SolveStatus::NumericalBreakdown, SolveStatus::GapLimit, SolveStatus::NodeLimit})
        if (to_string(st) == s) return st;
    throw Error(ErrorCode::ParseError, "unknown solver status '" + s + "'");
}

json pairs_json(const std::set<std::pair<int, int>>& s) {
    json a = json::array();
    for (const auto& [l, t] : s) a.push_back({l, t});
    return a;
}

std::set<std::pair<int, int>> pairs_of(const json& a) {
    std::set<std::pair<int, int>> s;
    for (const json& p : a) s.insert({p.at(0).get<int>(), p.at(1).get<int>()});
    return s;
}

json violation_json(const Violation& v) {
    return {{"quantity", v.quantity}, {"index", v.index}, {"step", v.step}, {"amount", num(v.amount)}};
}

Violation violation_of(const json& j) {
    Violation v;
    v.quantity = j.at("quantity").get<std::string>();
    v.index = j.at("index").get<int>();
    v.step = j.at("step").get<int>();
    v.amount = num_of(j, "amount");
    return v;
}

json droop_json(const DroopRecord& d) {
    return {{"name", d.name},
            {"bus", d.bus},
            {"dispatchable", d.dispatchable},
            {"taylor_v0", num(d.exact.taylor_v0)},
            {"squared",
             {{"alpha_p", num(d.approx.alpha_p)},
              {"alpha_q", num(d.approx.alpha_q)},
              {"v0p", num(d.approx.v0p)},
              {"v0q", num(d.approx.v0q)},
              {"q_g0", num(d.approx.q_g0)}}},
            {"exact",
             {{"alpha_p_star", num(d.exact.alpha_p_star)},
              {"alpha_q_star", num(d.exact.alpha_q_star)},
              {"vref_p_star", num(d.exact.vref_p_star)},
              {"vref_q_star", num(d.exact.vref_q_star)},
              {"q_g0", num(d.exact.q_g0)}}}};
}

DroopRecord droop_of(const json& j) {
    DroopRecord d;
    d.name = j.at("name").get<std::string>();
    d.bus = j.at("bus").get<int>();
    d.dispatchable = j.at("dispatchable").get<bool>();
    const json& a = j.at("squared");
    d.approx.alpha_p = num_of(a, "alpha_p");
    d.approx.alpha_q = num_of(a, "alpha_q");
    d.approx.v0p = num_of(a, "v0p");
    d.approx.v0q = num_of(a, "v0q");
    d.approx.q_g0 = num_of(a, "q_g0");
    const json& e = j.at("exact");
    d.exact.alpha_p_star = num_of(e, "alpha_p_star");
    d.exact.alpha_q_star = num_of(e, "alpha_q_star");
    d.exact.vref_p_star = num_of(e, "vref_p_star");
    d.exact.vref_q_star = num_of(e, "vref_q_star");
    d.exact.q_g0 = num_of(e, "q_g0");
    d.exact.taylor_v0 = num_of(j, "taylor_v0");
    return d;
}

json report_json(const RunReport& r) {
    json j;
    j["schema_version"] = r.schema_version;
    j["command"] = r.command;
    const ScenarioMeta& m = r.scenario;
    j["scenario"] = {{"case", m.case_name},
                     {"profiles", m.profiles},
                     {"window_start", m.window_start},
                     {"window_end", m.window_end},
                     {"stride", m.stride},
                     {"step_minutes", m.step_minutes},
                     {"labels", m.labels},
                     {"mode", m.mode},
                     {"weights", {{"w_pc", num(m.weights.w_pc)}, {"w_pl", num(m.weights.w_pl)}, {"w_v", num(m.weights.w_v)}}},
                     {"epsilon", num(m.epsilon)},
                     {"refine", m.refine}};
    j["objective"] = {{"F_obj", num(r.objective.f_obj)},
                      {"F_pc", num(r.objective.f_pc)},
                      {"F_pl", num(r.objective.f_pl)},
                      {"F_v", num(r.objective.f_v)}};
    j["droop"] = json::array();
    for (const DroopRecord& d : r.droop) j["droop"].push_back(droop_json(d));
    j["steps"] = json::array();
    for (const StepVerdict& s : r.steps) {
        json v = json::array();
        for (const Violation& x : s.violations) v.push_back(violation_json(x));
        j["steps"].push_back({{"label", s.label},
                              {"v_hi", num(s.v_hi)},
                              {"v_lo", num(s.v_lo)},
                              {"current_ratio", num(s.current_ratio)},
                              {"oracle_iterations", s.oracle_iterations},
                              {"violations", v}});
    }
    json viol = json::array();
    for (const Violation& x : r.security.violations) viol.push_back(violation_json(x));
    j["security"] = {{"worst_v_hi", num(r.security.worst_v_hi)},
                     {"worst_v_lo", num(r.security.worst_v_lo)},
                     {"worst_current_ratio", num(r.security.worst_current_ratio)},
                     {"clean", r.security.clean()},
                     {"violations", viol}};
    if (r.conditions) {
        const ConditionReport& c = *r.conditions;
        j["conditions"] = {{"norm_8a", num(c.norm_8a)},   {"min_D", num(c.min_D)},     {"norm_E", num(c.norm_E)},
                           {"eta", c.eta ? num(*c.eta) : json(nullptr)},
                           {"pass_8a", c.pass_8a},         {"pass_8b", c.pass_8b},       {"pass_8c", c.pass_8c},
                           {"pass_8d", c.pass_8d},         {"overall", c.overall},       {"det_sign", c.det_sign},
                           {"log_abs_det", num(c.log_abs_det)}};
    }
    if (r.solver) {
        const SolverStats& s = *r.solver;
        j["solver"] = {{"status", s.status},         {"objective", num(s.objective)}, {"best_bound", num(s.best_bound)},
                       {"gap", num(s.gap)},          {"nodes", s.nodes},              {"socp_solves", s.socp_solves},
                       {"iterations", s.iterations}, {"seconds", num(s.seconds)},     {"variables", s.variables},
                       {"rows", s.rows},             {"cones", s.cones},              {"binaries", s.binaries}};
    }
    if (r.refinement) {
        json steps = json::array();
        for (const RefinementStep& s : r.refinement->steps)
            steps.push_back({{"h", s.h},
                             {"status", to_string(s.status)},
                             {"objective", num(s.objective)},
                             {"applied", {{"Wp", pairs_json(s.applied.Wp)}, {"Wq", pairs_json(s.applied.Wq)}}},
                             {"computed", {{"Wp", pairs_json(s.computed.Wp)}, {"Wq", pairs_json(s.computed.Wq)}}},
                             {"consistent", s.consistent},
                             {"accepted", s.accepted},
                             {"nodes", s.nodes}});
        j["refinement"] = {{"steps", steps}, {"converged", r.refinement->converged}, {"capped", r.refinement->capped}};
    }
    return j;
}

void check_version(const json& j) {
    int v = j.at("schema_version").get<int>();
    if (v != kReportSchemaVersion)
        throw Error(ErrorCode::SchemaVersionUnsupported, "report schema version " + std::to_string(v));
}

RunReport report_of(const json& j) {
    check_version(j);
    RunReport r;
    r.schema_version = j.at("schema_version").get<int>();
    r.command = j.at("command").get<std::string>();
    const json& m = j.at("scenario");
    r.scenario.case_name = m.at("case").get<std::string>();
    r.scenario.profiles = m.at("profiles").get<std::string>();
    r.scenario.window_start = m.at("window_start").get<std::string>();
    r.scenario.window_end = m.at("window_end").get<std::string>();
    r.scenario.stride = m.at("stride").get<int>();
    r.scenario.step_minutes = m.at("step_minutes").get<int>();
    r.scenario.labels = m.at("labels").get<std::vector<std::string>>();
    r.scenario.mode = m.at("mode").get<std::string>();
    const json& w = m.at("weights");
    r.scenario.weights = {num_of(w, "w_pc"), num_of(w, "w_pl"), num_of(w, "w_v")};
    r.scenario.epsilon = num_of(m, "epsilon");
    r.scenario.refine = m.at("refine").get<bool>();
    const json& o = j.at("objective");
    r.objective = {num_of(o, "F_obj"), num_of(o, "F_pc"), num_of(o, "F_pl"), num_of(o, "F_v")};
    for (const json& d : j.at("droop")) r.droop.push_back(droop_of(d));
    for (const json& s : j.at("steps")) {
        StepVerdict v;
        v.label = s.at("label").get<std::string>();
        v.v_hi = num_of(s, "v_hi");
        v.v_lo = num_of(s, "v_lo");
        v.current_ratio = num_of(s, "current_ratio");
        v.oracle_iterations = s.at("oracle_iterations").get<int>();
        for (const json& x : s.at("violations")) v.violations.push_back(violation_of(x));
        r.steps.push_back(std::move(v));
    }
    const json& sec = j.at("security");
    r.security.worst_v_hi = num_of(sec, "worst_v_hi");
    r.security.worst_v_lo = num_of(sec, "worst_v_lo");
    r.security.worst_current_ratio = num_of(sec, "worst_current_ratio");
    for (const json& x : sec.at("violations")) r.security.violations.push_back(violation_of(x));
    if (j.contains("conditions")) {
        const json& c = j.at("conditions");
        ConditionReport rep;
        rep.norm_8a = num_of(c, "norm_8a");
        rep.min_D = num_of(c, "min_D");
        rep.norm_E = num_of(c, "norm_E");
        if (!c.at("eta").is_null()) rep.eta = num_of(c, "eta");
        rep.pass_8a = c.at("pass_8a").get<bool>();
        rep.pass_8b = c.at("pass_8b").get<bool>();
        rep.pass_8c = c.at("pass_8c").get<bool>();
        rep.pass_8d = c.at("pass_8d").get<bool>();
        rep.overall = c.at("overall").get<bool>();
        rep.det_sign = c.at("det_sign").get<int>();
        rep.log_abs_det = num_of(c, "log_abs_det");
        r.conditions = rep;
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        SolverStats st;
        st.status = s.at("status").get<std::string>();
        st.objective = num_of(s, "objective");
        st.best_bound = num_of(s, "best_bound");
        st.gap = num_of(s, "gap");
        st.nodes = s.at("nodes").get<long>();
        st.socp_solves = s.at("socp_solves").get<long>();
        st.iterations = s.at("iterations").get<int>();
        st.seconds = num_of(s, "seconds");
        st.variables = s.at("variables").get<int>();
        st.rows = s.at("rows").get<int>();
        st.cones = s.at("cones").get<int>();
        st.binaries = s.at("binaries").get<int>();
        r.solver = st;
    }
    if (j.contains("refinement")) {
        RefinementTrace t;
        const json& rt = j.at("refinement");
        for (const json& s : rt.at("steps")) {
            RefinementStep st;
            st.h = s.at("h").get<int>();
            st.status = status_of(s.at("status").get<std::string>());
            st.objective = num_of(s, "objective");
            st.applied.Wp = pairs_of(s.at("applied").at("Wp"));
            st.applied.Wq = pairs_of(s.at("applied").at("Wq"));
            st.computed.Wp = pairs_of(s.at("computed").at("Wp"));
            st.computed.Wq = pairs_of(s.at("computed").at("Wq"));
            st.consistent = s.at("consistent").get<bool>();
            st.accepted = s.at("accepted").get<bool>();
            st.nodes = s.at("nodes").get<long>();
            t.steps.push_back(std::move(st));
        }
        t.converged = rt.at("converged").get<bool>();
        t.capped = rt.at("capped").get<bool>();
        r.refinement = std::move(t);
    }
    return r;
}

json parse_text(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

template <class F>
auto guarded(F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

}  // namespace

std::string to_json_text(const RunReport& report) { return report_json(report).dump(2) + "\n"; }

RunReport parse_report(const std::string& text) {
    json j = parse_text(text);
    return guarded([&] { return report_of(j); });
}

std::string to_json_text(const CompareReport& report) {
    json j = {{"schema_version", report.schema_version},
              {"command", "compare"},
              {"maropf", report_json(report.maropf)},
              {"ropf", report_json(report.ropf)}};
    return j.dump(2) + "\n";
}

CompareReport parse_compare(const std::string& text) {
    json j = parse_text(text);
    return guarded([&] {
        check_version(j);
        CompareReport c;
        c.maropf = report_of(j.at("maropf"));
        c.ropf = report_of(j.at("ropf"));
        return c;
    });
}

std::string droop_file_text(const std::string& case_name, const std::vector<DroopRecord>& records) {
    json j = {{"schema_version", kReportSchemaVersion}, {"kind", "droop_parameters"}, {"case", case_name}};
    j["units"] = json::array();
    for (const DroopRecord& d : records) j["units"].push_back(droop_json(d));
    return j.dump(2) + "\n";
}

std::vector<DroopRecord> parse_droop_file(const std::string& text) {
    json j = parse_text(text);
    return guarded([&] {
        check_version(j);
        if (j.contains("kind") && j.at("kind") != "droop_parameters")
            throw Error(ErrorCode::ParseError, "not a droop parameter file");
        std::vector<DroopRecord> out;
        for (const json& d : j.at("units")) out.push_back(droop_of(d));
        return out;
    });
}

std::string render_summary(const RunReport& r) {
    std::ostringstream o;
    const ScenarioMeta& m = r.scenario;
    o << r.command << " " << m.case_name << " " << m.window_start << "-" << m.window_end << " (" << m.labels.size()
      << " steps, mode " << m.mode << (m.refine ? ", refined" : "") << ")\n";
    o << "weights         " << fmt("%.3g", m.weights.w_pc) << "," << fmt("%.3g", m.weights.w_pl) << ","
      << fmt("%.3g", m.weights.w_v) << "\n";
    if (r.solver) {
        o << "F_obj           " << fmt("%.6f", r.objective.f_obj) << "\n";
        o << "F_pc (p.u.)     " << fmt("%.6f", r.objective.f_pc) << "\n";
        o << "F_pl (p.u.)     " << fmt("%.6f", r.objective.f_pl) << "\n";
        o << "F_v             " << fmt("%.6f", r.objective.f_v) << "\n";
    }
    if (!r.steps.empty()) {
        o << "max voltage     " << fmt("%.4f", r.security.worst_v_hi) << " p.u.\n";
        o << "min voltage     " << fmt("%.4f", r.security.worst_v_lo) << " p.u.\n";
        o << "max f/I_max     " << fmt("%.4f", r.security.worst_current_ratio) << "\n";
        o << "violations      " << r.security.violations.size() << "\n";
    }
    if (r.solver) {
        o << "solver          " << r.solver->status << ", " << r.solver->nodes << " nodes, gap "
          << fmt("%.3g", r.solver->gap) << ", " << fmt("%.1f", r.solver->seconds) << " s\n";
    }
    if (r.conditions) {
        const ConditionReport& c = *r.conditions;
        o << "conditions      8a " << (c.pass_8a ? "pass" : "FAIL") << ", 8b " << (c.pass_8b ? "pass" : "FAIL")
          << ", 8c " << (c.pass_8c ? "pass" : "FAIL") << ", 8d " << (c.pass_8d ? "pass" : "FAIL") << "\n";
    }
    if (r.refinement) {
        for (const RefinementStep& s : r.refinement->steps)
            o << "refine h=" << s.h << " obj=" << fmt("%.8f", s.objective) << " |Wp|=" << s.applied.Wp.size()
              << " |Wq|=" << s.applied.Wq.size() << (s.accepted ? " accepted" : s.consistent ? " kept" : " discarded")
              << "\n";
    }
    for (const Violation& v : r.security.violations)
        o << "  " << v.quantity << " at " << v.index << ", step " << v.step << ": " << fmt("%.4g", v.amount) << "\n";
    return o.str();
}

std::string render_comparison(const CompareReport& c) {
    std::ostringstream o;
    auto row = [&](const char* name, double a, double b, const char* f) {
        o << name << "  " << fmt(f, a) << "  " << fmt(f, b) << "\n";
    };
    o << "                 maropf      ropf\n";
    row("F_obj          ", c.maropf.objective.f_obj, c.ropf.objective.f_obj, "%9.5f");
    row("F_pc (p.u.)    ", c.maropf.objective.f_pc, c.ropf.objective.f_pc, "%9.5f");
    row("F_pl (p.u.)    ", c.maropf.objective.f_pl, c.ropf.objective.f_pl, "%9.5f");
    row("F_v            ", c.maropf.objective.f_v, c.ropf.objective.f_v, "%9.5f");
    row("max V (p.u.)   ", c.maropf.security.worst_v_hi, c.ropf.security.worst_v_hi, "%9.4f");
    row("min V (p.u.)   ", c.maropf.security.worst_v_lo, c.ropf.security.worst_v_lo, "%9.4f");
    row("max f/I_max    ", c.maropf.security.worst_current_ratio, c.ropf.security.worst_current_ratio, "%9.4f");
    o << "violations       " << fmt("%9.0f", static_cast<double>(c.maropf.security.violations.size())) << "  "
      << fmt("%9.0f", static_cast<double>(c.ropf.security.violations.size())) << "\n";
    if (c.maropf.solver && c.ropf.solver)
        row("time (s)       ", c.maropf.solver->seconds, c.ropf.solver->seconds, "%9.1f");
    return o.str();
}

std::string voltage_table(const RadialNetwork& network, const std::vector<std::string>& labels,
                          const std::vector<PowerFlowState>& states) {
    std::ostringstream o;
    o << "step,label,bus,v_pu\n";
    for (std::size_t t = 0; t < states.size(); ++t)
        for (int b = 0; b < network.num_buses(); ++b)
            o << t << "," << labels[t] << "," << b << "," << fmt("%.9f", std::sqrt(states[t].v(b))) << "\n";
    return o.str();
}

std::string current_table(const RadialNetwork& network, const std::vector<std::string>& labels,
                          const std::vector<PowerFlowState>& states) {
    std::ostringstream o;
    o << "step,label,line,f,i_max,ratio\n";
    for (std::size_t t = 0; t < states.size(); ++t)
        for (int l = 1; l <= network.num_lines(); ++l) {
            double f = states[t].f(l - 1), im = network.line(l).i_max;
            o << t << "," << labels[t] << "," << l << "," << fmt("%.9g", f) << "," << fmt("%.9g", im) << ","
              << fmt("%.6f", f / im) << "\n";
        }
    return o.str();
}

std::string injection_table(const RadialNetwork& network, const std::vector<std::string>& labels,
                            const std::vector<std::vector<PowerPair>>& injections, const Eigen::MatrixXd& p_ava) {
    std::ostringstream o;
    o << "step,label,unit,bus,p_ava,p,q\n";
    for (std::size_t t = 0; t < injections.size(); ++t)
        for (std::size_t g = 0; g < injections[t].size(); ++g)
            o << t << "," << labels[t] << "," << network.ibdgs[g].name << "," << network.ibdgs[g].bus << ","
              << fmt("%.9g", p_ava(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(g))) << ","
              << fmt("%.9g", injections[t][g].p) << "," << fmt("%.9g", injections[t][g].q) << "\n";
    return o.str();
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
    std::ostringstream o;
    o << "epsilon,det_sign,log_abs_det,min_D,norm_8a\n";
    for (const SweepRow& r : rows)
        o << fmt("%.6g", r.epsilon) << "," << r.det_sign << "," << fmt("%.9g", r.log_abs_det) << ","
          << fmt("%.9g", r.min_D) << "," << fmt("%.9g", r.norm_8a) << "\n";
    return o.str();
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace maropf
