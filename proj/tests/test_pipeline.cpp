#include "maropf/pipeline.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace maropf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Four-bus feeder with one droop unit at the far end and midday PV.
void write_tiny(const fs::path& dir, double load_kw, double ampacity) {
    std::ostringstream c;
    c << R"({"schema_version": 1, "name": "tiny", "bases": {"v_kv": 12.66, "s_mva": 1.0}, "slack_v0": 1.0,
 "design_epsilon": 1.0, "profiles": "tiny.csv",
 "buses": [{"id": 0}, {"id": 1, "load_kw": )" << load_kw << R"(, "load_kvar": 40},
           {"id": 2, "load_kw": )" << load_kw << R"(, "load_kvar": 40}, {"id": 3, "load_kw": 60, "load_kvar": 20}],
 "lines": [)";
    for (int b = 1; b <= 3; ++b)
        c << (b > 1 ? "," : "") << R"({"from": )" << b - 1 << R"(, "to": )" << b
          << R"(, "r_ohm": 2.0, "x_ohm": 3.0, "ampacity_a": )" << ampacity
          << R"(, "p_max_kw": 1000, "q_max_kvar": 1000})";
    c << R"(],
 "ibdgs": [{"name": "pv3", "bus": 3, "p_max_kw": 600, "q_min_kvar": -300, "q_max_kvar": 300, "s_max_kva": 660, "mu_min": 0.9},
           {"name": "pv2", "bus": 2, "dispatchable": false, "p_max_kw": 100, "q_min_kvar": 0, "q_max_kvar": 0, "s_max_kva": 100}]})";
    write_text(dir / "tiny.json", c.str());
    std::string prof = "time,bus:1,bus:2,bus:3,ibdg:pv3,ibdg:pv2\n";
    const char* times[] = {"10:00", "10:15", "10:30", "10:45"};
    const double pv[] = {0.6, 0.9, 1.0, 0.8};
    for (int k = 0; k < 4; ++k)
        prof += std::string(times[k]) + ",1,1,0.8," + std::to_string(pv[k]) + "," + std::to_string(pv[k]) + "\n";
    write_text(dir / "tiny.csv", prof);
}

PipelineOptions opts(const std::string& command, const fs::path& case_path) {
    PipelineOptions o;
    o.command = command;
    o.case_name = case_path.string();
    o.window = "10:00-11:00";
    return o;
}

struct Run {
    PipelineOutcome outcome;
    std::string out, err;
};

Run run(const PipelineOptions& o) {
    std::ostringstream a, b;
    Run r;
    r.outcome = run_pipeline(o, a, b);
    r.out = a.str();
    r.err = b.str();
    return r;
}

}  // namespace

TEST_CASE("exit codes for errors") {
    CHECK(exit_code_for(ErrorCode::SingularSystem) == exit_codes::kConditionFail);
    CHECK(exit_code_for(ErrorCode::UnconvergedState) == exit_codes::kSecurityViolation);
    CHECK(exit_code_for(ErrorCode::NumericalBreakdown) == exit_codes::kSolverFailure);
    CHECK(exit_code_for(ErrorCode::Io) == exit_codes::kIo);
    CHECK(exit_code_for(ErrorCode::ParseError) == exit_codes::kIo);
    CHECK(exit_code_for(ErrorCode::SchemaVersionUnsupported) == exit_codes::kIo);
}

TEST_CASE("optimize, simulate and report on a small feeder") {
    TempDir tmp("maropf_test_pipeline");
    write_tiny(tmp.path, 120, 400);
    PipelineOptions o = opts("check", tmp.path / "tiny.json");
    Run check = run(o);
    REQUIRE(check.outcome.exit_code == exit_codes::kOk);
    CHECK(check.outcome.report->conditions->overall);

    o.command = "optimize";
    o.out = tmp.path / "opt";
    o.tables = true;
    Run opt = run(o);
    REQUIRE(opt.outcome.exit_code == exit_codes::kOk);
    const RunReport& r = *opt.outcome.report;
    CHECK(r.steps.size() == 4);
    CHECK(r.security.clean());
    CHECK(r.droop.size() == 2);
    CHECK(r.solver->status == "optimal");
    CHECK(fs::exists(o.out / "droop.json"));
    CHECK(fs::exists(o.out / "report.json"));
    CHECK(fs::exists(o.out / "voltages.csv"));

    // The stored parameters reproduce the verdict exactly.
    PipelineOptions s = opts("simulate", tmp.path / "tiny.json");
    s.droop = o.out / "droop.json";
    Run sim = run(s);
    REQUIRE(sim.outcome.exit_code == exit_codes::kOk);
    CHECK(sim.outcome.report->security == r.security);
    CHECK(sim.outcome.report->steps == r.steps);

    PipelineOptions rep;
    rep.command = "report";
    rep.report = o.out / "report.json";
    Run shown = run(rep);
    CHECK(shown.outcome.exit_code == exit_codes::kOk);
    CHECK(*shown.outcome.report == r);
    CHECK(shown.out == render_summary(r));

    PipelineOptions cmp = o;
    cmp.command = "compare";
    cmp.out = tmp.path / "cmp";
    Run c = run(cmp);
    CHECK(c.outcome.exit_code == exit_codes::kOk);
    REQUIRE(c.outcome.comparison);
    CHECK(c.outcome.comparison->ropf.objective.f_obj <= c.outcome.comparison->maropf.objective.f_obj + 1e-6);
    CHECK(fs::exists(cmp.out / "compare.json"));
    rep.report = cmp.out / "compare.json";
    Run cshown = run(rep);
    CHECK(cshown.outcome.exit_code == exit_codes::kOk);
    CHECK(*cshown.outcome.comparison == *c.outcome.comparison);
}

TEST_CASE("condition failure exits with 2") {
    PipelineOptions o;
    o.command = "check";
    o.epsilon = 0.5;
    Run c = run(o);
    CHECK(c.outcome.exit_code == exit_codes::kConditionFail);
    CHECK(!c.outcome.report->conditions->overall);
    o.command = "optimize";
    o.stride = 5;
    Run opt = run(o);
    CHECK(opt.outcome.exit_code == exit_codes::kConditionFail);
    CHECK(!opt.outcome.report->solver);
}

TEST_CASE("uncontrolled PV violates limits and exits with 3") {
    TempDir tmp("maropf_test_pipeline_unc");
    PipelineOptions o;
    o.command = "simulate";
    o.stride = 5;
    Scenario s = load_scenario(o);
    o.droop = tmp.path / "none.json";
    write_text(o.droop, droop_file_text(s.network.name, uncontrolled_records(s.network)));
    Run r = run(o);
    CHECK(r.outcome.exit_code == exit_codes::kSecurityViolation);
    CHECK(r.outcome.report->security.worst_v_hi > 1.05);

    // A record set missing a unit is rejected.
    auto recs = uncontrolled_records(s.network);
    recs.pop_back();
    write_text(o.droop, droop_file_text(s.network.name, recs));
    CHECK(run(o).outcome.exit_code == exit_codes::kIo);
}

TEST_CASE("infeasible design exits with 4") {
    TempDir tmp("maropf_test_pipeline_inf");
    // Ampacity far below the load current.
    write_tiny(tmp.path, 2000, 5);
    PipelineOptions o = opts("optimize", tmp.path / "tiny.json");
    o.mode = "ropf";
    Run r = run(o);
    CHECK(r.outcome.exit_code == exit_codes::kSolverFailure);
    CHECK(r.outcome.report->solver->status == "infeasible");
    CHECK(r.outcome.report->steps.empty());
}

TEST_CASE("input errors exit with 5") {
    PipelineOptions o;
    o.command = "check";
    o.case_name = "/nonexistent/case.json";
    CHECK(run(o).outcome.exit_code == exit_codes::kIo);
    o = PipelineOptions{};
    o.command = "simulate";
    o.droop = "/nonexistent/droop.json";
    CHECK(run(o).outcome.exit_code == exit_codes::kIo);
    o = PipelineOptions{};
    o.command = "optimize";
    o.mode = "fast";
    Run bad = run(o);
    CHECK(bad.outcome.exit_code == exit_codes::kIo);
    CHECK(bad.err.find("fast") != std::string::npos);
    o = PipelineOptions{};
    o.command = "check";
    o.window = "noon";
    CHECK(run(o).outcome.exit_code == exit_codes::kIo);
    o.window = "morning";
    o.stride = 0;
    CHECK(run(o).outcome.exit_code == exit_codes::kIo);
    o = PipelineOptions{};
    o.command = "frobnicate";
    CHECK(run(o).outcome.exit_code == exit_codes::kIo);
}
