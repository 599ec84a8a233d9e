#pragma once

#include "maropf/case_io.hpp"
#include "maropf/conditions.hpp"
#include "maropf/errors.hpp"
#include "maropf/opf_builder.hpp"
#include "maropf/powerflow.hpp"
#include "maropf/refine.hpp"
#include "maropf/report.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace maropf {

namespace exit_codes {
inline constexpr int kOk = 0;
inline constexpr int kConditionFail = 2;
inline constexpr int kSecurityViolation = 3;
inline constexpr int kSolverFailure = 4;
inline constexpr int kIo = 5;
}  // namespace exit_codes

// Exit code for an error escaping a command.
int exit_code_for(ErrorCode code);

struct PipelineOptions {
    std::string command;             // check, optimize, simulate, compare, report
    std::string case_name = "ieee34";  // bundled name or case file path
    std::string profiles;            // empty: the case's own profile file
    std::string window = "morning";  // preset or HH:MM-HH:MM
    int stride = 1;
    ObjectiveWeights weights;
    std::string mode = "maropf";
    bool refine = false;
    int refine_iters = 10;
    std::optional<double> epsilon;  // slope design, defaults to the case's design_epsilon
    bool sweep = false;
    int sweep_points = 20;
    std::filesystem::path out;  // output directory; nothing is written when empty
    bool tables = false;
    std::filesystem::path dump_program;
    bool solver_log = false;
    std::filesystem::path droop;   // simulate input
    std::filesystem::path report;  // report input
    double time_limit = 1800.0;
    long node_limit = 200000;
    double gap = 1e-6;
    OracleOptions oracle;
};

struct Scenario {
    RadialNetwork network;
    TopologyMatrices topo;
    ScenarioHorizon horizon;
    HorizonSpec spec;
    std::string profiles;
    double epsilon = 0.0;
    std::vector<SlopePair> slopes;
};

Scenario load_scenario(const PipelineOptions& options);

Formulation parse_mode(const std::string& mode);

// Condition check at the nominal envelope with the scenario's slopes.
ConditionReport scenario_conditions(const Scenario& scenario);

// Droop records for every IBDG; the exact curve is expanded at taylor_v0
// (the unit's own value, else the bus v_max).
std::vector<DroopRecord> droop_records(const RadialNetwork& network, const std::vector<DroopParameters>& params);

// Records with all slopes zero: each unit injects (p_ava, 0).
std::vector<DroopRecord> uncontrolled_records(const RadialNetwork& network);

struct Validation {
    std::vector<OracleResult> results;  // per horizon step
    std::vector<StepVerdict> steps;
    SecurityVerdict security;
};

// Exact droop power flow at every horizon step. Records are matched to units by name;
// throws UnknownId for a unit missing from the records.
Validation validate_droop(const Scenario& scenario, const std::vector<DroopRecord>& records,
                          const OracleOptions& options = {});

struct DesignRun {
    OpfProgram base;
    RefineResult result;
    std::vector<DroopRecord> droop;
    ObjectiveBreakdown objective;
    SolverStats stats;
};

// Droop design in the given formulation; result.best.has_point() tells whether a point exists.
DesignRun run_design(const Scenario& scenario, Formulation mode, const PipelineOptions& options,
                     std::ostream* log = nullptr);

struct PipelineOutcome {
    int exit_code = exit_codes::kOk;
    std::string error;  // set when an error escaped
    std::optional<RunReport> report;
    std::optional<CompareReport> comparison;
    std::vector<SweepRow> sweep;
};

// Runs one command. Errors are caught and mapped to exit codes; `out` gets the
// rendered summary, `err` diagnostics and the optional solver log.
PipelineOutcome run_pipeline(const PipelineOptions& options, std::ostream& out, std::ostream& err);

}  // namespace maropf
