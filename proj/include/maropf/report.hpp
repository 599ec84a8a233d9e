#pragma once

#include "maropf/conditions.hpp"
#include "maropf/droop.hpp"
#include "maropf/grid.hpp"
#include "maropf/opf_builder.hpp"
#include "maropf/powerflow.hpp"
#include "maropf/refine.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace maropf {

inline constexpr int kReportSchemaVersion = 1;

// Field-wise equality for the report round-trip.
bool operator==(const ObjectiveWeights& a, const ObjectiveWeights& b);
bool operator==(const ObjectiveBreakdown& a, const ObjectiveBreakdown& b);
bool operator==(const DroopParameters& a, const DroopParameters& b);
bool operator==(const ExactDroopCurve& a, const ExactDroopCurve& b);
bool operator==(const Violation& a, const Violation& b);
bool operator==(const SecurityVerdict& a, const SecurityVerdict& b);
bool operator==(const ConditionReport& a, const ConditionReport& b);
bool operator==(const RefinementStep& a, const RefinementStep& b);
bool operator==(const RefinementTrace& a, const RefinementTrace& b);

struct ScenarioMeta {
    std::string case_name;
    std::string profiles;
    std::string window_start;
    std::string window_end;
    int stride = 1;
    int step_minutes = 15;
    std::vector<std::string> labels;
    std::string mode;  // "maropf" or "ropf"
    ObjectiveWeights weights;
    double epsilon = 0.0;
    bool refine = false;

    bool operator==(const ScenarioMeta&) const = default;
};

struct DroopRecord {
    std::string name;
    int bus = 0;
    bool dispatchable = false;
    DroopParameters approx;
    ExactDroopCurve exact;

    bool operator==(const DroopRecord&) const = default;
};

struct StepVerdict {
    std::string label;
    double v_hi = 0.0;  // p.u. magnitude
    double v_lo = 0.0;
    double current_ratio = 0.0;
    int oracle_iterations = 0;
    std::vector<Violation> violations;

    bool operator==(const StepVerdict&) const = default;
};

struct SolverStats {
    std::string status;
    double objective = 0.0;
    double best_bound = 0.0;
    double gap = 0.0;  // relative, (objective - bound) / max(1, |objective|)
    long nodes = 0;
    long socp_solves = 0;
    int iterations = 0;
    double seconds = 0.0;
    int variables = 0;
    int rows = 0;
    int cones = 0;
    int binaries = 0;

    bool operator==(const SolverStats&) const = default;
};

struct RunReport {
    int schema_version = kReportSchemaVersion;
    std::string command;
    ScenarioMeta scenario;
    ObjectiveBreakdown objective;
    std::vector<DroopRecord> droop;
    std::vector<StepVerdict> steps;
    SecurityVerdict security;
    std::optional<ConditionReport> conditions;
    std::optional<SolverStats> solver;
    std::optional<RefinementTrace> refinement;

    bool operator==(const RunReport&) const = default;
};

// MAR-OPF and R-OPF designs of the same scenario.
struct CompareReport {
    int schema_version = kReportSchemaVersion;
    RunReport maropf;
    RunReport ropf;

    bool operator==(const CompareReport&) const = default;
};

std::string to_json_text(const RunReport& report);
RunReport parse_report(const std::string& text);
std::string to_json_text(const CompareReport& report);
CompareReport parse_compare(const std::string& text);

// Droop parameter files carry both coordinate systems and the expansion point.
std::string droop_file_text(const std::string& case_name, const std::vector<DroopRecord>& records);
std::vector<DroopRecord> parse_droop_file(const std::string& text);

// Human-readable summaries.
std::string render_summary(const RunReport& report);
std::string render_comparison(const CompareReport& report);

// Delimited tables.
std::string voltage_table(const RadialNetwork& network, const std::vector<std::string>& labels,
                          const std::vector<PowerFlowState>& states);
std::string current_table(const RadialNetwork& network, const std::vector<std::string>& labels,
                          const std::vector<PowerFlowState>& states);
std::string injection_table(const RadialNetwork& network, const std::vector<std::string>& labels,
                            const std::vector<std::vector<PowerPair>>& injections,
                            const Eigen::MatrixXd& p_ava);
std::string sweep_table(const std::vector<SweepRow>& rows);

std::string read_text(const std::filesystem::path& path);
// Throws Io on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace maropf
