// Command-line front end: maropf <check|optimize|simulate|compare|report> ...

#include "maropf/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

maropf::ObjectiveWeights parse_weights(const std::string& text) {
    std::vector<double> w;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) w.push_back(std::stod(cell));
    if (w.size() != 3) throw CLI::ValidationError("--weights", "expected three comma-separated numbers");
    maropf::ObjectiveWeights out{w[0], w[1], w[2]};
    out.validate();
    return out;
}

void scenario_flags(CLI::App* sub, maropf::PipelineOptions& o) {
    sub->add_option("case", o.case_name, "bundled case name or case file")->capture_default_str();
    sub->add_option("--profiles", o.profiles, "profile CSV (default: the case's own)");
    sub->add_option("--window", o.window, "morning, afternoon, day or HH:MM-HH:MM")->capture_default_str();
    sub->add_option("--stride", o.stride, "keep every n-th step")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--epsilon", o.epsilon, "slope design parameter (default: the case's)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--tables", o.tables, "write voltage, current and injection tables");
}

void solver_flags(CLI::App* sub, maropf::PipelineOptions& o, std::string& weights) {
    sub->add_option("--weights", weights, "w_pc,w_pl,w_v")->capture_default_str();
    sub->add_option("--mode", o.mode, "maropf or ropf")->check(CLI::IsMember({"maropf", "ropf"}))->capture_default_str();
    sub->add_flag("--refine", o.refine, "run the activation-set refinement");
    sub->add_option("--refine-iters", o.refine_iters, "refinement iteration cap")->capture_default_str();
    sub->add_option("--dump-program", o.dump_program, "write the final conic program");
    sub->add_flag("--solver-log", o.solver_log, "print the branch-and-bound log to stderr");
    sub->add_option("--time-limit", o.time_limit, "branch-and-bound time limit, seconds")->capture_default_str();
    sub->add_option("--node-limit", o.node_limit, "branch-and-bound node limit")->capture_default_str();
    sub->add_option("--gap", o.gap, "relative optimality gap")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Droop design for radial distribution networks with restricted optimal power flow"};
    app.require_subcommand(1);
    maropf::PipelineOptions o;
    std::string weights = "0.6,0.3,0.1";

    auto* check = app.add_subcommand("check", "a-priori conditions at the design slopes");
    scenario_flags(check, o);
    check->add_flag("--sweep", o.sweep, "sweep epsilon over the default grid");
    check->add_option("--sweep-points", o.sweep_points, "grid size")->capture_default_str();

    auto* optimize = app.add_subcommand("optimize", "droop design, then oracle validation");
    scenario_flags(optimize, o);
    solver_flags(optimize, o, weights);

    auto* simulate = app.add_subcommand("simulate", "oracle validation of a droop parameter file");
    scenario_flags(simulate, o);
    simulate->add_option("--droop", o.droop, "droop parameter file")->required();

    auto* compare = app.add_subcommand("compare", "design in both formulations and validate both");
    scenario_flags(compare, o);
    solver_flags(compare, o, weights);

    auto* report = app.add_subcommand("report", "re-render a stored report");
    report->add_option("file", o.report, "report.json or compare.json")->required();

    try {
        app.parse(argc, argv);
        o.weights = parse_weights(weights);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "bad --weights: " << e.what() << "\n";
        return 1;
    }
    o.command = app.get_subcommands().front()->get_name();
    return maropf::run_pipeline(o, std::cout, std::cerr).exit_code;
}
