#pragma once

#include "maropf/conditions.hpp"
#include "maropf/droop.hpp"
#include "maropf/grid.hpp"
#include "maropf/program.hpp"
#include "maropf/socp.hpp"

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace maropf {

enum class Quantity {
    P, Q, V, F,
    PHat, QHat, VHat,
    PLo, QLo, PUp, QUp, FUp,
    Pg, Qg, PgHat, QgHat,
    VDev, Y,
    V0p, V0q, Qg0,
};

std::string to_string(Quantity q);

// index: line / bus id for network quantities, IBDG position for injections and
// droop references; t = -1 for quantities shared across the horizon.
struct VarKey {
    Quantity kind;
    int index;
    int t;

    auto operator<=>(const VarKey&) const = default;
};

class VariableMap {
public:
    void insert(Quantity kind, int index, int t, int var);
    std::optional<int> find(Quantity kind, int index, int t) const;
    // Throws UnknownPair.
    int at(Quantity kind, int index, int t) const;
    const VarKey& key_of(int var) const;
    std::size_t size() const { return by_key_.size(); }
    const std::map<VarKey, int>& entries() const { return by_key_; }

private:
    std::map<VarKey, int> by_key_;
    std::map<int, VarKey> by_var_;
};

struct ObjectiveWeights {
    double w_pc = 0.6;
    double w_pl = 0.3;
    double w_v = 0.1;

    // Throws InvalidProgram unless all weights are >= 0 and one is positive.
    void validate() const;
};

enum class Formulation { Ropf, Maropf };
enum class ConeVariant { SendingEnd, ReceivingEnd };

std::string to_string(Formulation f);

struct BuildOptions {
    Formulation mode = Formulation::Maropf;
    ConeVariant cone = ConeVariant::SendingEnd;
    ObjectiveWeights weights;
    std::optional<double> big_m_v;  // overrides of the per-bus default 2 (v_max - v_min)
    std::optional<double> big_m_p;  // overrides of the per-unit default 2 (p_max + alpha_p v_max)
    // Design mode: rows linking the two injection copies, valid whenever v <= v_hat
    // holds (guaranteed when the a-priori conditions pass).
    bool coupling_cuts = true;
};

// The four cones of one (line, step) bounding f̄, in the order
// (P̄,Q̄), (P̄,Q̲), (P̲,Q̄), (P̲,Q̲).
struct ConeFamily {
    int line = 0;
    int t = 0;
    std::array<int, 4> cones{};
};

struct ActivationSets {
    std::set<std::pair<int, int>> Wp;  // (line, step)
    std::set<std::pair<int, int>> Wq;

    bool empty() const { return Wp.empty() && Wq.empty(); }
    bool operator==(const ActivationSets&) const = default;
};

struct OpfProgram {
    ConicProgram program;
    VariableMap vars;
    BuildOptions options;
    bool droop = false;
    int steps = 1;
    std::vector<int> step_index;  // horizon step of each program step
    std::vector<int> droop_units;  // IBDG positions under droop control (design mode)
    std::vector<SlopePair> slopes;  // per IBDG (design mode)
    std::vector<ConeFamily> families;
    AffineExpr f_pc, f_pl, f_v;  // objective components, unweighted
    ActivationSets refined;  // pairs already substituted
};

// Single step of the horizon with free (capability-bounded) injections at the
// dispatchable units; options.mode selects the formulation.
OpfProgram build_snapshot(const RadialNetwork& network, const TopologyMatrices& topo, const ScenarioHorizon& horizon,
                          int step, const BuildOptions& options);
OpfProgram build_ropf(const RadialNetwork& network, const TopologyMatrices& topo, const ScenarioHorizon& horizon,
                      int step = 0, BuildOptions options = {});
OpfProgram build_maropf(const RadialNetwork& network, const TopologyMatrices& topo, const ScenarioHorizon& horizon,
                        int step = 0, BuildOptions options = {});

// Droop design over the whole horizon with fixed slopes (one per IBDG).
// Throws InfeasibleBigM when an override is below the attainable range.
OpfProgram build_droop_design(const RadialNetwork& network, const TopologyMatrices& topo,
                              const ScenarioHorizon& horizon, const std::vector<SlopePair>& slopes,
                              const BuildOptions& options);

// Substitutes P̂ for P̲ (Q̂ for Q̲) in the cone families of the listed pairs.
// Throws UnknownPair for pairs without a family.
OpfProgram apply_refinement(const OpfProgram& base, const ActivationSets& sets);

// Helpers on solutions.
double value_of(const OpfProgram& opf, const Solution& sol, Quantity kind, int index, int t);

struct ObjectiveBreakdown {
    double f_obj = 0.0;
    double f_pc = 0.0;
    double f_pl = 0.0;
    double f_v = 0.0;
};

ObjectiveBreakdown objective_breakdown(const OpfProgram& opf, const Eigen::VectorXd& x);

// Droop parameters in squared-voltage coordinates, one per IBDG (zero slopes for
// units without droop).
std::vector<DroopParameters> extract_droop(const OpfProgram& opf, const RadialNetwork& network,
                                           const Eigen::VectorXd& x);

// Per-step injections (p, q) of every IBDG at a solution.
std::vector<std::vector<PowerPair>> extract_injections(const OpfProgram& opf, const RadialNetwork& network,
                                                       const ScenarioHorizon& horizon, const Eigen::VectorXd& x);

}  // namespace maropf
