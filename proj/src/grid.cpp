#include "maropf/grid.hpp"

#include "maropf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <tuple>

namespace maropf {

double Bases::i_amp() const { return 1000.0 * s_mva / (std::sqrt(3.0) * v_kv); }

namespace {

template <class F>
Eigen::VectorXd per_line(const RadialNetwork& n, F f) {
    Eigen::VectorXd out(n.num_lines());
    for (int k = 0; k < n.num_lines(); ++k) out(k) = f(n.lines[static_cast<std::size_t>(k)]);
    return out;
}

template <class F>
Eigen::VectorXd per_bus(const RadialNetwork& n, F f) {
    Eigen::VectorXd out(std::max(0, n.num_buses() - 1));
    for (int k = 1; k < n.num_buses(); ++k) out(k - 1) = f(n.buses[static_cast<std::size_t>(k)]);
    return out;
}

}  // namespace

Eigen::VectorXd RadialNetwork::line_r() const { return per_line(*this, [](const Line& l) { return l.r; }); }
Eigen::VectorXd RadialNetwork::line_x() const { return per_line(*this, [](const Line& l) { return l.x; }); }
Eigen::VectorXd RadialNetwork::load_p() const { return per_bus(*this, [](const Bus& b) { return b.load_p; }); }
Eigen::VectorXd RadialNetwork::load_q() const { return per_bus(*this, [](const Bus& b) { return b.load_q; }); }
Eigen::VectorXd RadialNetwork::shunt_g() const { return per_bus(*this, [](const Bus& b) { return b.shunt_g; }); }
Eigen::VectorXd RadialNetwork::shunt_b() const { return per_bus(*this, [](const Bus& b) { return b.shunt_b; }); }
Eigen::VectorXd RadialNetwork::v_min() const { return per_bus(*this, [](const Bus& b) { return b.v_min; }); }
Eigen::VectorXd RadialNetwork::v_max() const { return per_bus(*this, [](const Bus& b) { return b.v_max; }); }

std::vector<Diagnostic> validate_radial(const RadialNetwork& network) {
    std::vector<Diagnostic> diags;
    const int n = network.num_buses();
    for (int k = 0; k < n; ++k) {
        if (network.buses[static_cast<std::size_t>(k)].id != k)
            diags.push_back({DiagnosticKind::InvalidIndex, k, "bus ids must be contiguous from 0"});
    }
    std::vector<int> parent(static_cast<std::size_t>(n), -1);
    std::vector<int> count(static_cast<std::size_t>(n), 0);
    for (const Line& l : network.lines) {
        if (l.id <= 0 || l.id >= n || l.up < 0 || l.up >= n) {
            diags.push_back({DiagnosticKind::InvalidIndex, l.id,
                             "line " + std::to_string(l.up) + "->" + std::to_string(l.id) + " refers to an invalid bus"});
            continue;
        }
        if (l.up == l.id) {
            diags.push_back({DiagnosticKind::CycleDetected, l.id, "self-loop at bus " + std::to_string(l.id)});
            continue;
        }
        ++count[static_cast<std::size_t>(l.id)];
        parent[static_cast<std::size_t>(l.id)] = l.up;
    }
    for (int k = 1; k < n; ++k) {
        int c = count[static_cast<std::size_t>(k)];
        if (c > 1)
            diags.push_back({DiagnosticKind::CycleDetected, k, "bus " + std::to_string(k) + " has " + std::to_string(c) + " parent lines"});
    }
    // Follow parent pointers; a bus that cannot reach the slack is either
    // orphaned or sits on a cycle.
    std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 unknown, 1 reaches slack, 2 does not
    if (n > 0) state[0] = 1;
    for (int k = 1; k < n; ++k) {
        if (state[static_cast<std::size_t>(k)] != 0) continue;
        std::vector<int> path;
        std::vector<char> on_path(static_cast<std::size_t>(n), 0);
        int cur = k;
        int verdict = 0;
        bool cycle = false;
        while (true) {
            if (state[static_cast<std::size_t>(cur)] != 0) { verdict = state[static_cast<std::size_t>(cur)]; break; }
            if (on_path[static_cast<std::size_t>(cur)]) { verdict = 2; cycle = true; break; }
            on_path[static_cast<std::size_t>(cur)] = 1;
            path.push_back(cur);
            int p = parent[static_cast<std::size_t>(cur)];
            if (p < 0) { verdict = 2; break; }
            cur = p;
        }
        for (int b : path) state[static_cast<std::size_t>(b)] = verdict;
        if (verdict == 2) {
            if (cycle) {
                diags.push_back({DiagnosticKind::CycleDetected, cur, "cycle through bus " + std::to_string(cur)});
            } else {
                int orphan = path.back();
                diags.push_back({DiagnosticKind::DisconnectedBus, orphan, "bus " + std::to_string(orphan) + " has no incident line to its parent"});
            }
        }
    }
    // Keep one diagnostic per root cause for disconnected subtrees.
    std::sort(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
        return std::tie(a.kind, a.bus) < std::tie(b.kind, b.bus);
    });
    diags.erase(std::unique(diags.begin(), diags.end(), [](const Diagnostic& a, const Diagnostic& b) {
                    return a.kind == b.kind && a.bus == b.bus;
                }),
                diags.end());
    if (static_cast<int>(network.lines.size()) != std::max(0, n - 1) && diags.empty())
        diags.push_back({DiagnosticKind::InvalidIndex, -1, "expected one line per non-slack bus"});
    return diags;
}

TopologyMatrices build_topology(const RadialNetwork& network) {
    auto diags = validate_radial(network);
    if (!diags.empty()) {
        const Diagnostic& d = diags.front();
        ErrorCode code = d.kind == DiagnosticKind::CycleDetected    ? ErrorCode::CycleDetected
                         : d.kind == DiagnosticKind::DisconnectedBus ? ErrorCode::DisconnectedBus
                                                                     : ErrorCode::InvalidIndex;
        throw Error(code, d.message);
    }
    const int n = network.num_buses();
    const int L = n - 1;
    for (int k = 0; k < L; ++k) {
        if (network.lines[static_cast<std::size_t>(k)].id != k + 1)
            throw Error(ErrorCode::InvalidIndex, "lines must be sorted by ending bus");
    }
    TopologyMatrices t;
    t.children.assign(static_cast<std::size_t>(n), {});
    for (const Line& l : network.lines) t.children[static_cast<std::size_t>(l.up)].push_back(l.id);
    std::deque<int> queue{0};
    while (!queue.empty()) {
        int b = queue.front();
        queue.pop_front();
        if (b != 0) t.order.push_back(b);
        for (int c : t.children[static_cast<std::size_t>(b)]) queue.push_back(c);
    }

    t.G = Eigen::MatrixXd::Zero(L, L);
    t.H = Eigen::MatrixXd::Zero(L, L);
    for (const Line& l : network.lines) {
        if (l.up != 0) t.G(l.up - 1, l.id - 1) = 1.0;
        for (int k = l.id; k != 0; k = network.line(k).up) t.H(k - 1, l.id - 1) = 1.0;
    }
    Eigen::MatrixXd check = t.H * (Eigen::MatrixXd::Identity(L, L) - t.G);
    if (L > 0 && (check - Eigen::MatrixXd::Identity(L, L)).cwiseAbs().maxCoeff() > 1e-12)
        throw Error(ErrorCode::CycleDetected, "closure check H(I - G) = I failed");

    Eigen::VectorXd r = network.line_r();
    Eigen::VectorXd x = network.line_x();
    t.R = t.H.transpose() * r.asDiagonal() * t.H;
    t.X = t.H.transpose() * x.asDiagonal() * t.H;
    // Exact symmetry regardless of summation order.
    t.R = 0.5 * (t.R + t.R.transpose()).eval();
    t.X = 0.5 * (t.X + t.X.transpose()).eval();
    return t;
}

RadialNetwork to_per_unit(const RawCase& raw, const Bases& bases) {
    if (!(bases.v_kv > 0.0) || !(bases.s_mva > 0.0))
        throw Error(ErrorCode::NonPositiveBase, "voltage and power bases must be positive");
    const double zb = bases.z_ohm();
    const double sb = bases.s_mva * 1000.0;  // kVA
    const double ib = bases.i_amp();
    RadialNetwork n;
    n.name = raw.name;
    n.bases = bases;
    n.v0 = raw.slack_v0_pu * raw.slack_v0_pu;
    n.design_epsilon = raw.design_epsilon;
    n.profiles = raw.profiles;
    for (const RawBus& b : raw.buses) {
        Bus bus;
        bus.id = b.id;
        bus.load_p = b.load_kw / sb;
        bus.load_q = b.load_kvar / sb;
        bus.shunt_g = b.shunt_kw / sb;
        bus.shunt_b = b.shunt_kvar / sb;
        bus.v_min = b.v_min_pu * b.v_min_pu;
        bus.v_max = b.v_max_pu * b.v_max_pu;
        bus.v_target = b.v_target_pu * b.v_target_pu;
        bus.v_threshold = b.v_threshold;
        bus.load_class = b.load_class;
        n.buses.push_back(bus);
    }
    std::sort(n.buses.begin(), n.buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    for (const RawLine& l : raw.lines) {
        Line line;
        line.id = l.to;
        line.up = l.from;
        line.r = l.r_ohm / zb;
        line.x = l.x_ohm / zb;
        double ia = l.ampacity_a / ib;
        line.i_max = ia * ia;
        line.p_max = l.p_max_kw / sb;
        line.q_max = l.q_max_kvar / sb;
        n.lines.push_back(line);
    }
    std::stable_sort(n.lines.begin(), n.lines.end(), [](const Line& a, const Line& b) { return a.id < b.id; });
    for (const RawIbdg& g : raw.ibdgs) {
        IbdgSpec s;
        s.name = g.name;
        s.bus = g.bus;
        s.dispatchable = g.dispatchable;
        s.p_max = g.p_max_kw / sb;
        s.q_min = g.q_min_kvar / sb;
        s.q_max = g.q_max_kvar / sb;
        s.s_max = g.s_max_kva / sb;
        s.mu_min = g.mu_min;
        s.availability = g.availability.empty() ? g.name : g.availability;
        s.taylor_v0 = g.taylor_v0;
        n.ibdgs.push_back(s);
    }
    return n;
}

RawCase to_physical(const RadialNetwork& n) {
    const double zb = n.bases.z_ohm();
    const double sb = n.bases.s_mva * 1000.0;
    const double ib = n.bases.i_amp();
    RawCase raw;
    raw.name = n.name;
    raw.slack_v0_pu = std::sqrt(n.v0);
    raw.design_epsilon = n.design_epsilon;
    raw.profiles = n.profiles;
    for (const Bus& b : n.buses) {
        RawBus r;
        r.id = b.id;
        r.load_kw = b.load_p * sb;
        r.load_kvar = b.load_q * sb;
        r.shunt_kw = b.shunt_g * sb;
        r.shunt_kvar = b.shunt_b * sb;
        r.v_min_pu = std::sqrt(b.v_min);
        r.v_max_pu = std::sqrt(b.v_max);
        r.v_target_pu = std::sqrt(b.v_target);
        r.v_threshold = b.v_threshold;
        r.load_class = b.load_class;
        raw.buses.push_back(r);
    }
    for (const Line& l : n.lines) {
        RawLine r;
        r.from = l.up;
        r.to = l.id;
        r.r_ohm = l.r * zb;
        r.x_ohm = l.x * zb;
        r.ampacity_a = std::sqrt(l.i_max) * ib;
        r.p_max_kw = l.p_max * sb;
        r.q_max_kvar = l.q_max * sb;
        raw.lines.push_back(r);
    }
    for (const IbdgSpec& g : n.ibdgs) {
        RawIbdg r;
        r.name = g.name;
        r.bus = g.bus;
        r.dispatchable = g.dispatchable;
        r.p_max_kw = g.p_max * sb;
        r.q_min_kvar = g.q_min * sb;
        r.q_max_kvar = g.q_max * sb;
        r.s_max_kva = g.s_max * sb;
        r.mu_min = g.mu_min;
        r.availability = g.availability;
        r.taylor_v0 = g.taylor_v0;
        raw.ibdgs.push_back(r);
    }
    return raw;
}

ScenarioHorizon uniform_snapshot(const RadialNetwork& network, double load_mult, double pv_fraction) {
    ScenarioHorizon h;
    h.labels = {"snapshot"};
    h.load_mult = Eigen::MatrixXd::Constant(1, network.num_buses(), load_mult);
    h.p_ava.resize(1, static_cast<Eigen::Index>(network.ibdgs.size()));
    for (std::size_t i = 0; i < network.ibdgs.size(); ++i)
        h.p_ava(0, static_cast<Eigen::Index>(i)) = pv_fraction * network.ibdgs[i].p_max;
    return h;
}

}  // namespace maropf
