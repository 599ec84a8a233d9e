#pragma once

// Small networks and independent reference solvers shared by the test suites.

#include "maropf/grid.hpp"
#include "maropf/droop.hpp"
#include "maropf/powerflow.hpp"
#include "maropf/program.hpp"
#include "maropf/socp.hpp"

#include <complex>
#include <random>
#include <vector>

namespace testing {

using maropf::RadialNetwork;

// Chain 0 -> 1 -> ... -> n-1 with identical lines and no loads.
inline RadialNetwork chain(int n, double r, double x) {
    RadialNetwork net;
    net.name = "chain" + std::to_string(n);
    for (int k = 0; k < n; ++k) {
        maropf::Bus b;
        b.id = k;
        net.buses.push_back(b);
    }
    for (int k = 1; k < n; ++k) {
        maropf::Line l;
        l.id = k;
        l.up = k - 1;
        l.r = r;
        l.x = x;
        l.i_max = 25.0;
        l.p_max = 5.0;
        l.q_max = 5.0;
        net.lines.push_back(l);
    }
    return net;
}

// Lines given as parent of bus k (parents[k - 1]).
inline RadialNetwork tree(const std::vector<int>& parents, double r, double x) {
    RadialNetwork net = chain(static_cast<int>(parents.size()) + 1, r, x);
    for (std::size_t k = 0; k < parents.size(); ++k) net.lines[k].up = parents[k];
    return net;
}

inline maropf::IbdgSpec pv(const std::string& name, int bus, double p_max, bool dispatchable = true) {
    maropf::IbdgSpec g;
    g.name = name;
    g.bus = bus;
    g.dispatchable = dispatchable;
    g.p_max = p_max;
    g.q_min = -0.5 * p_max;
    g.q_max = 0.5 * p_max;
    g.s_max = 1.1 * p_max;
    g.mu_min = 0.9;
    g.availability = name;
    return g;
}

// Path matrix from explicit root-to-bus walks, independent of build_topology.
inline Eigen::MatrixXd path_matrix(const RadialNetwork& net) {
    const int L = net.num_lines();
    std::vector<int> parent(static_cast<std::size_t>(L + 1), 0);
    for (const auto& l : net.lines) parent[static_cast<std::size_t>(l.id)] = l.up;
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(L, L);
    for (int l = 1; l <= L; ++l) {
        std::vector<int> path;
        for (int b = l; b != 0; b = parent[static_cast<std::size_t>(b)]) path.push_back(b);
        for (int k : path) H(k - 1, l - 1) = 1.0;
    }
    return H;
}

// Bus-injection power flow in polar coordinates, solved by Newton's method with a
// finite-difference Jacobian. Injections may depend on the local voltage magnitude.
struct PolarResult {
    std::vector<std::complex<double>> V;  // per bus
    bool converged = false;
    int iterations = 0;
};

template <class Injection>  // std::complex<double>(int bus, double |V|): net injection at bus
PolarResult newton_polar(const RadialNetwork& net, Injection injection, double tol = 1e-12, int max_iters = 50) {
    using cd = std::complex<double>;
    const int N = net.num_buses();
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(N, N);
    for (const auto& l : net.lines) {
        cd y = 1.0 / cd(l.r, l.x);
        Y(l.up, l.id) -= y;
        Y(l.id, l.up) -= y;
        Y(l.up, l.up) += y;
        Y(l.id, l.id) += y;
    }
    const int n = 2 * (N - 1);
    Eigen::VectorXd z(n);  // angles then magnitudes of buses 1..N-1
    for (int k = 0; k < N - 1; ++k) {
        z(k) = 0.0;
        z(N - 1 + k) = std::sqrt(net.v0);
    }
    auto voltages = [&](const Eigen::VectorXd& s) {
        Eigen::VectorXcd V(N);
        V(0) = std::sqrt(net.v0);
        for (int k = 1; k < N; ++k) V(k) = std::polar(s(N - 2 + k), s(k - 1));
        return V;
    };
    auto mismatch = [&](const Eigen::VectorXd& s) {
        Eigen::VectorXcd V = voltages(s);
        Eigen::VectorXcd I = Y * V;
        Eigen::VectorXd F(n);
        for (int k = 1; k < N; ++k) {
            cd S = V(k) * std::conj(I(k)) - injection(k, std::abs(V(k)));
            F(k - 1) = S.real();
            F(N - 2 + k) = S.imag();
        }
        return F;
    };
    PolarResult out;
    for (int it = 1; it <= max_iters; ++it) {
        Eigen::VectorXd F = mismatch(z);
        out.iterations = it;
        if (F.cwiseAbs().maxCoeff() <= tol) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd J(n, n);
        for (int j = 0; j < n; ++j) {
            const double h = 1e-7;
            Eigen::VectorXd zp = z, zm = z;
            zp(j) += h;
            zm(j) -= h;
            J.col(j) = (mismatch(zp) - mismatch(zm)) / (2.0 * h);
        }
        z -= J.fullPivLu().solve(F);
    }
    Eigen::VectorXcd V = voltages(z);
    for (int k = 0; k < N; ++k) out.V.push_back(V(k));
    return out;
}

// Exhaustive enumeration over all binary assignments, each solved as a continuous program.
inline double enumerate_binaries(const maropf::ConicProgram& program, const maropf::SolverConfig& cfg = {}) {
    std::vector<int> bins;
    for (int j = 0; j < program.num_variables(); ++j)
        if (program.variables()[static_cast<std::size_t>(j)].binary) bins.push_back(j);
    double best = maropf::kInf;
    const long combos = 1L << bins.size();
    for (long mask = 0; mask < combos; ++mask) {
        maropf::ConicProgram p = program;
        for (std::size_t k = 0; k < bins.size(); ++k) {
            double v = (mask >> k) & 1 ? 1.0 : 0.0;
            p.set_bounds(bins[k], v, v);
        }
        maropf::Solution s = maropf::solve_socp(p, cfg);
        if (s.status == maropf::SolveStatus::Optimal) best = std::min(best, s.objective);
    }
    return best;
}

inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

// Random two- and three-bus networks with loads and shunts.
inline RadialNetwork random_small(std::mt19937_64& g) {
    int shape = static_cast<int>(g() % 3);
    RadialNetwork net = shape == 0 ? chain(2, 0, 0) : shape == 1 ? chain(3, 0, 0) : tree({0, 0}, 0, 0);
    net.v0 = uniform(g, 0.95, 1.05);
    for (auto& l : net.lines) {
        l.r = uniform(g, 0.001, 0.05);
        l.x = uniform(g, 0.001, 0.05);
    }
    for (int b = 1; b < net.num_buses(); ++b) {
        net.buses[static_cast<std::size_t>(b)].load_p = uniform(g, 0.0, 0.8);
        net.buses[static_cast<std::size_t>(b)].load_q = uniform(g, -0.1, 0.4);
        net.buses[static_cast<std::size_t>(b)].shunt_g = uniform(g, 0.0, 0.05);
        net.buses[static_cast<std::size_t>(b)].shunt_b = uniform(g, -0.05, 0.05);
    }
    return net;
}

// Random small network with one droop unit and a random exact curve.
struct OracleInstance {
    RadialNetwork net;
    int bus = 1;
    maropf::ExactDroopCurve curve;
    Eigen::VectorXd p_ava;
};

inline OracleInstance random_oracle_instance(std::mt19937_64& g) {
    OracleInstance o;
    o.net = random_small(g);
    o.bus = 1 + static_cast<int>(g() % static_cast<unsigned>(o.net.num_lines()));
    o.net.ibdgs.push_back(pv("u", o.bus, uniform(g, 0.2, 1.0)));
    o.net.ibdgs.back().q_min = -1.0;
    o.net.ibdgs.back().q_max = 1.0;
    o.net.ibdgs.back().s_max = 3.0;
    o.net.ibdgs.back().mu_min = 0.3;
    o.curve.taylor_v0 = 1.1025;
    o.curve.alpha_p_star = uniform(g, 0.0, 2.0);
    o.curve.alpha_q_star = uniform(g, 0.0, 2.0);
    o.curve.vref_p_star = uniform(g, 0.97, 1.03);
    o.curve.vref_q_star = uniform(g, 0.97, 1.03);
    o.curve.q_g0 = uniform(g, -0.1, 0.1);
    o.p_ava = Eigen::VectorXd::Constant(1, uniform(g, 0.0, 1.0) * o.net.ibdgs[0].p_max);
    return o;
}

// Five-bus chain with two droop units (one on its P-V branch) and a fixed unit.
struct DroopChain {
    RadialNetwork net = chain(5, 0.02, 0.03);
    std::vector<maropf::ExactDroopCurve> curves = std::vector<maropf::ExactDroopCurve>(3);
    Eigen::VectorXd p_ava = Eigen::VectorXd(3);

    DroopChain() {
        const double loads_p[] = {0.0, 0.3, 0.2, 0.4, 0.1};
        const double loads_q[] = {0.0, 0.1, 0.05, 0.2, 0.05};
        for (int b = 1; b < 5; ++b) {
            net.buses[static_cast<std::size_t>(b)].load_p = loads_p[b];
            net.buses[static_cast<std::size_t>(b)].load_q = loads_q[b];
        }
        net.buses[2].shunt_g = 0.02;
        net.buses[2].shunt_b = 0.01;
        net.ibdgs.push_back(pv("a", 4, 2.0));
        net.ibdgs.push_back(pv("b", 2, 1.0));
        net.ibdgs.push_back(pv("c", 3, 0.3, false));
        curves[0] = {3.0, 2.0, 1.0, 1.0, 0.0, 1.1025};  // P-V active above 1.0
        curves[1] = {1.0, 1.5, 1.2, 1.0, 0.05, 1.1025};  // P-V inactive
        p_ava << 1.6, 0.6, 0.25;
    }

    // Net injection at a bus as a function of its voltage magnitude.
    std::complex<double> injection(int bus, double V) const {
        std::complex<double> s(-net.bus(bus).load_p - net.bus(bus).shunt_g * V * V,
                               -net.bus(bus).load_q - net.bus(bus).shunt_b * V * V);
        for (std::size_t i = 0; i < net.ibdgs.size(); ++i) {
            if (net.ibdgs[i].bus != bus) continue;
            maropf::PowerPair pq{p_ava(static_cast<Eigen::Index>(i)), 0.0};
            if (net.ibdgs[i].dispatchable) pq = maropf::eval_exact_droop(curves[i], V, pq.p);
            pq = maropf::clip_capability(net.ibdgs[i], pq);
            s += std::complex<double>(pq.p, pq.q);
        }
        return s;
    }
};

}  // namespace testing
