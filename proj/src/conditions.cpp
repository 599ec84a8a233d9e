#include "maropf/conditions.hpp"

#include "maropf/errors.hpp"
#include "maropf/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace maropf {

ShuntVector network_shunts(const RadialNetwork& network) {
    return {network.shunt_g(), network.shunt_b()};
}

ShuntVector effective_shunts(const RadialNetwork& network, const std::vector<SlopePair>& slopes) {
    ShuntVector s = network_shunts(network);
    for (std::size_t i = 0; i < network.ibdgs.size() && i < slopes.size(); ++i) {
        const IbdgSpec& g = network.ibdgs[i];
        if (!g.dispatchable) continue;
        s.g(g.bus - 1) += slopes[i].alpha_p;
        s.b(g.bus - 1) += slopes[i].alpha_q;
    }
    return s;
}

Envelope nominal_envelope(const RadialNetwork& network) {
    const int L = network.num_lines();
    Envelope e;
    e.p_load = network.load_p();
    e.q_load = network.load_q();
    e.p_gen_max = Eigen::VectorXd::Zero(L);
    e.q_gen_max = Eigen::VectorXd::Zero(L);
    for (const IbdgSpec& g : network.ibdgs) {
        e.p_gen_max(g.bus - 1) += g.p_max;
        e.q_gen_max(g.bus - 1) += g.q_max;
    }
    e.P_max.resize(L);
    e.Q_max.resize(L);
    for (int k = 0; k < L; ++k) {
        e.P_max(k) = network.lines[static_cast<std::size_t>(k)].p_max;
        e.Q_max(k) = network.lines[static_cast<std::size_t>(k)].q_max;
    }
    e.v_min = network.v_min();
    return e;
}

namespace {

struct Factored {
    Eigen::MatrixXd inverse;
    int sign = 0;
    double log_abs = 0.0;
};

Factored factor(const Eigen::MatrixXd& A) {
    Factored f;
    const auto n = A.rows();
    if (n == 0) {
        f.sign = 1;
        f.inverse = A;
        return f;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const Eigen::MatrixXd& U = lu.matrixLU();
    double scale = A.cwiseAbs().maxCoeff();
    f.sign = static_cast<int>(std::lround(lu.permutationP().determinant()));
    for (Eigen::Index i = 0; i < n; ++i) {
        double d = U(i, i);
        if (!(std::abs(d) > 1e-14 * std::max(1.0, scale)))
            throw Error(ErrorCode::SingularSystem, "I - G^T + M1 + M2 is singular");
        if (d < 0) f.sign = -f.sign;
        f.log_abs += std::log(std::abs(d));
    }
    f.inverse = lu.inverse();
    return f;
}

Eigen::MatrixXd shunt_path(const Eigen::VectorXd& z, const Eigen::MatrixXd& H, const Eigen::VectorXd& y) {
    return 2.0 * z.asDiagonal() * H * y.asDiagonal();
}

Eigen::MatrixXd sensitivity_from(const Eigen::MatrixXd& C, const Eigen::MatrixXd& H, const Eigen::VectorXd& r,
                                 const Eigen::VectorXd& x) {
    const auto L = H.rows();
    Eigen::MatrixXd HI = H - Eigen::MatrixXd::Identity(L, L);
    Eigen::VectorXd z2 = r.cwiseProduct(r) + x.cwiseProduct(x);
    return 2.0 * C * r.asDiagonal() * HI * r.asDiagonal() + 2.0 * C * x.asDiagonal() * HI * x.asDiagonal() +
           C * z2.asDiagonal();
}

}  // namespace

Eigen::MatrixXd voltage_sensitivity(const RadialNetwork& network, const TopologyMatrices& topo,
                                    const ShuntVector& shunts) {
    const auto L = topo.H.rows();
    Eigen::VectorXd r = network.line_r(), x = network.line_x();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(L, L) - topo.G.transpose() + shunt_path(r, topo.H, shunts.g) +
                        shunt_path(x, topo.H, shunts.b);
    Factored f = factor(A);
    return sensitivity_from(f.inverse, topo.H, r, x);
}

ConditionMatrices compute_condition_matrices(const RadialNetwork& network, const TopologyMatrices& topo,
                                             const ShuntVector& shunts, const Envelope& env) {
    const auto L = topo.H.rows();
    Eigen::VectorXd r = network.line_r(), x = network.line_x();
    ConditionMatrices m;
    m.H = topo.H;
    m.M1 = shunt_path(r, topo.H, shunts.g);
    m.M2 = shunt_path(x, topo.H, shunts.b);
    Factored f = factor(Eigen::MatrixXd::Identity(L, L) - topo.G.transpose() + m.M1 + m.M2);
    m.C = f.inverse;
    m.det_sign = f.sign;
    m.log_abs_det = f.log_abs;
    m.D = sensitivity_from(m.C, topo.H, r, x);
    Eigen::VectorXd hp = (topo.H * (env.p_load - env.p_gen_max)).cwiseAbs();
    Eigen::VectorXd hq = (topo.H * (env.q_load - env.q_gen_max)).cwiseAbs();
    m.pi = env.P_max.cwiseMax(hp).cwiseQuotient(env.v_min);
    m.rho = env.Q_max.cwiseMax(hq).cwiseQuotient(env.v_min);
    m.theta = m.pi.cwiseProduct(m.pi) + m.rho.cwiseProduct(m.rho);
    m.E = 2.0 * m.pi.asDiagonal() * topo.H * r.asDiagonal() + 2.0 * m.rho.asDiagonal() * topo.H * x.asDiagonal() +
          m.theta.asDiagonal() * m.D;
    return m;
}

ConditionReport check_conditions(const ConditionMatrices& m, const ConditionTolerances& tol) {
    ConditionReport rep;
    rep.det_sign = m.det_sign;
    rep.log_abs_det = m.log_abs_det;
    rep.norm_8a = (m.H.transpose() * (-m.M1 - m.M2)).norm();
    rep.min_D = m.D.size() ? m.D.minCoeff() : 0.0;
    rep.norm_E = m.E.norm();
    rep.pass_8a = rep.norm_8a < 1.0;
    rep.pass_8b = rep.min_D >= -tol.tol_neg;
    rep.pass_8c = rep.norm_E < 1.0;

    Eigen::MatrixXd DE = m.D * m.E;
    bool exists = true;
    double eta = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Eigen::Index i = 0; i < m.D.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.D.cols(); ++j) {
            double d = m.D(i, j);
            if (d > tol.tol_pos) {
                eta = std::max(eta, DE(i, j) / d);
                any = true;
            } else if (DE(i, j) > tol.tol_pos) {
                exists = false;
            }
        }
    }
    if (exists) rep.eta = any ? eta : 0.0;
    rep.pass_8d = rep.eta.has_value() && *rep.eta < 0.5;
    rep.overall = rep.pass_8a && rep.pass_8b && rep.pass_8c && rep.pass_8d;
    return rep;
}

std::vector<SlopePair> tune_droop_slopes(const RadialNetwork& network, const TopologyMatrices& topo, double epsilon) {
    if (epsilon < 0.0) throw Error(ErrorCode::ZeroPathImpedance, "epsilon must be nonnegative");
    Eigen::RowVectorXd colR = topo.R.colwise().sum();
    Eigen::RowVectorXd colX = topo.X.colwise().sum();
    std::vector<SlopePair> out(network.ibdgs.size());
    for (std::size_t i = 0; i < network.ibdgs.size(); ++i) {
        const IbdgSpec& g = network.ibdgs[i];
        if (!g.dispatchable) continue;
        double dr = colR(g.bus - 1) + epsilon;
        double dx = colX(g.bus - 1) + epsilon;
        if (dr == 0.0 || dx == 0.0)
            throw Error(ErrorCode::ZeroPathImpedance, "bus " + std::to_string(g.bus) + " has zero path impedance");
        out[i].alpha_p = 1.0 / dr;
        out[i].alpha_q = 1.0 / dx;
    }
    return out;
}

std::vector<SweepRow> sweep_epsilon(const RadialNetwork& network, const TopologyMatrices& topo,
                                    const std::vector<double>& grid) {
    Envelope env = nominal_envelope(network);
    std::vector<SweepRow> rows;
    for (double eps : grid) {
        ShuntVector s = effective_shunts(network, tune_droop_slopes(network, topo, eps));
        ConditionMatrices m = compute_condition_matrices(network, topo, s, env);
        ConditionReport rep = check_conditions(m);
        rows.push_back({eps, m.det_sign, m.log_abs_det, rep.min_D, rep.norm_8a});
    }
    return rows;
}

std::vector<double> default_epsilon_grid(int points) {
    // eps = 0 plus a log grid on [1e-3, 1e2].
    std::vector<double> g{0.0};
    for (int k = 0; k + 1 < points; ++k) {
        double t = points > 2 ? static_cast<double>(k) / (points - 2) : 0.0;
        g.push_back(std::pow(10.0, -3.0 + 5.0 * t));
    }
    return g;
}

BreakResult find_condition_break(const RadialNetwork& network, const TopologyMatrices& topo, const ShuntVector& shunts,
                                 const Envelope& base, const Eigen::VectorXd& dir_p, const Eigen::VectorXd& dir_q,
                                 const BreakOptions& opt) {
    auto probe = [&](double s) {
        Envelope e = base;
        e.p_gen_max = s * dir_p;
        e.q_gen_max = s * dir_q;
        return check_conditions(compute_condition_matrices(network, topo, shunts, e));
    };
    double lo = 0.0;
    ConditionReport rep0 = probe(0.0);
    double hi = -1.0;
    ConditionReport fail_rep;
    if (!rep0.overall) {
        hi = 0.0;
        fail_rep = rep0;
    } else {
        for (double s = opt.scan_start; s <= opt.scan_limit; s *= 2.0) {
            ConditionReport r = probe(s);
            if (!r.overall) {
                hi = s;
                fail_rep = r;
                break;
            }
            lo = s;
        }
    }
    if (hi < 0.0) throw Error(ErrorCode::NoBreakFound, "conditions hold up to scale " + std::to_string(opt.scan_limit));
    while (hi > 0.0 && hi - lo > opt.rel_tol * hi) {
        double mid = 0.5 * (lo + hi);
        ConditionReport r = probe(mid);
        if (r.overall) {
            lo = mid;
        } else {
            hi = mid;
            fail_rep = r;
        }
    }
    BreakResult out;
    out.scale = hi;
    out.report = fail_rep;
    out.violated = !fail_rep.pass_8a ? "8a" : !fail_rep.pass_8b ? "8b" : !fail_rep.pass_8c ? "8c" : "8d";
    Eigen::VectorXd pn = base.p_load - hi * dir_p;
    Eigen::VectorXd qn = base.q_load - hi * dir_q;
    out.net_injection = -pn.sum();
    PowerFlowState st = constant_injection_powerflow(network, topo, pn, qn, network_shunts(network));
    out.max_voltage = std::sqrt(st.v.maxCoeff());
    return out;
}

}  // namespace maropf
