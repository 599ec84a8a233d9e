#include "maropf/powerflow.hpp"

#include "maropf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

namespace maropf {

namespace {

double v_up_of(const RadialNetwork& net, const Eigen::VectorXd& v_bus, int line_id) {
    return v_bus(net.line(line_id).up);
}

}  // namespace

PowerFlowState constant_injection_powerflow(const RadialNetwork& net, const TopologyMatrices& topo,
                                            const Eigen::VectorXd& pn, const Eigen::VectorXd& qn,
                                            const ShuntVector& sh, const SweepOptions& opt,
                                            const PowerFlowState* warm) {
    const int N = net.num_buses();
    const int L = N - 1;
    Eigen::VectorXd r = net.line_r(), x = net.line_x();
    PowerFlowState s;
    if (warm && warm->v.size() == N && warm->f.size() == L) {
        s.v = warm->v;
        s.f = warm->f;
        s.v(0) = net.v0;
    } else {
        s.v = Eigen::VectorXd::Constant(N, net.v0);
        s.f = Eigen::VectorXd::Zero(L);
    }
    s.P = Eigen::VectorXd::Zero(L);
    s.Q = Eigen::VectorXd::Zero(L);
    Eigen::VectorXd vn(N), fn(L);
    for (int it = 1; it <= opt.max_iters; ++it) {
        for (int k = 0; k < L; ++k) {
            s.P(k) = pn(k) + sh.g(k) * s.v(k + 1) + r(k) * s.f(k);
            s.Q(k) = qn(k) + sh.b(k) * s.v(k + 1) + x(k) * s.f(k);
        }
        for (auto it2 = topo.order.rbegin(); it2 != topo.order.rend(); ++it2) {
            int b = *it2;
            int up = net.line(b).up;
            if (up != 0) {
                s.P(up - 1) += s.P(b - 1);
                s.Q(up - 1) += s.Q(b - 1);
            }
        }
        vn(0) = net.v0;
        for (int b : topo.order) {
            int k = b - 1;
            vn(b) = vn(net.line(b).up) - 2.0 * (r(k) * s.P(k) + x(k) * s.Q(k)) + (r(k) * r(k) + x(k) * x(k)) * s.f(k);
            if (!(vn(b) > 0.0)) throw Error(ErrorCode::NonPositiveVoltage, "bus " + std::to_string(b) + " in sweep");
        }
        for (int b : topo.order) {
            int k = b - 1;
            fn(k) = (s.P(k) * s.P(k) + s.Q(k) * s.Q(k)) / vn(net.line(b).up);
        }
        double delta = 0.0;
        if (L > 0) delta = std::max((vn - s.v).cwiseAbs().maxCoeff(), (fn - s.f).cwiseAbs().maxCoeff());
        s.v = vn;
        s.f = fn;
        s.iterations = it;
        if (!std::isfinite(delta)) break;
        if (delta <= opt.tol) {
            s.converged = true;
            break;
        }
    }
    // Final flows consistent with the final v, f.
    for (int k = 0; k < L; ++k) {
        s.P(k) = pn(k) + sh.g(k) * s.v(k + 1) + r(k) * s.f(k);
        s.Q(k) = qn(k) + sh.b(k) * s.v(k + 1) + x(k) * s.f(k);
    }
    for (auto it2 = topo.order.rbegin(); it2 != topo.order.rend(); ++it2) {
        int b = *it2;
        int up = net.line(b).up;
        if (up != 0) {
            s.P(up - 1) += s.P(b - 1);
            s.Q(up - 1) += s.Q(b - 1);
        }
    }
    s.residual = distflow_residual(net, topo, s, pn, qn, sh);
    return s;
}

double distflow_residual(const RadialNetwork& net, const TopologyMatrices& topo, const PowerFlowState& s,
                         const Eigen::VectorXd& pn, const Eigen::VectorXd& qn, const ShuntVector& sh) {
    const int L = net.num_lines();
    Eigen::VectorXd r = net.line_r(), x = net.line_x();
    Eigen::VectorXd bp(L), bq(L);
    for (int k = 0; k < L; ++k) {
        bp(k) = pn(k) + sh.g(k) * s.v(k + 1) + r(k) * s.f(k);
        bq(k) = qn(k) + sh.b(k) * s.v(k + 1) + x(k) * s.f(k);
    }
    for (int b = 1; b <= L; ++b) {
        for (int c : topo.children[static_cast<std::size_t>(b)]) {
            bp(b - 1) += s.P(c - 1);
            bq(b - 1) += s.Q(c - 1);
        }
    }
    double res = 0.0;
    for (int b = 1; b <= L; ++b) {
        int k = b - 1;
        double vu = v_up_of(net, s.v, b);
        double dv = vu - 2.0 * (r(k) * s.P(k) + x(k) * s.Q(k)) + (r(k) * r(k) + x(k) * x(k)) * s.f(k) - s.v(b);
        double df = s.f(k) - (s.P(k) * s.P(k) + s.Q(k) * s.Q(k)) / vu;
        res = std::max({res, std::abs(bp(k) - s.P(k)), std::abs(bq(k) - s.Q(k)), std::abs(dv), std::abs(df)});
    }
    return res;
}

Eigen::VectorXd lossless_voltage(const RadialNetwork& net, const TopologyMatrices& topo, const ShuntVector& sh,
                                 const Eigen::VectorXd& pn, const Eigen::VectorXd& qn) {
    const int L = net.num_lines();
    if (L == 0) return Eigen::VectorXd();
    Eigen::VectorXd r = net.line_r(), x = net.line_x();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(L, L) - topo.G.transpose() +
                        2.0 * r.asDiagonal() * topo.H * sh.g.asDiagonal() +
                        2.0 * x.asDiagonal() * topo.H * sh.b.asDiagonal();
    Eigen::VectorXd rhs = -2.0 * r.cwiseProduct(topo.H * pn) - 2.0 * x.cwiseProduct(topo.H * qn);
    for (int b = 1; b <= L; ++b) {
        if (net.line(b).up == 0) rhs(b - 1) += net.v0;
    }
    return A.partialPivLu().solve(rhs);
}

PowerFlowState adhoc_iteration(const RadialNetwork& net, const TopologyMatrices& topo, const Eigen::VectorXd& v_hat,
                               const Eigen::MatrixXd& D, const Eigen::VectorXd& pn, const Eigen::VectorXd& qn,
                               const ShuntVector& sh, const PowerFlowState& start, const AdhocOptions& opt) {
    const int L = net.num_lines();
    Eigen::VectorXd r = net.line_r(), x = net.line_x();
    Eigen::VectorXd Hp = topo.H * pn, Hq = topo.H * qn;
    PowerFlowState s = start;
    Eigen::VectorXd v = s.v.tail(L);
    double last_delta = std::numeric_limits<double>::infinity();
    int growth = 0;
    for (int it = 1; it <= opt.max_iters; ++it) {
        Eigen::VectorXd f(L);
        for (int b = 1; b <= L; ++b) {
            int up = net.line(b).up;
            double vu = up == 0 ? net.v0 : v(up - 1);
            f(b - 1) = (s.P(b - 1) * s.P(b - 1) + s.Q(b - 1) * s.Q(b - 1)) / vu;
        }
        v = v_hat - D * f;
        if (L > 0 && !(v.minCoeff() > 0.0)) throw Error(ErrorCode::NonPositiveVoltage, "ad-hoc iteration");
        s.P = Hp + topo.H * (sh.g.cwiseProduct(v) + r.cwiseProduct(f));
        s.Q = Hq + topo.H * (sh.b.cwiseProduct(v) + x.cwiseProduct(f));
        double delta = L > 0 ? (f - s.f).cwiseAbs().maxCoeff() : 0.0;
        s.f = f;
        s.iterations = it;
        if (!std::isfinite(delta)) throw Error(ErrorCode::Diverged, "non-finite iterate");
        if (delta <= opt.eps_stop) {
            s.converged = true;
            break;
        }
        growth = delta > last_delta ? growth + 1 : 0;
        if (growth >= opt.divergence_window) throw Error(ErrorCode::Diverged, "residual grew for " + std::to_string(growth) + " iterations");
        last_delta = delta;
    }
    s.v.resize(L + 1);
    s.v(0) = net.v0;
    s.v.tail(L) = v;
    s.residual = distflow_residual(net, topo, s, pn, qn, sh);
    return s;
}

PowerPair clip_capability(const IbdgSpec& spec, PowerPair pq) {
    const double tan_phi = std::tan(std::acos(std::clamp(spec.mu_min, 1e-6, 1.0)));
    pq.p = std::clamp(pq.p, 0.0, spec.p_max);
    pq.q = std::clamp(pq.q, spec.q_min, spec.q_max);
    pq.q = std::clamp(pq.q, -tan_phi * pq.p, tan_phi * pq.p);
    if (pq.p * pq.p + pq.q * pq.q > spec.s_max * spec.s_max) {
        double q = std::clamp(pq.q, -spec.s_max, spec.s_max);
        pq.p = std::sqrt(std::max(0.0, spec.s_max * spec.s_max - q * q));
        pq.q = std::clamp(q, -tan_phi * pq.p, tan_phi * pq.p);
    }
    return pq;
}

OracleResult exact_droop_powerflow(const RadialNetwork& net, const TopologyMatrices& topo,
                                   const std::vector<ExactDroopCurve>& curves, const Eigen::VectorXd& p_ava,
                                   const Eigen::VectorXd& load_mult, const OracleOptions& opt) {
    const int N = net.num_buses();
    const int L = N - 1;
    const std::size_t G = net.ibdgs.size();
    ShuntVector sh = network_shunts(net);
    Eigen::VectorXd base_p(L), base_q(L);
    for (int b = 1; b < N; ++b) {
        base_p(b - 1) = net.bus(b).load_p * load_mult(b);
        base_q(b - 1) = net.bus(b).load_q * load_mult(b);
    }
    auto evaluate = [&](const Eigen::VectorXd& V) {
        std::vector<PowerPair> inj(G);
        for (std::size_t i = 0; i < G; ++i) {
            const IbdgSpec& g = net.ibdgs[i];
            double pa = p_ava(static_cast<Eigen::Index>(i));
            PowerPair pq{pa, 0.0};
            if (g.dispatchable && i < curves.size()) pq = eval_exact_droop(curves[i], V(g.bus), pa);
            inj[i] = clip_capability(g, pq);
        }
        return inj;
    };
    OracleResult out;
    Eigen::VectorXd V = Eigen::VectorXd::Constant(N, std::sqrt(net.v0));
    std::vector<PowerPair> inj = evaluate(V);
    PowerFlowState st;
    bool have_state = false;
    bool converged = false;
    for (int k = 1; k <= opt.max_outer; ++k) {
        if (k > 1) {
            std::vector<PowerPair> fresh = evaluate(V);
            if (k > opt.relax_after) {
                for (std::size_t i = 0; i < G; ++i) {
                    inj[i].p = opt.relax * fresh[i].p + (1.0 - opt.relax) * inj[i].p;
                    inj[i].q = opt.relax * fresh[i].q + (1.0 - opt.relax) * inj[i].q;
                }
            } else {
                inj = fresh;
            }
        }
        Eigen::VectorXd pn = base_p, qn = base_q;
        for (std::size_t i = 0; i < G; ++i) {
            pn(net.ibdgs[i].bus - 1) -= inj[i].p;
            qn(net.ibdgs[i].bus - 1) -= inj[i].q;
        }
        st = constant_injection_powerflow(net, topo, pn, qn, sh, opt.sweep, have_state ? &st : nullptr);
        have_state = true;
        if (!st.converged) throw Error(ErrorCode::NotConverged, "inner sweep did not converge");
        Eigen::VectorXd Vn = st.v.cwiseSqrt();
        double delta = (Vn - V).cwiseAbs().maxCoeff();
        V = Vn;
        out.outer_iterations = k;
        if (delta <= opt.tol && k > 1) {
            converged = true;
            break;
        }
        if (G == 0 || curves.empty()) {
            converged = true;
            break;
        }
    }
    if (!converged) throw Error(ErrorCode::NotConverged, "droop loop exceeded " + std::to_string(opt.max_outer) + " passes");
    out.state = st;
    out.injections = inj;
    return out;
}

SecurityVerdict verify_security(const std::vector<PowerFlowState>& states, const RadialNetwork& net,
                                const SecurityOptions& opt) {
    SecurityVerdict v;
    v.worst_v_hi = -std::numeric_limits<double>::infinity();
    v.worst_v_lo = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < states.size(); ++t) {
        const PowerFlowState& s = states[t];
        if (!s.converged) throw Error(ErrorCode::UnconvergedState, "step " + std::to_string(t));
        for (int b = 0; b < net.num_buses(); ++b) {
            double V = std::sqrt(s.v(b));
            v.worst_v_hi = std::max(v.worst_v_hi, V);
            v.worst_v_lo = std::min(v.worst_v_lo, V);
            if (b == 0) continue;
            double hi = std::sqrt(net.bus(b).v_max), lo = std::sqrt(net.bus(b).v_min);
            if (V > hi + opt.v_tol) v.violations.push_back({"v_hi", b, static_cast<int>(t), V - hi});
            if (V < lo - opt.v_tol) v.violations.push_back({"v_lo", b, static_cast<int>(t), lo - V});
        }
        for (int l = 1; l < net.num_buses(); ++l) {
            double imax = net.line(l).i_max;
            double ratio = s.f(l - 1) / imax;
            v.worst_current_ratio = std::max(v.worst_current_ratio, ratio);
            if (ratio > 1.0 + opt.i_tol) v.violations.push_back({"current", l, static_cast<int>(t), s.f(l - 1) - imax});
        }
    }
    if (states.empty()) {
        v.worst_v_hi = v.worst_v_lo = std::sqrt(net.v0);
    }
    return v;
}

namespace {

struct LeafSolution {
    double v = 0.0, f = 0.0, P = 0.0, Q = 0.0;
};

// Receiving-end consumption a + y*v_l; returns the high-voltage root.
std::optional<LeafSolution> solve_line(double v_up, double ap, double aq, double r, double x, double g, double b) {
    const double z2 = r * r + x * x;
    const double A = 1.0 + 2.0 * (r * g + x * b) + z2 * (g * g + b * b);
    const double B = 2.0 * (r * ap + x * aq) - v_up + 2.0 * z2 * (ap * g + aq * b);
    const double C = z2 * (ap * ap + aq * aq);
    const double disc = B * B - 4.0 * A * C;
    if (disc < 0.0 || A <= 0.0) return std::nullopt;
    LeafSolution s;
    // Cancellation-free form of (-B + sqrt(disc)) / 2A.
    double sq = std::sqrt(disc);
    s.v = B < 0.0 ? (-B + sq) / (2.0 * A) : (2.0 * C) / (-B - sq);
    if (!(s.v > 0.0) || !std::isfinite(s.v)) return std::nullopt;
    double pr = ap + g * s.v, qr = aq + b * s.v;
    s.f = (pr * pr + qr * qr) / s.v;
    s.P = pr + r * s.f;
    s.Q = qr + x * s.f;
    return s;
}

}  // namespace

PowerFlowState brute_force_small(const RadialNetwork& net, const Eigen::VectorXd& pn, const Eigen::VectorXd& qn,
                                 const ShuntVector& sh) {
    const int N = net.num_buses();
    if (N < 1 || N > 3) throw Error(ErrorCode::InvalidIndex, "brute_force_small handles at most 3 buses");
    const int L = N - 1;
    PowerFlowState s;
    s.v = Eigen::VectorXd::Constant(N, net.v0);
    s.f = s.P = s.Q = Eigen::VectorXd::Zero(L);
    s.converged = true;
    auto leaf = [&](int id, double v_up) {
        const Line& l = net.line(id);
        auto sol = solve_line(v_up, pn(id - 1), qn(id - 1), l.r, l.x, sh.g(id - 1), sh.b(id - 1));
        if (!sol) throw Error(ErrorCode::NoRealSolution, "line " + std::to_string(id) + " beyond loadability");
        return *sol;
    };
    auto store = [&](int id, const LeafSolution& sol) {
        s.v(id) = sol.v;
        s.f(id - 1) = sol.f;
        s.P(id - 1) = sol.P;
        s.Q(id - 1) = sol.Q;
    };
    if (L == 0) return s;
    bool chain = L == 2 && (net.line(1).up != 0 || net.line(2).up != 0);
    if (!chain) {
        for (int id = 1; id <= L; ++id) store(id, leaf(id, net.v0));
        return s;
    }
    const int top = net.line(1).up == 0 ? 1 : 2;
    const int low = 3 - top;
    const Line& lt = net.line(top);
    // Scalar residual in the top bus voltage; everything below is closed form.
    auto residual = [&](double vt) -> std::optional<double> {
        auto child = solve_line(vt, pn(low - 1), qn(low - 1), net.line(low).r, net.line(low).x, sh.g(low - 1),
                                sh.b(low - 1));
        if (!child) return std::nullopt;
        double pr = pn(top - 1) + child->P + sh.g(top - 1) * vt;
        double qr = qn(top - 1) + child->Q + sh.b(top - 1) * vt;
        double z2 = lt.r * lt.r + lt.x * lt.x;
        return vt + 2.0 * (lt.r * pr + lt.x * qr) + z2 * (pr * pr + qr * qr) / vt - net.v0;
    };
    const int grid = 4000;
    const double lo_v = 1e-3 * net.v0, hi_v = 4.0 * net.v0;
    std::optional<std::pair<double, double>> bracket;
    std::optional<double> prev;
    double prev_x = hi_v;
    for (int k = grid; k >= 0; --k) {
        double vt = lo_v + (hi_v - lo_v) * k / grid;
        auto r = residual(vt);
        if (r && prev && ((*r <= 0.0) != (*prev <= 0.0))) {
            bracket = std::make_pair(vt, prev_x);
            break;
        }
        if (r) {
            prev = r;
            prev_x = vt;
        } else {
            prev.reset();
        }
    }
    if (!bracket) throw Error(ErrorCode::NoRealSolution, "no operating point on the chain");
    double a = bracket->first, b = bracket->second;
    double ra = *residual(a);
    for (int it = 0; it < 200 && b - a > 1e-16 * b; ++it) {
        double m = 0.5 * (a + b);
        auto rm = residual(m);
        if (!rm) { a = m; continue; }
        if ((*rm <= 0.0) == (ra <= 0.0)) { a = m; ra = *rm; } else { b = m; }
    }
    double vt = 0.5 * (a + b);
    auto child = solve_line(vt, pn(low - 1), qn(low - 1), net.line(low).r, net.line(low).x, sh.g(low - 1),
                            sh.b(low - 1));
    store(low, *child);
    double pr = pn(top - 1) + child->P + sh.g(top - 1) * vt;
    double qr = qn(top - 1) + child->Q + sh.b(top - 1) * vt;
    LeafSolution t;
    t.v = vt;
    t.f = (pr * pr + qr * qr) / vt;
    t.P = pr + lt.r * t.f;
    t.Q = qr + lt.x * t.f;
    store(top, t);
    return s;
}

}  // namespace maropf
