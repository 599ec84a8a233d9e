#include "maropf/socp.hpp"

#include "ldl.hpp"
#include "maropf/errors.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <map>
#include <ostream>
#include <tuple>

namespace maropf {

void SolverConfig::validate() const {
    if (!(feas_tol > 0.0) || !(opt_tol > 0.0) || !(int_tol > 0.0))
        throw Error(ErrorCode::InvalidProgram, "solver tolerances must be positive");
    if (!(bb_gap >= 0.0)) throw Error(ErrorCode::InvalidProgram, "bb_gap must be nonnegative");
    if (max_iters <= 0 || bb_node_limit <= 0 || dive_interval <= 0) throw Error(ErrorCode::InvalidProgram, "iteration and node limits must be positive");
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::IterLimit: return "iter_limit";
        case SolveStatus::NumericalBreakdown: return "numerical_breakdown";
        case SolveStatus::GapLimit: return "gap_limit";
        case SolveStatus::NodeLimit: return "node_limit";
    }
    return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;
using Vec = Eigen::VectorXd;

// Orthant of dimension l followed by Lorentz cones ||u1|| <= u0.
struct Cones {
    int l = 0;
    std::vector<int> start;
    std::vector<int> dim;
    int m = 0;

    int degree() const { return l + static_cast<int>(dim.size()); }
};

struct StandardForm {
    std::vector<int> col_of_var;
    std::vector<int> var_of_col;
    Vec fixed;
    Vec c;
    double c0 = 0.0;
    SpMat A, G;
    Vec b, h;
    Cones K;
    bool infeasible = false;
    std::string why;
};

struct Reduced {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;
};

bool same(const Reduced& a, const Reduced& b) { return a.terms == b.terms && a.constant == b.constant; }

StandardForm compile(const ConicProgram& prog, const SolverConfig& cfg) {
    StandardForm sf;
    const int nv = prog.num_variables();
    const auto& vars = prog.variables();
    sf.col_of_var.assign(nv, -1);
    sf.fixed = Vec::Zero(nv);
    for (int i = 0; i < nv; ++i) {
        const Variable& v = vars[i];
        if (v.lo > v.hi) {
            sf.infeasible = true;
            sf.why = "variable " + v.name + " has lo > hi";
        }
        bool fixed = cfg.presolve_fixed && v.lo == v.hi && std::isfinite(v.lo);
        if (fixed) {
            sf.fixed(i) = v.lo;
        } else {
            sf.col_of_var[i] = static_cast<int>(sf.var_of_col.size());
            sf.var_of_col.push_back(i);
        }
    }
    const int n = static_cast<int>(sf.var_of_col.size());

    auto reduce = [&](const std::vector<Term>& terms, double constant) {
        Reduced r;
        r.constant = constant;
        for (const Term& t : terms) {
            int c = sf.col_of_var[t.var];
            if (c < 0) r.constant += t.coef * sf.fixed(t.var);
            else r.terms.emplace_back(c, t.coef);
        }
        std::sort(r.terms.begin(), r.terms.end());
        return r;
    };
    auto const_ok = [](double lhs, Sense s, double rhs) {
        double tol = 1e-9 * (1.0 + std::abs(rhs));
        if (s == Sense::Le) return lhs <= rhs + tol;
        if (s == Sense::Ge) return lhs >= rhs - tol;
        return std::abs(lhs - rhs) <= tol;
    };

    sf.c = Vec::Zero(n);
    {
        Reduced o = reduce(prog.objective().terms, prog.objective().constant);
        for (auto [c, v] : o.terms) sf.c(c) += v;
        sf.c0 = o.constant;
    }

    std::vector<Trip> at, gt;
    std::vector<double> bv, hv;
    using Key = std::tuple<int, double, std::vector<std::pair<int, double>>>;
    std::map<Key, int> seen;
    for (const LinearRow& row : prog.rows()) {
        Reduced r = reduce(row.terms, 0.0);
        double rhs = row.rhs - r.constant;
        if (r.terms.empty()) {
            if (!const_ok(0.0, row.sense, rhs)) {
                sf.infeasible = true;
                sf.why = "row " + row.tag + " is infeasible after fixing variables";
            }
            continue;
        }
        if (cfg.presolve_dedup) {
            Key key{static_cast<int>(row.sense), rhs, r.terms};
            if (!seen.emplace(std::move(key), 1).second) continue;
        }
        if (row.sense == Sense::Eq) {
            int i = static_cast<int>(bv.size());
            for (auto [c, v] : r.terms) at.emplace_back(i, c, v);
            bv.push_back(rhs);
        } else {
            double sgn = row.sense == Sense::Le ? 1.0 : -1.0;
            int i = static_cast<int>(hv.size());
            for (auto [c, v] : r.terms) gt.emplace_back(i, c, sgn * v);
            hv.push_back(sgn * rhs);
        }
    }
    for (int c = 0; c < n; ++c) {
        const Variable& v = vars[sf.var_of_col[c]];
        if (std::isfinite(v.lo)) {
            gt.emplace_back(static_cast<int>(hv.size()), c, -1.0);
            hv.push_back(-v.lo);
        }
        if (std::isfinite(v.hi)) {
            gt.emplace_back(static_cast<int>(hv.size()), c, 1.0);
            hv.push_back(v.hi);
        }
    }
    sf.K.l = static_cast<int>(hv.size());

    // Slack rows s = k + coef^T x are written as h - Gx with G = -coef, h = k.
    auto emit = [&](const std::vector<std::pair<const Reduced*, double>>& combo) {
        int i = static_cast<int>(hv.size());
        double k = 0.0;
        for (auto [e, w] : combo) {
            k += w * e->constant;
            for (auto [c, v] : e->terms) gt.emplace_back(i, c, -w * v);
        }
        hv.push_back(k);
    };
    const double r2 = std::sqrt(2.0), ir2 = 1.0 / std::sqrt(2.0);
    for (const RotatedCone& cone : prog.cones()) {
        Reduced a = reduce(cone.a.terms, cone.a.constant);
        Reduced b = reduce(cone.b.terms, cone.b.constant);
        std::vector<Reduced> u;
        bool all_const = a.terms.empty() && b.terms.empty();
        for (const AffineExpr& e : cone.u) {
            Reduced r = reduce(e.terms, e.constant);
            if (r.terms.empty() && r.constant == 0.0) continue;
            all_const = all_const && r.terms.empty();
            u.push_back(std::move(r));
        }
        if (all_const) {
            double uu = 0.0;
            for (const Reduced& r : u) uu += r.constant * r.constant;
            if (a.constant < -1e-12 || b.constant < -1e-12 || uu > a.constant * b.constant * (1.0 + 1e-9) + 1e-12) {
                sf.infeasible = true;
                sf.why = "cone " + cone.tag + " is infeasible after fixing variables";
            }
            continue;
        }
        int start = static_cast<int>(hv.size());
        if (same(a, b)) {
            emit({{&a, 1.0}});
            for (const Reduced& r : u) emit({{&r, 1.0}});
        } else {
            emit({{&a, ir2}, {&b, ir2}});
            emit({{&a, ir2}, {&b, -ir2}});
            for (const Reduced& r : u) emit({{&r, r2}});
        }
        sf.K.start.push_back(start);
        sf.K.dim.push_back(static_cast<int>(hv.size()) - start);
    }
    sf.K.m = static_cast<int>(hv.size());

    sf.A.resize(static_cast<int>(bv.size()), n);
    sf.A.setFromTriplets(at.begin(), at.end());
    sf.G.resize(sf.K.m, n);
    sf.G.setFromTriplets(gt.begin(), gt.end());
    sf.b = Eigen::Map<Vec>(bv.data(), static_cast<int>(bv.size()));
    sf.h = Eigen::Map<Vec>(hv.data(), static_cast<int>(hv.size()));
    return sf;
}

// ---- cone algebra -------------------------------------------------------

double cone_violation_max(const Cones& K, const Vec& s) {
    // Largest alpha such that s + alpha e sits on the boundary or beyond.
    double alpha = -kInf;
    for (int i = 0; i < K.l; ++i) alpha = std::max(alpha, -s(i));
    for (std::size_t k = 0; k < K.dim.size(); ++k) {
        int st = K.start[k], d = K.dim[k];
        alpha = std::max(alpha, s.segment(st + 1, d - 1).norm() - s(st));
    }
    return alpha;
}

void add_e(const Cones& K, Vec& s, double a) {
    for (int i = 0; i < K.l; ++i) s(i) += a;
    for (int st : K.start) s(st) += a;
}

double step_to_boundary(const Cones& K, const Vec& x, const Vec& dx) {
    double amax = kInf;
    for (int i = 0; i < K.l; ++i)
        if (dx(i) < 0.0) amax = std::min(amax, -x(i) / dx(i));
    for (std::size_t k = 0; k < K.dim.size(); ++k) {
        int st = K.start[k], d = K.dim[k];
        double x0 = x(st), d0 = dx(st);
        auto x1 = x.segment(st + 1, d - 1);
        auto d1 = dx.segment(st + 1, d - 1);
        double qa = d0 * d0 - d1.squaredNorm();
        double qb = 2.0 * (x0 * d0 - x1.dot(d1));
        double qc = std::max(0.0, x0 * x0 - x1.squaredNorm());
        double scale = std::max({std::abs(qa), std::abs(qb), qc, 1e-300});
        double a = kInf;
        if (std::abs(qa) <= 1e-14 * scale) {
            if (qb < 0.0) a = -qc / qb;
        } else {
            double disc = qb * qb - 4.0 * qa * qc;
            if (qa < 0.0) {
                double sq = std::sqrt(std::max(0.0, disc));
                // Positive root of qa a^2 + qb a + qc with qa < 0 < qc.
                a = qb > 0.0 ? (-qb - sq) / (2.0 * qa) : (2.0 * qc) / (-qb + sq);
            } else if (disc >= 0.0 && qb < 0.0) {
                double sq = std::sqrt(disc);
                a = (2.0 * qc) / (-qb + sq);
            }
        }
        if (d0 < 0.0) a = std::min(a, -x0 / d0);
        amax = std::min(amax, std::max(0.0, a));
    }
    return amax;
}

Vec jordan(const Cones& K, const Vec& u, const Vec& v) {
    Vec w(u.size());
    for (int i = 0; i < K.l; ++i) w(i) = u(i) * v(i);
    for (std::size_t k = 0; k < K.dim.size(); ++k) {
        int st = K.start[k], d = K.dim[k];
        w(st) = u.segment(st, d).dot(v.segment(st, d));
        w.segment(st + 1, d - 1) = u(st) * v.segment(st + 1, d - 1) + v(st) * u.segment(st + 1, d - 1);
    }
    return w;
}

// Solves lambda o x = w.
Vec jordan_div(const Cones& K, const Vec& lam, const Vec& w) {
    Vec x(w.size());
    for (int i = 0; i < K.l; ++i) x(i) = w(i) / lam(i);
    for (std::size_t k = 0; k < K.dim.size(); ++k) {
        int st = K.start[k], d = K.dim[k];
        double l0 = lam(st);
        auto l1 = lam.segment(st + 1, d - 1);
        double rho = l0 * l0 - l1.squaredNorm();
        double nu = l1.dot(w.segment(st + 1, d - 1));
        double x0 = (l0 * w(st) - nu) / rho;
        x(st) = x0;
        x.segment(st + 1, d - 1) = (w.segment(st + 1, d - 1) - x0 * l1) / l0;
    }
    return x;
}

struct Scaling {
    Vec wo;  // orthant: sqrt(s / z)
    std::vector<double> eta;
    std::vector<Vec> wbar;
    Vec lambda;
};

void apply_W(const Cones& K, const Scaling& S, const Vec& v, Vec& out, bool inverse) {
    out.resize(v.size());
    for (int i = 0; i < K.l; ++i) out(i) = inverse ? v(i) / S.wo(i) : v(i) * S.wo(i);
    for (std::size_t k = 0; k < K.dim.size(); ++k) {
        int st = K.start[k], d = K.dim[k];
        const Vec& w = S.wbar[k];
        double w0 = w(0);
        auto w1 = w.tail(d - 1);
        double v0 = v(st);
        auto v1 = v.segment(st + 1, d - 1);
        double sg = inverse ? -1.0 : 1.0;
        double dot = w1.dot(v1);
        double f = inverse ? 1.0 / S.eta[k] : S.eta[k];
        out(st) = f * (w0 * v0 + sg * dot);
        out.segment(st + 1, d - 1) = f * (sg * v0 * w1 + v1 + (dot / (1.0 + w0)) * w1);
    }
}

void apply_W2(const Cones& K, const Scaling* S, const Vec& v, Vec& out) {
    out.resize(v.size());
    if (!S) {
        out = v;
        return;
    }
    for (int i = 0; i < K.l; ++i) out(i) = S->wo(i) * S->wo(i) * v(i);
    for (std::size_t k = 0; k < K.dim.size(); ++k) {
        int st = K.start[k], d = K.dim[k];
        const Vec& w = S->wbar[k];
        double e2 = S->eta[k] * S->eta[k];
        auto vs = v.segment(st, d);
        double wv = w.dot(vs);
        // (2 w w^T - J) v
        out(st) = e2 * (2.0 * wv * w(0) - vs(0));
        out.segment(st + 1, d - 1) = e2 * (2.0 * wv * w.tail(d - 1) + vs.tail(d - 1));
    }
}

bool nt_scaling(const Cones& K, const Vec& s, const Vec& z, Scaling& S) {
    S.wo.resize(K.l);
    S.lambda.resize(s.size());
    for (int i = 0; i < K.l; ++i) {
        if (!(s(i) > 0.0) || !(z(i) > 0.0)) return false;
        S.wo(i) = std::sqrt(s(i) / z(i));
        S.lambda(i) = std::sqrt(s(i) * z(i));
    }
    S.eta.resize(K.dim.size());
    S.wbar.resize(K.dim.size());
    for (std::size_t k = 0; k < K.dim.size(); ++k) {
        int st = K.start[k], d = K.dim[k];
        auto sk = s.segment(st, d);
        auto zk = z.segment(st, d);
        double sres = sk(0) * sk(0) - sk.tail(d - 1).squaredNorm();
        double zres = zk(0) * zk(0) - zk.tail(d - 1).squaredNorm();
        if (!(sres > 0.0) || !(zres > 0.0) || sk(0) <= 0.0 || zk(0) <= 0.0) return false;
        Vec sb = sk / std::sqrt(sres);
        Vec zb = zk / std::sqrt(zres);
        double gamma = std::sqrt(std::max(1e-300, 0.5 * (1.0 + sb.dot(zb))));
        Vec w(d);
        w(0) = (sb(0) + zb(0)) / (2.0 * gamma);
        w.tail(d - 1) = (sb.tail(d - 1) - zb.tail(d - 1)) / (2.0 * gamma);
        // Renormalize so that w^T J w = 1 exactly.
        double wres = w(0) * w(0) - w.tail(d - 1).squaredNorm();
        if (!(wres > 0.0)) return false;
        w /= std::sqrt(wres);
        S.wbar[k] = w;
        S.eta[k] = std::pow(sres / zres, 0.25);
    }
    Vec wz;
    apply_W(K, S, z, wz, false);
    S.lambda.tail(s.size() - K.l) = wz.tail(s.size() - K.l);
    return true;
}

// ---- KKT system ------------------------------------------------------------

class Kkt {
public:
    Kkt(const SpMat& A, const SpMat& G, const Cones& K, double delta) : A_(A), G_(G), K_(K), delta_(delta) {
        n_ = static_cast<int>(A.cols());
        p_ = static_cast<int>(A.rows());
        m_ = static_cast<int>(G.rows());
        const int N = n_ + p_ + m_;
        std::vector<Trip> t;
        t.reserve(A.nonZeros() + G.nonZeros() + N + 16 * m_);
        for (int j = 0; j < n_; ++j) t.emplace_back(j, j, delta_);
        for (int j = 0; j < A.outerSize(); ++j)
            for (SpMat::InnerIterator it(A, j); it; ++it) t.emplace_back(j, n_ + static_cast<int>(it.row()), it.value());
        for (int j = 0; j < G.outerSize(); ++j)
            for (SpMat::InnerIterator it(G, j); it; ++it)
                t.emplace_back(j, n_ + p_ + static_cast<int>(it.row()), it.value());
        for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -delta_);
        const int z0 = n_ + p_;
        for (int i = 0; i < K.l; ++i) t.emplace_back(z0 + i, z0 + i, 0.0);
        for (std::size_t k = 0; k < K.dim.size(); ++k)
            for (int a = 0; a < K.dim[k]; ++a)
                for (int b = a; b < K.dim[k]; ++b) t.emplace_back(z0 + K.start[k] + a, z0 + K.start[k] + b, 0.0);
        M_.resize(N, N);
        M_.setFromTriplets(t.begin(), t.end());
        M_.makeCompressed();
        // Locate the z-block diagonal and cone entries for quick updates.
        auto locate = [&](int r, int c) {
            const int* inner = M_.innerIndexPtr();
            const int* outer = M_.outerIndexPtr();
            const int* it = std::lower_bound(inner + outer[c], inner + outer[c + 1], r);
            return static_cast<int>(it - inner);
        };
        orth_slot_.resize(K.l);
        for (int i = 0; i < K.l; ++i) orth_slot_[i] = locate(z0 + i, z0 + i);
        cone_slot_.resize(K.dim.size());
        for (std::size_t k = 0; k < K.dim.size(); ++k) {
            int d = K.dim[k];
            cone_slot_[k].resize(d * d, -1);
            for (int a = 0; a < d; ++a)
                for (int b = a; b < d; ++b) cone_slot_[k][a * d + b] = locate(z0 + K.start[k] + a, z0 + K.start[k] + b);
        }
        std::vector<int> signs(N, -1);
        for (int j = 0; j < n_; ++j) signs[j] = 1;
        ldl_.analyze(M_, signs);
    }

    // S == nullptr means W = I.
    void factor(const Scaling* S) {
        S_ = S;
        double* val = M_.valuePtr();
        for (int i = 0; i < K_.l; ++i) {
            double w2 = S ? S->wo(i) * S->wo(i) : 1.0;
            val[orth_slot_[i]] = -w2 - delta_;
        }
        for (std::size_t k = 0; k < K_.dim.size(); ++k) {
            int d = K_.dim[k];
            for (int a = 0; a < d; ++a) {
                for (int b = a; b < d; ++b) {
                    double w2;
                    if (!S) {
                        w2 = a == b ? 1.0 : 0.0;
                    } else {
                        const Vec& w = S->wbar[k];
                        double e2 = S->eta[k] * S->eta[k];
                        double J = a == b ? (a == 0 ? 1.0 : -1.0) : 0.0;
                        w2 = e2 * (2.0 * w(a) * w(b) - J);
                    }
                    val[cone_slot_[k][a * d + b]] = -w2 - (a == b ? delta_ : 0.0);
                }
            }
        }
        ldl_.factor(M_);
    }

    // Solves the unregularized system with iterative refinement.
    Vec solve(const Vec& rhs, int refine = 4) const {
        Vec x = rhs;
        ldl_.solve(x);
        double bnorm = rhs.lpNorm<Eigen::Infinity>();
        Vec r(rhs.size());
        double last = kInf;
        for (int it = 0; it < refine; ++it) {
            multiply(x, r);
            r = rhs - r;
            double rn = r.lpNorm<Eigen::Infinity>();
            if (rn <= 1e-12 * (1.0 + bnorm) || rn >= 0.5 * last) break;
            last = rn;
            ldl_.solve(r);
            x += r;
        }
        return x;
    }

private:
    void multiply(const Vec& v, Vec& out) const {
        auto vx = v.head(n_);
        auto vy = v.segment(n_, p_);
        auto vz = v.tail(m_);
        out.resize(v.size());
        out.head(n_) = A_.transpose() * vy + G_.transpose() * vz;
        out.segment(n_, p_) = A_ * vx;
        Vec w2;
        apply_W2(K_, S_, vz, w2);
        out.tail(m_) = G_ * vx - w2;
    }

    const SpMat& A_;
    const SpMat& G_;
    const Cones& K_;
    double delta_;
    int n_ = 0, p_ = 0, m_ = 0;
    SpMat M_;
    std::vector<int> orth_slot_;
    std::vector<std::vector<int>> cone_slot_;
    detail::QuasiDefiniteLdl ldl_;
    const Scaling* S_ = nullptr;
};

// ---- equilibration -------------------------------------------------------

struct Equil {
    Vec D;   // columns
    Vec EA;  // equality rows
    Vec EG;  // cone rows
};

Equil ruiz(const SpMat& A, const SpMat& G, const Cones& K, int passes) {
    const int n = static_cast<int>(A.cols());
    Equil e{Vec::Ones(n), Vec::Ones(A.rows()), Vec::Ones(G.rows())};
    SpMat As = A, Gs = G;
    auto clamp = [](double v) { return v < 1e-8 ? 1.0 : std::clamp(v, 1e-4, 1e4); };
    for (int pass = 0; pass < passes; ++pass) {
        Vec cn = Vec::Zero(n), ra = Vec::Zero(As.rows()), rg = Vec::Zero(Gs.rows());
        for (int j = 0; j < n; ++j) {
            for (SpMat::InnerIterator it(As, j); it; ++it) {
                double a = std::abs(it.value());
                cn(j) = std::max(cn(j), a);
                ra(it.row()) = std::max(ra(it.row()), a);
            }
            for (SpMat::InnerIterator it(Gs, j); it; ++it) {
                double a = std::abs(it.value());
                cn(j) = std::max(cn(j), a);
                rg(it.row()) = std::max(rg(it.row()), a);
            }
        }
        for (std::size_t k = 0; k < K.dim.size(); ++k) {
            double mx = rg.segment(K.start[k], K.dim[k]).maxCoeff();
            rg.segment(K.start[k], K.dim[k]).setConstant(mx);
        }
        Vec dc(n), da(As.rows()), dg(Gs.rows());
        for (int j = 0; j < n; ++j) dc(j) = 1.0 / std::sqrt(clamp(cn(j)));
        for (int i = 0; i < As.rows(); ++i) da(i) = 1.0 / std::sqrt(clamp(ra(i)));
        for (int i = 0; i < Gs.rows(); ++i) dg(i) = 1.0 / std::sqrt(clamp(rg(i)));
        As = da.asDiagonal() * As * dc.asDiagonal();
        Gs = dg.asDiagonal() * Gs * dc.asDiagonal();
        e.D = e.D.cwiseProduct(dc);
        e.EA = e.EA.cwiseProduct(da);
        e.EG = e.EG.cwiseProduct(dg);
    }
    return e;
}

// ---- interior point ------------------------------------------------------

struct IpmResult {
    SolveStatus status = SolveStatus::NumericalBreakdown;
    bool inaccurate = false;
    Vec x, y, z, s;
    double pcost = 0.0, dcost = 0.0, gap = 0.0, pres = 0.0, dres = 0.0;
    int iterations = 0;
};

struct Info {
    double pcost, dcost, gap, relgap, pres, dres, pinf, dinf;
    bool pinf_cert, dinf_cert;
};

IpmResult ipm(const StandardForm& sf, const SolverConfig& cfg) {
    const Cones& K = sf.K;
    const int n = static_cast<int>(sf.A.cols()), p = static_cast<int>(sf.A.rows()), m = K.m;
    Equil eq = cfg.equilibrate ? ruiz(sf.A, sf.G, K, 12) : Equil{Vec::Ones(n), Vec::Ones(p), Vec::Ones(m)};
    SpMat A = eq.EA.asDiagonal() * sf.A * eq.D.asDiagonal();
    SpMat G = eq.EG.asDiagonal() * sf.G * eq.D.asDiagonal();
    A.makeCompressed();
    G.makeCompressed();
    Vec c = eq.D.cwiseProduct(sf.c), b = eq.EA.cwiseProduct(sf.b), h = eq.EG.cwiseProduct(sf.h);

    const double bnorm = std::max(sf.b.size() ? sf.b.lpNorm<Eigen::Infinity>() : 0.0,
                                  sf.h.size() ? sf.h.lpNorm<Eigen::Infinity>() : 0.0);
    const double cnorm = sf.c.size() ? sf.c.lpNorm<Eigen::Infinity>() : 0.0;

    Kkt kkt(A, G, K, 7e-8);
    const int N = n + p + m;

    auto unscale = [&](const Vec& xs, const Vec& ys, const Vec& zs, const Vec& ss, Vec& x, Vec& y, Vec& z, Vec& s) {
        x = eq.D.cwiseProduct(xs);
        y = eq.EA.cwiseProduct(ys);
        z = eq.EG.cwiseProduct(zs);
        s = ss.cwiseQuotient(eq.EG);
    };
    auto info_of = [&](const Vec& xs, const Vec& ys, const Vec& zs, const Vec& ss, double tau) {
        Vec x, y, z, s;
        unscale(xs, ys, zs, ss, x, y, z, s);
        Info I{};
        double pc = sf.c.dot(x), dc = -sf.b.dot(y) - sf.h.dot(z);
        I.pcost = pc / tau;
        I.dcost = dc / tau;
        I.gap = s.dot(z) / (tau * tau);
        I.relgap = kInf;
        if (I.pcost < 0.0) I.relgap = I.gap / -I.pcost;
        else if (I.dcost > 0.0) I.relgap = I.gap / I.dcost;
        Vec rp1 = sf.A * x - tau * sf.b;
        Vec rp2 = sf.G * x + s - tau * sf.h;
        Vec rd = sf.A.transpose() * y + sf.G.transpose() * z + tau * sf.c;
        double rpn = std::max(rp1.size() ? rp1.lpNorm<Eigen::Infinity>() : 0.0, rp2.size() ? rp2.lpNorm<Eigen::Infinity>() : 0.0);
        double rdn = rd.size() ? rd.lpNorm<Eigen::Infinity>() : 0.0;
        I.pres = rpn / tau / (1.0 + bnorm);
        I.dres = rdn / tau / (1.0 + cnorm);
        // Certificates: a dual ray with b^T y + h^T z < 0, or a primal ray with c^T x < 0.
        double hz = sf.b.dot(y) + sf.h.dot(z);
        Vec ray_d = sf.A.transpose() * y + sf.G.transpose() * z;
        I.pinf = hz < 0.0 ? (ray_d.size() ? ray_d.lpNorm<Eigen::Infinity>() : 0.0) / -hz : kInf;
        Vec r1 = sf.A * x, r2 = sf.G * x + s;
        double rpr = std::max(r1.size() ? r1.lpNorm<Eigen::Infinity>() : 0.0, r2.size() ? r2.lpNorm<Eigen::Infinity>() : 0.0);
        I.dinf = pc < 0.0 ? rpr / -pc : kInf;
        I.pinf_cert = hz < 0.0 && I.pinf < cfg.feas_tol;
        I.dinf_cert = pc < 0.0 && I.dinf < cfg.feas_tol;
        return I;
    };

    IpmResult res;
    // Initial point.
    Vec x(n), y(p), z(m), s(m);
    double tau = 1.0, kappa = 1.0;
    try {
        kkt.factor(nullptr);
        Vec rhs(N);
        rhs << Vec::Zero(n), b, h;
        Vec sol = kkt.solve(rhs);
        x = sol.head(n);
        s = -sol.tail(m);
        double ap = cone_violation_max(K, s);
        if (m > 0 && ap >= -1e-8) add_e(K, s, 1.0 + std::max(0.0, ap));
        rhs << -c, Vec::Zero(p), Vec::Zero(m);
        sol = kkt.solve(rhs);
        y = sol.segment(n, p);
        z = sol.tail(m);
        double ad = cone_violation_max(K, z);
        if (m > 0 && ad >= -1e-8) add_e(K, z, 1.0 + std::max(0.0, ad));
    } catch (const Error&) {
        res.status = SolveStatus::NumericalBreakdown;
        return res;
    }

    const double deg = K.degree();
    Scaling S;
    Vec best_x = x, best_y = y, best_z = z, best_s = s;
    double best_tau = tau, best_merit = kInf;
    Info best_info{};
    bool have_best = false;
    char line[256];

    for (int it = 0; it <= cfg.max_iters; ++it) {
        Info I = info_of(x, y, z, s, tau);
        res.iterations = it;
        if (cfg.log) {
            std::snprintf(line, sizeof line,
                          "ipm iter=%d pcost=%.9e dcost=%.9e gap=%.3e pres=%.3e dres=%.3e k/t=%.3e\n", it, I.pcost,
                          I.dcost, I.gap, I.pres, I.dres, kappa / tau);
            *cfg.log << line;
        }
        if (!std::isfinite(I.pcost) || !std::isfinite(I.pres) || !std::isfinite(I.dres)) break;
        double merit = std::max({I.pres, I.dres, std::min(I.gap, I.relgap)});
        if (merit < best_merit) {
            best_merit = merit;
            best_x = x;
            best_y = y;
            best_z = z;
            best_s = s;
            best_tau = tau;
            best_info = I;
            have_best = true;
        }
        if (I.pres <= cfg.feas_tol && I.dres <= cfg.feas_tol && (I.gap <= cfg.opt_tol || I.relgap <= cfg.opt_tol)) {
            res.status = SolveStatus::Optimal;
            break;
        }
        if (I.pinf_cert) {
            res.status = SolveStatus::Infeasible;
            break;
        }
        if (I.dinf_cert) {
            res.status = SolveStatus::Unbounded;
            break;
        }
        if (it == cfg.max_iters) {
            res.status = SolveStatus::IterLimit;
            break;
        }

        // Residuals of the homogeneous embedding (scaled data).
        Vec rx = A.transpose() * y + G.transpose() * z + tau * c;
        Vec ry = -(A * x) + tau * b;
        Vec rz = -(G * x) + tau * h - s;
        double rt = -c.dot(x) - b.dot(y) - h.dot(z) - kappa;
        double mu = (s.dot(z) + tau * kappa) / (deg + 1.0);

        if (!nt_scaling(K, s, z, S)) break;
        try {
            kkt.factor(&S);
        } catch (const Error&) {
            break;
        }
        Vec rhs1(N);
        rhs1 << -c, b, h;
        Vec u1 = kkt.solve(rhs1);
        const Vec& lam = S.lambda;

        auto direction = [&](double sigma, const Vec& ds_rhs, double dk_rhs, Vec& dx, Vec& dy, Vec& dz, Vec& ds,
                             double& dtau, double& dkap) {
            Vec wl;
            apply_W(K, S, jordan_div(K, lam, ds_rhs), wl, false);
            Vec q(N);
            q << -(1.0 - sigma) * rx, (1.0 - sigma) * ry, (1.0 - sigma) * rz + wl;
            Vec u2 = kkt.solve(q);
            double num = -(1.0 - sigma) * rt - dk_rhs / tau + c.dot(u2.head(n)) + b.dot(u2.segment(n, p)) +
                         h.dot(u2.tail(m));
            double den = kappa / tau - c.dot(u1.head(n)) - b.dot(u1.segment(n, p)) - h.dot(u1.tail(m));
            dtau = num / den;
            Vec d = u2 + dtau * u1;
            dx = d.head(n);
            dy = d.segment(n, p);
            dz = d.tail(m);
            Vec wdz;
            apply_W(K, S, dz, wdz, false);
            Vec t1 = jordan_div(K, lam, ds_rhs) + wdz;
            apply_W(K, S, t1, ds, false);
            ds = -ds;
            dkap = -(dk_rhs + kappa * dtau) / tau;
        };
        auto max_step = [&](const Vec& ds, const Vec& dz, double dtau, double dkap) {
            double a = std::min(step_to_boundary(K, s, ds), step_to_boundary(K, z, dz));
            if (dtau < 0.0) a = std::min(a, -tau / dtau);
            if (dkap < 0.0) a = std::min(a, -kappa / dkap);
            return a;
        };

        Vec dxa, dya, dza, dsa, dx, dy, dz, ds;
        double dta, dka, dt, dk;
        Vec ll = jordan(K, lam, lam);
        direction(0.0, ll, kappa * tau, dxa, dya, dza, dsa, dta, dka);
        double aa = std::min(1.0, max_step(dsa, dza, dta, dka));
        double sigma = std::clamp(std::pow(1.0 - aa, 3.0), 0.0, 1.0);

        Vec wids, wdz;
        apply_W(K, S, dsa, wids, true);
        apply_W(K, S, dza, wdz, false);
        Vec dsr = ll + jordan(K, wids, wdz);
        Vec e = Vec::Zero(m);
        add_e(K, e, 1.0);
        dsr -= sigma * mu * e;
        double dkr = kappa * tau + dka * dta - sigma * mu;
        direction(sigma, dsr, dkr, dx, dy, dz, ds, dt, dk);
        double amax = max_step(ds, dz, dt, dk);
        double alpha = std::min(1.0, 0.99 * amax);
        if (!std::isfinite(alpha) || alpha < 1e-10) break;

        x += alpha * dx;
        y += alpha * dy;
        z += alpha * dz;
        s += alpha * ds;
        tau += alpha * dt;
        kappa += alpha * dk;
        if (!(tau > 0.0) || !(kappa > 0.0) || !x.allFinite() || !z.allFinite()) break;
    }

    if (res.status != SolveStatus::Optimal && res.status != SolveStatus::Infeasible &&
        res.status != SolveStatus::Unbounded) {
        if (have_best) {
            x = best_x;
            y = best_y;
            z = best_z;
            s = best_s;
            tau = best_tau;
            const Info& I = best_info;
            if (I.pres <= 1e-5 && I.dres <= 1e-5 && (I.gap <= 1e-5 || I.relgap <= 1e-5)) res.inaccurate = true;
        }
        if (res.status != SolveStatus::IterLimit) res.status = SolveStatus::NumericalBreakdown;
    }

    Info I = info_of(x, y, z, s, tau);
    unscale(x, y, z, s, res.x, res.y, res.z, res.s);
    if (res.status != SolveStatus::Infeasible && res.status != SolveStatus::Unbounded) {
        res.x /= tau;
        res.y /= tau;
        res.z /= tau;
        res.s /= tau;
    }
    res.pcost = I.pcost;
    res.dcost = I.dcost;
    res.gap = I.gap;
    res.pres = I.pres;
    res.dres = I.dres;
    return res;
}

}  // namespace

Solution solve_socp(const ConicProgram& program, const SolverConfig& config) {
    config.validate();
    Solution out;
    StandardForm sf = compile(program, config);
    if (sf.infeasible) {
        out.status = SolveStatus::Infeasible;
        if (config.log) *config.log << "presolve infeasible: " << sf.why << '\n';
        return out;
    }
    const int n = static_cast<int>(sf.var_of_col.size());
    auto expand = [&](const Vec& xr) {
        Vec x = sf.fixed;
        for (int c = 0; c < n; ++c) x(sf.var_of_col[c]) = xr(c);
        return x;
    };
    if (n == 0) {
        // Nothing left to decide; compile already verified the constant constraints.
        out.status = SolveStatus::Optimal;
        out.x = sf.fixed;
        out.objective = out.dual_objective = sf.c0;
        return out;
    }
    if (sf.K.m == 0 && sf.A.rows() == 0) {
        // Unconstrained linear objective.
        if (sf.c.lpNorm<Eigen::Infinity>() > 0.0) {
            out.status = SolveStatus::Unbounded;
            return out;
        }
        out.status = SolveStatus::Optimal;
        out.x = expand(Vec::Zero(n));
        out.objective = out.dual_objective = sf.c0;
        return out;
    }
    IpmResult r = ipm(sf, config);
    out.status = r.status;
    out.inaccurate = r.inaccurate;
    out.iterations = r.iterations;
    out.pres = r.pres;
    out.dres = r.dres;
    out.gap = r.gap;
    if (r.status == SolveStatus::Optimal || r.inaccurate) {
        out.x = expand(r.x);
        out.objective = program.objective_value(out.x);
        out.dual_objective = r.dcost + sf.c0;
    }
    return out;
}

}  // namespace maropf
