#include "maropf/opf_builder.hpp"

#include "maropf/errors.hpp"

#include <algorithm>
#include <cmath>

namespace maropf {

std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::P: return "P";
        case Quantity::Q: return "Q";
        case Quantity::V: return "v";
        case Quantity::F: return "f";
        case Quantity::PHat: return "P_hat";
        case Quantity::QHat: return "Q_hat";
        case Quantity::VHat: return "v_hat";
        case Quantity::PLo: return "P_lo";
        case Quantity::QLo: return "Q_lo";
        case Quantity::PUp: return "P_up";
        case Quantity::QUp: return "Q_up";
        case Quantity::FUp: return "f_up";
        case Quantity::Pg: return "pg";
        case Quantity::Qg: return "qg";
        case Quantity::PgHat: return "pg_hat";
        case Quantity::QgHat: return "qg_hat";
        case Quantity::VDev: return "v_dev";
        case Quantity::Y: return "y";
        case Quantity::V0p: return "v0p";
        case Quantity::V0q: return "v0q";
        case Quantity::Qg0: return "qg0";
    }
    return "?";
}

std::string to_string(Formulation f) { return f == Formulation::Ropf ? "ropf" : "maropf"; }

void VariableMap::insert(Quantity kind, int index, int t, int var) {
    VarKey key{kind, index, t};
    if (!by_key_.emplace(key, var).second || !by_var_.emplace(var, key).second)
        throw Error(ErrorCode::InvalidProgram, "duplicate variable " + to_string(kind));
}

std::optional<int> VariableMap::find(Quantity kind, int index, int t) const {
    auto it = by_key_.find({kind, index, t});
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
}

int VariableMap::at(Quantity kind, int index, int t) const {
    auto v = find(kind, index, t);
    if (!v)
        throw Error(ErrorCode::UnknownPair, "no variable " + to_string(kind) + "[" + std::to_string(index) + "," +
                                                std::to_string(t) + "]");
    return *v;
}

const VarKey& VariableMap::key_of(int var) const {
    auto it = by_var_.find(var);
    if (it == by_var_.end()) throw Error(ErrorCode::UnknownPair, "variable " + std::to_string(var) + " is not mapped");
    return it->second;
}

void ObjectiveWeights::validate() const {
    if (w_pc < 0.0 || w_pl < 0.0 || w_v < 0.0 || !(w_pc + w_pl + w_v > 0.0))
        throw Error(ErrorCode::InvalidProgram, "objective weights must be nonnegative with one positive");
}

namespace {

struct Builder {
    const RadialNetwork& net;
    const TopologyMatrices& topo;
    const ScenarioHorizon& hz;
    OpfProgram out;
    bool design = false;
    std::vector<std::vector<int>> units_at;  // IBDG positions per bus
    std::vector<char> controlled;            // per IBDG: has decision variables

    Builder(const RadialNetwork& n, const TopologyMatrices& t, const ScenarioHorizon& h, const BuildOptions& o)
        : net(n), topo(t), hz(h) {
        out.options = o;
        units_at.assign(net.num_buses(), {});
        for (std::size_t g = 0; g < net.ibdgs.size(); ++g) units_at[net.ibdgs[g].bus].push_back(static_cast<int>(g));
        controlled.assign(net.ibdgs.size(), 0);
        for (std::size_t g = 0; g < net.ibdgs.size(); ++g) controlled[g] = net.ibdgs[g].dispatchable;
    }

    bool maropf() const { return out.options.mode == Formulation::Maropf; }
    ConicProgram& prog() { return out.program; }

    int add(Quantity kind, int index, int t, double lo = -kInf, double hi = kInf, bool binary = false) {
        std::string name = to_string(kind) + "[" + std::to_string(index) + (t >= 0 ? "," + std::to_string(t) : "") + "]";
        int id = prog().add_variable(std::move(name), lo, hi, binary);
        out.vars.insert(kind, index, t, id);
        return id;
    }
    int at(Quantity kind, int index, int t) const { return out.vars.at(kind, index, t); }

    static std::string tag(const char* what, int l, int t) {
        return std::string(what) + "[" + std::to_string(l) + "," + std::to_string(t) + "]";
    }

    // Voltage of a bus; the slack is the constant v0.
    AffineExpr volt(Quantity kind, int bus, int t) const {
        if (bus == 0) return AffineExpr(net.v0);
        return AffineExpr::of(at(kind, bus, t));
    }

    double p_ava(int step, int g) const { return hz.p_ava(step, g); }

    // Injection of unit g at program step t; constants for units without variables.
    AffineExpr inj(int g, int t, bool reactive, bool hat) const {
        if (!controlled[g]) {
            return AffineExpr(reactive ? 0.0 : p_ava(out.step_index[t], g));
        }
        Quantity k = reactive ? (hat && design ? Quantity::QgHat : Quantity::Qg)
                              : (hat && design ? Quantity::PgHat : Quantity::Pg);
        return AffineExpr::of(at(k, g, t));
    }

    void declare_step(int t) {
        const int L = net.num_lines();
        const bool mar = maropf();
        for (int l = 1; l <= L; ++l) {
            const Line& ln = net.line(l);
            const Bus& b = net.bus(l);
            add(Quantity::P, l, t, -kInf, mar ? kInf : ln.p_max);
            add(Quantity::Q, l, t, -kInf, mar ? kInf : ln.q_max);
            add(Quantity::V, l, t, b.v_min, b.v_max);
            add(Quantity::F, l, t, 0.0, mar ? kInf : ln.i_max);
            if (mar) {
                add(Quantity::PHat, l, t);
                add(Quantity::QHat, l, t);
                // The lower bound is implied by v <= v_hat; it keeps the big-M range finite.
                add(Quantity::VHat, l, t, design ? b.v_min : -kInf, b.v_max);
                add(Quantity::PLo, l, t);
                add(Quantity::QLo, l, t);
                add(Quantity::PUp, l, t, -kInf, ln.p_max);
                add(Quantity::QUp, l, t, -kInf, ln.q_max);
                add(Quantity::FUp, l, t, 0.0, ln.i_max);
            }
            if (out.options.weights.w_v > 0.0) add(Quantity::VDev, l, t, 0.0, kInf);
        }
    }

    void declare_units(int t) {
        for (std::size_t gi = 0; gi < net.ibdgs.size(); ++gi) {
            int g = static_cast<int>(gi);
            if (!controlled[g]) continue;
            const IbdgSpec& u = net.ibdgs[g];
            // Droop output never exceeds the available power; in design mode this is
            // implied for integral y and tightens the relaxation.
            double hi = std::min(u.p_max, p_ava(out.step_index[t], g));
            add(Quantity::Pg, g, t, 0.0, hi);
            add(Quantity::Qg, g, t, u.q_min, u.q_max);
            if (design && maropf()) {
                add(Quantity::PgHat, g, t, -kInf, hi);
                add(Quantity::QgHat, g, t);
            }
        }
    }

    // Balance rows X_l - sum_children X_m - y_l * V - loss + injections = load.
    void balance(Quantity px, Quantity qx, Quantity vsys, std::optional<Quantity> loss, bool hat, int t,
                 const char* name) {
        const int L = net.num_lines();
        const int s = out.step_index[t];
        for (int l = 1; l <= L; ++l) {
            const Line& ln = net.line(l);
            const Bus& b = net.bus(l);
            double mult = hz.load_mult(s, l);
            for (int reactive = 0; reactive < 2; ++reactive) {
                Quantity x = reactive ? qx : px;
                AffineExpr e = AffineExpr::of(at(x, l, t));
                for (int m : topo.children[l]) e.add(at(x, m, t), -1.0);
                double y = reactive ? b.shunt_b : b.shunt_g;
                if (y != 0.0) e.add(at(vsys, l, t), -y);
                if (loss) e.add(at(*loss, l, t), reactive ? -ln.x : -ln.r);
                for (int g : units_at[l]) e.add(inj(g, t, reactive, hat));
                double load = (reactive ? b.load_q : b.load_p) * mult;
                prog().add_row(e, Sense::Eq, load, tag(reactive ? (std::string(name) + "_q").c_str()
                                                                 : (std::string(name) + "_p").c_str(), l, t));
            }
        }
    }

    void voltage_drop(Quantity px, Quantity qx, Quantity v, std::optional<Quantity> f, int t, const char* name) {
        for (int l = 1; l <= net.num_lines(); ++l) {
            const Line& ln = net.line(l);
            AffineExpr e = AffineExpr::of(at(v, l, t));
            e.add(volt(v, ln.up, t), -1.0);
            e.add(at(px, l, t), 2.0 * ln.r);
            e.add(at(qx, l, t), 2.0 * ln.x);
            if (f) e.add(at(*f, l, t), -(ln.r * ln.r + ln.x * ln.x));
            prog().add_row(e, Sense::Eq, 0.0, tag(name, l, t));
        }
    }

    void flow_step(int t) {
        const bool mar = maropf();
        balance(Quantity::P, Quantity::Q, Quantity::V, Quantity::F, false, t, "kcl");
        voltage_drop(Quantity::P, Quantity::Q, Quantity::V, Quantity::F, t, "kvl");
        for (int l = 1; l <= net.num_lines(); ++l) {
            RotatedCone c;
            c.a = AffineExpr::of(at(Quantity::F, l, t));
            c.b = volt(Quantity::V, net.line(l).up, t);
            c.u = {AffineExpr::of(at(Quantity::P, l, t)), AffineExpr::of(at(Quantity::Q, l, t))};
            c.tag = tag("flow_cone", l, t);
            prog().add_cone(std::move(c));
        }
        if (!mar) return;
        balance(Quantity::PHat, Quantity::QHat, Quantity::VHat, std::nullopt, true, t, "kcl_hat");
        voltage_drop(Quantity::PHat, Quantity::QHat, Quantity::VHat, std::nullopt, t, "kvl_hat");
        balance(Quantity::PLo, Quantity::QLo, Quantity::V, std::nullopt, false, t, "kcl_lo");
        balance(Quantity::PUp, Quantity::QUp, Quantity::V, Quantity::FUp, false, t, "kcl_up");
        for (int l = 1; l <= net.num_lines(); ++l) {
            const Line& ln = net.line(l);
            ConeFamily fam;
            fam.line = l;
            fam.t = t;
            const bool recv = out.options.cone == ConeVariant::ReceivingEnd;
            AffineExpr pu = AffineExpr::of(at(Quantity::PUp, l, t));
            AffineExpr qu = AffineExpr::of(at(Quantity::QUp, l, t));
            if (recv) {
                pu.add(at(Quantity::FUp, l, t), -ln.r);
                qu.add(at(Quantity::FUp, l, t), -ln.x);
            }
            AffineExpr pl = AffineExpr::of(at(Quantity::PLo, l, t));
            AffineExpr ql = AffineExpr::of(at(Quantity::QLo, l, t));
            const AffineExpr* ps[2] = {&pu, &pl};
            const AffineExpr* qs[2] = {&qu, &ql};
            static const char* names[4] = {"fup_cone_uu", "fup_cone_ul", "fup_cone_lu", "fup_cone_ll"};
            for (int k = 0; k < 4; ++k) {
                RotatedCone c;
                c.a = AffineExpr::of(at(Quantity::FUp, l, t));
                c.b = recv ? AffineExpr::of(at(Quantity::V, l, t)) : volt(Quantity::V, ln.up, t);
                c.u = {*ps[k / 2], *qs[k % 2]};
                c.tag = tag(names[k], l, t);
                fam.cones[k] = prog().add_cone(std::move(c));
            }
            out.families.push_back(fam);
            AffineExpr dp = AffineExpr::of(at(Quantity::P, l, t));
            dp.add(at(Quantity::PUp, l, t), -1.0);
            prog().add_row(dp, Sense::Le, 0.0, tag("p_le_pup", l, t));
            AffineExpr dq = AffineExpr::of(at(Quantity::Q, l, t));
            dq.add(at(Quantity::QUp, l, t), -1.0);
            prog().add_row(dq, Sense::Le, 0.0, tag("q_le_qup", l, t));
        }
    }

    void capability(int t) {
        for (std::size_t gi = 0; gi < net.ibdgs.size(); ++gi) {
            int g = static_cast<int>(gi);
            if (!controlled[g]) continue;
            const IbdgSpec& u = net.ibdgs[g];
            int pg = at(Quantity::Pg, g, t), qg = at(Quantity::Qg, g, t);
            double mu = std::clamp(u.mu_min, 1e-6, 1.0);
            double slope = std::sqrt(1.0 - mu * mu) / mu;
            AffineExpr w1 = AffineExpr::of(qg);
            w1.add(pg, -slope);
            prog().add_row(w1, Sense::Le, 0.0, tag("pf_hi", g, t));
            AffineExpr w2 = AffineExpr::of(qg, -1.0);
            w2.add(pg, -slope);
            prog().add_row(w2, Sense::Le, 0.0, tag("pf_lo", g, t));
            RotatedCone c;
            c.a = AffineExpr(u.s_max);
            c.b = AffineExpr(u.s_max);
            c.u = {AffineExpr::of(pg), AffineExpr::of(qg)};
            c.tag = tag("s_max", g, t);
            prog().add_cone(std::move(c));
        }
    }

    void deviation(int t) {
        if (out.options.weights.w_v <= 0.0) return;
        for (int l = 1; l <= net.num_lines(); ++l) {
            const Bus& b = net.bus(l);
            int dv = at(Quantity::VDev, l, t), v = at(Quantity::V, l, t);
            AffineExpr hi = AffineExpr::of(dv);
            hi.add(v, -1.0);
            prog().add_row(hi, Sense::Ge, -(b.v_target + b.v_threshold), tag("vdev_hi", l, t));
            AffineExpr lo = AffineExpr::of(dv);
            lo.add(v, 1.0);
            prog().add_row(lo, Sense::Ge, b.v_target - b.v_threshold, tag("vdev_lo", l, t));
        }
    }

    double big_m_v(const Bus& b) const {
        double need = b.v_max - b.v_min;
        if (out.options.big_m_v) {
            if (*out.options.big_m_v < need)
                throw Error(ErrorCode::InfeasibleBigM, "big-M for the activation rows is below the voltage range " +
                                                           std::to_string(need) + " at bus " + std::to_string(b.id));
            return *out.options.big_m_v;
        }
        return 2.0 * need;
    }

    double big_m_p(const IbdgSpec& u, const SlopePair& s, const Bus& b) const {
        double need = std::max(u.p_max, s.alpha_p * (b.v_max - b.v_min));
        if (out.options.big_m_p) {
            if (*out.options.big_m_p < need)
                throw Error(ErrorCode::InfeasibleBigM, "big-M for the P-V rows is below " + std::to_string(need) +
                                                           " for unit " + u.name);
            return *out.options.big_m_p;
        }
        return 2.0 * (u.p_max + s.alpha_p * b.v_max);
    }

    // Droop rows for one unit and step; hat selects the (v_hat, pg_hat, qg_hat) copy.
    void droop_rows(int g, int t, bool hat) {
        const IbdgSpec& u = net.ibdgs[g];
        const SlopePair& s = out.slopes[g];
        const Bus& b = net.bus(u.bus);
        double Mp = big_m_p(u, s, b);
        double pava = p_ava(out.step_index[t], g);
        int v = at(hat ? Quantity::VHat : Quantity::V, u.bus, t);
        int pg = at(hat ? Quantity::PgHat : Quantity::Pg, g, t);
        int qg = at(hat ? Quantity::QgHat : Quantity::Qg, g, t);
        int y = at(Quantity::Y, g, t);
        int v0p = at(Quantity::V0p, g, -1), v0q = at(Quantity::V0q, g, -1), q0 = at(Quantity::Qg0, g, -1);
        std::string sfx = hat ? "_hat" : "";

        AffineExpr q = AffineExpr::of(qg);
        q.add(v, s.alpha_q).add(v0q, -s.alpha_q).add(q0, -1.0);
        prog().add_row(q, Sense::Eq, 0.0, tag(("qv_droop" + sfx).c_str(), g, t));

        if (!hat) {
            double Mv = big_m_v(b);
            AffineExpr a = AffineExpr::of(v);
            a.add(v0p, -1.0).add(y, -Mv);
            prog().add_row(a, Sense::Ge, -Mv, tag("act_lo", g, t));
            prog().add_row(a, Sense::Le, 0.0, tag("act_hi", g, t));
        }
        AffineExpr e = AffineExpr::of(pg);
        e.add(v, s.alpha_p).add(v0p, -s.alpha_p);
        AffineExpr e1 = e;
        e1.add(y, Mp);
        prog().add_row(e1, Sense::Le, Mp + pava, tag(("pv_on_hi" + sfx).c_str(), g, t));
        AffineExpr e2 = e;
        e2.add(y, -Mp);
        prog().add_row(e2, Sense::Ge, pava - Mp, tag(("pv_on_lo" + sfx).c_str(), g, t));
        // pg = p_ava - alpha_p max(0, v - v0p) lies below both affine pieces; valid
        // for every y and much tighter than the big-M rows when y is fractional.
        prog().add_row(e, Sense::Le, pava, tag(("pv_hull" + sfx).c_str(), g, t));
        // Same rows with the smallest constants the bounds allow: v - v0p and
        // v_hat - v0p lie in [v_min - v_max, v_max - v_min].
        const double span = s.alpha_p * (b.v_max - b.v_min);
        AffineExpr e3 = e;
        e3.add(y, -span);
        prog().add_row(e3, Sense::Ge, pava - span, tag(("pv_on_tight" + sfx).c_str(), g, t));
        AffineExpr c3 = AffineExpr::of(pg);
        c3.add(y, std::min(pava, span));
        prog().add_row(c3, Sense::Ge, pava, tag(("pv_off_tight" + sfx).c_str(), g, t));
        AffineExpr c1 = AffineExpr::of(pg);
        c1.add(y, -Mp);
        prog().add_row(c1, Sense::Le, pava, tag(("pv_off_hi" + sfx).c_str(), g, t));
        AffineExpr c2 = AffineExpr::of(pg);
        c2.add(y, Mp);
        prog().add_row(c2, Sense::Ge, pava, tag(("pv_off_lo" + sfx).c_str(), g, t));
    }

    // For integral y, pg_hat = pg - alpha_p y (v_hat - v); with v <= v_hat this gives
    // pg - alpha_p (v_hat - v) <= pg_hat <= pg.
    void coupling_cuts(int g, int t) {
        const IbdgSpec& u = net.ibdgs[g];
        const double ap = out.slopes[g].alpha_p;
        int v = at(Quantity::V, u.bus, t), vh = at(Quantity::VHat, u.bus, t);
        int pg = at(Quantity::Pg, g, t), ph = at(Quantity::PgHat, g, t);
        AffineExpr order = AffineExpr::of(v);
        order.add(vh, -1.0);
        prog().add_row(order, Sense::Le, 0.0, tag("v_le_vhat", u.bus, t));
        AffineExpr hi = AffineExpr::of(ph);
        hi.add(pg, -1.0);
        prog().add_row(hi, Sense::Le, 0.0, tag("pghat_le_pg", g, t));
        AffineExpr lo = AffineExpr::of(ph);
        lo.add(pg, -1.0).add(vh, ap).add(v, -ap);
        prog().add_row(lo, Sense::Ge, 0.0, tag("pghat_ge", g, t));
    }

    void objective() {
        AffineExpr pc, pl, dv;
        for (int t = 0; t < out.steps; ++t) {
            for (std::size_t gi = 0; gi < net.ibdgs.size(); ++gi) {
                int g = static_cast<int>(gi);
                if (!controlled[g]) continue;
                pc.add_constant(p_ava(out.step_index[t], g));
                pc.add(at(Quantity::Pg, g, t), -1.0);
            }
            for (int l = 1; l <= net.num_lines(); ++l) {
                pl.add(at(Quantity::F, l, t), net.line(l).r);
                if (out.options.weights.w_v > 0.0) dv.add(at(Quantity::VDev, l, t), 1.0);
            }
        }
        pc.canonicalize();
        pl.canonicalize();
        dv.canonicalize();
        const ObjectiveWeights& w = out.options.weights;
        AffineExpr obj;
        obj.add(pc, w.w_pc).add(pl, w.w_pl).add(dv, w.w_v);
        out.f_pc = std::move(pc);
        out.f_pl = std::move(pl);
        out.f_v = std::move(dv);
        prog().set_objective(std::move(obj));
    }
};

void check_horizon(const RadialNetwork& network, const ScenarioHorizon& h) {
    if (h.size() < 1) throw Error(ErrorCode::LengthMismatch, "empty horizon");
    if (h.load_mult.rows() != h.size() || h.load_mult.cols() != network.num_buses() || h.p_ava.rows() != h.size() ||
        h.p_ava.cols() != static_cast<int>(network.ibdgs.size()))
        throw Error(ErrorCode::LengthMismatch, "horizon dimensions do not match the network");
}

}  // namespace

OpfProgram build_snapshot(const RadialNetwork& network, const TopologyMatrices& topo, const ScenarioHorizon& horizon,
                          int step, const BuildOptions& options) {
    options.weights.validate();
    check_horizon(network, horizon);
    if (step < 0 || step >= horizon.size()) throw Error(ErrorCode::InvalidIndex, "step outside the horizon");
    Builder b(network, topo, horizon, options);
    b.out.steps = 1;
    b.out.step_index = {step};
    b.declare_step(0);
    b.declare_units(0);
    b.flow_step(0);
    b.capability(0);
    b.deviation(0);
    b.objective();
    return std::move(b.out);
}

OpfProgram build_ropf(const RadialNetwork& network, const TopologyMatrices& topo, const ScenarioHorizon& horizon,
                      int step, BuildOptions options) {
    options.mode = Formulation::Ropf;
    return build_snapshot(network, topo, horizon, step, options);
}

OpfProgram build_maropf(const RadialNetwork& network, const TopologyMatrices& topo, const ScenarioHorizon& horizon,
                        int step, BuildOptions options) {
    options.mode = Formulation::Maropf;
    return build_snapshot(network, topo, horizon, step, options);
}

OpfProgram build_droop_design(const RadialNetwork& network, const TopologyMatrices& topo,
                              const ScenarioHorizon& horizon, const std::vector<SlopePair>& slopes,
                              const BuildOptions& options) {
    options.weights.validate();
    check_horizon(network, horizon);
    if (slopes.size() != network.ibdgs.size())
        throw Error(ErrorCode::LengthMismatch, "one slope pair per IBDG is required");
    Builder b(network, topo, horizon, options);
    b.design = true;
    b.out.droop = true;
    b.out.slopes = slopes;
    b.out.steps = horizon.size();
    for (int t = 0; t < horizon.size(); ++t) b.out.step_index.push_back(t);
    for (std::size_t g = 0; g < network.ibdgs.size(); ++g)
        if (network.ibdgs[g].dispatchable) b.out.droop_units.push_back(static_cast<int>(g));

    // Validate big-M constants before emitting anything.
    for (int g : b.out.droop_units) {
        const IbdgSpec& u = network.ibdgs[g];
        b.big_m_v(network.bus(u.bus));
        b.big_m_p(u, slopes[g], network.bus(u.bus));
    }

    // Binaries first, ordered by (step, bus) so that variable order breaks branching ties.
    std::vector<int> by_bus = b.out.droop_units;
    std::stable_sort(by_bus.begin(), by_bus.end(),
                     [&](int a, int c) { return network.ibdgs[a].bus < network.ibdgs[c].bus; });
    for (int t = 0; t < b.out.steps; ++t)
        for (int g : by_bus) b.add(Quantity::Y, g, t, 0.0, 1.0, true);
    for (int g : b.out.droop_units) {
        const IbdgSpec& u = network.ibdgs[g];
        const Bus& bus = network.bus(u.bus);
        b.add(Quantity::V0p, g, -1, bus.v_min, bus.v_max);
        b.add(Quantity::V0q, g, -1, bus.v_min, bus.v_max);
        b.add(Quantity::Qg0, g, -1);
    }
    for (int t = 0; t < b.out.steps; ++t) {
        b.declare_step(t);
        b.declare_units(t);
    }
    for (int t = 0; t < b.out.steps; ++t) {
        b.flow_step(t);
        for (int g : b.out.droop_units) {
            b.droop_rows(g, t, false);
            if (b.maropf()) {
                b.droop_rows(g, t, true);
                if (options.coupling_cuts) b.coupling_cuts(g, t);
            }
        }
        b.capability(t);
        b.deviation(t);
    }
    b.objective();
    return std::move(b.out);
}

OpfProgram apply_refinement(const OpfProgram& base, const ActivationSets& sets) {
    OpfProgram out = base;
    std::map<std::pair<int, int>, const ConeFamily*> fam;
    for (const ConeFamily& f : base.families) fam[{f.line, f.t}] = &f;
    auto family = [&](const std::pair<int, int>& key) {
        auto it = fam.find(key);
        if (it == fam.end())
            throw Error(ErrorCode::UnknownPair, "no cone family for line " + std::to_string(key.first) + " step " +
                                                    std::to_string(key.second));
        return it->second;
    };
    auto& cones = out.program.cones();
    for (const auto& key : sets.Wp) {
        const ConeFamily* f = family(key);
        AffineExpr ph = AffineExpr::of(base.vars.at(Quantity::PHat, key.first, key.second));
        cones[f->cones[2]].u[0] = ph;
        cones[f->cones[3]].u[0] = ph;
        out.refined.Wp.insert(key);
    }
    for (const auto& key : sets.Wq) {
        const ConeFamily* f = family(key);
        AffineExpr qh = AffineExpr::of(base.vars.at(Quantity::QHat, key.first, key.second));
        cones[f->cones[1]].u[1] = qh;
        cones[f->cones[3]].u[1] = qh;
        out.refined.Wq.insert(key);
    }
    return out;
}

double value_of(const OpfProgram& opf, const Solution& sol, Quantity kind, int index, int t) {
    return sol.x(opf.vars.at(kind, index, t));
}

ObjectiveBreakdown objective_breakdown(const OpfProgram& opf, const Eigen::VectorXd& x) {
    ObjectiveBreakdown b;
    b.f_pc = opf.f_pc.eval(x);
    b.f_pl = opf.f_pl.eval(x);
    b.f_v = opf.f_v.eval(x);
    const ObjectiveWeights& w = opf.options.weights;
    b.f_obj = w.w_pc * b.f_pc + w.w_pl * b.f_pl + w.w_v * b.f_v;
    return b;
}

std::vector<DroopParameters> extract_droop(const OpfProgram& opf, const RadialNetwork& network,
                                           const Eigen::VectorXd& x) {
    std::vector<DroopParameters> out(network.ibdgs.size());
    for (std::size_t g = 0; g < network.ibdgs.size(); ++g) {
        const Bus& b = network.bus(network.ibdgs[g].bus);
        out[g].v0p = b.v_max;
        out[g].v0q = b.v_target;
    }
    for (int g : opf.droop_units) {
        DroopParameters& d = out[g];
        d.alpha_p = opf.slopes[g].alpha_p;
        d.alpha_q = opf.slopes[g].alpha_q;
        d.v0p = x(opf.vars.at(Quantity::V0p, g, -1));
        d.v0q = x(opf.vars.at(Quantity::V0q, g, -1));
        d.q_g0 = x(opf.vars.at(Quantity::Qg0, g, -1));
    }
    return out;
}

std::vector<std::vector<PowerPair>> extract_injections(const OpfProgram& opf, const RadialNetwork& network,
                                                       const ScenarioHorizon& horizon, const Eigen::VectorXd& x) {
    std::vector<std::vector<PowerPair>> out(opf.steps, std::vector<PowerPair>(network.ibdgs.size()));
    for (int t = 0; t < opf.steps; ++t) {
        for (std::size_t gi = 0; gi < network.ibdgs.size(); ++gi) {
            int g = static_cast<int>(gi);
            auto p = opf.vars.find(Quantity::Pg, g, t);
            if (p) {
                out[t][g] = {x(*p), x(opf.vars.at(Quantity::Qg, g, t))};
            } else {
                out[t][g] = {horizon.p_ava(opf.step_index[t], g), 0.0};
            }
        }
    }
    return out;
}

}  // namespace maropf
