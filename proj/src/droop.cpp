#include "maropf/droop.hpp"

#include "maropf/errors.hpp"

#include <cmath>
#include <sstream>

namespace maropf {

ExactDroopCurve approx_to_exact(const DroopParameters& params, double taylor_v0) {
    const double s = 2.0 * std::sqrt(taylor_v0);
    ExactDroopCurve c;
    c.alpha_p_star = params.alpha_p * s;
    c.alpha_q_star = params.alpha_q * s;
    c.vref_p_star = (params.v0p + taylor_v0) / s;
    c.vref_q_star = (params.v0q + taylor_v0) / s;
    c.q_g0 = params.q_g0;
    c.taylor_v0 = taylor_v0;
    return c;
}

DroopParameters exact_to_approx(const ExactDroopCurve& c) {
    const double s = 2.0 * std::sqrt(c.taylor_v0);
    DroopParameters p;
    p.alpha_p = c.alpha_p_star / s;
    p.alpha_q = c.alpha_q_star / s;
    p.v0p = c.vref_p_star * s - c.taylor_v0;
    p.v0q = c.vref_q_star * s - c.taylor_v0;
    p.q_g0 = c.q_g0;
    return p;
}

PowerPair eval_exact_droop(const ExactDroopCurve& c, double V, double p_ava) {
    PowerPair out;
    out.q = c.q_g0 - c.alpha_q_star * (V - c.vref_q_star);
    out.p = V <= c.vref_p_star ? p_ava : p_ava - c.alpha_p_star * (V - c.vref_p_star);
    return out;
}

PowerPair eval_approx_droop(const DroopParameters& params, double v, double p_ava, int y) {
    const double d = v - params.v0p;
    if ((y == 1 && d < -kActivationTol) || (y == 0 && d > kActivationTol) || (y != 0 && y != 1)) {
        std::ostringstream ss;
        ss << "y=" << y << " with v - v0p = " << d;
        throw Error(ErrorCode::InconsistentActivation, ss.str());
    }
    PowerPair out;
    out.q = params.q_g0 - params.alpha_q * (v - params.v0q);
    out.p = p_ava - static_cast<double>(y) * params.alpha_p * d;
    return out;
}

PowerPair approximation_error(const DroopParameters& params, const ExactDroopCurve& curve, double V, double p_ava) {
    // Compared on the exact curve's P-V branch. The approximate curve switches
    // at sqrt(v0p) <= vref_p_star, so between the two knees it is already
    // curtailing while the exact one is not.
    const PowerPair exact = eval_exact_droop(curve, V, p_ava);
    const double v = V * V;
    const int y = V > curve.vref_p_star ? 1 : 0;
    PowerPair approx;
    approx.q = params.q_g0 - params.alpha_q * (v - params.v0q);
    approx.p = p_ava - static_cast<double>(y) * params.alpha_p * (v - params.v0p);
    return {approx.p - exact.p, approx.q - exact.q};
}

ImpedanceSplit constant_impedance_equivalent(const DroopParameters& params, int y, double p_ava) {
    ImpedanceSplit s;
    const double q_part = params.q_g0 + params.alpha_q * params.v0q;
    if (y == 1) {
        s.power = {p_ava + params.alpha_p * params.v0p, q_part};
        s.admittance = {params.alpha_p, params.alpha_q};
    } else {
        s.power = {p_ava, q_part};
        s.admittance = {0.0, params.alpha_q};
    }
    return s;
}

}  // namespace maropf
