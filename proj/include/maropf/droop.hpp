#pragma once

#include <complex>

namespace maropf {

// Squared-voltage coordinates.
struct DroopParameters {
    double alpha_p = 0.0;
    double alpha_q = 0.0;
    double v0p = 1.0;
    double v0q = 1.0;
    double q_g0 = 0.0;
};

// Voltage-magnitude coordinates, valid around the expansion point taylor_v0.
struct ExactDroopCurve {
    double alpha_p_star = 0.0;
    double alpha_q_star = 0.0;
    double vref_p_star = 1.0;
    double vref_q_star = 1.0;
    double q_g0 = 0.0;
    double taylor_v0 = 1.0;
};

struct PowerPair {
    double p = 0.0;
    double q = 0.0;
};

inline constexpr double kActivationTol = 1e-9;

ExactDroopCurve approx_to_exact(const DroopParameters& params, double taylor_v0);
DroopParameters exact_to_approx(const ExactDroopCurve& curve);

PowerPair eval_exact_droop(const ExactDroopCurve& curve, double V, double p_ava);

// Throws InconsistentActivation when y disagrees with v vs v0p beyond kActivationTol.
PowerPair eval_approx_droop(const DroopParameters& params, double v, double p_ava, int y);

// approx(V^2) - exact(V), both evaluated on the exact curve's P-V branch.
PowerPair approximation_error(const DroopParameters& params, const ExactDroopCurve& curve, double V, double p_ava);

struct ImpedanceSplit {
    std::complex<double> power;      // constant-power generation
    std::complex<double> admittance; // constant-impedance load g + jb
};

ImpedanceSplit constant_impedance_equivalent(const DroopParameters& params, int y, double p_ava);

}  // namespace maropf
