#include "maropf/droop.hpp"
#include "maropf/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace maropf;

TEST_CASE("mapping to voltage-magnitude coordinates") {
    DroopParameters p;
    p.alpha_q = 10.0;
    p.alpha_p = 4.0;
    p.v0q = 1.1025;
    p.v0p = 1.0;
    ExactDroopCurve c = approx_to_exact(p, 1.1025);
    CHECK(c.alpha_q_star == doctest::Approx(21.0).epsilon(1e-14));
    CHECK(c.alpha_p_star == doctest::Approx(8.4).epsilon(1e-14));
    CHECK(c.vref_q_star == doctest::Approx(1.05).epsilon(1e-14));
    CHECK(c.vref_p_star == doctest::Approx(2.1025 / 2.1).epsilon(1e-14));
    CHECK(c.taylor_v0 == 1.1025);

    auto g = testing::rng(3);
    for (int k = 0; k < 500; ++k) {
        DroopParameters q{testing::uniform(g, 0, 5), testing::uniform(g, 0, 5), testing::uniform(g, 0.8, 1.2),
                          testing::uniform(g, 0.8, 1.2), testing::uniform(g, -1, 1)};
        double tv = testing::uniform(g, 0.8, 1.2);
        DroopParameters back = exact_to_approx(approx_to_exact(q, tv));
        CHECK(std::abs(back.alpha_p - q.alpha_p) <= 1e-12);
        CHECK(std::abs(back.alpha_q - q.alpha_q) <= 1e-12);
        CHECK(std::abs(back.v0p - q.v0p) <= 1e-12);
        CHECK(std::abs(back.v0q - q.v0q) <= 1e-12);
        CHECK(back.q_g0 == q.q_g0);
    }
}

TEST_CASE("exact curve evaluation") {
    ExactDroopCurve c;
    c.alpha_p_star = 20.0;
    c.alpha_q_star = 3.0;
    c.vref_p_star = 1.0;
    c.vref_q_star = 0.99;
    c.q_g0 = 0.1;
    CHECK(eval_exact_droop(c, 0.99, 1.0).q == doctest::Approx(0.1));
    CHECK(eval_exact_droop(c, 0.97, 1.0).p == 1.0);
    CHECK(eval_exact_droop(c, 1.0, 1.0).p == 1.0);
    CHECK(eval_exact_droop(c, 1.01, 1.0).p == doctest::Approx(0.8).epsilon(1e-12));
    // Continuity at the P-V knee.
    double below = eval_exact_droop(c, 1.0 - 1e-12, 0.7).p;
    double above = eval_exact_droop(c, 1.0 + 1e-12, 0.7).p;
    CHECK(std::abs(above - below) <= 1e-10);
}

TEST_CASE("squared-voltage evaluation and activation consistency") {
    DroopParameters p{2.0, 10.0, 1.0, 1.0, 0.05};
    PowerPair a = eval_approx_droop(p, 1.0, 0.6, 0);
    CHECK(a.q == doctest::Approx(0.05));
    CHECK(a.p == 0.6);
    CHECK(eval_approx_droop(p, 1.0, 0.6, 1).p == 0.6);
    CHECK(eval_approx_droop(p, 1.01, 0.6, 1).q == doctest::Approx(0.05 - 0.1).epsilon(1e-12));
    CHECK(eval_approx_droop(p, 1.01, 0.6, 1).p == doctest::Approx(0.6 - 0.02).epsilon(1e-12));
    CHECK_THROWS_AS(eval_approx_droop(p, 1.01, 0.6, 0), Error);
    CHECK_THROWS_AS(eval_approx_droop(p, 0.99, 0.6, 1), Error);
    CHECK_THROWS_AS(eval_approx_droop(p, 1.0, 0.6, 2), Error);
    CHECK_NOTHROW(eval_approx_droop(p, 1.0 + 5e-10, 0.6, 0));
    try {
        eval_approx_droop(p, 1.02, 0.6, 0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InconsistentActivation);
    }
}

TEST_CASE("mismatch of the squared-voltage model") {
    DroopParameters p;
    p.alpha_q = 10.0;
    p.v0q = 1.0;
    ExactDroopCurve c = approx_to_exact(p, 1.0);
    PowerPair e = approximation_error(p, c, 1.02, 0.5);
    CHECK(e.q == doctest::Approx(-0.004).epsilon(1e-10));
    PowerPair z = approximation_error(p, c, 1.0, 0.5);
    CHECK(std::abs(z.q) <= 1e-15);
    CHECK(std::abs(z.p) <= 1e-15);

    auto g = testing::rng(5);
    for (int k = 0; k < 1000; ++k) {
        double tv = testing::uniform(g, 0.85, 1.15);
        DroopParameters q{testing::uniform(g, 0, 3), testing::uniform(g, 0, 3), tv, tv, testing::uniform(g, -0.5, 0.5)};
        ExactDroopCurve cc = approx_to_exact(q, tv);
        double V = testing::uniform(g, 0.5, 1.5);
        PowerPair d = approximation_error(q, cc, V, testing::uniform(g, 0, 1));
        double sq = (V - std::sqrt(tv)) * (V - std::sqrt(tv));
        CHECK(d.q <= 1e-15);
        CHECK(std::abs(d.q + q.alpha_q * sq) <= 1e-12);
        if (V > cc.vref_p_star) CHECK(std::abs(d.p + q.alpha_p * sq) <= 1e-12);
        else CHECK(std::abs(d.p) <= 1e-12);
    }
}

TEST_CASE("constant-impedance split") {
    DroopParameters zero;
    ImpedanceSplit s = constant_impedance_equivalent(zero, 1, 0.4);
    CHECK(s.power == std::complex<double>(0.4, 0.0));
    CHECK(s.admittance == std::complex<double>(0.0, 0.0));
    DroopParameters p{2.0, 3.0, 1.0, 1.02, 0.1};
    CHECK(constant_impedance_equivalent(p, 0, 0.4).admittance.real() == 0.0);
    CHECK(constant_impedance_equivalent(p, 0, 0.4).admittance.imag() == 3.0);

    auto g = testing::rng(9);
    for (int k = 0; k < 1000; ++k) {
        DroopParameters q{testing::uniform(g, 0, 3), testing::uniform(g, 0, 3), testing::uniform(g, 0.9, 1.1),
                          testing::uniform(g, 0.9, 1.1), testing::uniform(g, -0.5, 0.5)};
        double pa = testing::uniform(g, 0, 1);
        int y = static_cast<int>(g() % 2);
        double v = y ? testing::uniform(g, q.v0p, 1.3) : testing::uniform(g, 0.7, q.v0p);
        ImpedanceSplit sp = constant_impedance_equivalent(q, y, pa);
        std::complex<double> inj = sp.power - sp.admittance * v;
        PowerPair ref = eval_approx_droop(q, v, pa, y);
        CHECK(std::abs(inj.real() - ref.p) <= 1e-12);
        CHECK(std::abs(inj.imag() - ref.q) <= 1e-12);
    }
}
