#include "maropf/case_io.hpp"
#include "maropf/errors.hpp"
#include "maropf/grid.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace maropf;
using testing::chain;
using testing::tree;

TEST_CASE("three-bus chain has an upper-triangular path matrix") {
    auto t = build_topology(chain(3, 0.01, 0.02));
    Eigen::MatrixXd H(2, 2);
    H << 1, 1, 0, 1;
    CHECK((t.H - H).norm() == 0.0);
    CHECK(t.G(0, 1) == 1.0);
    CHECK(t.G.sum() == 1.0);
}

TEST_CASE("star network has identity path matrix") {
    auto t = build_topology(tree({0, 0}, 0.01, 0.02));
    CHECK((t.H - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
    CHECK(t.G.norm() == 0.0);
}

TEST_CASE("single line path resistance") {
    auto t = build_topology(chain(2, 0.01, 0.03));
    CHECK(t.R(0, 0) == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(t.X(0, 0) == doctest::Approx(0.03).epsilon(1e-15));
}

TEST_CASE("path matrix matches explicit path enumeration on random trees") {
    auto g = testing::rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        int n = 2 + static_cast<int>(g() % 30);
        std::vector<int> parents;
        for (int k = 1; k < n; ++k) parents.push_back(static_cast<int>(g() % static_cast<unsigned>(k)));
        RadialNetwork net = tree(parents, 0.0, 0.0);
        for (auto& l : net.lines) {
            l.r = testing::uniform(g, 0.0, 0.05);
            l.x = testing::uniform(g, -0.01, 0.05);
        }
        auto t = build_topology(net);
        const int L = n - 1;
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(L, L);
        CHECK((t.H * (I - t.G) - I).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((t.H - testing::path_matrix(net)).norm() == 0.0);
        // G is nilpotent on a tree.
        Eigen::MatrixXd P = I;
        for (int k = 0; k < L; ++k) P = P * t.G;
        CHECK(P.norm() == 0.0);
        CHECK((t.R - t.R.transpose()).norm() == 0.0);
        CHECK((t.X - t.X.transpose()).norm() == 0.0);
        // Gram form against the R_{k,l} = sum_h r_h H_{h,k} H_{h,l} definition.
        for (int k = 0; k < L; ++k)
            for (int l = 0; l < L; ++l) {
                double s = 0.0;
                for (int h = 0; h < L; ++h) s += net.lines[static_cast<std::size_t>(h)].r * t.H(h, k) * t.H(h, l);
                CHECK(t.R(k, l) == doctest::Approx(s).epsilon(1e-14));
            }
        // Parents precede children in the traversal order.
        std::vector<int> pos(static_cast<std::size_t>(n), -1);
        pos[0] = -1;
        for (std::size_t i = 0; i < t.order.size(); ++i) pos[static_cast<std::size_t>(t.order[i])] = static_cast<int>(i);
        for (const auto& l : net.lines) CHECK(pos[static_cast<std::size_t>(l.up)] < pos[static_cast<std::size_t>(l.id)]);
    }
}

TEST_CASE("path resistance is positive semidefinite for nonnegative impedances") {
    auto g = testing::rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 3 + static_cast<int>(g() % 15);
        std::vector<int> parents;
        for (int k = 1; k < n; ++k) parents.push_back(static_cast<int>(g() % static_cast<unsigned>(k)));
        RadialNetwork net = tree(parents, 0.0, 0.0);
        for (auto& l : net.lines) {
            l.r = testing::uniform(g, 0.0, 0.05);
            l.x = testing::uniform(g, 0.0, 0.05);
        }
        auto t = build_topology(net);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(t.R), ex(t.X);
        CHECK(er.eigenvalues().minCoeff() >= -1e-14);
        CHECK(ex.eigenvalues().minCoeff() >= -1e-14);
    }
}

TEST_CASE("radiality diagnostics") {
    SUBCASE("chain is valid") { CHECK(validate_radial(chain(3, 0.01, 0.01)).empty()); }
    SUBCASE("two parents") {
        RadialNetwork net = chain(3, 0.01, 0.01);
        Line extra = net.lines[1];
        extra.up = 0;
        net.lines.push_back(extra);
        auto d = validate_radial(net);
        REQUIRE(!d.empty());
        CHECK(d.front().kind == DiagnosticKind::CycleDetected);
        CHECK_THROWS_AS(build_topology(net), Error);
    }
    SUBCASE("bus without incident line") {
        RadialNetwork net = chain(4, 0.01, 0.01);
        net.lines.pop_back();
        auto d = validate_radial(net);
        REQUIRE(!d.empty());
        CHECK(d.front().kind == DiagnosticKind::DisconnectedBus);
        CHECK(d.front().bus == 3);
        try {
            build_topology(net);
            FAIL("expected DisconnectedBus");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DisconnectedBus);
        }
    }
    SUBCASE("cycle away from the slack") {
        RadialNetwork net = chain(4, 0.01, 0.01);
        net.lines[1].up = 3;  // 2 <- 3 <- 2
        auto d = validate_radial(net);
        REQUIRE(!d.empty());
        CHECK(d.front().kind == DiagnosticKind::CycleDetected);
    }
}

TEST_CASE("per-unit conversion") {
    RawCase raw;
    raw.name = "pu";
    RawBus b0, b1;
    b0.id = 0;
    b1.id = 1;
    b1.load_kw = 500.0;
    b1.load_kvar = 200.0;
    b1.v_min_pu = 0.90;
    b1.v_max_pu = 1.05;
    raw.buses = {b0, b1};
    RawLine l;
    l.from = 0;
    l.to = 1;
    l.r_ohm = 1.6026;
    l.x_ohm = 3.2052;
    l.ampacity_a = 200.0;
    raw.lines = {l};
    Bases bases{12.66, 1.0};
    RadialNetwork net = to_per_unit(raw, bases);
    CHECK(bases.z_ohm() == doctest::Approx(160.2756).epsilon(1e-12));
    CHECK(net.bus(1).v_max == doctest::Approx(1.1025).epsilon(1e-15));
    CHECK(net.bus(1).v_min == doctest::Approx(0.81).epsilon(1e-15));
    // 1.6026 / (12.66^2 / 1) by hand.
    CHECK(net.line(1).r == doctest::Approx(1.6026 / 160.2756).epsilon(1e-15));
    CHECK(net.line(1).r == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(net.bus(1).load_p == doctest::Approx(0.5));
    CHECK(net.bus(1).load_q == doctest::Approx(0.2));

    RawCase back = to_physical(net);
    CHECK(back.lines[0].r_ohm == doctest::Approx(1.6026).epsilon(1e-12));
    CHECK(back.lines[0].x_ohm == doctest::Approx(3.2052).epsilon(1e-12));
    CHECK(back.lines[0].ampacity_a == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(back.buses[1].load_kw == doctest::Approx(500.0).epsilon(1e-12));
    CHECK(back.buses[1].v_max_pu == doctest::Approx(1.05).epsilon(1e-12));

    CHECK_THROWS_AS(to_per_unit(raw, Bases{0.0, 1.0}), Error);
    try {
        to_per_unit(raw, Bases{12.66, -1.0});
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonPositiveBase);
    }
}

TEST_CASE("bundled case round-trips through physical units") {
    RadialNetwork net = load_case("ieee34");
    RadialNetwork again = to_per_unit(to_physical(net), net.bases);
    REQUIRE(again.num_lines() == net.num_lines());
    for (int l = 1; l <= net.num_lines(); ++l) {
        CHECK(std::abs(again.line(l).r - net.line(l).r) <= 1e-12 * std::max(1.0, net.line(l).r));
        CHECK(std::abs(again.line(l).x - net.line(l).x) <= 1e-12 * std::max(1.0, net.line(l).x));
        CHECK(std::abs(again.line(l).i_max - net.line(l).i_max) <= 1e-12 * net.line(l).i_max);
    }
    for (int b = 0; b < net.num_buses(); ++b) {
        CHECK(std::abs(again.bus(b).load_p - net.bus(b).load_p) <= 1e-12);
        CHECK(std::abs(again.bus(b).v_max - net.bus(b).v_max) <= 1e-12);
    }
}
