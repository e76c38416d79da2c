#include <catch2/catch_amalgamated.hpp>

#include "matchbcp/catalog.hpp"
#include "matchbcp/matching_network.hpp"
#include "matchbcp/rng.hpp"
#include "matchbcp/simplex.hpp"

using namespace matchbcp;

TEST_CASE("X model matching matrix matches the published display") {
    auto net = catalog("x-high").network;
    Mat R = build_matching_matrix(net);
    Mat expect(4, 4);
    expect << 0, 1, 1, 0,
              1, 0, 0, 1,
              1, 0, 1, 0,
              0, 1, 0, 1;
    REQUIRE(R == expect);
}

TEST_CASE("single activity R is the all-ones column") {
    Vec lambda(2), v(1), h(2), a(2), gamma(2);
    lambda << 1, 1;
    v << 5;
    h.setOnes();
    a.setZero();
    gamma.setZero();
    MatchingNetwork net(1, 1, {{0, 1}}, lambda, v, h, a, gamma);
    Mat R = build_matching_matrix(net);
    REQUIRE(R.rows() == 2);
    REQUIRE(R.cols() == 1);
    REQUIRE(R(0, 0) == 1.0);
    REQUIRE(R(1, 0) == 1.0);
}

TEST_CASE("zigzag-a matching matrix matches Table 1 column for column") {
    auto net = catalog("zigzag-a").network;
    Mat R = build_matching_matrix(net);
    Mat expect(8, 7);
    expect << 1, 0, 0, 0, 0, 0, 0,
              0, 1, 1, 0, 0, 0, 0,
              0, 0, 0, 1, 0, 0, 1,
              0, 0, 0, 0, 1, 1, 0,
              1, 1, 0, 0, 0, 0, 0,
              0, 0, 1, 0, 0, 0, 1,
              0, 0, 0, 1, 1, 0, 0,
              0, 0, 0, 0, 0, 1, 0;
    REQUIRE(R == expect);
}

TEST_CASE("every R column has exactly two unit entries, rows nonzero") {
    for (const auto& name : catalog_names()) {
        Mat R = build_matching_matrix(catalog(name).network);
        for (int j = 0; j < R.cols(); ++j) REQUIRE(R.col(j).sum() == 2.0);
        for (int i = 0; i < R.rows(); ++i) REQUIRE(R.row(i).sum() >= 1.0);
    }
}

TEST_CASE("effective cost") {
    SECTION("X models have c = h when a = 0") {
        auto net = catalog("x-high").network;
        REQUIRE(effective_cost(net).c == net.holding_costs());
    }
    SECTION("gamma = 0 gives c = h") {
        Vec lambda(2), v(1), h(2), a(2), gamma(2);
        lambda << 1, 1;
        v << 3;
        h << 2, 7;
        a << 5, 5;
        gamma.setZero();
        MatchingNetwork net(1, 1, {{0, 1}}, lambda, v, h, a, gamma);
        REQUIRE(effective_cost(net).c == h);
    }
    SECTION("zigzag row 1: c_1 = 11.2 + 0.094 * 8.0") {
        auto net = catalog("zigzag-a").network;
        REQUIRE(effective_cost(net).c[0] == Catch::Approx(11.952).epsilon(1e-12));
    }
    SECTION("monotone in h, a, gamma") {
        RngStream rng(7);
        auto cfg = catalog("zigzag-c");
        const auto& base = cfg.network;
        Vec c0 = effective_cost(base).c;
        for (int trial = 0; trial < 20; ++trial) {
            Vec h = base.holding_costs(), a = base.abandonment_penalties(),
                g = base.abandonment_rates();
            for (int i = 0; i < h.size(); ++i) {
                h[i] += rng.uniform();
                a[i] += rng.uniform();
                g[i] += 0.1 * rng.uniform();
            }
            MatchingNetwork bumped(base.num_left(), base.num_right(),
                                   base.activities(), base.arrival_rates(),
                                   base.match_values(), h, a, g);
            REQUIRE(((effective_cost(bumped).c - c0).array() >= -1e-15).all());
        }
    }
}

TEST_CASE("construction rejects malformed networks") {
    Vec lambda2(2), v1(1), h2(2), a2(2), g2(2);
    lambda2 << 1, 1;
    v1 << 1;
    h2.setOnes();
    a2.setZero();
    g2.setZero();
    SECTION("zero arrival rate") {
        Vec bad = lambda2;
        bad[0] = 0.0;
        REQUIRE_THROWS_AS(
            MatchingNetwork(1, 1, {{0, 1}}, bad, v1, h2, a2, g2), NetworkError);
    }
    SECTION("duplicate pair") {
        Vec v2(2);
        v2 << 1, 2;
        REQUIRE_THROWS_AS(
            MatchingNetwork(1, 1, {{0, 1}, {0, 1}}, lambda2, v2, h2, a2, g2),
            NetworkError);
    }
    SECTION("uncovered class") {
        Vec lambda3(3), h3(3), a3(3), g3(3);
        lambda3.setOnes();
        h3.setOnes();
        a3.setZero();
        g3.setZero();
        REQUIRE_THROWS_AS(
            MatchingNetwork(2, 1, {{0, 2}}, lambda3, v1, h3, a3, g3), NetworkError);
    }
    SECTION("endpoint on the wrong side") {
        REQUIRE_THROWS_AS(
            MatchingNetwork(1, 1, {{1, 0}}, lambda2, v1, h2, a2, g2), NetworkError);
    }
}

TEST_CASE("validate_plan reports residual and cover") {
    auto cfg = catalog("x-high");
    auto plan = make_static_plan(cfg.network, *cfg.x_star);
    auto diag = validate_plan(cfg.network, plan);
    REQUIRE(diag.balanced);
    REQUIRE(diag.max_residual == 0.0);
    REQUIRE(plan.basic == std::vector<int>{0, 1});
    REQUIRE(diag.uncovered_classes.empty());
    // J(i) for the X model: class 1 -> activity 2, class 2 -> activity 1, ...
    REQUIRE(plan.cover[0] == std::vector<int>{1});
    REQUIRE(plan.cover[1] == std::vector<int>{0});
    REQUIRE(plan.cover[2] == std::vector<int>{0});
    REQUIRE(plan.cover[3] == std::vector<int>{1});
}
