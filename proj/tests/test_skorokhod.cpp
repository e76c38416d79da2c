#include <catch2/catch_amalgamated.hpp>

#include "matchbcp/catalog.hpp"
#include "matchbcp/rng.hpp"
#include "matchbcp/simplex.hpp"
#include "matchbcp/skorokhod.hpp"

using namespace matchbcp;

namespace {

struct Instance {
    MatchingNetwork net;
    StaticPlan plan;
};

Instance load(const std::string& name) {
    auto cfg = catalog(name);
    auto plan = make_static_plan(cfg.network, *cfg.x_star);
    return {std::move(cfg.network), std::move(plan)};
}

}  // namespace

TEST_CASE("nonnegative input is returned untouched") {
    auto ins = load("x-high");
    Vec x(4);
    x << 0.2, 0.0, 1.5, 3.0;
    auto res = skorokhod(x, ins.net, ins.plan);
    REQUIRE(res.z == x);
    REQUIRE(res.y.isZero(0.0));
    REQUIRE(res.sweeps == 0);
}

TEST_CASE("single violated buffer pushes the cheapest incident basic activity") {
    auto ins = load("x-high");
    Vec x(4);
    x << -0.3, 0.5, 0.2, 0.1;
    auto res = skorokhod(x, ins.net, ins.plan);
    Vec z(4), y(2);
    z << 0.0, 0.5, 0.2, 0.4;
    y << 0.0, 0.3;
    REQUIRE((res.z - z).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE((res.y - y).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("two violated buffers are processed in ascending order") {
    auto ins = load("x-high");
    Vec x(4);
    x << -0.3, -0.2, 0.5, 0.6;
    auto res = skorokhod(x, ins.net, ins.plan);
    Vec z(4), y(2);
    z << 0.0, 0.0, 0.7, 0.9;
    y << 0.2, 0.3;
    REQUIRE((res.z - z).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE((res.y - y).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE((res.z - (x + ins.plan.H * res.y)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("identities hold on random inputs for every instance") {
    RngStream rng(99);
    for (const auto& name : catalog_names()) {
        auto ins = load(name);
        const int I = ins.net.num_classes();
        for (int trial = 0; trial < 1000; ++trial) {
            Vec x(I);
            for (int i = 0; i < I; ++i) x[i] = 4.0 * rng.normal();
            auto res = skorokhod(x, ins.net, ins.plan);
            REQUIRE(res.z.minCoeff() >= -kSkorokhodEps);
            REQUIRE(res.y.minCoeff() >= 0.0);
            REQUIRE((res.z - (x + ins.plan.H * res.y)).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("cheapest incident basic activity takes the push") {
    // class 1 is covered by basic activities with values 5 and 3
    Vec lambda(4), v(3), h(4), a(4), gamma(4);
    lambda << 2, 1, 1.5, 1.5;
    v << 5, 1, 3;
    h.setOnes();
    a.setZero();
    gamma.setZero();
    MatchingNetwork net(2, 2, {{0, 2}, {1, 3}, {0, 3}}, lambda, v, h, a, gamma);
    Vec xs(3);
    xs << 1.5, 1, 0.5;
    auto plan = make_static_plan(net, xs);
    REQUIRE(plan.basic_count() == 3);
    REQUIRE(plan.basic[plan.cheapest_basic[0]] == 2);
    Vec x(4);
    x << -1.0, 0.0, 0.0, 0.0;
    auto res = skorokhod(x, net, plan);
    REQUIRE(res.y[plan.cheapest_basic[0]] == 1.0);
    REQUIRE(res.z[0] == 0.0);
    REQUIRE(res.z[3] == 1.0);
}
