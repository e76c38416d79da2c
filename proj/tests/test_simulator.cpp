#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "matchbcp/catalog.hpp"
#include "matchbcp/simplex.hpp"
#include "matchbcp/simulator.hpp"

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

TEST_CASE("empty horizon leaves only the centering mass") {
    auto ins = load("x-high");
    SimConfig cfg;
    cfg.horizon = 1e-9;  // no arrivals fit in the window
    cfg.replications = 2;
    cfg.seed = 5;
    auto res = simulate_replication(ins.net, ins.plan,
                                    PolicySpec::benchmark(PolicyKind::Greedy), cfg, 0);
    const double center = ins.net.match_values().dot(ins.plan.x_star) * 100.0 *
                          -std::expm1(-0.01 * cfg.horizon) / 0.01;
    REQUIRE(res.discounted_value == Catch::Approx(0.0).margin(1e-12));
    REQUIRE(res.xi_hat == Catch::Approx(center / 10.0).epsilon(1e-9));
    REQUIRE(res.usage.isZero(0.0));
}

TEST_CASE("holding cost accrual matches numeric quadrature") {
    // one interval with constant q: integral of e^{-rt} h.q dt over [t1, t2]
    const double r = 0.01, t1 = 3.0, t2 = 7.5, hq = 11.0;
    const double closed = hq * (std::exp(-r * t1) - std::exp(-r * t2)) / r;
    // Simpson quadrature, plenty accurate for a smooth exponential
    const int steps = 4000;
    double quad = 0.0;
    for (int k = 0; k < steps; ++k) {
        const double a = t1 + (t2 - t1) * k / steps;
        const double b = t1 + (t2 - t1) * (k + 1) / steps;
        const double m = 0.5 * (a + b);
        quad += (b - a) / 6.0 *
                (std::exp(-r * a) + 4.0 * std::exp(-r * m) + std::exp(-r * b)) * hq;
    }
    REQUIRE(std::abs(closed - quad) / closed < 1e-10);
}

TEST_CASE("conservation identity holds on every event") {
    for (const auto& name : {"x-high", "zigzag-c"}) {
        auto ins = load(name);
        SimConfig cfg;
        cfg.horizon = 5.0;
        cfg.replications = 2;
        cfg.seed = 99;
        for (auto kind : {PolicyKind::Greedy, PolicyKind::Fcfs, PolicyKind::Lqfs}) {
            for (int rep = 0; rep < 3; ++rep) {
                SimAudit audit;
                audit.check_conservation = true;
                REQUIRE_NOTHROW(simulate_replication(
                    ins.net, ins.plan, PolicySpec::benchmark(kind), cfg, rep, &audit));
                REQUIRE(audit.events > 0);
            }
        }
        SimAudit audit;
        audit.check_conservation = true;
        REQUIRE_NOTHROW(simulate_replication(
            ins.net, ins.plan,
            PolicySpec::benchmark(PolicyKind::StaticPriority, 0.01), cfg, 0, &audit));
    }
}

TEST_CASE("common random numbers: consumed draws are bit-identical across policies") {
    auto ins = load("zigzag-a");
    SimConfig cfg;
    cfg.horizon = 3.0;
    cfg.replications = 2;
    cfg.seed = 31;
    SimAudit a1, a2, a3;
    simulate_replication(ins.net, ins.plan, PolicySpec::benchmark(PolicyKind::Greedy),
                         cfg, 1, &a1);
    simulate_replication(ins.net, ins.plan, PolicySpec::benchmark(PolicyKind::Lqfs),
                         cfg, 1, &a2);
    simulate_replication(ins.net, ins.plan,
                         PolicySpec::benchmark(PolicyKind::StaticPriority, 0.0001),
                         cfg, 1, &a3);
    REQUIRE(a1.draw_hash == a2.draw_hash);
    REQUIRE(a1.draw_hash == a3.draw_hash);
    REQUIRE(a1.arrivals == a2.arrivals);
    REQUIRE(a1.arrivals == a3.arrivals);
    // different replication gets different draws
    SimAudit b1;
    simulate_replication(ins.net, ins.plan, PolicySpec::benchmark(PolicyKind::Greedy),
                         cfg, 0, &b1);
    REQUIRE(a1.draw_hash != b1.draw_hash);
}

TEST_CASE("identical decision rules give identical results") {
    // zigzag-b has no nonbasic activities, so greedy == greedy-basic exactly
    auto ins = load("zigzag-b");
    SimConfig cfg;
    cfg.horizon = 4.0;
    cfg.replications = 3;
    cfg.seed = 7;
    for (int rep = 0; rep < 3; ++rep) {
        auto r1 = simulate_replication(ins.net, ins.plan,
                                       PolicySpec::benchmark(PolicyKind::Greedy), cfg, rep);
        auto r2 = simulate_replication(
            ins.net, ins.plan, PolicySpec::benchmark(PolicyKind::GreedyBasic), cfg, rep);
        REQUIRE(r1.xi_hat == r2.xi_hat);
        REQUIRE(r1.usage == r2.usage);
    }
}

TEST_CASE("arrival counts obey Poisson statistics") {
    auto ins = load("x-high");
    SimConfig cfg;
    cfg.horizon = 10.0;
    cfg.seed = 1234;
    int within = 0, total = 0;
    for (int rep = 0; rep < 100; ++rep) {
        SimAudit audit;
        simulate_replication(ins.net, ins.plan,
                             PolicySpec::benchmark(PolicyKind::Greedy), cfg, rep, &audit);
        for (int i = 0; i < 4; ++i) {
            const double mean = 100.0 * ins.net.arrival_rates()[i] * cfg.horizon;
            ++total;
            if (std::abs(audit.arrivals[i] - mean) <= 4.0 * std::sqrt(mean)) ++within;
        }
    }
    REQUIRE(static_cast<double>(within) / total >= 0.99);
}

TEST_CASE("discounting degenerates gracefully as r -> 0") {
    auto ins = load("x-high");
    SimConfig small;
    small.horizon = 20.0;
    small.seed = 17;
    small.discount = 1e-12;
    SimConfig zero = small;
    zero.discount = 0.0;
    auto r_small = simulate_replication(ins.net, ins.plan,
                                        PolicySpec::benchmark(PolicyKind::Greedy), small, 0);
    auto r_zero = simulate_replication(ins.net, ins.plan,
                                       PolicySpec::benchmark(PolicyKind::Greedy), zero, 0);
    REQUIRE(r_small.xi_hat == Catch::Approx(r_zero.xi_hat).epsilon(1e-6));
    REQUIRE(r_small.discounted_value ==
            Catch::Approx(r_zero.discounted_value).epsilon(1e-6));
}

TEST_CASE("run_experiment aggregates confidence intervals under CRN") {
    auto ins = load("x-high");
    SimConfig cfg;
    cfg.horizon = 5.0;
    cfg.replications = 8;
    cfg.seed = 3;
    std::vector<PolicySpec> policies = {
        PolicySpec::benchmark(PolicyKind::Greedy),
        PolicySpec::benchmark(PolicyKind::Greedy),  // duplicate: CRN exactness
        PolicySpec::benchmark(PolicyKind::Lqfs),
    };
    auto summaries = run_experiment(ins.net, ins.plan, policies, cfg);
    REQUIRE(summaries.size() == 3);
    REQUIRE(summaries[0].per_rep == summaries[1].per_rep);
    REQUIRE(summaries[0].mean == summaries[1].mean);
    REQUIRE(summaries[0].half_width == summaries[1].half_width);
    REQUIRE(summaries[0].half_width > 0.0);
    for (const auto& s : summaries) REQUIRE(s.per_rep.size() == 8);
    // reruns repeat exactly
    auto again = run_experiment(ins.net, ins.plan, policies, cfg);
    REQUIRE(again[2].per_rep == summaries[2].per_rep);
    REQUIRE_THROWS_AS(run_experiment(ins.net, ins.plan, policies,
                                     [] { SimConfig c; c.replications = 1; return c; }()),
                      std::invalid_argument);
}

TEST_CASE("greedy-basic never touches nonbasic activities") {
    auto ins = load("x-high");
    SimConfig cfg;
    cfg.horizon = 50.0;
    cfg.seed = 11;
    auto res = simulate_replication(ins.net, ins.plan,
                                    PolicySpec::benchmark(PolicyKind::GreedyBasic), cfg, 0);
    REQUIRE(res.usage[2] == 0.0);
    REQUIRE(res.usage[3] == 0.0);
    REQUIRE(res.usage[0] > 0.0);
}

TEST_CASE("grid search returns the argmin and a single point trivially") {
    auto ins = load("x-high");
    SimConfig cfg;
    cfg.horizon = 10.0;
    cfg.replications = 4;
    cfg.seed = 2;
    SECTION("single point") {
        auto res = grid_search_review_period(ins.net, ins.plan, cfg, {0.005});
        REQUIRE(res.best_period == 0.005);
        REQUIRE(res.period_means.size() == 1);
    }
    SECTION("argmin of its own means") {
        auto res = grid_search_review_period(ins.net, ins.plan, cfg,
                                             {0.0001, 0.001, 0.01, 1.0});
        double best = 1e300;
        double arg = 0.0;
        for (auto& [l, m] : res.period_means) {
            if (m < best) {
                best = m;
                arg = l;
            }
        }
        REQUIRE(res.best_period == arg);
        // an absurdly long review period must hurt: it beats none of the others
        REQUIRE(res.best_period != 1.0);
    }
}

TEST_CASE("proposed policy runs end to end against a zeroed model") {
    auto ins = load("x-high");
    ValueGradientModel model(4, 2, 8);
    model.init(2);
    model.grad_net.weight(model.grad_net.layer_count() - 1).setZero();
    model.grad_net.bias(model.grad_net.layer_count() - 1).setZero();
    SimConfig cfg;
    cfg.horizon = 5.0;
    cfg.seed = 21;
    for (bool updating : {false, true}) {
        SimAudit audit;
        audit.check_conservation = true;
        auto res = simulate_replication(
            ins.net, ins.plan, PolicySpec::proposed(model, 0.5, 0.03, updating), cfg, 0,
            &audit);
        REQUIRE(std::isfinite(res.xi_hat));
        REQUIRE(res.usage.sum() > 0.0);
    }
}
