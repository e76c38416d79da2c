#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "matchbcp/matching_network.hpp"

namespace matchbcp {

struct BalanceViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UncoveredClass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kBasicThreshold = 1e-9;   // separates basic from nonbasic
constexpr double kBalanceTol = 1e-9;       // |Rx* - lambda| tolerance

// Optimal static plan: activity rates x*, the basic/nonbasic partition, the
// partitioned matching matrix R = [H N], and the per-class basic covers J(i).
struct StaticPlan {
    Vec x_star;                         // length J, original activity order
    std::vector<int> basic;             // activity ids with x*_j > threshold, ascending
    std::vector<int> nonbasic;          // complement, ascending
    Mat H;                              // I x b, columns follow `basic`
    Mat N;                              // I x (J-b)
    Vec v_basic;                        // length b
    Vec v_nonbasic;                     // length J-b
    std::vector<std::vector<int>> cover;        // J(i): positions into `basic`
    std::vector<int> cheapest_basic;            // argmin_{p in J(i)} v_basic[p]
    std::vector<char> is_basic;                 // per activity id

    int basic_count() const { return static_cast<int>(basic.size()); }
};

struct PlanDiagnostics {
    double max_residual = 0.0;          // max |Rx* - lambda|
    bool balanced = false;
    std::vector<int> uncovered_classes;  // classes with no incident basic activity
    bool ok() const { return balanced && uncovered_classes.empty(); }
};

inline PlanDiagnostics validate_plan(const MatchingNetwork& net, const StaticPlan& plan) {
    if (plan.x_star.size() != net.num_activities())
        throw NetworkError("plan dimension does not match network");
    PlanDiagnostics d;
    Vec flow = Vec::Zero(net.num_classes());
    for (int j = 0; j < net.num_activities(); ++j) {
        flow[net.left_class(j)] += plan.x_star[j];
        flow[net.right_class(j)] += plan.x_star[j];
    }
    d.max_residual = (flow - net.arrival_rates()).cwiseAbs().maxCoeff();
    d.balanced = d.max_residual <= kBalanceTol;
    for (int i = 0; i < net.num_classes(); ++i)
        if (plan.cover[i].empty()) d.uncovered_classes.push_back(i);
    return d;
}

// Builds the plan from a rate vector. Partitions activities at the 1e-9
// threshold, keeping ascending activity order within each part so H and
// v_basic line up with `basic`.
inline StaticPlan make_static_plan(const MatchingNetwork& net, const Vec& x_star) {
    const int I = net.num_classes();
    const int J = net.num_activities();
    if (x_star.size() != J) throw NetworkError("x* has wrong length");

    StaticPlan plan;
    plan.x_star = x_star;
    plan.is_basic.assign(J, 0);
    for (int j = 0; j < J; ++j) {
        if (x_star[j] > kBasicThreshold) {
            plan.basic.push_back(j);
            plan.is_basic[j] = 1;
        } else {
            plan.nonbasic.push_back(j);
        }
    }
    const int b = static_cast<int>(plan.basic.size());
    plan.H = Mat::Zero(I, b);
    plan.N = Mat::Zero(I, J - b);
    plan.v_basic = Vec(b);
    plan.v_nonbasic = Vec(J - b);
    for (int p = 0; p < b; ++p) {
        const int j = plan.basic[p];
        plan.H(net.left_class(j), p) = 1.0;
        plan.H(net.right_class(j), p) = 1.0;
        plan.v_basic[p] = net.match_values()[j];
    }
    for (int p = 0; p < J - b; ++p) {
        const int j = plan.nonbasic[p];
        plan.N(net.left_class(j), p) = 1.0;
        plan.N(net.right_class(j), p) = 1.0;
        plan.v_nonbasic[p] = net.match_values()[j];
    }
    plan.cover.assign(I, {});
    for (int p = 0; p < b; ++p) {
        plan.cover[net.left_class(plan.basic[p])].push_back(p);
        plan.cover[net.right_class(plan.basic[p])].push_back(p);
    }
    plan.cheapest_basic.assign(I, -1);
    for (int i = 0; i < I; ++i) {
        double best = 0.0;
        for (int p : plan.cover[i]) {
            // ties break toward the lowest activity index; `cover` is built in
            // ascending basic order so strict < keeps the first
            if (plan.cheapest_basic[i] < 0 || plan.v_basic[p] < best) {
                plan.cheapest_basic[i] = p;
                best = plan.v_basic[p];
            }
        }
    }

    const PlanDiagnostics d = validate_plan(net, plan);
    if (!d.balanced)
        throw BalanceViolation("Rx* != lambda, max residual " +
                               std::to_string(d.max_residual));
    if (!d.uncovered_classes.empty())
        throw UncoveredClass("class " + std::to_string(d.uncovered_classes.front() + 1) +
                             " has no incident basic activity");
    return plan;
}

}  // namespace matchbcp
