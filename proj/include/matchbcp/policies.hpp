#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "matchbcp/bsde.hpp"
#include "matchbcp/static_plan.hpp"

namespace matchbcp {

struct Stall : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LoopGuard : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Read access to the waiting jobs behind the queue vector. arrival_time(c, k)
// is the arrival timestamp of the k-th waiting job of class c counted from
// the head of its FIFO queue.
class QueueView {
public:
    virtual ~QueueView() = default;
    virtual double arrival_time(int cls, int k) const = 0;
};

// State handed to a policy at a decision epoch: the pre-decision queue vector
// (immediately after the arrival or abandonment event, before any matches),
// the elapsed time since the previous epoch, and the system scale.
struct DecisionContext {
    Eigen::VectorXi q;
    const QueueView* jobs = nullptr;  // needed by FCFS only
    double dt = 0.0;
    double now = 0.0;
    double scale_n = 1.0;
};

// Ordered list of (activity, count) executed at one epoch.
struct MatchDecision {
    std::vector<std::pair<int, int>> steps;

    void clear() { steps.clear(); }
    int total() const {
        int t = 0;
        for (const auto& [j, d] : steps) t += d;
        return t;
    }
    void add(int activity, int count) {
        if (!steps.empty() && steps.back().first == activity)
            steps.back().second += count;
        else
            steps.emplace_back(activity, count);
    }
};

enum class PolicyKind {
    Greedy,
    GreedyBasic,
    Fcfs,
    Lqfs,
    StaticPriority,
    Proposed,
    ProposedUpdating,
};

inline const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::GreedyBasic: return "greedy-basic";
        case PolicyKind::Fcfs: return "fcfs";
        case PolicyKind::Lqfs: return "lqfs";
        case PolicyKind::StaticPriority: return "static-priority";
        case PolicyKind::Proposed: return "proposed";
        case PolicyKind::ProposedUpdating: return "proposed-updating";
    }
    return "?";
}

struct PolicySpec {
    PolicyKind kind = PolicyKind::Greedy;
    double review_period = 0.0;             // static-priority only
    const ValueGradientModel* model = nullptr;  // proposed kinds only
    double eta = 0.0;
    double round_eps = 0.0;

    static PolicySpec benchmark(PolicyKind k, double review = 0.0) {
        PolicySpec s;
        s.kind = k;
        s.review_period = review;
        if (k == PolicyKind::StaticPriority && review <= 0.0)
            throw std::invalid_argument("static-priority needs a review period");
        return s;
    }
    static PolicySpec proposed(const ValueGradientModel& m, double eta,
                               double round_eps, bool updating = false) {
        PolicySpec s;
        s.kind = updating ? PolicyKind::ProposedUpdating : PolicyKind::Proposed;
        s.model = &m;
        s.eta = eta;
        s.round_eps = round_eps;
        return s;
    }
};

// ---------------------------------------------------------------------------
// benchmark deciders
// ---------------------------------------------------------------------------

namespace detail {

inline bool feasible(const Eigen::VectorXi& q, const MatchingNetwork& net, int j) {
    return q[net.left_class(j)] > 0 && q[net.right_class(j)] > 0;
}

// highest-value feasible activity, exhausted before moving on
inline void greedy_core(Eigen::VectorXi& q, const MatchingNetwork& net,
                        const std::vector<char>* allowed, MatchDecision& out) {
    for (;;) {
        int best = -1;
        for (int j = 0; j < net.num_activities(); ++j) {
            if (allowed && !(*allowed)[j]) continue;
            if (!feasible(q, net, j)) continue;
            if (best < 0 || net.match_values()[j] > net.match_values()[best])
                best = j;  // ties break toward the lower activity index
        }
        if (best < 0) return;
        const int d = std::min(q[net.left_class(best)], q[net.right_class(best)]);
        q[net.left_class(best)] -= d;
        q[net.right_class(best)] -= d;
        out.add(best, d);
    }
}

}  // namespace detail

// Executes all available matches, most valuable first.
inline MatchDecision greedy_decide(const DecisionContext& ctx, const MatchingNetwork& net) {
    MatchDecision out;
    Eigen::VectorXi q = ctx.q;
    detail::greedy_core(q, net, nullptr, out);
    return out;
}

// As greedy, restricted to the basic activity set.
inline MatchDecision greedy_basic_decide(const DecisionContext& ctx,
                                         const MatchingNetwork& net,
                                         const StaticPlan& plan) {
    MatchDecision out;
    Eigen::VectorXi q = ctx.q;
    detail::greedy_core(q, net, &plan.is_basic, out);
    return out;
}

// Matches the longest-waiting job first: among feasible activities, pick the
// one whose older endpoint job arrived earliest; one match at a time.
inline MatchDecision fcfs_decide(const DecisionContext& ctx, const MatchingNetwork& net) {
    if (!ctx.jobs) throw std::invalid_argument("fcfs needs job timestamps");
    MatchDecision out;
    Eigen::VectorXi q = ctx.q;
    std::vector<int> used(net.num_classes(), 0);  // jobs consumed this epoch
    for (;;) {
        int best = -1;
        double best_primary = 0.0, best_secondary = 0.0;
        for (int j = 0; j < net.num_activities(); ++j) {
            if (!detail::feasible(q, net, j)) continue;
            const double tl = ctx.jobs->arrival_time(net.left_class(j), used[net.left_class(j)]);
            const double tr = ctx.jobs->arrival_time(net.right_class(j), used[net.right_class(j)]);
            const double primary = std::min(tl, tr);
            const double secondary = std::max(tl, tr);
            if (best < 0 || primary < best_primary ||
                (primary == best_primary && secondary < best_secondary)) {
                best = j;
                best_primary = primary;
                best_secondary = secondary;
            }
        }
        if (best < 0) return out;
        q[net.left_class(best)] -= 1;
        q[net.right_class(best)] -= 1;
        used[net.left_class(best)] += 1;
        used[net.right_class(best)] += 1;
        out.add(best, 1);
    }
}

// Matches against the longest compatible buffer; length ties break to the
// lower class index.
inline MatchDecision lqfs_decide(const DecisionContext& ctx, const MatchingNetwork& net) {
    MatchDecision out;
    Eigen::VectorXi q = ctx.q;
    for (;;) {
        int best = -1, best_len = -1, best_cls = -1;
        for (int j = 0; j < net.num_activities(); ++j) {
            if (!detail::feasible(q, net, j)) continue;
            const int l = net.left_class(j), r = net.right_class(j);
            int len, cls;
            if (q[l] > q[r] || (q[l] == q[r] && l < r)) {
                len = q[l];
                cls = l;
            } else {
                len = q[r];
                cls = r;
            }
            if (len > best_len || (len == best_len && cls < best_cls)) {
                best = j;
                best_len = len;
                best_cls = cls;
            }
        }
        if (best < 0) return out;
        q[net.left_class(best)] -= 1;
        q[net.right_class(best)] -= 1;
        out.add(best, 1);
    }
}

// ---------------------------------------------------------------------------
// static-priority policy
// ---------------------------------------------------------------------------

// Tree-pruning construction of the static priority sets. Edges whose rate
// exhausts a remaining endpoint capacity enter the current set; their
// neighbors wait for a later sweep. The nonbasic set is appended last (it may
// be empty).
inline std::vector<std::vector<int>> build_priority_sets(const MatchingNetwork& net,
                                                         const StaticPlan& plan) {
    constexpr double tol = 1e-9;
    std::vector<std::vector<int>> sets;
    std::vector<int> remaining = plan.basic;
    Vec mu = net.arrival_rates();
    while (!remaining.empty()) {
        std::vector<int> level;
        std::vector<int> consider = remaining;
        std::vector<char> dropped(net.num_activities(), 0);
        for (std::size_t c = 0; c < consider.size(); ++c) {
            const int j = consider[c];
            if (dropped[j]) continue;
            const int l = net.left_class(j), r = net.right_class(j);
            const double x = plan.x_star[j];
            if (std::abs(x - mu[l]) <= tol || std::abs(x - mu[r]) <= tol) {
                level.push_back(j);
                mu[l] -= x;
                mu[r] -= x;
                for (int other : consider)
                    if (net.left_class(other) == l || net.right_class(other) == r)
                        dropped[other] = 1;
            } else {
                dropped[j] = 1;
            }
        }
        if (level.empty())
            throw Stall("priority-set construction stalled with " +
                        std::to_string(remaining.size()) + " basic edges left");
        std::vector<int> next;
        for (int j : remaining)
            if (std::find(level.begin(), level.end(), j) == level.end())
                next.push_back(j);
        remaining = std::move(next);
        sets.push_back(std::move(level));
    }
    sets.push_back(plan.nonbasic);
    return sets;
}

// Discrete-review execution: every feasible match exhaustively, priority set
// by priority set, then nonbasic matches in ascending activity index.
inline MatchDecision static_priority_review(const DecisionContext& ctx,
                                            const MatchingNetwork& net,
                                            const std::vector<std::vector<int>>& sets) {
    MatchDecision out;
    Eigen::VectorXi q = ctx.q;
    for (const auto& level : sets) {
        bool progress = true;
        while (progress) {
            progress = false;
            for (int j : level) {
                const int d = std::min(q[net.left_class(j)], q[net.right_class(j)]);
                if (d >= 1) {
                    q[net.left_class(j)] -= d;
                    q[net.right_class(j)] -= d;
                    out.add(j, d);
                    progress = true;
                }
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// proposed dynamic matching policies
// ---------------------------------------------------------------------------

// Shadow-value source: fills u with U_j(z) for the scaled state z. The model
// oracle owns per-instance scratch, so use one oracle per worker.
class ShadowOracle {
public:
    virtual ~ShadowOracle() = default;
    virtual void shadow(const Vec& z, Vec& u) const = 0;
};

class ModelShadowOracle : public ShadowOracle {
public:
    ModelShadowOracle(const ValueGradientModel& model, const MatchingNetwork& net)
        : model_(&model), net_(&net), row_(1, net.num_classes()) {}

    void shadow(const Vec& z, Vec& u) const override {
        row_.row(0) = z.transpose();
        const Eigen::MatrixXd& g = model_->grad_net.forward(row_, ws_);
        for (int j = 0; j < net_->num_activities(); ++j)
            u[j] = g(0, net_->left_class(j)) + g(0, net_->right_class(j)) +
                   net_->match_values()[j];
    }

private:
    const ValueGradientModel* model_;
    const MatchingNetwork* net_;
    mutable Eigen::MatrixXd row_;
    mutable Mlp::Workspace ws_;
};

// tau_j = (n x*_j + sqrt(n) eta) dt on the nonnegative-shadow branch,
// (n x*_j - sqrt(n) eta)^+ dt otherwise (0 for nonbasic there).
inline Vec intended_matches(const Vec& u_hat, const StaticPlan& plan, double dt,
                            double eta, double n) {
    const double root_n = std::sqrt(n);
    Vec tau(plan.x_star.size());
    for (int j = 0; j < tau.size(); ++j) {
        if (u_hat[j] >= 0.0)
            tau[j] = (n * plan.x_star[j] + root_n * eta) * dt;
        else
            tau[j] = std::max(0.0, n * plan.x_star[j] - root_n * eta) * dt;
    }
    return tau;
}

// m_j = ceil(tau_j - eps), clamped at zero.
inline Eigen::VectorXi planned_matches(const Vec& tau, double eps) {
    Eigen::VectorXi m(tau.size());
    for (int j = 0; j < tau.size(); ++j)
        m[j] = std::max(0, static_cast<int>(std::ceil(tau[j] - eps)));
    return m;
}

namespace detail {

inline void shadow_order(const Vec& u, std::vector<int>& order) {
    order.resize(u.size());
    for (int j = 0; j < u.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return u[a] > u[b]; });
}

}  // namespace detail

// Algorithm 1: one pass over activities in descending shadow-value order,
// executing d_j = min(m_j, q_l, q_r) each.
inline MatchDecision proposed_decide(const DecisionContext& ctx,
                                     const MatchingNetwork& net,
                                     const StaticPlan& plan,
                                     const ShadowOracle& oracle, double eta,
                                     double round_eps) {
    MatchDecision out;
    Eigen::VectorXi q = ctx.q;
    const double n = ctx.scale_n;
    Vec z = q.cast<double>() / std::sqrt(n);
    Vec u(net.num_activities());
    oracle.shadow(z, u);
    std::vector<int> order;
    detail::shadow_order(u, order);
    const Vec tau = intended_matches(u, plan, ctx.dt, eta, n);
    const Eigen::VectorXi m = planned_matches(tau, round_eps);
    for (int j : order) {
        const int d = std::min({m[j], q[net.left_class(j)], q[net.right_class(j)]});
        if (d >= 1) {
            q[net.left_class(j)] -= d;
            q[net.right_class(j)] -= d;
            out.add(j, d);
        }
    }
    return out;
}

// Algorithm 2: one match at a time; shadow values and the scan order are
// refreshed after every match.
inline MatchDecision proposed_decide_updating(const DecisionContext& ctx,
                                              const MatchingNetwork& net,
                                              const StaticPlan& plan,
                                              const ShadowOracle& oracle,
                                              double eta, double round_eps) {
    MatchDecision out;
    Eigen::VectorXi q = ctx.q;
    const double n = ctx.scale_n;
    const double root_n = std::sqrt(n);
    Vec z(net.num_classes());
    Vec u(net.num_activities());
    std::vector<int> order;
    const long guard = ctx.q.sum() / 2 + net.num_activities() + 1;
    long spins = 0;
    for (;;) {
        if (++spins > guard)
            throw LoopGuard("updating policy failed to terminate");
        for (int i = 0; i < net.num_classes(); ++i) z[i] = q[i] / root_n;
        oracle.shadow(z, u);
        detail::shadow_order(u, order);
        bool matched = false;
        for (int j : order) {
            double tau;
            if (u[j] >= 0.0)
                tau = (n * plan.x_star[j] + root_n * eta) * ctx.dt;
            else
                tau = std::max(0.0, n * plan.x_star[j] - root_n * eta) * ctx.dt;
            const int m = std::max(0, static_cast<int>(std::ceil(tau - round_eps)));
            const int d = std::min({m, q[net.left_class(j)], q[net.right_class(j)]});
            if (d >= 1) {
                q[net.left_class(j)] -= 1;
                q[net.right_class(j)] -= 1;
                out.add(j, 1);
                matched = true;
                break;  // restart the scan with updated shadow values
            }
        }
        if (!matched) return out;
    }
}

// Replay helper: true when the decision never drives any queue negative.
inline bool decision_executable(const Eigen::VectorXi& q0, const MatchingNetwork& net,
                                const MatchDecision& dec) {
    Eigen::VectorXi q = q0;
    for (const auto& [j, d] : dec.steps) {
        if (d < 1) return false;
        q[net.left_class(j)] -= d;
        q[net.right_class(j)] -= d;
        if (q[net.left_class(j)] < 0 || q[net.right_class(j)] < 0) return false;
    }
    return true;
}

}  // namespace matchbcp
