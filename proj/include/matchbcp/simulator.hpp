#pragma once

#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <vector>

#include "matchbcp/parallel.hpp"
#include "matchbcp/policies.hpp"
#include "matchbcp/rng.hpp"

namespace matchbcp {

struct ClockSkew : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SimConfig {
    double scale_n = 100.0;   // arrival rates are n * lambda
    double discount = 0.01;   // r
    double horizon = 1000.0;  // T_sim
    int replications = 100;
    std::uint64_t seed = 1;
    double usage_window = 1000.0;
    int workers = 0;
};

struct SimResult {
    double xi_hat = 0.0;            // centered discounted value
    double discounted_value = 0.0;  // integral of e^{-rt} dPi
    Vec usage;                      // matches per activity in the usage window
    Eigen::VectorXi abandon_counts;
    int replication = 0;
};

// Per-replication audit hooks used by the property suite: draw hashes for the
// CRN contract, tallies for the conservation identity.
struct SimAudit {
    bool check_conservation = false;
    std::vector<std::uint64_t> draw_hash;  // per class, over consumed draws
    Eigen::VectorXi arrivals;              // per class
    Eigen::VectorXi abandons;
    Eigen::VectorXi matches;  // per activity
    long events = 0;
};

namespace detail {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline void fnv_mix(std::uint64_t& h, double x) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(x));
    std::memcpy(&bits, &x, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffu;
        h *= kFnvPrime;
    }
}

struct WaitingJob {
    double arrival_time;
    bool alive;
};

// FIFO buffer with stable sequence ids; the front entry is always alive.
struct ClassQueue {
    std::deque<WaitingJob> jobs;
    std::uint64_t first_seq = 0;
    int alive = 0;

    std::uint64_t push(double t) {
        jobs.push_back({t, true});
        ++alive;
        return first_seq + jobs.size() - 1;
    }
    void trim() {
        while (!jobs.empty() && !jobs.front().alive) {
            jobs.pop_front();
            ++first_seq;
        }
    }
    // head pop for a match
    double pop_head() {
        const double t = jobs.front().arrival_time;
        jobs.pop_front();
        ++first_seq;
        --alive;
        trim();
        return t;
    }
    // returns false when the job is gone (matched earlier)
    bool kill(std::uint64_t seq) {
        if (seq < first_seq) return false;
        auto& job = jobs[static_cast<std::size_t>(seq - first_seq)];
        if (!job.alive) return false;
        job.alive = false;
        --alive;
        trim();
        return true;
    }
    double arrival_of(int k_from_head) const {
        int seen = 0;
        for (const auto& job : jobs) {
            if (!job.alive) continue;
            if (seen == k_from_head) return job.arrival_time;
            ++seen;
        }
        throw std::out_of_range("queue view: fewer waiting jobs than asked");
    }
};

struct AbandonEvent {
    double time;
    int cls;
    std::uint64_t seq;
    bool operator>(const AbandonEvent& o) const {
        return time != o.time ? time > o.time : cls > o.cls;
    }
};

struct ArrivalEvent {
    double time;
    int cls;
    bool operator>(const ArrivalEvent& o) const {
        return time != o.time ? time > o.time : cls > o.cls;
    }
};

class SimQueueView : public QueueView {
public:
    explicit SimQueueView(const std::vector<ClassQueue>& queues) : queues_(&queues) {}
    double arrival_time(int cls, int k) const override {
        return (*queues_)[cls].arrival_of(k);
    }

private:
    const std::vector<ClassQueue>* queues_;
};

}  // namespace detail

// One replication of the pre-limit system under a single policy. Events are
// Poisson arrivals at rates n lambda_i and per-job exponential patience drawn
// at arrival (distributionally the state-dependent abandonment of the model,
// and well defined under common random numbers across policies). Holding
// cost accrues in closed form between events.
inline SimResult simulate_replication(const MatchingNetwork& net,
                                      const StaticPlan& plan,
                                      const PolicySpec& policy,
                                      const SimConfig& cfg, int replication,
                                      SimAudit* audit = nullptr) {
    const int I = net.num_classes();
    const int J = net.num_activities();
    const double r = cfg.discount;
    const double n = cfg.scale_n;

    std::vector<RngStream> stream;
    stream.reserve(I);
    for (int i = 0; i < I; ++i)
        stream.emplace_back(derive_seed(cfg.seed, 0xA221u,
                                        static_cast<std::uint64_t>(replication),
                                        static_cast<std::uint64_t>(i)));
    if (audit) {
        audit->draw_hash.assign(I, detail::kFnvOffset);
        audit->arrivals = Eigen::VectorXi::Zero(I);
        audit->abandons = Eigen::VectorXi::Zero(I);
        audit->matches = Eigen::VectorXi::Zero(J);
        audit->events = 0;
    }

    // next arrival (and its patience) per class
    std::priority_queue<detail::ArrivalEvent, std::vector<detail::ArrivalEvent>,
                        std::greater<>> arrivals;
    auto draw_arrival = [&](int i, double from) {
        const double gap = stream[i].exponential(n * net.arrival_rates()[i]);
        const double patience = stream[i].exponential(net.abandonment_rates()[i]);
        if (audit) {
            detail::fnv_mix(audit->draw_hash[i], gap);
            detail::fnv_mix(audit->draw_hash[i], patience);
        }
        arrivals.push({from + gap, i});
        return patience;
    };
    std::vector<double> next_patience(I);
    for (int i = 0; i < I; ++i) next_patience[i] = draw_arrival(i, 0.0);

    std::priority_queue<detail::AbandonEvent, std::vector<detail::AbandonEvent>,
                        std::greater<>> abandons;
    std::vector<detail::ClassQueue> queues(I);
    detail::SimQueueView view(queues);
    Eigen::VectorXi q = Eigen::VectorXi::Zero(I);
    Eigen::VectorXi arr_count = Eigen::VectorXi::Zero(I);
    Eigen::VectorXi abn_count = Eigen::VectorXi::Zero(I);
    Eigen::VectorXi match_count = Eigen::VectorXi::Zero(J);

    const bool discrete_review = policy.kind == PolicyKind::StaticPriority;
    std::vector<std::vector<int>> priority_sets;
    if (discrete_review) priority_sets = build_priority_sets(net, plan);
    std::optional<ModelShadowOracle> oracle;
    if (policy.kind == PolicyKind::Proposed ||
        policy.kind == PolicyKind::ProposedUpdating) {
        if (!policy.model)
            throw std::invalid_argument("proposed policy needs a trained model");
        oracle.emplace(*policy.model, net);
    }

    double t_now = 0.0, w_now = 1.0;  // w = e^{-rt}
    double t_last_epoch = 0.0;
    double hold_rate = 0.0;  // h . q, maintained incrementally
    double disc_value = 0.0, disc_hold = 0.0, disc_aband = 0.0;
    Vec usage = Vec::Zero(J);
    long review_index = 1;
    double next_review = discrete_review ? policy.review_period : 2.0 * cfg.horizon;

    auto conservation_check = [&]() {
        for (int i = 0; i < I; ++i) {
            long flow = arr_count[i] - abn_count[i];
            for (int j : net.incident(i)) flow -= match_count[j];
            if (flow != q[i])
                throw std::logic_error("conservation identity violated at class " +
                                       std::to_string(i + 1));
        }
    };

    auto execute = [&](const MatchDecision& dec) {
        for (const auto& [j, d] : dec.steps) {
            for (int k = 0; k < d; ++k) {
                queues[net.left_class(j)].pop_head();
                queues[net.right_class(j)].pop_head();
            }
            q[net.left_class(j)] -= d;
            q[net.right_class(j)] -= d;
            hold_rate -= d * (net.holding_costs()[net.left_class(j)] +
                              net.holding_costs()[net.right_class(j)]);
            disc_value += net.match_values()[j] * d * w_now;
            match_count[j] += d;
            if (t_now < cfg.usage_window) usage[j] += d;
        }
    };

    auto decide_and_execute = [&](double dt) {
        MatchDecision dec;
        DecisionContext ctx{q, &view, dt, t_now, n};
        switch (policy.kind) {
            case PolicyKind::Greedy: dec = greedy_decide(ctx, net); break;
            case PolicyKind::GreedyBasic: dec = greedy_basic_decide(ctx, net, plan); break;
            case PolicyKind::Fcfs: dec = fcfs_decide(ctx, net); break;
            case PolicyKind::Lqfs: dec = lqfs_decide(ctx, net); break;
            case PolicyKind::StaticPriority:
                dec = static_priority_review(ctx, net, priority_sets);
                break;
            case PolicyKind::Proposed:
                dec = proposed_decide(ctx, net, plan, *oracle, policy.eta, policy.round_eps);
                break;
            case PolicyKind::ProposedUpdating:
                dec = proposed_decide_updating(ctx, net, plan, *oracle, policy.eta,
                                               policy.round_eps);
                break;
        }
        execute(dec);
    };

    for (;;) {
        double t_next = cfg.horizon;
        int kind = 0;  // 0: end, 1: arrival, 2: abandonment, 3: review
        if (!arrivals.empty() && arrivals.top().time < t_next) {
            t_next = arrivals.top().time;
            kind = 1;
        }
        if (!abandons.empty() && abandons.top().time < t_next) {
            // skip stale timers of jobs that were matched long ago
            t_next = abandons.top().time;
            kind = 2;
        }
        if (discrete_review && next_review < t_next) {
            t_next = next_review;
            kind = 3;
        }
        if (t_next < t_now - 1e-12) throw ClockSkew("event time went backwards");

        const double w_next = (r > 0.0) ? std::exp(-r * t_next) : 1.0;
        // closed-form discounted holding over [t_now, t_next); expm1 keeps the
        // difference quotient accurate down to r -> 0
        disc_hold += (r > 0.0)
                         ? hold_rate * w_now * -std::expm1(-r * (t_next - t_now)) / r
                         : hold_rate * (t_next - t_now);
        t_now = t_next;
        w_now = w_next;
        if (kind == 0) break;

        if (kind == 1) {
            const int i = arrivals.top().cls;
            arrivals.pop();
            const double patience = next_patience[i];
            next_patience[i] = draw_arrival(i, t_now);
            const std::uint64_t seq = queues[i].push(t_now);
            q[i] += 1;
            arr_count[i] += 1;
            hold_rate += net.holding_costs()[i];
            if (!discrete_review) {
                decide_and_execute(t_now - t_last_epoch);
                t_last_epoch = t_now;
            }
            // schedule abandonment only if the job is still waiting
            if (seq >= queues[i].first_seq && std::isfinite(patience))
                abandons.push({t_now + patience, i, seq});
            if (audit) ++audit->events;
            if (audit && audit->check_conservation) conservation_check();
        } else if (kind == 2) {
            const auto ev = abandons.top();
            abandons.pop();
            if (!queues[ev.cls].kill(ev.seq)) continue;  // stale: matched already
            q[ev.cls] -= 1;
            abn_count[ev.cls] += 1;
            hold_rate -= net.holding_costs()[ev.cls];
            disc_aband += net.abandonment_penalties()[ev.cls] * w_now;
            if (!discrete_review) {
                decide_and_execute(t_now - t_last_epoch);
                t_last_epoch = t_now;
            }
            if (audit) ++audit->events;
            if (audit && audit->check_conservation) conservation_check();
        } else {
            decide_and_execute(t_now - t_last_epoch);
            t_last_epoch = t_now;
            ++review_index;
            next_review = review_index * policy.review_period;
            if (audit && audit->check_conservation) conservation_check();
        }
    }

    const double fluid_rate = net.match_values().dot(plan.x_star) * n;
    const double center = (r > 0.0)
                              ? fluid_rate * -std::expm1(-r * cfg.horizon) / r
                              : fluid_rate * cfg.horizon;
    const double pi = disc_value - disc_hold - disc_aband;

    SimResult res;
    res.xi_hat = (center - pi) / std::sqrt(n);
    res.discounted_value = pi;
    res.usage = usage;
    res.abandon_counts = abn_count;
    res.replication = replication;
    if (audit) {
        audit->arrivals = arr_count;
        audit->abandons = abn_count;
        audit->matches = match_count;
        conservation_check();
    }
    return res;
}

struct PolicySummary {
    PolicySpec spec;
    std::vector<double> per_rep;  // xi_hat per replication
    double mean = 0.0;
    double half_width = 0.0;  // 1.96 s / sqrt(R)
    Vec usage_mean;
};

// Evaluates every policy on identical event streams per replication and
// aggregates 95% confidence intervals.
inline std::vector<PolicySummary> run_experiment(const MatchingNetwork& net,
                                                 const StaticPlan& plan,
                                                 const std::vector<PolicySpec>& policies,
                                                 const SimConfig& cfg) {
    if (cfg.replications < 2)
        throw std::invalid_argument("need at least 2 replications for intervals");
    const int R = cfg.replications;
    const int P = static_cast<int>(policies.size());
    std::vector<PolicySummary> out(P);
    for (int p = 0; p < P; ++p) {
        out[p].spec = policies[p];
        out[p].per_rep.assign(R, 0.0);
        out[p].usage_mean = Vec::Zero(net.num_activities());
    }
    std::vector<Vec> usage(static_cast<std::size_t>(P) * R);
    parallel_tasks(P * R, worker_count(cfg.workers), [&](int task, int) {
        const int p = task / R;
        const int rep = task % R;
        SimResult res = simulate_replication(net, plan, policies[p], cfg, rep);
        out[p].per_rep[rep] = res.xi_hat;
        usage[task] = res.usage;
    });
    for (int p = 0; p < P; ++p) {
        double sum = 0.0;
        for (double x : out[p].per_rep) sum += x;
        out[p].mean = sum / R;
        double ss = 0.0;
        for (double x : out[p].per_rep) ss += (x - out[p].mean) * (x - out[p].mean);
        const double sd = std::sqrt(ss / (R - 1));
        out[p].half_width = 1.96 * sd / std::sqrt(static_cast<double>(R));
        for (int rep = 0; rep < R; ++rep)
            out[p].usage_mean += usage[static_cast<std::size_t>(p) * R + rep];
        out[p].usage_mean /= static_cast<double>(R);
    }
    return out;
}

// Per-activity match counts within the reporting window of one result.
inline Vec activity_usage(const SimResult& res) { return res.usage; }

struct ReviewSearchResult {
    double best_period = 0.0;
    std::vector<std::pair<double, double>> period_means;  // (l, mean xi_hat)
};

// One-dimensional grid search for the static-priority review period, under
// common random numbers across grid points.
inline ReviewSearchResult grid_search_review_period(const MatchingNetwork& net,
                                                    const StaticPlan& plan,
                                                    const SimConfig& cfg,
                                                    const std::vector<double>& grid) {
    if (grid.empty()) throw std::invalid_argument("empty review-period grid");
    ReviewSearchResult out;
    std::vector<PolicySpec> specs;
    specs.reserve(grid.size());
    for (double l : grid)
        specs.push_back(PolicySpec::benchmark(PolicyKind::StaticPriority, l));
    auto summaries = run_experiment(net, plan, specs, cfg);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < grid.size(); ++g) {
        out.period_means.emplace_back(grid[g], summaries[g].mean);
        if (summaries[g].mean < best) {
            best = summaries[g].mean;
            out.best_period = grid[g];
        }
    }
    return out;
}

}  // namespace matchbcp
