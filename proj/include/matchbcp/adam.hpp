#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace matchbcp {

// Stepwise learning-rate schedule: disjoint [begin, end) ranges covering
// [0, M). rate_at clamps to the final range beyond M.
struct LrSchedule {
    struct Range {
        long begin, end;
        double rate;
    };
    std::vector<Range> ranges;

    double rate_at(long iter) const {
        for (const auto& r : ranges)
            if (iter >= r.begin && iter < r.end) return r.rate;
        return ranges.back().rate;
    }

    void validate(long total) const {
        if (ranges.empty()) throw std::invalid_argument("empty schedule");
        long cursor = 0;
        for (const auto& r : ranges) {
            if (r.begin != cursor || r.end <= r.begin)
                throw std::invalid_argument("schedule ranges must partition [0, M)");
            cursor = r.end;
        }
        if (cursor != total)
            throw std::invalid_argument("schedule does not cover [0, M)");
    }

    // The published staircase: 1e-3 / 1e-4 / 1e-5 / 5e-6 over quarters
    // (0, M/4), (M/4, 5M/8), (5M/8, 7M/8), (7M/8, M). Reproduces the 80k-run
    // breakpoints 2e4 / 5e4 / 7e4; shorter budgets scale proportionally.
    static LrSchedule staircase(long total_iters) {
        LrSchedule s;
        const long q1 = total_iters / 4;
        const long q2 = total_iters * 5 / 8;
        const long q3 = total_iters * 7 / 8;
        s.ranges = {{0, q1, 1e-3},
                    {q1, q2, 1e-4},
                    {q2, q3, 1e-5},
                    {q3, total_iters, 5e-6}};
        if (total_iters > 0) s.validate(total_iters);
        return s;
    }
};

struct AdamState {
    Eigen::VectorXd m, v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Eigen::Index n = 0)
        : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

// Standard Adam with bias correction.
inline void adam_step(Eigen::Ref<Eigen::VectorXd> w, const Eigen::VectorXd& grad,
                      AdamState& state, double rate) {
    if (grad.size() != w.size() || state.m.size() != w.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    w.array() -= rate * (state.m.array() / c1) /
                 ((state.v.array() / c2).sqrt() + state.eps);
}

}  // namespace matchbcp
