#pragma once

#include <cmath>
#include <stdexcept>

#include "matchbcp/static_plan.hpp"

namespace matchbcp {

struct NonTermination : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kSkorokhodEps = 1e-8;

struct SkorokhodResult {
    Vec z;       // projected state, >= -eps componentwise
    Vec y;       // accumulated pushes per basic activity, >= 0
    int sweeps;  // sweeps needed; > 1 only under non-orthogonal interaction
};

// Projects a free point back into the nonnegative orthant by pushing along
// basic-activity reflection directions (columns of H). For each violated
// buffer the cheapest incident basic activity is pushed by the buffer's
// current deficit; the sweep early-stops once every component clears -eps.
// Buffers are processed in ascending index order and y is accumulated
// directly from the pushes, so z = x + H y holds exactly.
inline SkorokhodResult skorokhod(const Vec& x, const MatchingNetwork& net,
                                 const StaticPlan& plan) {
    const int I = static_cast<int>(x.size());
    SkorokhodResult res;
    res.z = x;
    res.y = Vec::Zero(plan.basic_count());
    res.sweeps = 0;

    const int max_sweeps = 10 * I;
    for (;;) {
        bool violated = false;
        for (int i = 0; i < I; ++i) {
            if (res.z[i] < -kSkorokhodEps) {
                violated = true;
                break;
            }
        }
        if (!violated) break;
        if (res.sweeps >= max_sweeps)
            throw NonTermination("skorokhod: no progress after " +
                                 std::to_string(max_sweeps) + " sweeps");
        ++res.sweeps;

        // sweep set fixed at sweep start, ascending buffer order
        bool all_clear = false;
        for (int i = 0; i < I && !all_clear; ++i) {
            if (res.z[i] >= -kSkorokhodEps) continue;
            const int p = plan.cheapest_basic[i];
            const int j = plan.basic[p];
            const double push = std::abs(res.z[i]);
            res.z[net.left_class(j)] += push;
            res.z[net.right_class(j)] += push;
            res.y[p] += push;
            all_clear = true;
            for (int q = 0; q < I; ++q) {
                if (res.z[q] < -kSkorokhodEps) {
                    all_clear = false;
                    break;
                }
            }
        }
    }
    return res;
}

}  // namespace matchbcp
