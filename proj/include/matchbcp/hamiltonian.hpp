#pragma once

#include <cmath>

#include "matchbcp/static_plan.hpp"

namespace matchbcp {

// Admissible drift box: theta_B <= sqrt(n) x*_B, theta_N <= 0, |theta_j| <=
// eta. Componentwise that is [-eta, upper_j] with upper_j = min(sqrt(n) x*_j,
// eta) (nonbasic x*_j = 0 gives upper_j = 0).
struct DriftBox {
    Vec upper;
    double eta = 0.0;
};

inline DriftBox make_drift_box(const StaticPlan& plan, double eta, double n) {
    DriftBox box;
    box.eta = eta;
    const double root_n = std::sqrt(n);
    box.upper = (root_n * plan.x_star.array()).min(eta).matrix();
    return box;
}

struct HamiltonianResult {
    Vec theta;
    double value;
};

// min_{theta in box} u . theta separates per coordinate; a tie u_j = 0 takes
// the -eta branch.
inline double hamiltonian_min_into(const double* u, const DriftBox& box,
                                   double* theta) {
    double value = 0.0;
    const int J = static_cast<int>(box.upper.size());
    for (int j = 0; j < J; ++j) {
        const double t = (u[j] >= 0.0) ? -box.eta : box.upper[j];
        theta[j] = t;
        value += u[j] * t;
    }
    return value;
}

inline HamiltonianResult hamiltonian_min(const Vec& u, const DriftBox& box) {
    HamiltonianResult res;
    res.theta = Vec(box.upper.size());
    res.value = hamiltonian_min_into(u.data(), box, res.theta.data());
    return res;
}

// The driver of the pathwise identity:
//   F(z, x) = -(R theta_tilde) . x + c . z + min_theta (R'x + v) . theta.
struct DriverContext {
    const MatchingNetwork* net;
    Vec r_theta;  // R theta_tilde, length I
    Vec c;        // effective holding cost, length I
    DriftBox box;
};

inline DriverContext make_driver_context(const MatchingNetwork& net,
                                         const StaticPlan& plan,
                                         const Vec& theta_tilde, double eta,
                                         double n) {
    DriverContext ctx;
    ctx.net = &net;
    ctx.r_theta = Vec::Zero(net.num_classes());
    for (int j = 0; j < net.num_activities(); ++j) {
        ctx.r_theta[net.left_class(j)] += theta_tilde[j];
        ctx.r_theta[net.right_class(j)] += theta_tilde[j];
    }
    ctx.c = effective_cost(net).c;
    ctx.box = make_drift_box(plan, eta, n);
    return ctx;
}

// F value; scratch_u must hold J doubles. When grad_x is non-null it receives
// dF/dx = -R theta_tilde + R theta* (envelope differentiation of the min).
inline double driver_F(const double* z, const double* x, const DriverContext& ctx,
                       double* scratch_u, double* grad_x = nullptr) {
    const MatchingNetwork& net = *ctx.net;
    const int I = net.num_classes();
    const int J = net.num_activities();
    double val = 0.0;
    for (int i = 0; i < I; ++i) val += ctx.c[i] * z[i] - ctx.r_theta[i] * x[i];
    if (grad_x)
        for (int i = 0; i < I; ++i) grad_x[i] = -ctx.r_theta[i];
    for (int j = 0; j < J; ++j) {
        const double u = x[net.left_class(j)] + x[net.right_class(j)] +
                         net.match_values()[j];
        const double t = (u >= 0.0) ? -ctx.box.eta : ctx.box.upper[j];
        scratch_u[j] = t;
        val += u * t;
        if (grad_x) {
            grad_x[net.left_class(j)] += t;
            grad_x[net.right_class(j)] += t;
        }
    }
    return val;
}

inline double driver_F(const Vec& z, const Vec& x, const DriverContext& ctx) {
    Vec scratch(ctx.net->num_activities());
    return driver_F(z.data(), x.data(), ctx, scratch.data());
}

}  // namespace matchbcp
