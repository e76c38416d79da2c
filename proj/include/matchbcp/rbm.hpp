#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "matchbcp/rng.hpp"
#include "matchbcp/skorokhod.hpp"

namespace matchbcp {

// Constant reference drift used only to generate training paths.
struct ReferenceConfig {
    Vec theta_tilde;  // length J
    double horizon;   // T
    int steps;        // N, step size h = T/N
    double eta;       // drift bound of the policy box
    double scale_n;   // system scale n

    double step() const { return horizon / steps; }
};

inline ReferenceConfig make_reference_config(const MatchingNetwork& net,
                                             const StaticPlan& plan,
                                             double theta_basic,
                                             double theta_nonbasic, double T,
                                             int N, double eta, double n) {
    ReferenceConfig cfg;
    cfg.theta_tilde = Vec(net.num_activities());
    for (int j = 0; j < net.num_activities(); ++j)
        cfg.theta_tilde[j] = plan.is_basic[j] ? theta_basic : theta_nonbasic;
    cfg.horizon = T;
    cfg.steps = N;
    cfg.eta = eta;
    cfg.scale_n = n;
    return cfg;
}

// The reference drift must keep the matching control non-decreasing:
// theta_B <= sqrt(n) x*_B and theta_N <= 0. (|theta_j| may exceed eta; the
// reference box uses eta' = max(eta, |theta_j|).)
inline void validate_reference(const ReferenceConfig& cfg, const StaticPlan& plan) {
    if (cfg.steps <= 0 || cfg.horizon <= 0.0)
        throw std::invalid_argument("reference config: T and N must be positive");
    if (cfg.theta_tilde.size() != plan.x_star.size())
        throw std::invalid_argument("reference drift has wrong length");
    const double root_n = std::sqrt(cfg.scale_n);
    for (int j = 0; j < cfg.theta_tilde.size(); ++j) {
        if (plan.is_basic[j]) {
            if (cfg.theta_tilde[j] > root_n * plan.x_star[j] + 1e-12)
                throw std::invalid_argument("reference drift exceeds sqrt(n) x* on a basic activity");
        } else if (cfg.theta_tilde[j] > 0.0) {
            throw std::invalid_argument("reference drift must be <= 0 on nonbasic activities");
        }
    }
}

// Per-step Euler quantities, precomputed once.
struct RbmDynamics {
    const MatchingNetwork* net;
    const StaticPlan* plan;
    Vec drift_h;      // R theta_tilde * h
    Vec noise_scale;  // sqrt(h lambda_i)
    Vec gamma_h;      // gamma_i * h
    int steps;
    double step;
};

inline RbmDynamics make_dynamics(const MatchingNetwork& net, const StaticPlan& plan,
                                 const ReferenceConfig& cfg) {
    validate_reference(cfg, plan);
    RbmDynamics dyn;
    dyn.net = &net;
    dyn.plan = &plan;
    dyn.steps = cfg.steps;
    dyn.step = cfg.step();
    const int I = net.num_classes();
    dyn.drift_h = Vec::Zero(I);
    for (int j = 0; j < net.num_activities(); ++j) {
        dyn.drift_h[net.left_class(j)] += cfg.theta_tilde[j] * dyn.step;
        dyn.drift_h[net.right_class(j)] += cfg.theta_tilde[j] * dyn.step;
    }
    dyn.noise_scale = (dyn.step * net.arrival_rates().array()).sqrt();
    dyn.gamma_h = net.abandonment_rates() * dyn.step;
    return dyn;
}

// Batch of discretized reference paths. Contiguous, path-major storage.
struct PathBatch {
    int paths = 0, steps = 0, classes = 0, basics = 0;
    std::vector<double> z;      // paths x (steps+1) x classes
    std::vector<double> dy;     // paths x steps x basics
    std::vector<double> delta;  // paths x steps x classes

    void resize(int B, int N, int I, int b) {
        paths = B;
        steps = N;
        classes = I;
        basics = b;
        z.assign(static_cast<std::size_t>(B) * (N + 1) * I, 0.0);
        dy.assign(static_cast<std::size_t>(B) * N * b, 0.0);
        delta.assign(static_cast<std::size_t>(B) * N * I, 0.0);
    }
    double* z_at(int p, int k) { return z.data() + (static_cast<std::size_t>(p) * (steps + 1) + k) * classes; }
    const double* z_at(int p, int k) const { return z.data() + (static_cast<std::size_t>(p) * (steps + 1) + k) * classes; }
    double* dy_at(int p, int k) { return dy.data() + (static_cast<std::size_t>(p) * steps + k) * basics; }
    const double* dy_at(int p, int k) const { return dy.data() + (static_cast<std::size_t>(p) * steps + k) * basics; }
    double* delta_at(int p, int k) { return delta.data() + (static_cast<std::size_t>(p) * steps + k) * classes; }
    const double* delta_at(int p, int k) const { return delta.data() + (static_cast<std::size_t>(p) * steps + k) * classes; }
};

// Euler scheme: x <- Z(kh) + delta_k + R theta h - Gamma Z(kh) h, followed by
// the Skorokhod projection. Writes path `p` of the batch.
inline void discretize(const RbmDynamics& dyn, const Vec& z0, RngStream& rng,
                       PathBatch& batch, int p) {
    const int I = dyn.net->num_classes();
    const int b = dyn.plan->basic_count();
    Vec cur = z0;
    Vec pre(I);
    for (int i = 0; i < I; ++i) batch.z_at(p, 0)[i] = cur[i];
    for (int k = 0; k < dyn.steps; ++k) {
        double* dl = batch.delta_at(p, k);
        for (int i = 0; i < I; ++i) {
            dl[i] = dyn.noise_scale[i] * rng.normal();
            pre[i] = cur[i] + dl[i] + dyn.drift_h[i] - dyn.gamma_h[i] * cur[i];
        }
        SkorokhodResult proj = skorokhod(pre, *dyn.net, *dyn.plan);
        cur = proj.z;
        for (int i = 0; i < I; ++i) batch.z_at(p, k + 1)[i] = cur[i];
        for (int q = 0; q < b; ++q) batch.dy_at(p, k)[q] = proj.y[q];
    }
}

// Columnar text dump for debugging: one row per (path, step).
inline void dump_paths(const PathBatch& batch, std::ostream& out) {
    out << "path,step";
    for (int i = 0; i < batch.classes; ++i) out << ",z" << (i + 1);
    for (int q = 0; q < batch.basics; ++q) out << ",dy" << (q + 1);
    out << "\n";
    for (int p = 0; p < batch.paths; ++p) {
        for (int k = 0; k <= batch.steps; ++k) {
            out << p << "," << k;
            for (int i = 0; i < batch.classes; ++i) out << "," << batch.z_at(p, k)[i];
            for (int q = 0; q < batch.basics; ++q)
                out << "," << (k < batch.steps ? batch.dy_at(p, k)[q] : 0.0);
            out << "\n";
        }
    }
}

// Independent rng substream per path; identical (seed, tag, initial states)
// give identical batches.
inline PathBatch sample_batch(const RbmDynamics& dyn, const Mat& initial_states,
                              std::uint64_t seed, std::uint64_t tag = 0) {
    const int B = static_cast<int>(initial_states.rows());
    PathBatch batch;
    batch.resize(B, dyn.steps, dyn.net->num_classes(), dyn.plan->basic_count());
    for (int p = 0; p < B; ++p) {
        RngStream rng(derive_seed(seed, tag, static_cast<std::uint64_t>(p)));
        discretize(dyn, initial_states.row(p).transpose(), rng, batch, p);
    }
    return batch;
}

}  // namespace matchbcp
