#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <vector>

#include "matchbcp/adam.hpp"
#include "matchbcp/checkpoint.hpp"
#include "matchbcp/hamiltonian.hpp"
#include "matchbcp/mlp.hpp"
#include "matchbcp/parallel.hpp"
#include "matchbcp/rbm.hpp"

namespace matchbcp {

struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainerConfig {
    ReferenceConfig reference;
    int batch = 256;
    long iterations = 80000;
    double discount = 0.01;
    long checkpoint_every = 5000;
    std::uint64_t seed = 1;
    int hidden_layers = 3;
    int hidden_width = 100;
    int workers = 0;
    int chunks = 16;  // fixed task decomposition; results don't depend on workers
    std::filesystem::path checkpoint_path;  // empty: no checkpoints written
    std::filesystem::path telemetry_path;   // empty: telemetry kept in memory only
    std::optional<LrSchedule> schedule;     // default: staircase(iterations)
};

// Everything the discretized loss needs besides the paths themselves.
struct LossContext {
    int steps = 0;
    double step = 0.0;
    Vec weights;       // e^{-r h k}, k = 0..N-1
    double weight_T = 1.0;  // e^{-r T}
    Vec v_basic;
    DriverContext driver;
};

inline LossContext make_loss_context(const MatchingNetwork& net,
                                     const StaticPlan& plan,
                                     const ReferenceConfig& ref,
                                     double discount) {
    LossContext ctx;
    ctx.steps = ref.steps;
    ctx.step = ref.steps > 0 ? ref.horizon / ref.steps : 0.0;
    ctx.weights = Vec(ref.steps);
    for (int k = 0; k < ref.steps; ++k)
        ctx.weights[k] = std::exp(-discount * ctx.step * k);
    ctx.weight_T = std::exp(-discount * ref.horizon);
    ctx.v_basic = plan.v_basic;
    ctx.driver = make_driver_context(net, plan, ref.theta_tilde, ref.eta, ref.scale_n);
    return ctx;
}

// Shadow value of each activity: U_j(z) = G_{l(j)}(z) + G_{r(j)}(z) + v_j.
inline Vec shadow_values(const ValueGradientModel& model, const Vec& z,
                         const MatchingNetwork& net) {
    Mlp::Workspace ws;
    const Eigen::MatrixXd& g = model.grad_net.forward(z.transpose(), ws);
    Vec u(net.num_activities());
    for (int j = 0; j < net.num_activities(); ++j)
        u[j] = g(0, net.left_class(j)) + g(0, net.right_class(j)) +
               net.match_values()[j];
    return u;
}

namespace detail {

struct ChunkScratch {
    Mlp::Workspace ws_g, ws_v;
    Eigen::MatrixXd xg, xv, dG, dV;
    Vec grad_v, grad_g;
    Vec theta_scratch, fgrad, grow;  // grow: contiguous copy of one G row
    double sum_sq = 0.0;
    bool finite = true;
};

// Pathwise discrepancy of Subroutine 3 for paths [p0, p1):
//   L_i = e^{-rT} V(Z_T) - V(Z_0) + sum_k w_k v_B.dY_k
//         - sum_k w_k G(Z_k).delta_k + sum_k w_k F(Z_k, G(Z_k)) h,
// all sums over left endpoints k = 0..N-1. Accumulates sum_i L_i^2 and, when
// batch_for_grad > 0, the gradients of (1/B) sum L_i^2 w.r.t. both nets.
inline void loss_chunk(const ValueGradientModel& model, const PathBatch& batch,
                       int p0, int p1, const LossContext& ctx,
                       int batch_for_grad, ChunkScratch& s) {
    const int I = batch.classes;
    const int N = batch.steps;
    const int b = batch.basics;
    const int paths = p1 - p0;
    const int grows = paths * N;

    s.theta_scratch.resize(ctx.driver.net->num_activities());
    s.fgrad.resize(I);
    s.grow.resize(I);
    s.sum_sq = 0.0;
    s.finite = true;

    if (grows > 0) {
        s.xg.resize(grows, I);
        for (int p = p0; p < p1; ++p)
            for (int k = 0; k < N; ++k)
                for (int i = 0; i < I; ++i)
                    s.xg((p - p0) * N + k, i) = batch.z_at(p, k)[i];
        model.grad_net.forward(s.xg, s.ws_g);
    }
    // V on the Z(0) rows (first `paths`) then the Z(T) rows
    s.xv.resize(2 * paths, I);
    for (int p = p0; p < p1; ++p)
        for (int i = 0; i < I; ++i) {
            s.xv(p - p0, i) = batch.z_at(p, 0)[i];
            s.xv(paths + (p - p0), i) = batch.z_at(p, N)[i];
        }
    const Eigen::MatrixXd& vout = model.value_net.forward(s.xv, s.ws_v);
    const Eigen::MatrixXd& gout = s.ws_g.out;

    std::vector<double> losses(paths, 0.0);
    for (int p = p0; p < p1; ++p) {
        const int pc = p - p0;
        double acc = ctx.weight_T * vout(paths + pc, 0) - vout(pc, 0);
        for (int k = 0; k < N; ++k) {
            const double wk = ctx.weights[k];
            const double* dy = batch.dy_at(p, k);
            const double* dl = batch.delta_at(p, k);
            const double* zk = batch.z_at(p, k);
            double vy = 0.0;
            for (int q = 0; q < b; ++q) vy += ctx.v_basic[q] * dy[q];
            double gw = 0.0;
            for (int i = 0; i < I; ++i) {
                s.grow[i] = gout(pc * N + k, i);
                gw += s.grow[i] * dl[i];
            }
            const double f =
                driver_F(zk, s.grow.data(), ctx.driver, s.theta_scratch.data());
            acc += wk * (vy - gw + f * ctx.step);
        }
        if (!std::isfinite(acc)) s.finite = false;
        losses[pc] = acc;
        s.sum_sq += acc * acc;
    }

    if (batch_for_grad <= 0 || !s.finite) return;

    s.grad_v = Vec::Zero(model.value_net.param_count());
    s.grad_g = Vec::Zero(model.grad_net.param_count());
    s.dV.resize(2 * paths, 1);
    for (int pc = 0; pc < paths; ++pc) {
        const double a = 2.0 * losses[pc] / batch_for_grad;
        s.dV(pc, 0) = -a;
        s.dV(paths + pc, 0) = a * ctx.weight_T;
    }
    model.value_net.backward(s.dV, s.ws_v, s.grad_v);

    if (grows > 0) {
        s.dG.resize(grows, I);
        for (int p = p0; p < p1; ++p) {
            const int pc = p - p0;
            const double a = 2.0 * losses[pc] / batch_for_grad;
            for (int k = 0; k < N; ++k) {
                const int r = pc * N + k;
                const double wk = ctx.weights[k];
                const double* dl = batch.delta_at(p, k);
                const double* zk = batch.z_at(p, k);
                for (int i = 0; i < I; ++i) s.grow[i] = gout(r, i);
                driver_F(zk, s.grow.data(), ctx.driver, s.theta_scratch.data(),
                         s.fgrad.data());
                for (int i = 0; i < I; ++i)
                    s.dG(r, i) = a * wk * (ctx.step * s.fgrad[i] - dl[i]);
            }
        }
        model.grad_net.backward(s.dG, s.ws_g, s.grad_g);
    }
}

}  // namespace detail

// Mean over paths of the squared Subroutine-3 discrepancy.
inline double empirical_loss(const ValueGradientModel& model,
                             const PathBatch& batch, const LossContext& ctx) {
    detail::ChunkScratch s;
    detail::loss_chunk(model, batch, 0, batch.paths, ctx, 0, s);
    if (!s.finite)
        throw NonFiniteLoss("loss is not finite");
    return s.sum_sq / batch.paths;
}

// Loss plus its gradient w.r.t. (w1, w2) for a fixed batch.
inline double loss_and_gradients(const ValueGradientModel& model,
                                 const PathBatch& batch, const LossContext& ctx,
                                 Vec& grad_value, Vec& grad_grad) {
    detail::ChunkScratch s;
    detail::loss_chunk(model, batch, 0, batch.paths, ctx, batch.paths, s);
    if (!s.finite) throw NonFiniteLoss("loss is not finite");
    grad_value = s.grad_v;
    grad_grad = s.grad_g;
    return s.sum_sq / batch.paths;
}

struct TelemetryRow {
    long iteration;
    double lr;
    double loss;
    double ema_loss;
};

struct TrainResult {
    ValueGradientModel model;
    std::vector<TelemetryRow> telemetry;
    AdamState adam_value{0}, adam_grad{0};
};

// Subroutine-3 training loop: fresh path segments from the carried states,
// joint gradient step on (w1, w2), terminal states become the next initial
// states. Fully reproducible from cfg.seed for a fixed chunk count.
inline TrainResult train(const MatchingNetwork& net, const StaticPlan& plan,
                         const TrainerConfig& cfg) {
    const int I = net.num_classes();
    const int B = cfg.batch;
    TrainResult out;
    out.model = ValueGradientModel(I, cfg.hidden_layers, cfg.hidden_width);
    out.model.init(cfg.seed);
    out.adam_value = AdamState(out.model.value_net.param_count());
    out.adam_grad = AdamState(out.model.grad_net.param_count());
    if (cfg.iterations == 0) return out;

    const LrSchedule schedule =
        cfg.schedule ? *cfg.schedule : LrSchedule::staircase(cfg.iterations);
    schedule.validate(cfg.iterations);
    const RbmDynamics dyn = make_dynamics(net, plan, cfg.reference);
    const LossContext lctx = make_loss_context(net, plan, cfg.reference, cfg.discount);

    const int n_chunks = std::max(1, std::min(cfg.chunks, B));
    const int workers = worker_count(cfg.workers);
    std::vector<detail::ChunkScratch> scratch(n_chunks);
    std::vector<std::uint64_t> path_seed(B);

    Mat states = Mat::Zero(B, I);  // Z(0) = 0 before continuation kicks in
    PathBatch batch;
    batch.resize(B, dyn.steps, I, plan.basic_count());
    Vec grad_v(out.model.value_net.param_count());
    Vec grad_g(out.model.grad_net.param_count());

    std::ofstream telemetry_file;
    if (!cfg.telemetry_path.empty()) {
        telemetry_file.open(cfg.telemetry_path);
        telemetry_file << "iteration,lr,loss,ema_loss\n";
    }
    bool have_checkpoint = false;
    double ema = 0.0;

    auto chunk_range = [&](int c) {
        return std::pair<int, int>{c * B / n_chunks, (c + 1) * B / n_chunks};
    };

    for (long iter = 0; iter < cfg.iterations; ++iter) {
        for (int p = 0; p < B; ++p)
            path_seed[p] = derive_seed(cfg.seed, 0x70A7u,
                                       static_cast<std::uint64_t>(iter),
                                       static_cast<std::uint64_t>(p));
        parallel_tasks(n_chunks, workers, [&](int c, int) {
            auto [p0, p1] = chunk_range(c);
            for (int p = p0; p < p1; ++p) {
                RngStream rng(path_seed[p]);
                discretize(dyn, states.row(p).transpose(), rng, batch, p);
            }
            detail::loss_chunk(out.model, batch, p0, p1, lctx, B, scratch[c]);
        });

        double loss = 0.0;
        bool finite = true;
        grad_v.setZero();
        grad_g.setZero();
        for (int c = 0; c < n_chunks; ++c) {  // fixed reduction order
            loss += scratch[c].sum_sq;
            finite = finite && scratch[c].finite;
            if (scratch[c].finite) {
                grad_v += scratch[c].grad_v;
                grad_g += scratch[c].grad_g;
            }
        }
        loss /= B;

        if (!finite || !std::isfinite(loss)) {
            if (have_checkpoint && !cfg.checkpoint_path.empty()) {
                Checkpoint cp = load_checkpoint(cfg.checkpoint_path);
                out.model = std::move(cp.model);
            }
            throw NonFiniteLoss("training diverged at iteration " +
                                std::to_string(iter));
        }

        const double lr = schedule.rate_at(iter);
        adam_step(out.model.value_net.params(), grad_v, out.adam_value, lr);
        adam_step(out.model.grad_net.params(), grad_g, out.adam_grad, lr);
        out.model.iteration = iter + 1;

        for (int p = 0; p < B; ++p)
            for (int i = 0; i < I; ++i) states(p, i) = batch.z_at(p, dyn.steps)[i];

        ema = (iter == 0) ? loss : 0.99 * ema + 0.01 * loss;
        out.telemetry.push_back({iter, lr, loss, ema});
        if (telemetry_file.is_open())
            telemetry_file << iter << "," << lr << "," << loss << "," << ema << "\n";

        if (!cfg.checkpoint_path.empty() &&
            ((iter + 1) % cfg.checkpoint_every == 0 || iter + 1 == cfg.iterations)) {
            save_checkpoint(cfg.checkpoint_path, out.model, out.adam_value,
                            out.adam_grad);
            have_checkpoint = true;
        }
    }
    return out;
}

}  // namespace matchbcp
