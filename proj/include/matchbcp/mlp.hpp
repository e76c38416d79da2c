#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "matchbcp/rng.hpp"

namespace matchbcp {

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

// Fully connected net with elu hidden activations and identity output.
// Parameters live in one flat vector (per layer: weight matrix column-major,
// then bias) so the optimizer and checkpoints can treat them uniformly.
class Mlp {
public:
    Mlp() = default;
    Mlp(int in, int out, int hidden_layers = 3, int hidden_width = 100) {
        widths_.push_back(in);
        for (int l = 0; l < hidden_layers; ++l) widths_.push_back(hidden_width);
        widths_.push_back(out);
        offsets_.assign(layer_count() + 1, 0);
        for (int l = 0; l < layer_count(); ++l)
            offsets_[l + 1] = offsets_[l] + (widths_[l] + 1) * widths_[l + 1];
        w_ = Eigen::VectorXd::Zero(offsets_.back());
    }

    int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
    int input_width() const { return widths_.front(); }
    int output_width() const { return widths_.back(); }
    const std::vector<int>& widths() const { return widths_; }
    Eigen::Index param_count() const { return w_.size(); }
    Eigen::VectorXd& params() { return w_; }
    const Eigen::VectorXd& params() const { return w_; }

    Eigen::Map<Eigen::MatrixXd> weight(int l) {
        return {w_.data() + offsets_[l], widths_[l + 1], widths_[l]};
    }
    Eigen::Map<const Eigen::MatrixXd> weight(int l) const {
        return {w_.data() + offsets_[l], widths_[l + 1], widths_[l]};
    }
    Eigen::Map<Eigen::VectorXd> bias(int l) {
        return {w_.data() + offsets_[l] + widths_[l] * widths_[l + 1], widths_[l + 1]};
    }
    Eigen::Map<const Eigen::VectorXd> bias(int l) const {
        return {w_.data() + offsets_[l] + widths_[l] * widths_[l + 1], widths_[l + 1]};
    }

    // He-style uniform, scaled by fan-in; biases zero.
    void init_he_uniform(std::uint64_t seed) {
        RngStream rng(seed);
        for (int l = 0; l < layer_count(); ++l) {
            const double bound = std::sqrt(6.0 / widths_[l]);
            auto W = weight(l);
            for (Eigen::Index c = 0; c < W.cols(); ++c)
                for (Eigen::Index r = 0; r < W.rows(); ++r)
                    W(r, c) = bound * (2.0 * rng.uniform() - 1.0);
            bias(l).setZero();
        }
    }

    // Caches layer inputs so backward() can form weight gradients. Reusable
    // across calls; matrices are resized on demand.
    struct Workspace {
        std::vector<Eigen::MatrixXd> inputs;  // inputs[l]: batch x widths[l]
        Eigen::MatrixXd out;
        Eigen::MatrixXd dz, da;
    };

    // X: batch x in. Returns batch x out in ws.out.
    const Eigen::MatrixXd& forward(const Eigen::MatrixXd& X, Workspace& ws) const {
        const int L = layer_count();
        ws.inputs.resize(L);
        ws.inputs[0] = X;
        for (int l = 0; l < L; ++l) {
            Eigen::MatrixXd& z = (l + 1 < L) ? ws.inputs[l + 1] : ws.out;
            z.noalias() = ws.inputs[l] * weight(l).transpose();
            z.rowwise() += bias(l).transpose();
            if (l + 1 < L)
                z = z.unaryExpr([](double v) { return elu(v); });
        }
        return ws.out;
    }

    // Accumulates d(loss)/d(params) into `grad` (flat, same layout as the
    // parameter vector) given d(loss)/d(output). Requires a preceding
    // forward() on the same workspace. Optional dX receives the input
    // gradient.
    void backward(const Eigen::MatrixXd& dOut, Workspace& ws,
                  Eigen::Ref<Eigen::VectorXd> grad,
                  Eigen::MatrixXd* dX = nullptr) const {
        const int L = layer_count();
        ws.dz = dOut;
        for (int l = L - 1; l >= 0; --l) {
            Eigen::Map<Eigen::MatrixXd> gW(grad.data() + offsets_[l],
                                           widths_[l + 1], widths_[l]);
            Eigen::Map<Eigen::VectorXd> gb(
                grad.data() + offsets_[l] + widths_[l] * widths_[l + 1], widths_[l + 1]);
            gW.noalias() += ws.dz.transpose() * ws.inputs[l];
            gb.noalias() += ws.dz.colwise().sum().transpose();
            if (l > 0) {
                ws.da.noalias() = ws.dz * weight(l);
                // elu'(z) recovered from the activation: 1 on the positive
                // branch, a + 1 on the exponential branch
                ws.dz = ws.da.cwiseProduct(ws.inputs[l].unaryExpr(
                    [](double a) { return a > 0.0 ? 1.0 : a + 1.0; }));
            } else if (dX) {
                dX->noalias() = ws.dz * weight(0);
            }
        }
    }

private:
    std::vector<int> widths_;
    std::vector<Eigen::Index> offsets_;
    Eigen::VectorXd w_;
};

}  // namespace matchbcp
