#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>

#include "matchbcp/adam.hpp"
#include "matchbcp/mlp.hpp"

namespace matchbcp {

struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Paired value/gradient approximators V(.; w1): R^I -> R and G(.; w2):
// R^I -> R^I, plus training progress.
struct ValueGradientModel {
    Mlp value_net;
    Mlp grad_net;
    long iteration = 0;

    ValueGradientModel() = default;
    ValueGradientModel(int state_dim, int hidden_layers = 3, int hidden_width = 100)
        : value_net(state_dim, 1, hidden_layers, hidden_width),
          grad_net(state_dim, state_dim, hidden_layers, hidden_width) {}

    int state_dim() const { return value_net.input_width(); }

    void init(std::uint64_t seed) {
        value_net.init_he_uniform(derive_seed(seed, 0x76));
        grad_net.init_he_uniform(derive_seed(seed, 0x67));
    }
};

namespace detail {

inline nlohmann::json net_json(const Mlp& net) {
    nlohmann::json j;
    j["widths"] = net.widths();
    j["params"] = std::vector<double>(net.params().data(),
                                      net.params().data() + net.param_count());
    return j;
}

inline Mlp net_from_json(const nlohmann::json& j) {
    const auto widths = j.at("widths").get<std::vector<int>>();
    if (widths.size() < 2) throw CheckpointError("network needs >= 2 widths");
    Mlp net(widths.front(), widths.back(),
            static_cast<int>(widths.size()) - 2,
            widths.size() > 2 ? widths[1] : 0);
    if (net.widths() != widths)
        throw CheckpointError("unsupported layer shape in checkpoint");
    const auto params = j.at("params").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(params.size()) != net.param_count())
        throw CheckpointError("parameter count mismatch in checkpoint");
    for (Eigen::Index i = 0; i < net.param_count(); ++i) net.params()[i] = params[i];
    return net;
}

inline nlohmann::json adam_json(const AdamState& st) {
    nlohmann::json j;
    j["m"] = std::vector<double>(st.m.data(), st.m.data() + st.m.size());
    j["v"] = std::vector<double>(st.v.data(), st.v.data() + st.v.size());
    j["step"] = st.step;
    return j;
}

inline AdamState adam_from_json(const nlohmann::json& j, Eigen::Index expect) {
    const auto m = j.at("m").get<std::vector<double>>();
    const auto v = j.at("v").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(m.size()) != expect ||
        static_cast<Eigen::Index>(v.size()) != expect)
        throw CheckpointError("optimizer state shape mismatch");
    AdamState st(expect);
    for (Eigen::Index i = 0; i < expect; ++i) {
        st.m[i] = m[i];
        st.v[i] = v[i];
    }
    st.step = j.at("step").get<long>();
    return st;
}

}  // namespace detail

constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const std::filesystem::path& path,
                            const ValueGradientModel& model,
                            const AdamState& adam_value,
                            const AdamState& adam_grad) {
    nlohmann::json doc;
    doc["format"] = "matchbcp-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["iteration"] = model.iteration;
    doc["value_net"] = detail::net_json(model.value_net);
    doc["grad_net"] = detail::net_json(model.grad_net);
    doc["adam_value"] = detail::adam_json(adam_value);
    doc["adam_grad"] = detail::adam_json(adam_grad);
    std::ofstream out(path);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out << doc.dump() << "\n";
}

struct Checkpoint {
    ValueGradientModel model;
    AdamState adam_value, adam_grad;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != std::string("matchbcp-checkpoint") ||
        doc.value("version", -1) != kCheckpointVersion)
        throw CheckpointError("not a matchbcp checkpoint: " + path.string());
    Checkpoint cp;
    cp.model.value_net = detail::net_from_json(doc.at("value_net"));
    cp.model.grad_net = detail::net_from_json(doc.at("grad_net"));
    cp.model.iteration = doc.at("iteration").get<long>();
    if (cp.model.value_net.input_width() != cp.model.grad_net.input_width() ||
        cp.model.value_net.output_width() != 1 ||
        cp.model.grad_net.output_width() != cp.model.grad_net.input_width())
        throw CheckpointError("checkpoint networks have inconsistent shapes");
    cp.adam_value = detail::adam_from_json(doc.at("adam_value"),
                                           cp.model.value_net.param_count());
    cp.adam_grad = detail::adam_from_json(doc.at("adam_grad"),
                                          cp.model.grad_net.param_count());
    return cp;
}

}  // namespace matchbcp
