#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "matchbcp/matching_network.hpp"

#ifndef MATCHBCP_CATALOG_DIR
#define MATCHBCP_CATALOG_DIR ""
#endif

namespace matchbcp {

struct UnknownInstance : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NetworkConfig {
    MatchingNetwork network;
    std::optional<Vec> x_star;  // distinguished plan, when the config pins one
};

namespace detail {

inline Vec to_vec(const nlohmann::json& arr) {
    Vec v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
    return v;
}

inline nlohmann::json from_vec(const Vec& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

}  // namespace detail

// Schema: { L, K, activities: [[l,r],...] (1-based class ids), lambda, v, h,
// a, gamma, x_star? , name? }.
inline NetworkConfig parse_network_config(const nlohmann::json& doc, const std::string& fallback_name = "") {
    for (const char* key : {"L", "K", "activities", "lambda", "v", "h", "a", "gamma"})
        if (!doc.contains(key))
            throw NetworkError(std::string("network config missing key '") + key + "'");
    const int L = doc["L"].get<int>();
    const int K = doc["K"].get<int>();
    std::vector<std::pair<int, int>> acts;
    for (const auto& pair : doc["activities"]) {
        if (!pair.is_array() || pair.size() != 2)
            throw NetworkError("activity entries must be [left, right] pairs");
        acts.emplace_back(pair[0].get<int>() - 1, pair[1].get<int>() - 1);
    }
    std::string name = doc.value("name", fallback_name);
    MatchingNetwork net(L, K, std::move(acts), detail::to_vec(doc["lambda"]),
                        detail::to_vec(doc["v"]), detail::to_vec(doc["h"]),
                        detail::to_vec(doc["a"]), detail::to_vec(doc["gamma"]), name);
    NetworkConfig cfg{std::move(net), std::nullopt};
    if (doc.contains("x_star")) {
        Vec xs = detail::to_vec(doc["x_star"]);
        if (xs.size() != cfg.network.num_activities())
            throw NetworkError("x_star has wrong length");
        cfg.x_star = std::move(xs);
    }
    return cfg;
}

inline nlohmann::json network_config_json(const NetworkConfig& cfg) {
    const MatchingNetwork& net = cfg.network;
    nlohmann::json doc;
    doc["name"] = net.name();
    doc["L"] = net.num_left();
    doc["K"] = net.num_right();
    nlohmann::json acts = nlohmann::json::array();
    for (const auto& [l, r] : net.activities()) acts.push_back({l + 1, r + 1});
    doc["activities"] = std::move(acts);
    doc["lambda"] = detail::from_vec(net.arrival_rates());
    doc["v"] = detail::from_vec(net.match_values());
    doc["h"] = detail::from_vec(net.holding_costs());
    doc["a"] = detail::from_vec(net.abandonment_penalties());
    doc["gamma"] = detail::from_vec(net.abandonment_rates());
    if (cfg.x_star) doc["x_star"] = detail::from_vec(*cfg.x_star);
    return doc;
}

inline NetworkConfig load_network_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NetworkError("cannot open network config " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    return parse_network_config(doc, path.stem().string());
}

inline void save_network_config(const NetworkConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw NetworkError("cannot write " + path.string());
    out << network_config_json(cfg).dump(1) << "\n";
}

inline std::filesystem::path catalog_dir() {
    if (const char* env = std::getenv("MATCHBCP_CATALOG"); env && *env)
        return env;
    return MATCHBCP_CATALOG_DIR;
}

inline const std::vector<std::string>& catalog_names() {
    static const std::vector<std::string> names = {
        "x-high", "x-medium", "x-low", "zigzag-a", "zigzag-b",
        "zigzag-c", "dim24-i", "dim24-ii", "dim120"};
    return names;
}

// Named test instance from the shipped catalog. Throws UnknownInstance for
// names outside the nine.
inline NetworkConfig catalog(const std::string& name) {
    const auto& names = catalog_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw UnknownInstance("unknown catalog instance '" + name + "'");
    const auto path = catalog_dir() / (name + ".json");
    if (!std::filesystem::exists(path))
        throw UnknownInstance("catalog file missing: " + path.string() +
                              " (set MATCHBCP_CATALOG)");
    return load_network_config(path);
}

// Resolves either a catalog name or a path to a config file.
inline NetworkConfig resolve_instance(const std::string& ref) {
    const auto& names = catalog_names();
    if (std::find(names.begin(), names.end(), ref) != names.end()) return catalog(ref);
    if (std::filesystem::exists(ref)) return load_network_config(ref);
    throw UnknownInstance("'" + ref + "' is neither a catalog name nor a config path");
}

}  // namespace matchbcp
