#pragma once

#include <map>
#include <string>

namespace matchbcp {

// Per-instance experiment defaults: drift bound eta, rounding epsilon,
// constant reference drift (basic / nonbasic), best static-priority review
// period, reporting unit, and replication count. Training defaults shared by
// every instance: T=0.1, N=64, 3x100 elu layers, Adam, batch 256, 80k
// iterations with the staircase learning rate.
struct InstancePreset {
    double eta = 0.5;
    double round_eps = 0.03;
    double theta_basic = 0.1;
    double theta_nonbasic = -0.01;
    double review_period = 0.001;
    double unit_divisor = 100.0;  // hundreds for X, thousands otherwise
    int replications = 100;
    double horizon_T = 0.1;
    int steps_N = 64;
    int batch = 256;
    long iterations = 80000;
};

inline InstancePreset instance_preset(const std::string& name) {
    static const std::map<std::string, InstancePreset> table = {
        //                 eta   eps    th_b  th_n    l      unit    reps
        {"x-high",    InstancePreset{0.5, 0.03, 0.1, -0.01, 0.001,  100.0,  100}},
        {"x-medium",  InstancePreset{0.5, 0.03, 0.1, -0.01, 0.001,  100.0,  100}},
        {"x-low",     InstancePreset{1.0, 0.15, 0.1, -0.01, 0.001,  100.0,  100}},
        {"zigzag-a",  InstancePreset{1.0, 0.05, 3.0, -0.1,  0.0001, 1000.0, 100}},
        {"zigzag-b",  InstancePreset{0.5, 0.07, 3.0,  0.0,  0.0001, 1000.0, 100}},
        {"zigzag-c",  InstancePreset{1.0, 0.05, 2.0, -0.01, 0.01,   1000.0, 100}},
        {"dim24-i",   InstancePreset{0.5, 0.03, 0.1, -0.1,  0.0001, 1000.0, 30}},
        {"dim24-ii",  InstancePreset{1.0, 0.00, 0.1, -0.01, 0.005,  1000.0, 30}},
        {"dim120",    InstancePreset{0.0, 0.00, 0.1, -0.01, 0.01,   1000.0, 30}},
    };
    auto it = table.find(name);
    if (it != table.end()) return it->second;
    return InstancePreset{};
}

}  // namespace matchbcp
