#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "matchbcp/bsde.hpp"
#include "matchbcp/catalog.hpp"
#include "matchbcp/presets.hpp"
#include "matchbcp/simplex.hpp"
#include "matchbcp/simulator.hpp"

namespace matchbcp {

struct EmptyComparison : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Full description of one experiment: the instance, how to train (if a
// proposed policy is requested), and how to simulate.
struct ExperimentSpec {
    std::string instance;  // catalog name or config path
    std::vector<PolicySpec> policies;
    SimConfig sim;
    double unit_divisor = 100.0;
    std::string unit_label = "hundreds";
};

struct ComparisonRow {
    std::string policy;
    double mean = 0.0;        // in reporting units
    double half_width = 0.0;  // in reporting units
    Vec usage;
    bool best = false;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    std::string unit_label;
    int replications = 0;
};

inline ComparisonReport compare(const MatchingNetwork& net, const StaticPlan& plan,
                                const ExperimentSpec& spec) {
    if (spec.policies.empty())
        throw EmptyComparison("no policies to compare");
    auto summaries = run_experiment(net, plan, spec.policies, spec.sim);
    ComparisonReport report;
    report.unit_label = spec.unit_label;
    report.replications = spec.sim.replications;
    int best = 0;
    for (std::size_t p = 0; p < summaries.size(); ++p) {
        ComparisonRow row;
        row.policy = policy_name(summaries[p].spec.kind);
        row.mean = summaries[p].mean / spec.unit_divisor;
        row.half_width = summaries[p].half_width / spec.unit_divisor;
        row.usage = summaries[p].usage_mean;
        report.rows.push_back(std::move(row));
        if (summaries[p].mean < summaries[best].mean) best = static_cast<int>(p);
    }
    report.rows[best].best = true;
    return report;
}

inline std::string render_table(const ComparisonReport& report) {
    std::ostringstream os;
    os << "Centered discounted value (in " << report.unit_label << "), "
       << report.replications << " replications, 95% CI\n";
    os << std::left << std::setw(20) << "policy" << std::right << std::setw(10)
       << "mean" << std::setw(12) << "+-95%" << "\n";
    for (const auto& row : report.rows) {
        os << std::left << std::setw(20) << row.policy << std::right << std::fixed
           << std::setprecision(2) << std::setw(10) << row.mean << std::setw(10)
           << row.half_width << (row.best ? "   <- best" : "") << "\n";
    }
    return os.str();
}

inline void write_csv(const ComparisonReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "policy,mean,half_width,unit,replications";
    std::size_t maxj = 0;
    for (const auto& row : report.rows)
        maxj = std::max(maxj, static_cast<std::size_t>(row.usage.size()));
    for (std::size_t j = 0; j < maxj; ++j) out << ",usage_" << (j + 1);
    out << "\n";
    for (const auto& row : report.rows) {
        out << row.policy << "," << std::setprecision(17) << row.mean << ","
            << row.half_width << "," << report.unit_label << ","
            << report.replications;
        for (int j = 0; j < row.usage.size(); ++j) out << "," << row.usage[j];
        out << "\n";
    }
}

struct EndToEndOptions {
    bool skip_train = false;
    long iterations = -1;  // -1: preset default
    std::uint64_t seed = 1;
    int replications = -1;  // -1: preset default
    double horizon = 1000.0;
    std::filesystem::path out_dir = ".";
    int workers = 0;
};

struct EndToEndArtifacts {
    StaticPlan plan;
    std::filesystem::path checkpoint;
    std::filesystem::path telemetry;
    std::filesystem::path report_csv;
    ComparisonReport report;
};

// catalog -> solve_spp -> train (hyperparameter-table defaults) -> compare.
inline EndToEndArtifacts end_to_end(const std::string& name, const EndToEndOptions& opt) {
    const NetworkConfig cfg = resolve_instance(name);
    const MatchingNetwork& net = cfg.network;
    const InstancePreset preset = instance_preset(net.name());

    LPSolution sol = solve_spp(net);
    StaticPlan plan;
    if (cfg.x_star && sol.degenerate)
        plan = make_static_plan(net, *cfg.x_star);  // the config's plan wins
    else
        plan = to_static_plan(net, sol);

    EndToEndArtifacts artifacts;
    std::filesystem::create_directories(opt.out_dir);

    ExperimentSpec spec;
    spec.instance = name;
    spec.unit_divisor = preset.unit_divisor;
    spec.unit_label = preset.unit_divisor == 100.0 ? "hundreds" : "thousands";
    spec.sim.scale_n = 100.0;
    spec.sim.discount = 0.01;
    spec.sim.horizon = opt.horizon;
    spec.sim.replications = opt.replications > 0 ? opt.replications : preset.replications;
    spec.sim.seed = opt.seed;
    spec.sim.workers = opt.workers;
    spec.policies = {
        PolicySpec::benchmark(PolicyKind::Greedy),
        PolicySpec::benchmark(PolicyKind::GreedyBasic),
        PolicySpec::benchmark(PolicyKind::Fcfs),
        PolicySpec::benchmark(PolicyKind::Lqfs),
        PolicySpec::benchmark(PolicyKind::StaticPriority, preset.review_period),
    };

    ValueGradientModel model;
    TrainResult trained;
    if (!opt.skip_train) {
        TrainerConfig tc;
        tc.reference = make_reference_config(net, plan, preset.theta_basic,
                                             preset.theta_nonbasic, preset.horizon_T,
                                             preset.steps_N, preset.eta, spec.sim.scale_n);
        tc.batch = preset.batch;
        tc.iterations = opt.iterations > 0 ? opt.iterations : preset.iterations;
        tc.seed = opt.seed;
        tc.workers = opt.workers;
        artifacts.checkpoint = opt.out_dir / (net.name() + "-checkpoint.json");
        artifacts.telemetry = opt.out_dir / (net.name() + "-telemetry.csv");
        tc.checkpoint_path = artifacts.checkpoint;
        tc.telemetry_path = artifacts.telemetry;
        trained = train(net, plan, tc);
        model = trained.model;
        spec.policies.push_back(
            PolicySpec::proposed(model, preset.eta, preset.round_eps, false));
        spec.policies.push_back(
            PolicySpec::proposed(model, preset.eta, preset.round_eps, true));
    }

    artifacts.report = compare(net, plan, spec);
    artifacts.report_csv = opt.out_dir / (net.name() + "-report.csv");
    write_csv(artifacts.report, artifacts.report_csv);
    artifacts.plan = std::move(plan);
    return artifacts;
}

}  // namespace matchbcp
