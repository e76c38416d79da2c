// Command-line driver: static planning, BSDE training, policy simulation, and
// report generation for the bipartite matching toolkit.
#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "matchbcp/experiment.hpp"
#include "matchbcp/policies.hpp"

using namespace matchbcp;

namespace {

struct PlanBundle {
    NetworkConfig cfg;
    StaticPlan plan;
    LPSolution sol;
};

PlanBundle load_and_plan(const std::string& instance) {
    NetworkConfig cfg = resolve_instance(instance);
    LPSolution sol = solve_spp(cfg.network);
    StaticPlan plan;
    if (cfg.x_star && sol.degenerate)
        plan = make_static_plan(cfg.network, *cfg.x_star);
    else
        plan = to_static_plan(cfg.network, sol);
    return {std::move(cfg), std::move(plan), std::move(sol)};
}

PolicyKind parse_policy(const std::string& name) {
    if (name == "greedy") return PolicyKind::Greedy;
    if (name == "greedy-basic") return PolicyKind::GreedyBasic;
    if (name == "fcfs") return PolicyKind::Fcfs;
    if (name == "lqfs") return PolicyKind::Lqfs;
    if (name == "static-priority") return PolicyKind::StaticPriority;
    if (name == "proposed") return PolicyKind::Proposed;
    if (name == "proposed-updating") return PolicyKind::ProposedUpdating;
    throw CLI::ValidationError("unknown policy '" + name + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"matchbcp - dynamic bipartite matching via Brownian drift control"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    int reps = -1;
    double horizon = 1000.0;
    std::string out_path;
    app.add_option("--seed", seed, "base random seed")->capture_default_str();
    app.add_option("--reps", reps, "replication count (default: per-instance table)");
    app.add_option("--horizon", horizon, "simulation horizon")->capture_default_str();
    app.add_option("--out", out_path, "output path (meaning depends on subcommand)");

    auto* spp_cmd = app.add_subcommand("spp", "solve the static planning problem");
    std::string spp_instance;
    spp_cmd->add_option("instance", spp_instance, "catalog name or config path")->required();

    auto* train_cmd = app.add_subcommand("train", "train the value/gradient networks");
    std::string train_instance, telemetry_path;
    long train_iters = -1;
    int train_batch = -1;
    train_cmd->add_option("instance", train_instance)->required();
    train_cmd->add_option("--iters", train_iters, "iterations (default: table value)");
    train_cmd->add_option("--batch", train_batch, "batch size (default: 256)");
    train_cmd->add_option("--telemetry", telemetry_path, "telemetry CSV path");

    auto* sim_cmd = app.add_subcommand(
        "simulate", "evaluate policies by common-random-number Monte Carlo");
    std::string sim_instance, model_path;
    std::vector<std::string> policy_names;
    double review_override = -1.0;
    sim_cmd->add_option("instance", sim_instance)->required();
    sim_cmd->add_option("--policies", policy_names, "policy list")
        ->delimiter(',')
        ->required();
    sim_cmd->add_option("--model", model_path, "checkpoint for proposed policies");
    sim_cmd->add_option("--review", review_override, "static-priority review period");

    auto* cmp_cmd = app.add_subcommand("compare", "benchmark table for one instance");
    std::string cmp_instance, cmp_model;
    cmp_cmd->add_option("instance", cmp_instance)->required();
    cmp_cmd->add_option("--model", cmp_model, "include proposed policies from this checkpoint");

    auto* prio_cmd = app.add_subcommand("priority-sets", "print the static-priority construction");
    std::string prio_instance;
    prio_cmd->add_option("instance", prio_instance)->required();

    auto* grid_cmd = app.add_subcommand("grid-review", "grid-search the review period");
    std::string grid_instance;
    std::vector<double> grid_values;
    grid_cmd->add_option("instance", grid_instance)->required();
    grid_cmd->add_option("--grid", grid_values, "candidate periods")->delimiter(',')->required();

    auto* e2e_cmd = app.add_subcommand("end-to-end", "solve, train, and compare in one run");
    std::string e2e_instance, e2e_outdir = "runs";
    bool skip_train = false;
    long e2e_iters = -1;
    e2e_cmd->add_option("instance", e2e_instance)->required();
    e2e_cmd->add_option("--outdir", e2e_outdir)->capture_default_str();
    e2e_cmd->add_option("--iters", e2e_iters, "training iterations (default: table value)");
    e2e_cmd->add_flag("--skip-train", skip_train, "benchmark-only report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*spp_cmd) {
            auto bundle = load_and_plan(spp_instance);
            std::printf("instance: %s  (I=%d, J=%d)\n", bundle.cfg.network.name().c_str(),
                        bundle.cfg.network.num_classes(), bundle.cfg.network.num_activities());
            std::printf("objective v.x* = %.6f\n", bundle.sol.objective);
            std::printf("x* =");
            for (int j = 0; j < bundle.sol.x.size(); ++j)
                std::printf(" %g", bundle.sol.x[j]);
            std::printf("\nbasic activities (%d):", bundle.plan.basic_count());
            for (int j : bundle.plan.basic) std::printf(" %d", j + 1);
            std::printf("\nnonbasic activities (%zu):", bundle.plan.nonbasic.size());
            for (int j : bundle.plan.nonbasic) std::printf(" %d", j + 1);
            std::printf("\n");
            if (bundle.sol.degenerate)
                std::printf("warning: optimal basis is degenerate or admits multiple optima\n");
            auto diag = validate_plan(bundle.cfg.network, bundle.plan);
            std::printf("balance residual max |Rx*-lambda| = %.3g\n", diag.max_residual);
        } else if (*train_cmd) {
            auto bundle = load_and_plan(train_instance);
            const InstancePreset preset = instance_preset(bundle.cfg.network.name());
            TrainerConfig tc;
            tc.reference = make_reference_config(
                bundle.cfg.network, bundle.plan, preset.theta_basic,
                preset.theta_nonbasic, preset.horizon_T, preset.steps_N, preset.eta, 100.0);
            tc.batch = train_batch > 0 ? train_batch : preset.batch;
            tc.iterations = train_iters > 0 ? train_iters : preset.iterations;
            tc.seed = seed;
            if (out_path.empty()) out_path = bundle.cfg.network.name() + "-checkpoint.json";
            tc.checkpoint_path = out_path;
            if (!telemetry_path.empty()) tc.telemetry_path = telemetry_path;
            std::printf("training %s: %ld iterations, batch %d, seed %llu\n",
                        bundle.cfg.network.name().c_str(), tc.iterations, tc.batch,
                        static_cast<unsigned long long>(seed));
            auto result = train(bundle.cfg.network, bundle.plan, tc);
            std::printf("final loss %.6g (ema %.6g); checkpoint written to %s\n",
                        result.telemetry.back().loss, result.telemetry.back().ema_loss,
                        out_path.c_str());
        } else if (*sim_cmd || *cmp_cmd) {
            const std::string instance = *sim_cmd ? sim_instance : cmp_instance;
            auto bundle = load_and_plan(instance);
            const InstancePreset preset = instance_preset(bundle.cfg.network.name());
            ExperimentSpec spec;
            spec.instance = instance;
            spec.unit_divisor = preset.unit_divisor;
            spec.unit_label = preset.unit_divisor == 100.0 ? "hundreds" : "thousands";
            spec.sim.horizon = horizon;
            spec.sim.replications = reps > 0 ? reps : preset.replications;
            spec.sim.seed = seed;

            ValueGradientModel model;
            bool have_model = false;
            const std::string& ckpt = *sim_cmd ? model_path : cmp_model;
            if (!ckpt.empty()) {
                model = load_checkpoint(ckpt).model;
                if (model.state_dim() != bundle.cfg.network.num_classes())
                    throw std::runtime_error("checkpoint trained for a different instance");
                have_model = true;
            }
            const double review =
                review_override > 0 ? review_override : preset.review_period;
            if (*sim_cmd) {
                for (const auto& name : policy_names) {
                    const PolicyKind kind = parse_policy(name);
                    if (kind == PolicyKind::StaticPriority)
                        spec.policies.push_back(PolicySpec::benchmark(kind, review));
                    else if (kind == PolicyKind::Proposed ||
                             kind == PolicyKind::ProposedUpdating) {
                        if (!have_model)
                            throw std::runtime_error("--model required for proposed policies");
                        spec.policies.push_back(PolicySpec::proposed(
                            model, preset.eta, preset.round_eps,
                            kind == PolicyKind::ProposedUpdating));
                    } else {
                        spec.policies.push_back(PolicySpec::benchmark(kind));
                    }
                }
            } else {
                spec.policies = {
                    PolicySpec::benchmark(PolicyKind::Greedy),
                    PolicySpec::benchmark(PolicyKind::GreedyBasic),
                    PolicySpec::benchmark(PolicyKind::Fcfs),
                    PolicySpec::benchmark(PolicyKind::Lqfs),
                    PolicySpec::benchmark(PolicyKind::StaticPriority, review),
                };
                if (have_model) {
                    spec.policies.push_back(
                        PolicySpec::proposed(model, preset.eta, preset.round_eps, false));
                    spec.policies.push_back(
                        PolicySpec::proposed(model, preset.eta, preset.round_eps, true));
                }
            }
            auto report = compare(bundle.cfg.network, bundle.plan, spec);
            std::cout << render_table(report);
            if (!out_path.empty()) {
                write_csv(report, out_path);
                std::printf("csv written to %s\n", out_path.c_str());
            }
        } else if (*prio_cmd) {
            auto bundle = load_and_plan(prio_instance);
            auto sets = build_priority_sets(bundle.cfg.network, bundle.plan);
            for (std::size_t s = 0; s < sets.size(); ++s) {
                const bool last = s + 1 == sets.size();
                std::printf("P%zu%s:", s, last ? " (nonbasic)" : "");
                for (int j : sets[s]) std::printf(" %d", j + 1);
                std::printf("\n");
            }
        } else if (*grid_cmd) {
            auto bundle = load_and_plan(grid_instance);
            const InstancePreset preset = instance_preset(bundle.cfg.network.name());
            SimConfig sim;
            sim.horizon = horizon;
            sim.replications = reps > 0 ? reps : preset.replications;
            sim.seed = seed;
            auto res = grid_search_review_period(bundle.cfg.network, bundle.plan, sim,
                                                 grid_values);
            for (auto& [l, m] : res.period_means)
                std::printf("l = %-10g mean = %.4f\n", l, m / preset.unit_divisor);
            std::printf("best review period: %g\n", res.best_period);
        } else if (*e2e_cmd) {
            EndToEndOptions opt;
            opt.skip_train = skip_train;
            opt.iterations = e2e_iters;
            opt.seed = seed;
            opt.replications = reps;
            opt.horizon = horizon;
            opt.out_dir = e2e_outdir;
            auto artifacts = end_to_end(e2e_instance, opt);
            std::cout << render_table(artifacts.report);
            std::printf("report csv: %s\n", artifacts.report_csv.string().c_str());
            if (!skip_train) {
                std::printf("checkpoint: %s\n", artifacts.checkpoint.string().c_str());
                std::printf("telemetry: %s\n", artifacts.telemetry.string().c_str());
            }
        }
    } catch (const std::exception& err) {
        std::fprintf(stderr, "error: %s\n", err.what());
        return 1;
    }
    return 0;
}
