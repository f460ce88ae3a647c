// vecmec command line: run one experiment, sweep a parameter axis, or train
// and checkpoint the MADDPG agents.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vecmec/harness.hpp"

namespace fs = std::filesystem;
using namespace vecmec;

namespace {

harness::ScenarioConfig load_config(const std::string& path, const std::string& preset) {
    if (path.empty()) return harness::ScenarioConfig::from_preset(preset);
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(f);
    return harness::ScenarioConfig::from_json(j);
}

void write_report(const harness::ScenarioConfig& cfg, const harness::RunReport& report,
                  const std::string& out_dir) {
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    harness::write_metrics_csv((fs::path(out_dir) / "metrics.csv").string(), report.rows);
    if (!report.training_log.empty())
        harness::write_training_log_csv((fs::path(out_dir) / "training_log.csv").string(),
                                        report.training_log);
    if (!report.positions.empty())
        harness::write_positions_csv((fs::path(out_dir) / "positions.csv").string(),
                                     report.positions);
    nlohmann::json j = report.to_json();
    j["config"] = cfg.to_json();
    std::ofstream f(fs::path(out_dir) / "report.json", std::ios::trunc);
    f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vehicle-assisted multi-hop edge offloading simulator and MADDPG trainer"};
    app.require_subcommand(1);

    std::string config_path, out_dir, preset = "desk";
    std::string policy_arg;
    int64_t seed_arg = -1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config file (preset + overrides)");
        cmd->add_option("--preset", preset, "preset when no config file is given")
            ->check(CLI::IsMember({"desk", "paper"}));
        cmd->add_option("--seed", seed_arg, "master seed override");
        cmd->add_option("--out", out_dir, "output directory");
    };

    auto* run_cmd = app.add_subcommand("run", "run one experiment and report metrics");
    add_common(run_cmd);
    run_cmd->add_option("--policy", policy_arg, "maddpg | single_hop | multihop_greedy");
    bool trace_positions = false;
    run_cmd->add_flag("--trace-positions", trace_positions, "export per-slot positions CSV");

    auto* sweep_cmd = app.add_subcommand("sweep", "sweep one axis over values x policies x seeds");
    add_common(sweep_cmd);
    std::string axis;
    std::vector<double> values;
    int repeats = 1;
    std::vector<std::string> sweep_policies = {"maddpg", "single_hop", "multihop_greedy"};
    sweep_cmd->add_option("--axis", axis, "beta | mds | vehicles | servers")->required();
    sweep_cmd->add_option("--values", values, "axis values")->required()->expected(-1);
    sweep_cmd->add_option("--repeats", repeats, "seeds per cell");
    sweep_cmd->add_option("--policies", sweep_policies, "policies to compare");

    auto* train_cmd = app.add_subcommand("train", "train MADDPG and save checkpoints");
    add_common(train_cmd);
    int episodes_arg = -1;
    std::string ckpt_dir;
    train_cmd->add_option("--episodes", episodes_arg, "training episodes override");
    train_cmd->add_option("--ckpt", ckpt_dir, "checkpoint directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        harness::ScenarioConfig cfg = load_config(config_path, preset);
        if (seed_arg >= 0) cfg.seed = static_cast<uint64_t>(seed_arg);

        if (run_cmd->parsed()) {
            if (!policy_arg.empty()) cfg.policy = harness::policy_from_name(policy_arg);
            if (trace_positions) cfg.export_positions = true;
            cfg.validate();
            auto report = harness::run_experiment(cfg);
            write_report(cfg, report, out_dir);
            std::printf("policy=%s seed=%llu avg_throughput=%.1f bits/slot success_rate=%.4f\n",
                        harness::policy_name(report.policy).c_str(),
                        static_cast<unsigned long long>(report.seed), report.avg_throughput_bits,
                        report.success_rate);
        } else if (sweep_cmd->parsed()) {
            std::vector<harness::Policy> policies;
            for (const auto& p : sweep_policies) policies.push_back(harness::policy_from_name(p));
            auto table = harness::run_sweep(axis, values, cfg, repeats, policies);
            const std::string dir = out_dir.empty() ? "." : out_dir;
            auto files = harness::emit_plot_data(table, dir);
            for (const auto& agg : table.aggregates)
                std::printf("%s=%g policy=%s throughput=%.1f±%.1f success=%.4f±%.4f\n",
                            axis.c_str(), agg.x, harness::policy_name(agg.policy).c_str(),
                            agg.mean_throughput, agg.stderr_throughput, agg.mean_success,
                            agg.stderr_success);
            for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
        } else if (train_cmd->parsed()) {
            cfg.policy = harness::Policy::maddpg;
            if (episodes_arg >= 0) cfg.train_episodes = episodes_arg;
            cfg.validate();
            std::unique_ptr<agents::MaddpgTrainer> trainer;
            auto report = harness::run_experiment(cfg, &trainer);
            trainer->save_checkpoints(ckpt_dir);
            write_report(cfg, report, out_dir);
            std::printf("trained %d episodes, checkpoints in %s, eval throughput %.1f bits/slot\n",
                        cfg.train_episodes, ckpt_dir.c_str(), report.avg_throughput_bits);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
