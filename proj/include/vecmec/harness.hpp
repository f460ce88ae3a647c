#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecmec/agents.hpp"
#include "vecmec/env.hpp"
#include "vecmec/offload.hpp"

namespace vecmec::harness {

enum class Policy { maddpg, single_hop, multihop_greedy };

std::string policy_name(Policy p);
Policy policy_from_name(const std::string& name);

// Full experiment description. `paper` keeps the evaluation tables literal;
// `desk` rescales task sizes and the map so deadline-feasible runs fit a
// desktop budget (see README).
struct ScenarioConfig {
    std::string preset = "desk";

    int num_devices = 20;   // I
    int num_vehicles = 4;   // N
    int num_servers = 4;    // J
    int horizon_slots = 100;  // T
    double slot_s = 1.0;      // epsilon
    double beta = 0.5;
    int64_t size_lo_bits = 4000;
    int64_t size_hi_bits = 12600;
    double deadline_s = 2.0;
    double kappa_cycles_per_bit = 1200.0;
    std::vector<double> compute_rates_cps = {1e7, 2e7, 3e7, 4e7};  // first J used
    radio::ChannelParams channel;
    double dev_range_m = 500.0;
    double v2v_range_m = 500.0;
    double es_cov_m = 200.0;

    double map_width_m = 700.0;
    double map_height_m = 700.0;
    std::vector<double> street_xs = {150.0, 550.0};
    std::vector<double> street_ys = {150.0, 550.0};
    std::vector<std::pair<double, double>> server_sites = {
        {150, 150}, {550, 150}, {150, 550}, {550, 550}};
    bool traffic_lights = false;
    double light_green_s = 30.0;
    double light_red_s = 30.0;

    double gamma = 0.99;
    agents::MaddpgConfig maddpg;
    int train_episodes = 40;
    int train_every_slots = 8;
    int eval_episodes = 20;

    uint64_t seed = 1;
    Policy policy = Policy::maddpg;
    bool export_positions = false;

    static ScenarioConfig from_preset(const std::string& name);
    static ScenarioConfig from_json(const nlohmann::json& j);  // preset + overrides
    nlohmann::json to_json() const;
    void validate() const;        // throws std::invalid_argument naming the field
    uint64_t config_hash() const;  // FNV-1a of the canonical JSON
    env::EnvConfig env_config() const;
};

struct TrainLogRow {
    int episode = 0;
    int agent = 0;
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double episode_reward = 0.0;
};

struct PositionRow {
    int slot;
    char kind;  // 'd', 'v', 's'
    int id;
    double x, y;
};

struct RunReport {
    std::vector<offload::SlotRow> rows;  // evaluation slots, contiguous index
    double avg_throughput_bits = 0.0;    // mean completed bits per slot
    double success_rate = 1.0;           // completed / generated tasks
    double wall_clock_s = 0.0;
    uint64_t config_hash = 0;
    uint64_t seed = 0;
    Policy policy = Policy::maddpg;
    std::vector<TrainLogRow> training_log;
    std::vector<PositionRow> positions;  // only when export_positions

    nlohmann::json to_json() const;
};

// Trains (for maddpg) and evaluates with exploration off; fully deterministic
// given (config, seed). The optional trainer output parameter hands back the
// trained agents for checkpointing.
RunReport run_experiment(const ScenarioConfig& cfg);
RunReport run_experiment(const ScenarioConfig& cfg, std::unique_ptr<agents::MaddpgTrainer>* out);

struct SweepAggregate {
    double x = 0.0;
    Policy policy = Policy::maddpg;
    double mean_throughput = 0.0;
    double stderr_throughput = 0.0;
    double mean_success = 0.0;
    double stderr_success = 0.0;
    int repeats = 0;
};

struct SweepTable {
    std::string axis;
    std::vector<double> values;
    std::vector<Policy> policies;
    int repeats = 0;
    std::vector<SweepAggregate> aggregates;       // value-major, policy-minor
    std::vector<RunReport> cell_reports;          // same order, repeat-minor
};

// axis: beta | mds | vehicles | servers. One run per value x policy x repeat;
// repeat r uses seed base.seed + r. Cells run in parallel up to
// VECMEC_THREADS (default: hardware concurrency).
SweepTable run_sweep(const std::string& axis, const std::vector<double>& values,
                     const ScenarioConfig& base, int repeats,
                     const std::vector<Policy>& policies);

// metrics CSV: slot,generated_bits,completed_bits,expired_bits,success_rate
void write_metrics_csv(const std::string& path, const std::vector<offload::SlotRow>& rows);
void write_training_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows);
void write_positions_csv(const std::string& path, const std::vector<PositionRow>& rows);

// One CSV per figure panel (x,policy,mean,stderr); returns the paths written.
std::vector<std::string> emit_plot_data(const SweepTable& table, const std::string& out_dir);

}  // namespace vecmec::harness
