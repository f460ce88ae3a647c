#pragma once

#include <optional>
#include <vector>

#include "vecmec/mobility.hpp"
#include "vecmec/offload.hpp"
#include "vecmec/radio.hpp"

namespace vecmec::env {

struct EnvConfig {
    int num_devices = 20;
    int num_vehicles = 4;
    int num_servers = 4;
    int horizon_slots = 100;  // T
    double slot_s = 1.0;      // epsilon
    double beta = 0.5;
    int64_t size_lo_bits = 10000;
    int64_t size_hi_bits = 30000;
    std::vector<double> deadlines_s;        // per device
    double kappa_cycles_per_bit = 1200.0;
    std::vector<double> compute_rates_cps;  // per server
    radio::ChannelParams channel;
    mobility::Ranges ranges;
    mobility::RoadNetwork road;
    std::vector<mobility::Vec2> server_sites;
    double obs_buffer_cap_bits = 0.0;  // 0 -> derived from max deadline * max C / kappa

    void validate() const;
};

// Per-agent action: score per server (what the critic consumes) plus the
// executed index; chosen = -1 is the no-op for agents without a task or with
// an empty feasible set.
struct Action {
    int chosen = -1;
    std::vector<double> scores;
};

struct StepResult {
    std::vector<double> rewards;  // completed-in-deadline bits per agent this slot
    std::vector<std::vector<double>> next_obs;
    bool done = false;
};

// Inputs a pure routing policy needs for one device at one slot.
struct PolicyView {
    double task_bits = 0.0;
    double deadline_s = 0.0;
    std::vector<int> feasible;            // servers reachable via build_route
    std::vector<double> direct_km;        // device->server distance, inf when out of range
    std::vector<double> route_m;          // shortest route distance, inf when unreachable
    std::vector<double> backlog_cycles;   // per server
    std::vector<double> compute_rates;    // per server
    double kappa_cycles_per_bit = 0.0;
    radio::ChannelParams channel;
};

// Multi-agent MDP wrapper: observation s_i = [s_w, s_s(I), s_n(J), s_l(J)],
// normalized to [0,1]; selections report the previous slot; rewards credit
// completed bits to their owner at the completion slot.
class Environment {
public:
    Environment(EnvConfig cfg, uint64_t run_seed);

    std::vector<std::vector<double>> reset(uint64_t episode_seed);
    StepResult step(const std::vector<Action>& actions);

    int obs_dim() const { return 1 + cfg_.num_devices + 2 * cfg_.num_servers; }
    int num_agents() const { return cfg_.num_devices; }
    int num_servers() const { return cfg_.num_servers; }
    int slot() const { return slot_; }
    bool has_task(int agent) const { return arrivals_[agent].has_value(); }
    double task_bits(int agent) const {
        return arrivals_[agent] ? static_cast<double>(arrivals_[agent]->size_bits) : 0.0;
    }
    const std::vector<int>& feasible_actions(int agent) const { return feasible_[agent]; }
    PolicyView policy_view(int agent) const;

    const offload::MetricsLedger& ledger() const { return sim_->ledger(); }
    // tasks that finished during the most recent step, with final ledgers
    const std::vector<offload::CompletedTask>& last_completions() const { return completions_; }
    const mobility::TopologySnapshot& current_snapshot() const { return snapshot_; }
    const std::vector<mobility::Vec2>& device_xy() const { return device_xy_; }
    const std::vector<mobility::Vec2>& server_xy() const { return server_xy_; }
    const std::vector<mobility::VehicleState>& vehicles() const { return vehicles_; }
    const EnvConfig& config() const { return cfg_; }

private:
    void refresh_slot_state();  // snapshot, route tables, feasibility
    void generate_arrivals();
    std::vector<std::vector<double>> observations() const;

    EnvConfig cfg_;
    mobility::ScenarioSpec spec_;
    std::vector<mobility::Vec2> device_xy_;  // fixed for the whole run
    std::vector<mobility::Vec2> server_xy_;
    std::vector<mobility::VehicleState> vehicles_;
    mobility::TopologySnapshot snapshot_;

    std::optional<offload::Simulation> sim_;
    Rng arrival_rng_{0};
    offload::TaskId next_task_id_ = 0;
    int slot_ = 0;
    double obs_buffer_cap_bits_ = 1.0;

    std::vector<std::optional<offload::Task>> arrivals_;  // this slot, per agent
    std::vector<std::vector<std::optional<offload::RoutePath>>> routes_;  // per agent x server
    std::vector<std::vector<int>> feasible_;
    std::vector<int> prev_choice_;        // previous slot selections, -1 none
    std::vector<int> prev_count_;         // per server
    std::vector<offload::CompletedTask> completions_;
};

}  // namespace vecmec::env
