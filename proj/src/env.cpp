#include "vecmec/env.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace vecmec::env {

void EnvConfig::validate() const {
    auto fail = [](const std::string& field) {
        throw std::invalid_argument("EnvConfig." + field + " invalid");
    };
    if (num_devices < 0) fail("num_devices");
    if (num_vehicles < 0) fail("num_vehicles");
    if (num_servers <= 0) fail("num_servers");
    if (horizon_slots <= 0) fail("horizon_slots");
    if (slot_s <= 0.0) fail("slot_s");
    if (beta < 0.0 || beta > 1.0) fail("beta");
    if (size_lo_bits <= 0 || size_hi_bits < size_lo_bits) fail("size_range");
    if (static_cast<int>(deadlines_s.size()) != num_devices) fail("deadlines_s");
    for (double d : deadlines_s)
        if (d <= 0.0) fail("deadlines_s");
    if (static_cast<int>(compute_rates_cps.size()) != num_servers) fail("compute_rates_cps");
    for (double c : compute_rates_cps)
        if (c <= 0.0) fail("compute_rates_cps");
    if (static_cast<int>(server_sites.size()) < num_servers) fail("server_sites");
    if (road.lanes.empty()) fail("road");
    channel.validate();
}

Environment::Environment(EnvConfig cfg, uint64_t run_seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    spec_.num_devices = cfg_.num_devices;
    spec_.num_vehicles = cfg_.num_vehicles;
    spec_.num_servers = cfg_.num_servers;
    spec_.net = cfg_.road;
    spec_.server_sites = cfg_.server_sites;

    Rng root(run_seed);
    Rng dev_rng = root.fork(stream::placement);
    device_xy_ = mobility::place_devices(spec_, dev_rng);
    server_xy_.assign(spec_.server_sites.begin(), spec_.server_sites.begin() + cfg_.num_servers);

    obs_buffer_cap_bits_ = cfg_.obs_buffer_cap_bits;
    if (obs_buffer_cap_bits_ <= 0.0) {
        const double max_d = *std::max_element(cfg_.deadlines_s.begin(), cfg_.deadlines_s.end());
        const double max_c =
            *std::max_element(cfg_.compute_rates_cps.begin(), cfg_.compute_rates_cps.end());
        obs_buffer_cap_bits_ = max_d * max_c / cfg_.kappa_cycles_per_bit;
    }
}

std::vector<std::vector<double>> Environment::reset(uint64_t episode_seed) {
    Rng root(episode_seed);
    Rng veh_rng = root.fork(stream::mobility);
    vehicles_ = mobility::place_vehicles(spec_, veh_rng);
    arrival_rng_ = root.fork(stream::arrivals);

    offload::SimConfig sim_cfg;
    sim_cfg.channel = cfg_.channel;
    sim_cfg.kappa_cycles_per_bit = cfg_.kappa_cycles_per_bit;
    sim_cfg.slot_s = cfg_.slot_s;
    sim_.emplace(sim_cfg, cfg_.compute_rates_cps);

    slot_ = 0;
    next_task_id_ = 0;
    prev_choice_.assign(cfg_.num_devices, -1);
    prev_count_.assign(cfg_.num_servers, 0);

    refresh_slot_state();
    generate_arrivals();
    return observations();
}

void Environment::refresh_slot_state() {
    snapshot_ = mobility::snapshot(vehicles_, spec_.net, device_xy_, server_xy_, cfg_.ranges);
    routes_.assign(cfg_.num_devices, {});
    feasible_.assign(cfg_.num_devices, {});
    for (int i = 0; i < cfg_.num_devices; ++i) {
        routes_[i] = offload::route_table(snapshot_, i);
        for (int j = 0; j < cfg_.num_servers; ++j)
            if (routes_[i][j]) feasible_[i].push_back(j);
    }
}

void Environment::generate_arrivals() {
    arrivals_.assign(cfg_.num_devices, std::nullopt);
    auto tasks = offload::generate_tasks(slot_, cfg_.slot_s, cfg_.num_devices, cfg_.beta,
                                         cfg_.size_lo_bits, cfg_.size_hi_bits, cfg_.deadlines_s,
                                         arrival_rng_, next_task_id_);
    for (auto& t : tasks) {
        sim_->record_generated(t);
        arrivals_[t.owner] = std::move(t);
    }
}

std::vector<std::vector<double>> Environment::observations() const {
    std::vector<std::vector<double>> obs(cfg_.num_devices);
    const double size_cap = static_cast<double>(cfg_.size_hi_bits);
    for (int i = 0; i < cfg_.num_devices; ++i) {
        auto& o = obs[i];
        o.reserve(obs_dim());
        o.push_back(arrivals_[i] ? static_cast<double>(arrivals_[i]->size_bits) / size_cap : 0.0);
        for (int k = 0; k < cfg_.num_devices; ++k)
            o.push_back(prev_choice_[k] < 0
                            ? 0.0
                            : static_cast<double>(prev_choice_[k] + 1) / cfg_.num_servers);
        for (int j = 0; j < cfg_.num_servers; ++j)
            o.push_back(static_cast<double>(prev_count_[j]) / std::max(1, cfg_.num_devices));
        for (int j = 0; j < cfg_.num_servers; ++j)
            o.push_back(std::min(1.0, sim_->server_buffered_bits(j) / obs_buffer_cap_bits_));
    }
    return obs;
}

PolicyView Environment::policy_view(int agent) const {
    PolicyView v;
    v.task_bits = task_bits(agent);
    v.deadline_s = cfg_.deadlines_s[agent];
    v.feasible = feasible_[agent];
    const double inf = std::numeric_limits<double>::infinity();
    v.direct_km.assign(cfg_.num_servers, inf);
    v.route_m.assign(cfg_.num_servers, inf);
    for (const auto& [nb, w] : snapshot_.adj[snapshot_.device_node(agent)])
        if (snapshot_.is_server_node(nb))
            v.direct_km[nb - snapshot_.num_devices - snapshot_.num_vehicles] = w / 1000.0;
    for (int j = 0; j < cfg_.num_servers; ++j)
        if (routes_[agent][j]) v.route_m[j] = routes_[agent][j]->total_distance_m;
    v.backlog_cycles.resize(cfg_.num_servers);
    for (int j = 0; j < cfg_.num_servers; ++j) v.backlog_cycles[j] = sim_->server_backlog_cycles(j);
    v.compute_rates = cfg_.compute_rates_cps;
    v.kappa_cycles_per_bit = cfg_.kappa_cycles_per_bit;
    v.channel = cfg_.channel;
    return v;
}

StepResult Environment::step(const std::vector<Action>& actions) {
    if (static_cast<int>(actions.size()) != cfg_.num_devices)
        throw std::logic_error("Environment::step: one action per agent required");
    if (slot_ >= cfg_.horizon_slots) throw std::logic_error("Environment::step: episode is over");

    std::vector<int> choice(cfg_.num_devices, -1);
    for (int i = 0; i < cfg_.num_devices; ++i) {
        const Action& a = actions[i];
        if (!arrivals_[i]) {
            if (a.chosen != -1)
                throw std::logic_error("Environment::step: action for an agent without a task");
            continue;
        }
        offload::Task task = *arrivals_[i];
        if (a.chosen == -1) {
            sim_->expire_unadmitted(task.id);  // rejected or no feasible destination
            continue;
        }
        if (std::find(feasible_[i].begin(), feasible_[i].end(), a.chosen) == feasible_[i].end())
            throw std::logic_error("Environment::step: infeasible action for agent " +
                                   std::to_string(i));
        task.chosen_server = a.chosen;
        task.route = routes_[i][a.chosen];
        choice[i] = a.chosen;
        sim_->start_transfer(task);
    }

    auto outcome = sim_->run_slot(slot_);
    StepResult result;
    result.rewards.assign(cfg_.num_devices, 0.0);
    for (const auto& done : outcome.completed)
        result.rewards[done.task.owner] += static_cast<double>(done.task.size_bits);
    completions_ = std::move(outcome.completed);

    prev_choice_ = choice;
    prev_count_.assign(cfg_.num_servers, 0);
    for (int c : choice)
        if (c >= 0) prev_count_[c] += 1;

    mobility::step_vehicles(vehicles_, spec_.net, slot_ * cfg_.slot_s, cfg_.slot_s);
    slot_ += 1;
    result.done = slot_ >= cfg_.horizon_slots;

    refresh_slot_state();
    if (!result.done) {
        generate_arrivals();
    } else {
        arrivals_.assign(cfg_.num_devices, std::nullopt);
    }
    result.next_obs = observations();
    return result;
}

}  // namespace vecmec::env
