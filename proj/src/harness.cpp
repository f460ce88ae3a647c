#include "vecmec/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <thread>

namespace vecmec::harness {

std::string policy_name(Policy p) {
    switch (p) {
        case Policy::maddpg: return "maddpg";
        case Policy::single_hop: return "single_hop";
        case Policy::multihop_greedy: return "multihop_greedy";
    }
    return "maddpg";
}

Policy policy_from_name(const std::string& name) {
    if (name == "maddpg") return Policy::maddpg;
    if (name == "single_hop") return Policy::single_hop;
    if (name == "multihop_greedy") return Policy::multihop_greedy;
    throw std::invalid_argument("unknown policy: " + name);
}

ScenarioConfig ScenarioConfig::from_preset(const std::string& name) {
    ScenarioConfig cfg;
    cfg.preset = name;
    if (name == "desk") {
        // defaults above are the desk preset
        cfg.maddpg.branch_hidden = 64;
        return cfg;
    }
    if (name == "paper") {
        // evaluation tables taken literally: Kbit task sizes on a 1 km map
        cfg.size_lo_bits = 200000000;  // 2e5 Kbit
        cfg.size_hi_bits = 500000000;  // 5e5 Kbit
        cfg.deadline_s = 10.0;
        cfg.dev_range_m = 200.0;
        cfg.v2v_range_m = 200.0;
        cfg.map_width_m = 1000.0;
        cfg.map_height_m = 1000.0;
        cfg.street_xs = {250.0, 750.0};
        cfg.street_ys = {250.0, 750.0};
        cfg.server_sites = {{250, 250}, {750, 750}, {250, 750}, {750, 250}};
        cfg.maddpg.branch_hidden = 256;
        return cfg;
    }
    throw std::invalid_argument("unknown preset: " + name);
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& field) {
        throw std::invalid_argument("config field " + field + " invalid");
    };
    if (num_devices < 0) fail("num_devices");
    if (num_vehicles < 0) fail("num_vehicles");
    if (num_servers <= 0) fail("num_servers");
    if (num_servers > static_cast<int>(compute_rates_cps.size())) fail("compute_rates_cps");
    if (num_servers > static_cast<int>(server_sites.size())) fail("server_sites");
    if (horizon_slots <= 0) fail("horizon_slots");
    if (slot_s <= 0.0) fail("slot_s");
    if (beta < 0.0 || beta > 1.0) fail("beta");
    if (size_lo_bits <= 0 || size_hi_bits < size_lo_bits) fail("size_lo_bits/size_hi_bits");
    if (deadline_s <= 0.0) fail("deadline_s");
    if (kappa_cycles_per_bit <= 0.0) fail("kappa_cycles_per_bit");
    for (double c : compute_rates_cps)
        if (c <= 0.0) fail("compute_rates_cps");
    if (dev_range_m <= 0.0) fail("dev_range_m");
    if (v2v_range_m <= 0.0) fail("v2v_range_m");
    if (es_cov_m <= 0.0) fail("es_cov_m");
    if (map_width_m <= 0.0 || map_height_m <= 0.0) fail("map_width_m/map_height_m");
    if (street_xs.empty() || street_ys.empty()) fail("street_xs/street_ys");
    if (gamma < 0.0 || gamma >= 1.0) fail("gamma");
    if (maddpg.lr_actor <= 0.0) fail("maddpg.lr_actor");
    if (maddpg.lr_critic <= 0.0) fail("maddpg.lr_critic");
    if (maddpg.tau <= 0.0 || maddpg.tau >= 1.0) fail("maddpg.tau");
    if (maddpg.buffer_capacity <= 0) fail("maddpg.buffer_capacity");
    if (maddpg.minibatch <= 0) fail("maddpg.minibatch");
    if (maddpg.hidden <= 0) fail("maddpg.hidden");
    if (maddpg.branch_hidden <= 0) fail("maddpg.branch_hidden");
    if (maddpg.noise.sigma2 <= 0.0) fail("maddpg.noise.sigma2");
    if (train_episodes < 0) fail("train_episodes");
    if (train_every_slots <= 0) fail("train_every_slots");
    if (eval_episodes <= 0) fail("eval_episodes");
    channel.validate();
}

nlohmann::json ScenarioConfig::to_json() const {
    nlohmann::json j;
    j["preset"] = preset;
    j["num_devices"] = num_devices;
    j["num_vehicles"] = num_vehicles;
    j["num_servers"] = num_servers;
    j["horizon_slots"] = horizon_slots;
    j["slot_s"] = slot_s;
    j["beta"] = beta;
    j["size_lo_bits"] = size_lo_bits;
    j["size_hi_bits"] = size_hi_bits;
    j["deadline_s"] = deadline_s;
    j["kappa_cycles_per_bit"] = kappa_cycles_per_bit;
    j["compute_rates_cps"] = compute_rates_cps;
    j["channel"] = {{"antenna_height_m", channel.antenna_height_m},
                    {"carrier_freq_mhz", channel.carrier_freq_mhz},
                    {"tx_power_w", channel.tx_power_w},
                    {"noise_w", channel.noise_w},
                    {"bandwidth_hz", channel.bandwidth_hz}};
    j["dev_range_m"] = dev_range_m;
    j["v2v_range_m"] = v2v_range_m;
    j["es_cov_m"] = es_cov_m;
    j["map_width_m"] = map_width_m;
    j["map_height_m"] = map_height_m;
    j["street_xs"] = street_xs;
    j["street_ys"] = street_ys;
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& [x, y] : server_sites) sites.push_back({x, y});
    j["server_sites"] = sites;
    j["traffic_lights"] = traffic_lights;
    j["light_green_s"] = light_green_s;
    j["light_red_s"] = light_red_s;
    j["gamma"] = gamma;
    j["maddpg"] = {{"lr_actor", maddpg.lr_actor},
                   {"lr_critic", maddpg.lr_critic},
                   {"tau", maddpg.tau},
                   {"buffer_capacity", maddpg.buffer_capacity},
                   {"minibatch", maddpg.minibatch},
                   {"hidden", maddpg.hidden},
                   {"branch_hidden", maddpg.branch_hidden},
                   {"reward_scale", maddpg.reward_scale},
                   {"noise",
                    {{"kind", maddpg.noise.kind == agents::NoiseConfig::Kind::gaussian ? "gaussian"
                                                                                       : "ou"},
                     {"mu", maddpg.noise.mu},
                     {"sigma2", maddpg.noise.sigma2},
                     {"zero_mean", maddpg.noise.zero_mean},
                     {"decay_per_episode", maddpg.noise.decay_per_episode},
                     {"floor_frac", maddpg.noise.floor_frac}}}};
    j["train_episodes"] = train_episodes;
    j["train_every_slots"] = train_every_slots;
    j["eval_episodes"] = eval_episodes;
    j["seed"] = seed;
    j["policy"] = policy_name(policy);
    j["export_positions"] = export_positions;
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json& j) {
    ScenarioConfig cfg = from_preset(j.value("preset", std::string("desk")));
    for (const auto& [key, value] : j.items()) {
        if (key == "preset") {
        } else if (key == "num_devices") {
            cfg.num_devices = value.get<int>();
        } else if (key == "num_vehicles") {
            cfg.num_vehicles = value.get<int>();
        } else if (key == "num_servers") {
            cfg.num_servers = value.get<int>();
        } else if (key == "horizon_slots") {
            cfg.horizon_slots = value.get<int>();
        } else if (key == "slot_s") {
            cfg.slot_s = value.get<double>();
        } else if (key == "beta") {
            cfg.beta = value.get<double>();
        } else if (key == "size_lo_bits") {
            cfg.size_lo_bits = value.get<int64_t>();
        } else if (key == "size_hi_bits") {
            cfg.size_hi_bits = value.get<int64_t>();
        } else if (key == "deadline_s") {
            cfg.deadline_s = value.get<double>();
        } else if (key == "kappa_cycles_per_bit") {
            cfg.kappa_cycles_per_bit = value.get<double>();
        } else if (key == "compute_rates_cps") {
            cfg.compute_rates_cps = value.get<std::vector<double>>();
        } else if (key == "channel") {
            for (const auto& [ck, cv] : value.items()) {
                if (ck == "antenna_height_m") cfg.channel.antenna_height_m = cv.get<double>();
                else if (ck == "carrier_freq_mhz") cfg.channel.carrier_freq_mhz = cv.get<double>();
                else if (ck == "tx_power_w") cfg.channel.tx_power_w = cv.get<double>();
                else if (ck == "noise_w") cfg.channel.noise_w = cv.get<double>();
                else if (ck == "bandwidth_hz") cfg.channel.bandwidth_hz = cv.get<double>();
                else throw std::invalid_argument("config field channel." + ck + " unknown");
            }
        } else if (key == "dev_range_m") {
            cfg.dev_range_m = value.get<double>();
        } else if (key == "v2v_range_m") {
            cfg.v2v_range_m = value.get<double>();
        } else if (key == "es_cov_m") {
            cfg.es_cov_m = value.get<double>();
        } else if (key == "map_width_m") {
            cfg.map_width_m = value.get<double>();
        } else if (key == "map_height_m") {
            cfg.map_height_m = value.get<double>();
        } else if (key == "street_xs") {
            cfg.street_xs = value.get<std::vector<double>>();
        } else if (key == "street_ys") {
            cfg.street_ys = value.get<std::vector<double>>();
        } else if (key == "server_sites") {
            cfg.server_sites.clear();
            for (const auto& site : value)
                cfg.server_sites.emplace_back(site.at(0).get<double>(), site.at(1).get<double>());
        } else if (key == "traffic_lights") {
            cfg.traffic_lights = value.get<bool>();
        } else if (key == "light_green_s") {
            cfg.light_green_s = value.get<double>();
        } else if (key == "light_red_s") {
            cfg.light_red_s = value.get<double>();
        } else if (key == "gamma") {
            cfg.gamma = value.get<double>();
        } else if (key == "maddpg") {
            for (const auto& [mk, mv] : value.items()) {
                if (mk == "lr_actor") cfg.maddpg.lr_actor = mv.get<double>();
                else if (mk == "lr_critic") cfg.maddpg.lr_critic = mv.get<double>();
                else if (mk == "tau") cfg.maddpg.tau = mv.get<double>();
                else if (mk == "buffer_capacity") cfg.maddpg.buffer_capacity = mv.get<int>();
                else if (mk == "minibatch") cfg.maddpg.minibatch = mv.get<int>();
                else if (mk == "hidden") cfg.maddpg.hidden = mv.get<int>();
                else if (mk == "branch_hidden") cfg.maddpg.branch_hidden = mv.get<int>();
                else if (mk == "reward_scale") cfg.maddpg.reward_scale = mv.get<double>();
                else if (mk == "noise") {
                    for (const auto& [nk, nv] : mv.items()) {
                        if (nk == "kind")
                            cfg.maddpg.noise.kind = nv.get<std::string>() == "ou"
                                                        ? agents::NoiseConfig::Kind::ou
                                                        : agents::NoiseConfig::Kind::gaussian;
                        else if (nk == "mu") cfg.maddpg.noise.mu = nv.get<double>();
                        else if (nk == "sigma2") cfg.maddpg.noise.sigma2 = nv.get<double>();
                        else if (nk == "zero_mean") cfg.maddpg.noise.zero_mean = nv.get<bool>();
                        else if (nk == "decay_per_episode")
                            cfg.maddpg.noise.decay_per_episode = nv.get<double>();
                        else if (nk == "floor_frac") cfg.maddpg.noise.floor_frac = nv.get<double>();
                        else
                            throw std::invalid_argument("config field maddpg.noise." + nk +
                                                        " unknown");
                    }
                } else {
                    throw std::invalid_argument("config field maddpg." + mk + " unknown");
                }
            }
        } else if (key == "train_episodes") {
            cfg.train_episodes = value.get<int>();
        } else if (key == "train_every_slots") {
            cfg.train_every_slots = value.get<int>();
        } else if (key == "eval_episodes") {
            cfg.eval_episodes = value.get<int>();
        } else if (key == "seed") {
            cfg.seed = value.get<uint64_t>();
        } else if (key == "policy") {
            cfg.policy = policy_from_name(value.get<std::string>());
        } else if (key == "export_positions") {
            cfg.export_positions = value.get<bool>();
        } else {
            throw std::invalid_argument("config field " + key + " unknown");
        }
    }
    cfg.validate();
    return cfg;
}

uint64_t ScenarioConfig::config_hash() const { return fnv1a(to_json().dump()); }

env::EnvConfig ScenarioConfig::env_config() const {
    env::EnvConfig e;
    e.num_devices = num_devices;
    e.num_vehicles = num_vehicles;
    e.num_servers = num_servers;
    e.horizon_slots = horizon_slots;
    e.slot_s = slot_s;
    e.beta = beta;
    e.size_lo_bits = size_lo_bits;
    e.size_hi_bits = size_hi_bits;
    e.deadlines_s.assign(num_devices, deadline_s);
    e.kappa_cycles_per_bit = kappa_cycles_per_bit;
    e.compute_rates_cps.assign(compute_rates_cps.begin(), compute_rates_cps.begin() + num_servers);
    e.channel = channel;
    e.ranges.dev_range_m = dev_range_m;
    e.ranges.v2v_range_m = v2v_range_m;
    e.ranges.es_cov_m = es_cov_m;
    e.road = mobility::RoadNetwork::grid(map_width_m, map_height_m, street_xs, street_ys);
    if (traffic_lights) {
        // lights at real crossings only (several distinct continuations)
        std::vector<int> out_degree(e.road.nodes.size(), 0);
        for (const auto& lane : e.road.lanes) out_degree[lane.from_node] += 1;
        for (size_t n = 0; n < e.road.nodes.size(); ++n)
            if (out_degree[n] >= 3)
                e.road.lights[n] = mobility::TrafficLightCycle{light_green_s, light_red_s};
    }
    for (int j = 0; j < num_servers; ++j)
        e.server_sites.push_back({server_sites[j].first, server_sites[j].second});
    return e;
}

nlohmann::json RunReport::to_json() const {
    return {{"policy", policy_name(policy)},
            {"config_hash", config_hash},
            {"seed", seed},
            {"avg_throughput_bits", avg_throughput_bits},
            {"success_rate", success_rate},
            {"eval_slots", rows.size()},
            {"wall_clock_s", wall_clock_s}};
}

namespace {

struct EpisodeStats {
    std::vector<double> reward_per_agent;
    std::vector<double> critic_loss_sum, actor_loss_sum;
    std::vector<int> train_counts;
};

// One episode of interaction. Returns the slot rows of this episode.
std::vector<offload::SlotRow> play_episode(env::Environment& environment, const ScenarioConfig& cfg,
                                           agents::MaddpgTrainer* trainer, uint64_t episode_seed,
                                           bool training, EpisodeStats* stats,
                                           std::vector<PositionRow>* positions) {
    auto obs = environment.reset(episode_seed);
    const int I = environment.num_agents();
    bool done = false;
    int slot = 0;
    while (!done) {
        if (positions != nullptr) {
            for (int i = 0; i < I; ++i)
                positions->push_back({environment.slot(), 'd', i, environment.device_xy()[i].x,
                                      environment.device_xy()[i].y});
            for (const auto& v : environment.vehicles()) {
                const auto xy = environment.config().road.position(v.lane, v.offset_m);
                positions->push_back({environment.slot(), 'v', v.id, xy.x, xy.y});
            }
            for (int j = 0; j < environment.num_servers(); ++j)
                positions->push_back({environment.slot(), 's', j, environment.server_xy()[j].x,
                                      environment.server_xy()[j].y});
        }

        std::vector<env::Action> actions(I);
        if (cfg.policy == Policy::maddpg) {
            std::vector<std::vector<int>> feasible(I);
            std::vector<bool> has_task(I);
            for (int i = 0; i < I; ++i) {
                feasible[i] = environment.feasible_actions(i);
                has_task[i] = environment.has_task(i);
            }
            actions = trainer->act(obs, feasible, has_task, training);
        } else {
            for (int i = 0; i < I; ++i) {
                actions[i].scores.assign(environment.num_servers(), 0.0);
                if (!environment.has_task(i)) continue;
                const auto view = environment.policy_view(i);
                actions[i].chosen = cfg.policy == Policy::single_hop
                                        ? agents::policy_single_hop(view)
                                        : agents::policy_multihop_greedy(view);
            }
        }

        auto result = environment.step(actions);
        if (training && trainer != nullptr) {
            trainer->store(obs, actions, result.rewards, result.next_obs, result.done);
            if ((slot + 1) % cfg.train_every_slots == 0) {
                auto report = trainer->train_step();
                if (stats != nullptr) {
                    for (int i = 0; i < I; ++i) {
                        if (report.agents[i].skipped) continue;
                        stats->critic_loss_sum[i] += report.agents[i].critic_loss;
                        stats->actor_loss_sum[i] += report.agents[i].actor_loss;
                        stats->train_counts[i] += 1;
                    }
                }
            }
        }
        if (stats != nullptr)
            for (int i = 0; i < I; ++i) stats->reward_per_agent[i] += result.rewards[i];
        obs = std::move(result.next_obs);
        done = result.done;
        slot += 1;
    }
    return environment.ledger().rows;
}

}  // namespace

RunReport run_experiment(const ScenarioConfig& cfg) { return run_experiment(cfg, nullptr); }

RunReport run_experiment(const ScenarioConfig& cfg, std::unique_ptr<agents::MaddpgTrainer>* out) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    env::Environment environment(cfg.env_config(), cfg.seed);
    RunReport report;
    report.policy = cfg.policy;
    report.seed = cfg.seed;
    report.config_hash = cfg.config_hash();

    std::unique_ptr<agents::MaddpgTrainer> trainer;
    if (cfg.policy == Policy::maddpg) {
        auto maddpg_cfg = cfg.maddpg;
        maddpg_cfg.gamma = cfg.gamma;
        if (maddpg_cfg.reward_scale <= 0.0)
            maddpg_cfg.reward_scale = 1.0 / static_cast<double>(cfg.size_hi_bits);
        trainer = std::make_unique<agents::MaddpgTrainer>(
            cfg.num_devices, cfg.num_servers, environment.obs_dim(), maddpg_cfg, cfg.seed);

        Rng train_seeds = Rng(cfg.seed).fork(fnv1a("train_episodes"));
        for (int ep = 0; ep < cfg.train_episodes; ++ep) {
            EpisodeStats stats;
            stats.reward_per_agent.assign(cfg.num_devices, 0.0);
            stats.critic_loss_sum.assign(cfg.num_devices, 0.0);
            stats.actor_loss_sum.assign(cfg.num_devices, 0.0);
            stats.train_counts.assign(cfg.num_devices, 0);
            play_episode(environment, cfg, trainer.get(), train_seeds.next_u64(), true, &stats,
                         nullptr);
            trainer->end_episode();
            for (int i = 0; i < cfg.num_devices; ++i) {
                TrainLogRow row;
                row.episode = ep;
                row.agent = i;
                const int n = std::max(1, stats.train_counts[i]);
                row.critic_loss = stats.critic_loss_sum[i] / n;
                row.actor_loss = stats.actor_loss_sum[i] / n;
                row.episode_reward = stats.reward_per_agent[i];
                report.training_log.push_back(row);
            }
        }
    }

    // Evaluation: exploration off, seeds shared across policies.
    Rng eval_seeds = Rng(cfg.seed).fork(stream::evaluation);
    int64_t generated_count = 0, completed_count = 0;
    std::vector<PositionRow>* positions = cfg.export_positions ? &report.positions : nullptr;
    for (int ep = 0; ep < cfg.eval_episodes; ++ep) {
        auto rows = play_episode(environment, cfg, trainer.get(), eval_seeds.next_u64(), false,
                                 nullptr, positions);
        const int base_slot = static_cast<int>(report.rows.size());
        for (auto row : rows) {
            row.slot = base_slot + row.slot;
            generated_count += row.generated_count;
            completed_count += row.completed_count;
            row.success_rate = generated_count == 0
                                   ? 1.0
                                   : static_cast<double>(completed_count) /
                                         static_cast<double>(generated_count);
            report.rows.push_back(row);
        }
    }

    int64_t completed_bits = 0;
    for (const auto& row : report.rows) completed_bits += row.completed_bits;
    report.avg_throughput_bits =
        report.rows.empty() ? 0.0
                            : static_cast<double>(completed_bits) /
                                  static_cast<double>(report.rows.size());
    report.success_rate = generated_count == 0 ? 1.0
                                               : static_cast<double>(completed_count) /
                                                     static_cast<double>(generated_count);
    report.wall_clock_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out != nullptr) *out = std::move(trainer);
    return report;
}

namespace {

int sweep_threads() {
    if (const char* env = std::getenv("VECMEC_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

ScenarioConfig apply_axis(const ScenarioConfig& base, const std::string& axis, double value) {
    ScenarioConfig cfg = base;
    if (axis == "beta") {
        cfg.beta = value;
    } else if (axis == "mds") {
        cfg.num_devices = static_cast<int>(value);
    } else if (axis == "vehicles") {
        cfg.num_vehicles = static_cast<int>(value);
    } else if (axis == "servers") {
        cfg.num_servers = static_cast<int>(value);
    } else {
        throw std::invalid_argument("unknown sweep axis: " + axis);
    }
    return cfg;
}

}  // namespace

SweepTable run_sweep(const std::string& axis, const std::vector<double>& values,
                     const ScenarioConfig& base, int repeats,
                     const std::vector<Policy>& policies) {
    if (values.empty()) throw std::invalid_argument("run_sweep: values must be non-empty");
    if (repeats <= 0) throw std::invalid_argument("run_sweep: repeats must be > 0");
    SweepTable table;
    table.axis = axis;
    table.values = values;
    table.policies = policies;
    table.repeats = repeats;

    struct Cell {
        ScenarioConfig cfg;
        size_t slot;
    };
    std::vector<Cell> cells;
    for (double v : values) {
        for (Policy p : policies) {
            for (int r = 0; r < repeats; ++r) {
                ScenarioConfig cfg = apply_axis(base, axis, v);
                cfg.policy = p;
                cfg.seed = base.seed + static_cast<uint64_t>(r);
                cfg.validate();
                cells.push_back({std::move(cfg), cells.size()});
            }
        }
    }
    table.cell_reports.resize(cells.size());

    std::atomic<size_t> next{0};
    const int workers = std::min<int>(sweep_threads(), static_cast<int>(cells.size()));
    auto work = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= cells.size()) return;
            table.cell_reports[cells[k].slot] = run_experiment(cells[k].cfg);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    // aggregate mean and standard error per (value, policy)
    size_t cursor = 0;
    for (double v : values) {
        for (Policy p : policies) {
            SweepAggregate agg;
            agg.x = v;
            agg.policy = p;
            agg.repeats = repeats;
            std::vector<double> tps, srs;
            for (int r = 0; r < repeats; ++r) {
                const RunReport& rep = table.cell_reports[cursor++];
                tps.push_back(rep.avg_throughput_bits);
                srs.push_back(rep.success_rate);
            }
            auto mean_of = [](const std::vector<double>& xs) {
                double s = 0.0;
                for (double x : xs) s += x;
                return s / static_cast<double>(xs.size());
            };
            auto stderr_of = [&](const std::vector<double>& xs, double mean) {
                if (xs.size() < 2) return 0.0;
                double ss = 0.0;
                for (double x : xs) ss += (x - mean) * (x - mean);
                return std::sqrt(ss / static_cast<double>(xs.size() - 1) /
                                 static_cast<double>(xs.size()));
            };
            agg.mean_throughput = mean_of(tps);
            agg.stderr_throughput = stderr_of(tps, agg.mean_throughput);
            agg.mean_success = mean_of(srs);
            agg.stderr_success = stderr_of(srs, agg.mean_success);
            table.aggregates.push_back(agg);
        }
    }
    return table;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<offload::SlotRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "slot,generated_bits,completed_bits,expired_bits,success_rate\n";
    for (const auto& r : rows)
        f << r.slot << ',' << r.generated_bits << ',' << r.completed_bits << ',' << r.expired_bits
          << ',' << fmt_double(r.success_rate) << '\n';
}

void write_training_log_csv(const std::string& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "episode,agent,critic_loss,actor_loss,episode_reward\n";
    for (const auto& r : rows)
        f << r.episode << ',' << r.agent << ',' << fmt_double(r.critic_loss) << ','
          << fmt_double(r.actor_loss) << ',' << fmt_double(r.episode_reward) << '\n';
}

void write_positions_csv(const std::string& path, const std::vector<PositionRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "slot,kind,id,x,y\n";
    for (const auto& r : rows) {
        const char* kind = r.kind == 'd' ? "device" : r.kind == 'v' ? "vehicle" : "server";
        f << r.slot << ',' << kind << ',' << r.id << ',' << fmt_double(r.x) << ','
          << fmt_double(r.y) << '\n';
    }
}

std::vector<std::string> emit_plot_data(const SweepTable& table, const std::string& out_dir) {
    if (table.aggregates.empty()) throw std::invalid_argument("emit_plot_data: empty table");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    const std::pair<const char*, bool> panels[] = {{"throughput", true}, {"success", false}};
    for (const auto& [metric, is_tp] : panels) {
        const std::string path =
            (fs::path(out_dir) / ("sweep_" + table.axis + "_" + metric + ".csv")).string();
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write " + path);
        f << "x,policy,mean,stderr\n";
        for (const auto& agg : table.aggregates) {
            const double mean = is_tp ? agg.mean_throughput : agg.mean_success;
            const double se = is_tp ? agg.stderr_throughput : agg.stderr_success;
            f << fmt_double(agg.x) << ',' << policy_name(agg.policy) << ',' << fmt_double(mean)
              << ',' << fmt_double(se) << '\n';
        }
        written.push_back(path);
    }
    return written;
}

}  // namespace vecmec::harness
