#include "vecmec/offload.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vecmec::offload {

std::vector<Task> generate_tasks(int slot, double slot_s, int num_devices, double beta,
                                 int64_t size_lo_bits, int64_t size_hi_bits,
                                 const std::vector<double>& deadlines_s, Rng& rng,
                                 TaskId& next_id) {
    if (beta < 0.0 || beta > 1.0) throw std::invalid_argument("generate_tasks: beta outside [0,1]");
    if (size_lo_bits <= 0 || size_hi_bits < size_lo_bits)
        throw std::invalid_argument("generate_tasks: bad size range");
    std::vector<Task> out;
    for (int i = 0; i < num_devices; ++i) {
        if (rng.uniform() >= beta) continue;
        Task t;
        t.id = next_id++;
        t.owner = i;
        t.birth_slot = slot;
        t.birth_time_s = slot * slot_s;
        const int64_t span = size_hi_bits - size_lo_bits + 1;
        t.size_bits = size_lo_bits + static_cast<int64_t>(rng.next_u64() % static_cast<uint64_t>(span));
        t.deadline_s = deadlines_s[i];
        out.push_back(t);
    }
    return out;
}

std::vector<std::optional<RoutePath>> route_table(const mobility::TopologySnapshot& snap,
                                                  int device) {
    const int total = static_cast<int>(snap.xy.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(total, inf);
    std::vector<int> parent(total, -1);
    std::vector<bool> done(total, false);
    const int src = snap.device_node(device);
    dist[src] = 0.0;

    // O(V^2) Dijkstra; interior relaxation is restricted to the source device
    // and vehicles, servers are sinks. Small graphs, determinism over speed.
    for (;;) {
        int u = -1;
        for (int v = 0; v < total; ++v)
            if (!done[v] && dist[v] < inf && (u == -1 || dist[v] < dist[u])) u = v;
        if (u == -1) break;
        done[u] = true;
        if (snap.is_server_node(u)) continue;              // sink
        if (snap.is_device_node(u) && u != src) continue;  // other devices never relay
        for (const auto& [v, w] : snap.adj[u]) {
            if (snap.is_device_node(v) && v != src) continue;
            const double nd = dist[u] + w;
            if (nd < dist[v]) {
                dist[v] = nd;
                parent[v] = u;
            } else if (nd == dist[v] && parent[v] != -1 && parent[v] != u) {
                // Both chains end at settled nodes, so they are final.
                auto chain_through = [&](int tail) {
                    std::vector<int> seq;
                    for (int x = tail; x != -1; x = parent[x]) seq.push_back(x);
                    std::reverse(seq.begin(), seq.end());
                    seq.push_back(v);
                    return seq;
                };
                if (chain_through(u) < chain_through(parent[v])) parent[v] = u;
            }
        }
    }

    std::vector<std::optional<RoutePath>> table(snap.num_servers);
    for (int j = 0; j < snap.num_servers; ++j) {
        const int dst = snap.server_node(j);
        if (dist[dst] == inf) continue;
        RoutePath r;
        r.device = device;
        r.server = j;
        r.total_distance_m = dist[dst];
        for (int v = dst; v != -1; v = parent[v]) r.snapshot_nodes.push_back(v);
        std::reverse(r.snapshot_nodes.begin(), r.snapshot_nodes.end());
        for (size_t k = 0; k + 1 < r.snapshot_nodes.size(); ++k) {
            const double m = mobility::distance_m(snap.xy[r.snapshot_nodes[k]],
                                                  snap.xy[r.snapshot_nodes[k + 1]]);
            r.hop_distance_km.push_back(m / 1000.0);
        }
        for (size_t k = 1; k + 1 < r.snapshot_nodes.size(); ++k)
            r.relay_vehicles.push_back(r.snapshot_nodes[k] - snap.num_devices);
        table[j] = std::move(r);
    }
    return table;
}

std::optional<RoutePath> build_route(const mobility::TopologySnapshot& snap, int device,
                                     int server) {
    return route_table(snap, device)[server];
}

double transmission_latency_s(double size_bits, const RoutePath& route, double share_hz,
                              const radio::ChannelParams& channel) {
    if (size_bits == 0.0) return 0.0;
    double total = 0.0;
    for (double d_km : route.hop_distance_km) {
        const double rate = radio::link_rate_bps(std::max(d_km, 1e-6), share_hz, channel);
        if (!(rate > 0.0)) throw std::domain_error("transmission_latency: unreachable hop (rate 0)");
        total += size_bits / rate;
    }
    return total;
}

double computing_latency_s(double size_bits, double compute_rate_cps,
                           double kappa_cycles_per_bit) {
    if (!(compute_rate_cps > 0.0)) throw std::invalid_argument("computing_latency: C_j must be > 0");
    return kappa_cycles_per_bit * size_bits / compute_rate_cps;
}

double queueing_latency_s(const EdgeServerState& server) {
    if (!(server.compute_rate_cps > 0.0))
        throw std::invalid_argument("queueing_latency: C_j must be > 0");
    return server.backlog_cycles() / server.compute_rate_cps;
}

std::vector<CompletionEvent> advance_servers(std::vector<EdgeServerState>& servers, double dt_s,
                                             double start_time_s) {
    if (dt_s < 0.0) throw std::invalid_argument("advance_servers: dt must be >= 0");
    std::vector<CompletionEvent> events;
    if (dt_s == 0.0) return events;
    for (auto& srv : servers) {
        double budget = srv.compute_rate_cps * dt_s;
        double used = 0.0;
        while (!srv.fifo.empty() && budget >= srv.fifo.front().remaining_cycles) {
            auto& head = srv.fifo.front();
            budget -= head.remaining_cycles;
            used += head.remaining_cycles;
            events.push_back({head.task, srv.id, start_time_s + used / srv.compute_rate_cps});
            srv.fifo.pop_front();
        }
        if (!srv.fifo.empty() && budget > 0.0) srv.fifo.front().remaining_cycles -= budget;
    }
    std::sort(events.begin(), events.end(), [](const CompletionEvent& a, const CompletionEvent& b) {
        if (a.time_s != b.time_s) return a.time_s < b.time_s;
        return a.task < b.task;
    });
    return events;
}

Simulation::Simulation(SimConfig cfg, const std::vector<double>& compute_rates_cps) : cfg_(cfg) {
    cfg_.channel.validate();
    servers_.resize(compute_rates_cps.size());
    for (size_t j = 0; j < compute_rates_cps.size(); ++j) {
        if (!(compute_rates_cps[j] > 0.0))
            throw std::invalid_argument("Simulation: compute rate must be > 0");
        servers_[j].id = static_cast<int>(j);
        servers_[j].compute_rate_cps = compute_rates_cps[j];
    }
}

void Simulation::record_generated(const Task& task) {
    ledger_.generated_bits += task.size_bits;
    ledger_.generated_count += 1;
    ledger_.inflight_bits += task.size_bits;
    ledger_.inflight_count += 1;
    slot_generated_bits_ += task.size_bits;
    slot_generated_count_ += 1;
    tasks_[task.id] = task;
    tasks_[task.id].status = TaskStatus::pending;
}

void Simulation::start_transfer(const Task& task) {
    auto it = tasks_.find(task.id);
    if (it == tasks_.end() || !task.route)
        throw std::logic_error("start_transfer: task not generated or missing route");
    it->second = task;
    it->second.status = TaskStatus::in_transit;
    transfers_.push_back({task.id, static_cast<double>(task.size_bits), 0});
}

void Simulation::expire_task(Task& task) {
    ledger_.expired_bits += task.size_bits;
    ledger_.expired_count += 1;
    ledger_.inflight_bits -= task.size_bits;
    ledger_.inflight_count -= 1;
    slot_expired_bits_ += task.size_bits;
    task.status = TaskStatus::expired;
}

void Simulation::expire_unadmitted(TaskId id) {
    auto it = tasks_.find(id);
    if (it == tasks_.end()) throw std::logic_error("expire_unadmitted: unknown task");
    expire_task(it->second);
    tasks_.erase(it);
}

SlotOutcome Simulation::run_slot(int slot) {
    const double t0 = slot * cfg_.slot_s;
    const double t1 = t0 + cfg_.slot_s;
    SlotOutcome out;

    // One shared band, shares proportional to task size, fixed for the slot.
    std::vector<std::pair<int64_t, double>> active;
    active.reserve(transfers_.size());
    for (const auto& tr : transfers_)
        active.emplace_back(tr.id, static_cast<double>(tasks_.at(tr.id).size_bits));
    const radio::LinkAllocation alloc = radio::allocate_bandwidth(active, cfg_.channel.bandwidth_hz);

    // Advance every transfer independently through its hops.
    struct Arrival {
        double time_s;
        TaskId id;
    };
    std::vector<Arrival> arrivals;
    for (auto& tr : transfers_) {
        const Task& task = tasks_.at(tr.id);
        const RoutePath& route = *task.route;
        const double share = alloc.share_of(tr.id);
        double now = t0;
        while (tr.hop < static_cast<int>(route.hop_distance_km.size())) {
            const double rate =
                share * radio::spectral_efficiency(std::max(route.hop_distance_km[tr.hop], 1e-6),
                                                   cfg_.channel);
            if (!(rate > 0.0)) break;  // starved this slot, try again next slot
            const double need_s = tr.bits_left_on_hop / rate;
            if (now + need_s <= t1) {
                now += need_s;
                tr.hop += 1;
                tr.bits_left_on_hop = static_cast<double>(task.size_bits);
            } else {
                tr.bits_left_on_hop -= rate * (t1 - now);
                now = t1;
                break;
            }
        }
        if (tr.hop == static_cast<int>(route.hop_distance_km.size()))
            arrivals.push_back({now, tr.id});
    }
    std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        if (a.time_s != b.time_s) return a.time_s < b.time_s;
        return a.id < b.id;
    });

    auto collect = [&](std::vector<CompletionEvent> events) {
        for (const auto& ev : events) {
            auto it = tasks_.find(ev.task);
            Task& task = it->second;
            task.status = TaskStatus::done;
            ledger_.completed_bits += task.size_bits;
            ledger_.completed_count += 1;
            ledger_.inflight_bits -= task.size_bits;
            ledger_.inflight_count -= 1;
            slot_completed_bits_ += task.size_bits;
            slot_completed_count_ += 1;
            out.completed.push_back({task, ev.time_s});
            out.completed_bits += task.size_bits;
            tasks_.erase(it);
        }
    };

    // Interleave queue drain with arrivals so queue joins see the exact
    // backlog at their arrival instant.
    double server_clock = t0;
    for (const auto& arr : arrivals) {
        if (arr.time_s > server_clock) {
            collect(advance_servers(servers_, arr.time_s - server_clock, server_clock));
            server_clock = arr.time_s;
        }
        Task& task = tasks_.at(arr.id);
        EdgeServerState& srv = servers_[task.chosen_server];
        task.ledger.trans_s = arr.time_s - task.birth_time_s;
        task.ledger.queue_s = queueing_latency_s(srv);
        task.ledger.comp_s = computing_latency_s(static_cast<double>(task.size_bits),
                                                 srv.compute_rate_cps, cfg_.kappa_cycles_per_bit);
        if (task.ledger.e2e_s() <= task.deadline_s) {
            task.status = TaskStatus::queued;
            srv.fifo.push_back({task.id, cfg_.kappa_cycles_per_bit *
                                             static_cast<double>(task.size_bits)});
        } else {
            expire_task(task);
            tasks_.erase(arr.id);
        }
    }
    if (t1 > server_clock) collect(advance_servers(servers_, t1 - server_clock, server_clock));

    // Remove the transfers that reached their server this slot.
    std::erase_if(transfers_, [&](const Transfer& tr) { return !tasks_.contains(tr.id) ||
                                                              tasks_.at(tr.id).status != TaskStatus::in_transit; });

    settle_slot(slot, t1);
    out.expired_bits = slot_expired_bits_;
    slot_completed_bits_ = 0;
    slot_completed_count_ = 0;
    slot_expired_bits_ = 0;
    return out;
}

void Simulation::settle_slot(int slot, double slot_end_s) {
    // In-transit tasks whose deadline has passed can no longer complete
    // (compute time is strictly positive); drop them and free their share.
    std::vector<TaskId> doomed;
    for (auto& [id, task] : tasks_)
        if (task.status == TaskStatus::in_transit && slot_end_s - task.birth_time_s >= task.deadline_s)
            doomed.push_back(id);
    for (TaskId id : doomed) {
        expire_task(tasks_.at(id));
        tasks_.erase(id);
    }
    std::erase_if(transfers_, [&](const Transfer& tr) { return !tasks_.contains(tr.id); });

    SlotRow row;
    row.slot = slot;
    row.generated_bits = slot_generated_bits_;
    row.completed_bits = slot_completed_bits_;
    row.expired_bits = slot_expired_bits_;
    row.success_rate = ledger_.success_rate();
    row.generated_count = slot_generated_count_;
    row.completed_count = slot_completed_count_;
    ledger_.rows.push_back(row);
    slot_generated_bits_ = 0;
    slot_generated_count_ = 0;
}

}  // namespace vecmec::offload
