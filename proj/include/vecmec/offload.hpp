#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <vector>

#include "vecmec/mobility.hpp"
#include "vecmec/radio.hpp"
#include "vecmec/rng.hpp"

namespace vecmec::offload {

using TaskId = int64_t;

enum class TaskStatus { pending, in_transit, queued, done, expired };

// e2e latency decomposition; e2e is defined as the sum of the parts so the
// decomposition identity holds bit-exactly for completed tasks.
struct LatencyLedger {
    double trans_s = 0.0;
    double comp_s = 0.0;
    double queue_s = 0.0;
    double e2e_s() const { return trans_s + comp_s + queue_s; }
};

// Multi-hop route device -> relay vehicles -> server. One-hop routes have no
// relays. Hop distances are frozen from the snapshot the route was built on.
struct RoutePath {
    int device = -1;
    std::vector<int> relay_vehicles;
    int server = -1;
    std::vector<double> hop_distance_km;  // relays + 1 entries
    double total_distance_m = 0.0;
    std::vector<int> snapshot_nodes;  // unified snapshot ids, device first
};

struct Task {
    TaskId id = -1;
    int owner = -1;
    int birth_slot = 0;
    double birth_time_s = 0.0;
    int64_t size_bits = 0;  // integer bits keep the conservation ledger exact
    double deadline_s = 0.0;
    int chosen_server = -1;
    std::optional<RoutePath> route;
    LatencyLedger ledger;
    TaskStatus status = TaskStatus::pending;
};

struct EdgeServerState {
    int id = 0;
    double compute_rate_cps = 0.0;  // C_j > 0

    struct QueueEntry {
        TaskId task;
        double remaining_cycles;
    };
    std::deque<QueueEntry> fifo;

    double backlog_cycles() const {
        double sum = 0.0;
        for (const auto& e : fifo) sum += e.remaining_cycles;
        return sum;
    }
};

struct CompletionEvent {
    TaskId task;
    int server;
    double time_s;
};

// --- operations -----------------------------------------------------------

// Bernoulli(beta) arrival per device; integer size uniform in
// [size_lo, size_hi] bits; deadline per owner. next_id advances by the number
// of tasks created.
std::vector<Task> generate_tasks(int slot, double slot_s, int num_devices, double beta,
                                 int64_t size_lo_bits, int64_t size_hi_bits,
                                 const std::vector<double>& deadlines_s, Rng& rng,
                                 TaskId& next_id);

// Shortest route (summed Euclidean meters) from a device to every server over
// the relay graph; interior nodes are vehicles only. Distance ties resolve to
// the lexicographically smallest unified-id sequence. Unreachable -> nullopt.
std::vector<std::optional<RoutePath>> route_table(const mobility::TopologySnapshot& snap,
                                                  int device);
std::optional<RoutePath> build_route(const mobility::TopologySnapshot& snap, int device,
                                     int server);

// Store-and-forward transmission latency with one bandwidth share reused per
// hop: sum of size / (share * spectral_efficiency(hop)). Throws
// std::domain_error when a hop rate is not positive (unreachable).
double transmission_latency_s(double size_bits, const RoutePath& route, double share_hz,
                              const radio::ChannelParams& channel);

double computing_latency_s(double size_bits, double compute_rate_cps, double kappa_cycles_per_bit);

// Wait to drain the backlog present the instant a task joins the FIFO.
double queueing_latency_s(const EdgeServerState& server);

// Continuous FIFO drain of compute_rate * dt cycles per server; completions
// are stamped with their exact finish time inside [start_time, start_time+dt].
std::vector<CompletionEvent> advance_servers(std::vector<EdgeServerState>& servers, double dt_s,
                                             double start_time_s);

// --- per-slot metric ledger -------------------------------------------------

struct SlotRow {
    int slot = 0;
    int64_t generated_bits = 0;
    int64_t completed_bits = 0;
    int64_t expired_bits = 0;
    double success_rate = 1.0;  // cumulative completed / generated task count
    // not part of the CSV schema; kept so multi-episode reports can rebuild
    // the cumulative ratio
    int64_t generated_count = 0;
    int64_t completed_count = 0;
};

struct MetricsLedger {
    std::vector<SlotRow> rows;
    int64_t generated_bits = 0;
    int64_t completed_bits = 0;
    int64_t expired_bits = 0;
    int64_t inflight_bits = 0;
    int64_t generated_count = 0;
    int64_t completed_count = 0;
    int64_t expired_count = 0;
    int64_t inflight_count = 0;

    bool conserved() const {
        return generated_bits == completed_bits + expired_bits + inflight_bits &&
               generated_count == completed_count + expired_count + inflight_count;
    }
    double success_rate() const {
        return generated_count == 0 ? 1.0
                                    : static_cast<double>(completed_count) /
                                          static_cast<double>(generated_count);
    }
};

// --- slot engine ------------------------------------------------------------

struct SimConfig {
    radio::ChannelParams channel;
    double kappa_cycles_per_bit = 1200.0;
    double slot_s = 1.0;
};

struct CompletedTask {
    Task task;          // final ledger filled in
    double finish_time_s;
};

struct SlotOutcome {
    std::vector<CompletedTask> completed;  // completion order
    int64_t completed_bits = 0;
    int64_t expired_bits = 0;
};

// Drives transfers and server queues slot by slot. Admission is exact: a task
// reaching its server joins the FIFO only if the resulting e2e latency meets
// its deadline, so queued work is never wasted and queue waits equal
// backlog / C at join. In-transit tasks expire once their deadline passes.
class Simulation {
public:
    Simulation(SimConfig cfg, const std::vector<double>& compute_rates_cps);

    // Every generated task passes through here exactly once.
    void record_generated(const Task& task);
    // Route decided: transfer begins at the next run_slot.
    void start_transfer(const Task& task);
    // No feasible destination (or policy rejection): expires immediately.
    void expire_unadmitted(TaskId id);

    SlotOutcome run_slot(int slot);

    const MetricsLedger& ledger() const { return ledger_; }
    const std::vector<EdgeServerState>& servers() const { return servers_; }
    double server_backlog_cycles(int j) const { return servers_[j].backlog_cycles(); }
    double server_buffered_bits(int j) const {
        return servers_[j].backlog_cycles() / cfg_.kappa_cycles_per_bit;
    }
    int inflight_count() const { return static_cast<int>(tasks_.size()); }
    const SimConfig& config() const { return cfg_; }

private:
    struct Transfer {
        TaskId id;
        double bits_left_on_hop;
        int hop = 0;
    };

    void expire_task(Task& task);
    void settle_slot(int slot, double slot_end_s);

    SimConfig cfg_;
    std::vector<EdgeServerState> servers_;
    std::map<TaskId, Task> tasks_;  // pending / in_transit / queued
    std::vector<Transfer> transfers_;
    MetricsLedger ledger_;

    int64_t slot_generated_bits_ = 0;
    int64_t slot_completed_bits_ = 0;
    int64_t slot_expired_bits_ = 0;
    int64_t slot_generated_count_ = 0;
    int64_t slot_completed_count_ = 0;
};

}  // namespace vecmec::offload
