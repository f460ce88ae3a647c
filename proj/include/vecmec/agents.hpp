#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "vecmec/env.hpp"
#include "vecmec/neural.hpp"
#include "vecmec/rng.hpp"

namespace vecmec::agents {

struct NoiseConfig {
    enum class Kind { gaussian, ou };
    Kind kind = Kind::gaussian;
    double mu = 0.15;
    double sigma2 = 0.1353352832366127;  // e^-2
    bool zero_mean = false;
    double decay_per_episode = 0.9995;
    double floor_frac = 0.01;  // sigma never drops below floor_frac * sigma0
};

struct MaddpgConfig {
    double lr_actor = 0.001;
    double lr_critic = 0.002;
    double gamma = 0.99;
    double tau = 0.005;
    int buffer_capacity = 100000;
    int minibatch = 64;
    int hidden = 256;         // actor hidden width and critic post-concat width
    int branch_hidden = 256;  // critic state/action encoder width
    double reward_scale = 0.0;  // 0 -> chosen by the harness (1 / max task bits)
    NoiseConfig noise;
};

// Per-component additive exploration noise; the Gaussian literal is
// N(mu, sigma2), the OU variant reads the same pair as (theta, sigma).
class ExplorationNoise {
public:
    ExplorationNoise(NoiseConfig cfg, int dims);

    void apply(std::vector<double>& scores, Rng& rng);
    void end_episode();  // multiplicative sigma decay with a floor
    double sigma() const { return sigma_; }
    void reset_state();  // clears the OU state

private:
    NoiseConfig cfg_;
    double sigma_ = 0.0;
    double sigma0_ = 0.0;
    std::vector<double> ou_;
};

// Actor scores (+ exploration noise), masked argmax over the feasible set,
// ties to the smallest index. The returned scores are post-noise and
// unmasked: they are what the centralized critic consumes. Empty feasible
// set -> no-op (chosen = -1).
env::Action select_action(const neural::DenseNet& actor, const std::vector<double>& obs,
                          const std::vector<int>& feasible, ExplorationNoise* noise, Rng* rng);

// One joint record: all agents' observations and score vectors. Agents that
// emitted a no-op carry zero scores and acted = 0; they are excluded from
// that agent's minibatches.
struct Transition {
    std::vector<float> obs;       // I * obs_dim
    std::vector<float> scores;    // I * J
    std::vector<float> rewards;   // I, in bits
    std::vector<float> next_obs;  // I * obs_dim
    std::vector<uint8_t> acted;   // I
    uint8_t done = 0;
};

class ReplayBuffer {
public:
    ReplayBuffer(int capacity, int num_agents);

    void push(Transition t);
    int size() const { return static_cast<int>(ring_.size()); }
    int capacity() const { return capacity_; }
    const Transition& at(int64_t global_index) const {
        return ring_[static_cast<size_t>(global_index % capacity_)];
    }
    int64_t oldest_index() const { return total_pushed_ - size(); }
    int acted_count(int agent) const { return static_cast<int>(acted_seq_[agent].size()); }
    // m distinct global indices of records where the agent acted, uniform
    // without replacement
    std::vector<int64_t> sample_for_agent(int agent, int m, Rng& rng) const;

private:
    int capacity_;
    std::vector<Transition> ring_;
    int64_t total_pushed_ = 0;
    std::vector<std::deque<int64_t>> acted_seq_;
};

struct AgentNets {
    neural::DenseNet actor, actor_target;
    neural::CriticNet critic, critic_target;
    neural::Adam actor_opt;
    neural::Adam critic_state_opt, critic_action_opt, critic_head_opt;
};

struct TrainReport {
    struct PerAgent {
        double critic_loss = 0.0;
        double actor_loss = 0.0;
        bool skipped = true;
    };
    std::vector<PerAgent> agents;
};

// Centralized critic training, decentralized actor execution. Critics see
// the concatenated observations and score vectors of all agents; each actor
// sees only its own observation.
class MaddpgTrainer {
public:
    MaddpgTrainer(int num_agents, int num_servers, int obs_dim, MaddpgConfig cfg, uint64_t seed);

    std::vector<env::Action> act(const std::vector<std::vector<double>>& obs,
                                 const std::vector<std::vector<int>>& feasible,
                                 const std::vector<bool>& has_task, bool explore);
    void store(const std::vector<std::vector<double>>& obs, const std::vector<env::Action>& actions,
               const std::vector<double>& rewards, const std::vector<std::vector<double>>& next_obs,
               bool done);
    TrainReport train_step();
    void end_episode();

    AgentNets& nets(int agent) { return nets_[agent]; }
    const MaddpgConfig& config() const { return cfg_; }
    ReplayBuffer& buffer() { return buffer_; }
    int num_agents() const { return num_agents_; }
    int num_servers() const { return num_servers_; }
    int obs_dim() const { return obs_dim_; }

    void save_checkpoints(const std::string& dir) const;
    void load_checkpoints(const std::string& dir);

private:
    void train_agent(int agent, TrainReport::PerAgent& report);

    int num_agents_;
    int num_servers_;
    int obs_dim_;
    MaddpgConfig cfg_;
    ReplayBuffer buffer_;
    std::vector<AgentNets> nets_;
    std::vector<ExplorationNoise> noise_;
    Rng noise_rng_{0};
    Rng replay_rng_{0};
};

// Baseline policies: pure functions of the per-slot view, return the chosen
// server or -1 for reject.

// One-hop only: among servers with a direct edge, minimize the estimated e2e
// latency (full-band transmission + backlog wait + compute); reject when none
// is in range or the best estimate misses the deadline.
int policy_single_hop(const env::PolicyView& view);

// Local first: if a one-hop server's estimate meets the deadline take the
// best one, otherwise the reachable server with the shortest route distance
// regardless of load; reject only when nothing is reachable.
int policy_multihop_greedy(const env::PolicyView& view);

}  // namespace vecmec::agents
