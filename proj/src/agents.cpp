#include "vecmec/agents.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>

#include "vecmec/offload.hpp"

namespace vecmec::agents {

using neural::Matrix;

ExplorationNoise::ExplorationNoise(NoiseConfig cfg, int dims)
    : cfg_(cfg), ou_(static_cast<size_t>(dims), 0.0) {
    if (!(cfg_.sigma2 > 0.0)) throw std::invalid_argument("ExplorationNoise: sigma2 must be > 0");
    sigma0_ = cfg_.kind == NoiseConfig::Kind::gaussian ? std::sqrt(cfg_.sigma2) : cfg_.sigma2;
    sigma_ = sigma0_;
}

void ExplorationNoise::apply(std::vector<double>& scores, Rng& rng) {
    if (cfg_.kind == NoiseConfig::Kind::gaussian) {
        const double mean = cfg_.zero_mean ? 0.0 : cfg_.mu;
        for (double& s : scores) s += rng.gaussian(mean, sigma_);
    } else {
        // Ornstein-Uhlenbeck reading of the same table entry: theta = mu,
        // sigma = sigma2, mean-reverting to zero.
        for (size_t k = 0; k < scores.size(); ++k) {
            ou_[k] += cfg_.mu * (0.0 - ou_[k]) + sigma_ * rng.gaussian();
            scores[k] += ou_[k];
        }
    }
}

void ExplorationNoise::end_episode() {
    sigma_ = std::max(sigma_ * cfg_.decay_per_episode, cfg_.floor_frac * sigma0_);
}

void ExplorationNoise::reset_state() { std::fill(ou_.begin(), ou_.end(), 0.0); }

env::Action select_action(const neural::DenseNet& actor, const std::vector<double>& obs,
                          const std::vector<int>& feasible, ExplorationNoise* noise, Rng* rng) {
    env::Action action;
    action.scores = actor.forward(obs);
    if (noise != nullptr) {
        if (rng == nullptr) throw std::logic_error("select_action: noise requires an rng");
        noise->apply(action.scores, *rng);
    }
    if (feasible.empty()) return action;  // no-op
    int best = -1;
    for (int j : feasible)
        if (best < 0 || action.scores[j] > action.scores[best]) best = j;  // ties keep least index
    action.chosen = best;
    return action;
}

ReplayBuffer::ReplayBuffer(int capacity, int num_agents)
    : capacity_(capacity), acted_seq_(num_agents) {
    if (capacity <= 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
}

void ReplayBuffer::push(Transition t) {
    const int64_t idx = total_pushed_;
    if (size() < capacity_) {
        ring_.push_back(std::move(t));
    } else {
        ring_[static_cast<size_t>(idx % capacity_)] = std::move(t);
    }
    total_pushed_ += 1;
    const Transition& stored = at(idx);
    for (size_t i = 0; i < acted_seq_.size(); ++i)
        if (stored.acted[i]) acted_seq_[i].push_back(idx);
    // drop references to evicted records
    const int64_t oldest = oldest_index();
    for (auto& seq : acted_seq_)
        while (!seq.empty() && seq.front() < oldest) seq.pop_front();
}

std::vector<int64_t> ReplayBuffer::sample_for_agent(int agent, int m, Rng& rng) const {
    const auto& seq = acted_seq_[agent];
    const int n = static_cast<int>(seq.size());
    if (m > n) throw std::logic_error("ReplayBuffer::sample_for_agent: not enough records");
    // Floyd's sampling: m distinct positions in [0, n)
    std::vector<int64_t> out;
    out.reserve(m);
    std::vector<char> taken(n, 0);
    for (int j = n - m; j < n; ++j) {
        int t = rng.uniform_int(j + 1);
        if (taken[t]) t = j;
        taken[t] = 1;
        out.push_back(seq[t]);
    }
    return out;
}

MaddpgTrainer::MaddpgTrainer(int num_agents, int num_servers, int obs_dim, MaddpgConfig cfg,
                             uint64_t seed)
    : num_agents_(num_agents),
      num_servers_(num_servers),
      obs_dim_(obs_dim),
      cfg_(cfg),
      buffer_(cfg.buffer_capacity, num_agents) {
    if (cfg_.reward_scale <= 0.0) cfg_.reward_scale = 1.0;
    Rng root(seed);
    Rng init = root.fork(stream::net_init);
    noise_rng_ = root.fork(stream::noise);
    replay_rng_ = root.fork(stream::replay);

    const int state_dim = num_agents_ * obs_dim_;
    const int action_dim = num_agents_ * num_servers_;
    nets_.reserve(num_agents_);
    for (int i = 0; i < num_agents_; ++i) {
        Rng agent_init = init.fork(static_cast<uint64_t>(i));
        AgentNets n;
        n.actor = neural::DenseNet({{obs_dim_, cfg_.hidden, neural::Activation::sigmoid},
                                    {cfg_.hidden, cfg_.hidden, neural::Activation::sigmoid},
                                    {cfg_.hidden, num_servers_, neural::Activation::sigmoid}},
                                   agent_init);
        n.critic = neural::CriticNet(state_dim, action_dim, cfg_.branch_hidden, cfg_.hidden,
                                     agent_init);
        n.actor_target = n.actor;
        n.critic_target = n.critic;
        n.actor_opt = neural::Adam(n.actor.param_count(), cfg_.lr_actor);
        n.critic_state_opt = neural::Adam(n.critic.state_net().param_count(), cfg_.lr_critic);
        n.critic_action_opt = neural::Adam(n.critic.action_net().param_count(), cfg_.lr_critic);
        n.critic_head_opt = neural::Adam(n.critic.head_net().param_count(), cfg_.lr_critic);
        nets_.push_back(std::move(n));
        noise_.emplace_back(cfg_.noise, num_servers_);
    }
}

std::vector<env::Action> MaddpgTrainer::act(const std::vector<std::vector<double>>& obs,
                                            const std::vector<std::vector<int>>& feasible,
                                            const std::vector<bool>& has_task, bool explore) {
    std::vector<env::Action> actions(num_agents_);
    for (int i = 0; i < num_agents_; ++i) {
        if (!has_task[i]) {
            actions[i].scores.assign(num_servers_, 0.0);
            continue;
        }
        actions[i] = select_action(nets_[i].actor, obs[i], feasible[i],
                                   explore ? &noise_[i] : nullptr, explore ? &noise_rng_ : nullptr);
    }
    return actions;
}

void MaddpgTrainer::store(const std::vector<std::vector<double>>& obs,
                          const std::vector<env::Action>& actions,
                          const std::vector<double>& rewards,
                          const std::vector<std::vector<double>>& next_obs, bool done) {
    Transition t;
    t.obs.reserve(static_cast<size_t>(num_agents_) * obs_dim_);
    t.next_obs.reserve(static_cast<size_t>(num_agents_) * obs_dim_);
    t.scores.reserve(static_cast<size_t>(num_agents_) * num_servers_);
    t.rewards.reserve(num_agents_);
    t.acted.reserve(num_agents_);
    for (int i = 0; i < num_agents_; ++i) {
        for (double v : obs[i]) t.obs.push_back(static_cast<float>(v));
        for (double v : next_obs[i]) t.next_obs.push_back(static_cast<float>(v));
        const bool acted = actions[i].chosen >= 0;
        for (double v : actions[i].scores)
            t.scores.push_back(acted ? static_cast<float>(v) : 0.0f);
        t.rewards.push_back(static_cast<float>(rewards[i]));
        t.acted.push_back(acted ? 1 : 0);
    }
    t.done = done ? 1 : 0;
    buffer_.push(std::move(t));
}

TrainReport MaddpgTrainer::train_step() {
    TrainReport report;
    report.agents.resize(num_agents_);
    for (int i = 0; i < num_agents_; ++i) train_agent(i, report.agents[i]);
    return report;
}

void MaddpgTrainer::train_agent(int agent, TrainReport::PerAgent& report) {
    const int m = cfg_.minibatch;
    if (buffer_.acted_count(agent) < m) return;  // skip until enough acted records
    const auto idx = buffer_.sample_for_agent(agent, m, replay_rng_);

    const int state_dim = num_agents_ * obs_dim_;
    const int action_dim = num_agents_ * num_servers_;
    Matrix S(m, state_dim), A(m, action_dim), Sn(m, state_dim);
    std::vector<double> r(m);
    std::vector<double> not_done(m);
    for (int z = 0; z < m; ++z) {
        const Transition& t = buffer_.at(idx[z]);
        for (int k = 0; k < state_dim; ++k) S.at(z, k) = t.obs[k];
        for (int k = 0; k < state_dim; ++k) Sn.at(z, k) = t.next_obs[k];
        for (int k = 0; k < action_dim; ++k) A.at(z, k) = t.scores[k];
        r[z] = t.rewards[agent] * cfg_.reward_scale;
        not_done[z] = t.done ? 0.0 : 1.0;
    }

    AgentNets& nets = nets_[agent];

    // (a) targets: next joint actions from every agent's target actor
    Matrix An(m, action_dim);
    for (int k = 0; k < num_agents_; ++k) {
        Matrix ok(m, obs_dim_);
        for (int z = 0; z < m; ++z)
            std::copy(Sn.row(z) + static_cast<size_t>(k) * obs_dim_,
                      Sn.row(z) + static_cast<size_t>(k + 1) * obs_dim_, ok.row(z));
        neural::DenseNet::Cache cache;
        const Matrix& ak = nets_[k].actor_target.forward_batch(ok, cache);
        for (int z = 0; z < m; ++z)
            std::copy(ak.row(z), ak.row(z) + num_servers_,
                      An.row(z) + static_cast<size_t>(k) * num_servers_);
    }
    neural::CriticNet::Cache tcache;
    const Matrix& Qn = nets.critic_target.forward_batch(Sn, An, tcache);
    std::vector<double> y(m);
    for (int z = 0; z < m; ++z) y[z] = r[z] + cfg_.gamma * not_done[z] * Qn.at(z, 0);

    // (b) critic regression toward y
    neural::CriticNet::Cache ccache;
    const Matrix& Q = nets.critic.forward_batch(S, A, ccache);
    double critic_loss = 0.0;
    Matrix dQ(m, 1);
    for (int z = 0; z < m; ++z) {
        const double err = Q.at(z, 0) - y[z];
        critic_loss += err * err;
        dQ.at(z, 0) = 2.0 * err / m;
    }
    critic_loss /= m;
    neural::CriticNet::Grads cgrads;
    nets.critic.backward_batch(ccache, dQ, cgrads);
    nets.critic_state_opt.step(nets.critic.state_net().params(), cgrads.state);
    nets.critic_action_opt.step(nets.critic.action_net().params(), cgrads.action);
    nets.critic_head_opt.step(nets.critic.head_net().params(), cgrads.head);

    // (c) actor ascent through the critic's action input for this agent only
    Matrix own_obs(m, obs_dim_);
    for (int z = 0; z < m; ++z)
        std::copy(S.row(z) + static_cast<size_t>(agent) * obs_dim_,
                  S.row(z) + static_cast<size_t>(agent + 1) * obs_dim_, own_obs.row(z));
    neural::DenseNet::Cache acache;
    const Matrix& own_scores = nets.actor.forward_batch(own_obs, acache);
    Matrix A_pi = A;
    for (int z = 0; z < m; ++z)
        std::copy(own_scores.row(z), own_scores.row(z) + num_servers_,
                  A_pi.row(z) + static_cast<size_t>(agent) * num_servers_);
    neural::CriticNet::Cache pcache;
    const Matrix& Qpi = nets.critic.forward_batch(S, A_pi, pcache);
    double actor_loss = 0.0;
    Matrix dQpi(m, 1);
    for (int z = 0; z < m; ++z) {
        actor_loss -= Qpi.at(z, 0) / m;
        dQpi.at(z, 0) = -1.0 / m;
    }
    Matrix dA = nets.critic.action_input_grad(pcache, dQpi);  // critic params untouched
    Matrix dOwn(m, num_servers_);
    for (int z = 0; z < m; ++z)
        std::copy(dA.row(z) + static_cast<size_t>(agent) * num_servers_,
                  dA.row(z) + static_cast<size_t>(agent + 1) * num_servers_, dOwn.row(z));
    std::vector<double> agrads;
    nets.actor.backward_batch(acache, dOwn, agrads);
    nets.actor_opt.step(nets.actor.params(), agrads);

    // (d) soft updates
    neural::soft_update(nets.actor_target.params(), nets.actor.params(), cfg_.tau);
    neural::soft_update(nets.critic_target.state_net().params(), nets.critic.state_net().params(),
                        cfg_.tau);
    neural::soft_update(nets.critic_target.action_net().params(),
                        nets.critic.action_net().params(), cfg_.tau);
    neural::soft_update(nets.critic_target.head_net().params(), nets.critic.head_net().params(),
                        cfg_.tau);

    report.critic_loss = critic_loss;
    report.actor_loss = actor_loss;
    report.skipped = false;
}

void MaddpgTrainer::end_episode() {
    for (auto& n : noise_) {
        n.end_episode();
        n.reset_state();
    }
}

void MaddpgTrainer::save_checkpoints(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (int i = 0; i < num_agents_; ++i) {
        const std::string base = (fs::path(dir) / ("agent" + std::to_string(i))).string();
        neural::save_dense_checkpoint(base + "_actor.ckpt", nets_[i].actor);
        neural::save_dense_checkpoint(base + "_actor_target.ckpt", nets_[i].actor_target);
        neural::save_critic_checkpoint(base + "_critic.ckpt", nets_[i].critic);
        neural::save_critic_checkpoint(base + "_critic_target.ckpt", nets_[i].critic_target);
    }
}

void MaddpgTrainer::load_checkpoints(const std::string& dir) {
    namespace fs = std::filesystem;
    for (int i = 0; i < num_agents_; ++i) {
        const std::string base = (fs::path(dir) / ("agent" + std::to_string(i))).string();
        nets_[i].actor = neural::load_dense_checkpoint(base + "_actor.ckpt");
        nets_[i].actor_target = neural::load_dense_checkpoint(base + "_actor_target.ckpt");
        nets_[i].critic = neural::load_critic_checkpoint(base + "_critic.ckpt");
        nets_[i].critic_target = neural::load_critic_checkpoint(base + "_critic_target.ckpt");
    }
}

namespace {

// Eq-style estimate a policy can compute from observables: full-band one-hop
// transmission plus backlog wait plus own compute time.
double one_hop_estimate_s(const env::PolicyView& v, int server) {
    const double rate = radio::link_rate_bps(v.direct_km[server], v.channel.bandwidth_hz, v.channel);
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return v.task_bits / rate + v.backlog_cycles[server] / v.compute_rates[server] +
           v.kappa_cycles_per_bit * v.task_bits / v.compute_rates[server];
}

}  // namespace

int policy_single_hop(const env::PolicyView& view) {
    int best = -1;
    double best_est = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(view.direct_km.size()); ++j) {
        if (std::isinf(view.direct_km[j])) continue;
        const double est = one_hop_estimate_s(view, j);
        if (est < best_est) {
            best_est = est;
            best = j;
        }
    }
    if (best < 0 || best_est > view.deadline_s) return -1;  // not admitted
    return best;
}

int policy_multihop_greedy(const env::PolicyView& view) {
    int best = -1;
    double best_est = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(view.direct_km.size()); ++j) {
        if (std::isinf(view.direct_km[j])) continue;
        const double est = one_hop_estimate_s(view, j);
        if (est < best_est) {
            best_est = est;
            best = j;
        }
    }
    if (best >= 0 && best_est <= view.deadline_s) return best;
    // local servers overloaded or absent: the excess travels multi-hop to the
    // nearest remote server, its load ignored
    int nearest = -1;
    double nearest_m = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(view.route_m.size()); ++j) {
        if (!std::isinf(view.direct_km[j])) continue;  // one-hop already failed the estimate
        if (view.route_m[j] < nearest_m) {
            nearest_m = view.route_m[j];
            nearest = j;
        }
    }
    return nearest;
}

}  // namespace vecmec::agents
