// Acceptance suite: one pass/fail line per criterion. The cheap checks run
// first; the trained-policy comparisons at the end dominate the runtime.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vecmec/agents.hpp"
#include "vecmec/env.hpp"
#include "vecmec/harness.hpp"
#include "vecmec/neural.hpp"
#include "vecmec/offload.hpp"
#include "vecmec/radio.hpp"

using namespace vecmec;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %d %-22s %s  (%s)\n", id, name, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) g_failures += 1;
}

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1

long double oracle_path_loss(long double d_km, const radio::ChannelParams& p) {
    const long double d = d_km < 1e-3L ? 1e-3L : d_km;
    return 40.0L * (1.0L - 4e-3L * p.antenna_height_m) * std::log10(d)
         - 18.0L * std::log10(static_cast<long double>(p.antenna_height_m))
         + 21.0L * std::log10(static_cast<long double>(p.carrier_freq_mhz)) + 80.0L;
}

void criterion_channel_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    radio::ChannelParams p;
    Rng rng(2024);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double d = rng.uniform(1e-3, 5.0);
        const double b = rng.uniform(0.0, 5e6);
        const long double pl = oracle_path_loss(d, p);
        const long double snr = p.tx_power_w * std::pow(10.0L, -pl / 10.0L) / p.noise_w;
        const long double rate = b * std::log2(1.0L + snr);
        const double pl_err = std::abs(radio::path_loss_db(d, p) - static_cast<double>(pl)) /
                              std::abs(static_cast<double>(pl));
        const double r_err = std::abs(radio::link_rate_bps(d, b, p) - static_cast<double>(rate)) /
                             std::max(1.0, std::abs(static_cast<double>(rate)));
        worst = std::max({worst, pl_err, r_err});
    }
    auto sig4 = [](double got, double want) { return std::abs(got - want) <= 5e-5 * std::abs(want); };
    const bool worked = sig4(radio::path_loss_db(1.0, p), 149.2207) &&
                        sig4(radio::path_loss_db(0.1, p), 109.4607) &&
                        std::abs(radio::link_rate_bps(0.1, 5e6, p) - 2.282e7) <= 5e-4 * 2.282e7;
    const double secs = elapsed_s(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e vs 1e-9, worked values %s, %.2f s vs 1 s",
                  worst, worked ? "ok" : "off", secs);
    report(1, "channel-oracle", worst <= 1e-9 && worked && secs < 1.0, buf);
}

// ---------------------------------------------------------------- criterion 2

// Checks a sampled set of coordinates on every layer of the nets the desk
// scenario trains: actor 29->256->256->4 and the branched critic for 20
// agents. Central differences, h = 1e-5.
template <typename LossFn>
double max_fd_error(std::vector<double>& params, const std::vector<double>& grad, LossFn loss_at,
                    Rng& rng, int samples) {
    const double h = 1e-5;
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        const size_t k = static_cast<size_t>(rng.uniform_int(static_cast<int>(params.size())));
        const double saved = params[k];
        params[k] = saved + h;
        const double up = loss_at();
        params[k] = saved - h;
        const double dn = loss_at();
        params[k] = saved;
        const double fd = (up - dn) / (2.0 * h);
        worst = std::max(worst, std::abs(grad[k] - fd) / std::max(1.0, std::abs(fd)));
    }
    return worst;
}

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const int I = 20, J = 4;
    const int obs_dim = 1 + I + 2 * J;
    Rng rng(77);
    double worst = 0.0;

    for (int draw = 0; draw < 100; ++draw) {
        neural::DenseNet actor({{obs_dim, 256, neural::Activation::sigmoid},
                                {256, 256, neural::Activation::sigmoid},
                                {256, J, neural::Activation::sigmoid}},
                               rng);
        neural::Matrix X(2, obs_dim);
        for (auto& v : X.a) v = rng.uniform(0.0, 1.0);
        neural::DenseNet::Cache cache;
        const neural::Matrix& Y = actor.forward_batch(X, cache);
        neural::Matrix dY(Y.rows, Y.cols);
        std::fill(dY.a.begin(), dY.a.end(), 1.0);
        std::vector<double> grad;
        actor.backward_batch(cache, dY, grad);
        auto loss_at = [&]() {
            neural::DenseNet::Cache c;
            const neural::Matrix& out = actor.forward_batch(X, c);
            return std::accumulate(out.a.begin(), out.a.end(), 0.0);
        };
        worst = std::max(worst, max_fd_error(actor.params(), grad, loss_at, rng, 12));
    }

    const int state_dim = I * obs_dim, action_dim = I * J;
    for (int draw = 0; draw < 100; ++draw) {
        neural::CriticNet critic(state_dim, action_dim, 64, 256, rng);
        neural::Matrix Xs(2, state_dim), Xa(2, action_dim);
        for (auto& v : Xs.a) v = rng.uniform(0.0, 1.0);
        for (auto& v : Xa.a) v = rng.uniform(0.0, 1.0);
        neural::CriticNet::Cache cache;
        const neural::Matrix& Q = critic.forward_batch(Xs, Xa, cache);
        neural::Matrix dY(Q.rows, 1);
        std::fill(dY.a.begin(), dY.a.end(), 1.0);
        neural::CriticNet::Grads grads;
        critic.backward_batch(cache, dY, grads);
        auto loss_at = [&]() {
            neural::CriticNet::Cache c;
            const neural::Matrix& out = critic.forward_batch(Xs, Xa, c);
            return std::accumulate(out.a.begin(), out.a.end(), 0.0);
        };
        worst = std::max(worst, max_fd_error(critic.state_net().params(), grads.state, loss_at, rng, 4));
        worst = std::max(worst, max_fd_error(critic.action_net().params(), grads.action, loss_at, rng, 4));
        worst = std::max(worst, max_fd_error(critic.head_net().params(), grads.head, loss_at, rng, 4));
    }
    const double secs = elapsed_s(t0);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "max rel err %.2e vs 1e-4, %.1f s vs 30 s", worst, secs);
    report(2, "gradient-suite", worst <= 1e-4 && secs < 30.0, buf);
}

// ---------------------------------------------------------------- criterion 3

void criterion_latency_identity() {
    harness::ScenarioConfig cfg = harness::ScenarioConfig::from_preset("desk");
    env::Environment e(cfg.env_config(), 5);
    Rng seeds(11);
    int64_t completed = 0;
    bool identity = true, conserved = true, deadline_ok = true;
    while (completed < 10000) {
        e.reset(seeds.next_u64());
        bool done = false;
        while (!done) {
            std::vector<env::Action> acts(e.num_agents());
            for (int i = 0; i < e.num_agents(); ++i) {
                acts[i].scores.assign(e.num_servers(), 0.0);
                if (!e.has_task(i)) continue;
                acts[i].chosen = agents::policy_multihop_greedy(e.policy_view(i));
            }
            done = e.step(acts).done;
            for (const auto& c : e.last_completions()) {
                completed += 1;
                const auto& L = c.task.ledger;
                if (L.e2e_s() != L.trans_s + L.comp_s + L.queue_s) identity = false;
                if (L.e2e_s() > c.task.deadline_s) deadline_ok = false;
            }
            if (!e.ledger().conserved()) conserved = false;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%lld tasks, identity %s, conservation %s, deadlines %s",
                  static_cast<long long>(completed), identity ? "exact" : "broken",
                  conserved ? "held" : "broken", deadline_ok ? "met" : "violated");
    report(3, "latency-identity", identity && conserved && deadline_ok, buf);
}

// ---------------------------------------------------------------- criterion 4

struct BrutePath {
    double dist = std::numeric_limits<double>::infinity();
    std::vector<int> nodes;
};

void brute_dfs(const mobility::TopologySnapshot& s, int u, int target, std::vector<int>& path,
               std::vector<bool>& used, double dist, BrutePath& best) {
    if (u == target) {
        if (dist < best.dist || (dist == best.dist && path < best.nodes)) {
            best.dist = dist;
            best.nodes = path;
        }
        return;
    }
    for (const auto& [v, w] : s.adj[u]) {
        if (used[v] || s.is_device_node(v)) continue;
        if (s.is_server_node(v) && v != target) continue;
        used[v] = true;
        path.push_back(v);
        brute_dfs(s, v, target, path, used, dist + w, best);
        path.pop_back();
        used[v] = false;
    }
}

void criterion_route_oracle() {
    Rng rng(4242);
    int mismatches = 0;
    int graphs = 0, solved = 0;
    while (graphs < 500) {
        graphs += 1;
        const int nv = rng.uniform_int(9);      // vehicles
        const int nj = 1 + rng.uniform_int(2);  // servers
        mobility::TopologySnapshot s;
        s.num_devices = 1;
        s.num_vehicles = nv;
        s.num_servers = nj;
        for (int k = 0; k < 1 + nv + nj; ++k)
            s.xy.push_back({static_cast<double>(rng.uniform_int(100)),
                            static_cast<double>(rng.uniform_int(100))});
        s.adj.assign(s.xy.size(), {});
        for (size_t a = 0; a < s.xy.size(); ++a) {
            for (size_t b = a + 1; b < s.xy.size(); ++b) {
                if (s.is_device_node(a) && s.is_device_node(b)) continue;
                if (s.is_server_node(a) && s.is_server_node(b)) continue;
                const double d = mobility::distance_m(s.xy[a], s.xy[b]);
                if (d <= 40.0) {
                    s.adj[a].emplace_back(static_cast<int>(b), d);
                    s.adj[b].emplace_back(static_cast<int>(a), d);
                }
            }
        }
        for (int j = 0; j < nj; ++j) {
            auto got = offload::build_route(s, 0, j);
            BrutePath want;
            std::vector<int> path = {0};
            std::vector<bool> used(s.xy.size(), false);
            used[0] = true;
            brute_dfs(s, 0, s.server_node(j), path, used, 0.0, want);
            if (!got.has_value()) {
                if (!std::isinf(want.dist)) mismatches += 1;
                continue;
            }
            solved += 1;
            if (got->snapshot_nodes != want.nodes || got->total_distance_m != want.dist)
                mismatches += 1;
        }
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%d graphs, %d routable pairs, %d mismatches", graphs, solved,
                  mismatches);
    report(4, "route-oracle", mismatches == 0 && solved > 200, buf);
}

// ---------------------------------------------------------------- criterion 8

std::string metrics_csv_text(const std::vector<offload::SlotRow>& rows) {
    namespace fs = std::filesystem;
    const auto path = fs::temp_directory_path() / "vecmec_acceptance_metrics.csv";
    harness::write_metrics_csv(path.string(), rows);
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    fs::remove(path);
    return ss.str();
}

void criterion_determinism() {
    harness::ScenarioConfig cfg = harness::ScenarioConfig::from_preset("desk");
    cfg.policy = harness::Policy::multihop_greedy;
    cfg.seed = 9;
    const std::string a = metrics_csv_text(harness::run_experiment(cfg).rows);
    const std::string b = metrics_csv_text(harness::run_experiment(cfg).rows);

    harness::ScenarioConfig trained = cfg;
    trained.policy = harness::Policy::maddpg;
    trained.train_episodes = 2;
    trained.eval_episodes = 3;
    const std::string c = metrics_csv_text(harness::run_experiment(trained).rows);
    const std::string d = metrics_csv_text(harness::run_experiment(trained).rows);

    const bool pass = a == b && c == d && !a.empty() && !c.empty();
    char buf[120];
    std::snprintf(buf, sizeof(buf), "greedy bytes %s, trained bytes %s",
                  a == b ? "identical" : "differ", c == d ? "identical" : "differ");
    report(8, "determinism", pass, buf);
}

// ---------------------------------------------------------------- criterion 9

void criterion_soft_update_law() {
    Rng rng(55);
    neural::DenseNet main_net({{8, 16, neural::Activation::sigmoid},
                               {16, 4, neural::Activation::linear}},
                              rng);
    neural::DenseNet target_net({{8, 16, neural::Activation::sigmoid},
                                 {16, 4, neural::Activation::linear}},
                                rng);
    const double tau = 0.005;
    std::vector<double> diff0(main_net.param_count());
    for (int k = 0; k < main_net.param_count(); ++k)
        diff0[k] = target_net.params()[k] - main_net.params()[k];
    double d0 = 0.0;
    for (double v : diff0) d0 = std::max(d0, std::abs(v));

    double worst = 0.0;
    for (int k = 1; k <= 200; ++k) {
        neural::soft_update(target_net.params(), main_net.params(), tau);
        double dk = 0.0;
        for (int i = 0; i < main_net.param_count(); ++i)
            dk = std::max(dk, std::abs(target_net.params()[i] - main_net.params()[i]));
        const double want = std::pow(1.0 - tau, k) * d0;
        worst = std::max(worst, std::abs(dk - want) / want);
    }
    char buf[120];
    std::snprintf(buf, sizeof(buf), "max rel deviation %.2e vs 1e-9 over k<=200", worst);
    report(9, "soft-update-law", worst <= 1e-9, buf);
}

// ------------------------------------------------------- criteria 5, 6 and 7

double mean_of(const std::vector<double>& xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

void criteria_trained_policy() {
    harness::ScenarioConfig base = harness::ScenarioConfig::from_preset("desk");
    base.seed = 1;
    const int repeats = 5;

    // J sweep with trained agents: J=4 doubles as the criterion-5 comparison.
    const auto t0 = std::chrono::steady_clock::now();
    auto maddpg_sweep = harness::run_sweep("servers", {1, 2, 3, 4}, base, repeats,
                                           {harness::Policy::maddpg});
    auto baseline_sweep = harness::run_sweep("servers", {4}, base, repeats,
                                             {harness::Policy::single_hop,
                                              harness::Policy::multihop_greedy});
    const double train_secs = elapsed_s(t0);

    const auto& m4 = maddpg_sweep.aggregates[3];
    const auto& single = baseline_sweep.aggregates[0];
    const auto& greedy = baseline_sweep.aggregates[1];
    {
        const double margin = 0.10 * greedy.mean_throughput;
        const bool pass =
            m4.mean_throughput >= single.mean_throughput + margin &&
            m4.mean_throughput >= greedy.mean_throughput + margin && train_secs < 1800.0;
        char buf[200];
        std::snprintf(buf, sizeof(buf),
                      "maddpg %.0f vs single %.0f, greedy %.0f bits/slot; margin needed %.0f; "
                      "%.0f s vs 1800 s",
                      m4.mean_throughput, single.mean_throughput, greedy.mean_throughput, margin,
                      train_secs);
        report(5, "baseline-ordering", pass, buf);
    }
    {
        int inversions = 0;
        bool big_inversion = false;
        for (int k = 0; k + 1 < 4; ++k) {
            const auto& lo = maddpg_sweep.aggregates[k];
            const auto& hi = maddpg_sweep.aggregates[k + 1];
            if (hi.mean_throughput < lo.mean_throughput) {
                inversions += 1;
                if (hi.mean_throughput < lo.mean_throughput - lo.stderr_throughput)
                    big_inversion = true;
            }
        }
        char buf[200];
        std::snprintf(buf, sizeof(buf), "means %.0f / %.0f / %.0f / %.0f, %d inversions",
                      maddpg_sweep.aggregates[0].mean_throughput,
                      maddpg_sweep.aggregates[1].mean_throughput,
                      maddpg_sweep.aggregates[2].mean_throughput,
                      maddpg_sweep.aggregates[3].mean_throughput, inversions);
        report(6, "monotone-in-servers", inversions <= 1 && !big_inversion, buf);
    }
    {
        harness::ScenarioConfig low = base;
        low.beta = 0.1;
        auto sweep = harness::run_sweep("beta", {0.1}, low, repeats, {harness::Policy::maddpg});
        const double sr = sweep.aggregates[0].mean_success;
        char buf[120];
        std::snprintf(buf, sizeof(buf), "mean success %.4f vs 0.9 over %d seeds", sr, repeats);
        report(7, "low-load-success", sr >= 0.9, buf);
    }
}

}  // namespace

int main() {
    std::printf("acceptance suite: desk preset, %d criteria\n", 9);
    criterion_channel_oracle();
    criterion_gradients();
    criterion_latency_identity();
    criterion_route_oracle();
    criterion_determinism();
    criterion_soft_update_law();
    criteria_trained_policy();
    std::printf("%d criteria failed\n", g_failures);
    return g_failures;
}
