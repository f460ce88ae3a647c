#include "vecmec/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace vecmec::mobility {

double distance_m(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x, dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

Vec2 RoadNetwork::position(int lane, double offset_m) const {
    const Lane& l = lanes[lane];
    const double t = l.length_m > 0.0 ? offset_m / l.length_m : 0.0;
    return {l.a.x + (l.b.x - l.a.x) * t, l.a.y + (l.b.y - l.a.y) * t};
}

bool RoadNetwork::red_at(int node, double now_s) const {
    if (node < 0 || node >= static_cast<int>(lights.size()) || !lights[node]) return false;
    const TrafficLightCycle& c = *lights[node];
    const double cycle = c.green_s + c.red_s;
    if (cycle <= 0.0) return false;
    return std::fmod(now_s, cycle) >= c.green_s;
}

RoadNetwork RoadNetwork::grid(double width_m, double height_m,
                              const std::vector<double>& street_xs,
                              const std::vector<double>& street_ys) {
    RoadNetwork net;
    std::map<std::pair<double, double>, int> node_of;
    auto node_id = [&](double x, double y) {
        auto it = node_of.find({x, y});
        if (it != node_of.end()) return it->second;
        int id = static_cast<int>(net.nodes.size());
        net.nodes.push_back({x, y});
        node_of[{x, y}] = id;
        return id;
    };
    auto add_two_way = [&](Vec2 a, Vec2 b) {
        const double len = distance_m(a, b);
        if (len <= 0.0) throw std::invalid_argument("RoadNetwork::grid: zero-length segment");
        const int na = node_id(a.x, a.y);
        const int nb = node_id(b.x, b.y);
        net.lanes.push_back({a, b, len, na, nb});
        net.lanes.push_back({b, a, len, nb, na});
    };

    for (double x : street_xs) {
        std::vector<double> breaks = {0.0};
        for (double y : street_ys)
            if (y > 0.0 && y < height_m) breaks.push_back(y);
        breaks.push_back(height_m);
        std::sort(breaks.begin(), breaks.end());
        for (size_t k = 0; k + 1 < breaks.size(); ++k)
            add_two_way({x, breaks[k]}, {x, breaks[k + 1]});
    }
    for (double y : street_ys) {
        std::vector<double> breaks = {0.0};
        for (double x : street_xs)
            if (x > 0.0 && x < width_m) breaks.push_back(x);
        breaks.push_back(width_m);
        std::sort(breaks.begin(), breaks.end());
        for (size_t k = 0; k + 1 < breaks.size(); ++k)
            add_two_way({breaks[k], y}, {breaks[k + 1], y});
    }

    // Successors: every lane leaving the end node except the immediate
    // reverse; dead ends (map boundary) fall back to the U-turn.
    net.lane_successors.resize(net.lanes.size());
    for (size_t i = 0; i < net.lanes.size(); ++i) {
        const Lane& l = net.lanes[i];
        int reverse = -1;
        for (size_t k = 0; k < net.lanes.size(); ++k) {
            if (k == i) continue;
            const Lane& c = net.lanes[k];
            if (c.from_node != l.to_node) continue;
            if (c.to_node == l.from_node) {
                reverse = static_cast<int>(k);
                continue;
            }
            net.lane_successors[i].push_back(static_cast<int>(k));
        }
        if (net.lane_successors[i].empty() && reverse >= 0)
            net.lane_successors[i].push_back(reverse);
    }
    net.lights.assign(net.nodes.size(), std::nullopt);
    return net;
}

std::vector<NodePosition> Scenario::all_nodes() const {
    std::vector<NodePosition> out;
    out.reserve(device_xy.size() + vehicles.size() + server_xy.size());
    for (size_t i = 0; i < device_xy.size(); ++i)
        out.push_back({NodePosition::Kind::device, static_cast<int>(i), device_xy[i]});
    for (const auto& v : vehicles)
        out.push_back({NodePosition::Kind::vehicle, v.id, net.position(v.lane, v.offset_m)});
    for (size_t j = 0; j < server_xy.size(); ++j)
        out.push_back({NodePosition::Kind::server, static_cast<int>(j), server_xy[j]});
    return out;
}

std::vector<VehicleState> place_vehicles(const ScenarioSpec& spec, Rng& rng) {
    if (spec.net.lanes.empty()) throw std::invalid_argument("place_vehicles: empty road network");
    // Rejection-sample (lane, offset) keeping front-to-front spacing
    // >= length + safe gap among same-lane vehicles.
    std::vector<VehicleState> vehicles;
    std::vector<std::vector<double>> fronts(spec.net.lanes.size());
    const int max_tries = 200 * std::max(1, spec.num_vehicles);
    int tries = 0;
    for (int n = 0; n < spec.num_vehicles; ++n) {
        bool placed = false;
        while (!placed) {
            if (++tries > max_tries)
                throw ScenarioInfeasible("place_vehicles: cannot place vehicles with legal gaps");
            const int lane = rng.uniform_int(static_cast<int>(spec.net.lanes.size()));
            const Lane& l = spec.net.lanes[lane];
            if (l.length_m < kVehicleLengthM) continue;
            const double front = rng.uniform(kVehicleLengthM, l.length_m);
            bool ok = true;
            for (double other : fronts[lane]) {
                if (std::abs(other - front) < kVehicleLengthM + kSafeGapM) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            fronts[lane].push_back(front);
            VehicleState v;
            v.id = n;
            v.lane = lane;
            v.offset_m = front;
            v.speed_mps = kSpeedLimitMps;
            v.turn_key = rng.next_u64();
            vehicles.push_back(v);
            placed = true;
        }
    }
    return vehicles;
}

std::vector<Vec2> place_devices(const ScenarioSpec& spec, Rng& rng) {
    if (spec.net.lanes.empty()) throw std::invalid_argument("place_devices: empty road network");
    std::vector<Vec2> xy;
    for (int i = 0; i < spec.num_devices; ++i) {
        const int lane = rng.uniform_int(static_cast<int>(spec.net.lanes.size()));
        const double off = rng.uniform(0.0, spec.net.lanes[lane].length_m);
        xy.push_back(spec.net.position(lane, off));
    }
    return xy;
}

Scenario init_scenario(const ScenarioSpec& spec, uint64_t seed) {
    if (spec.num_servers > static_cast<int>(spec.server_sites.size()))
        throw std::invalid_argument("init_scenario: fewer server sites than servers");
    if (spec.net.lanes.empty()) throw std::invalid_argument("init_scenario: empty road network");

    Scenario sc;
    sc.net = spec.net;
    Rng rng(seed);
    Rng veh_rng = rng.fork(stream::mobility);
    Rng dev_rng = rng.fork(stream::placement);
    sc.vehicles = place_vehicles(spec, veh_rng);
    sc.device_xy = place_devices(spec, dev_rng);
    for (int j = 0; j < spec.num_servers; ++j) sc.server_xy.push_back(spec.server_sites[j]);
    return sc;
}

namespace {

struct LaneOccupant {
    double front;
    double length;
    int vehicle;  // index into the vehicles vector
};

// Front of the nearest occupant strictly ahead of `behind_front`, minus its
// length: the position the follower's front may not come within kSafeGapM of.
std::optional<double> rear_of_leader(const std::vector<LaneOccupant>& lane, double behind_front,
                                     int self) {
    std::optional<double> best;
    for (const auto& o : lane) {
        if (o.vehicle == self || o.front <= behind_front) continue;
        const double rear = o.front - o.length;
        if (!best || rear < *best) best = rear;
    }
    return best;
}

}  // namespace

void step_vehicles(std::vector<VehicleState>& vehicles, const RoadNetwork& net,
                   double now_s, double dt_s) {
    if (dt_s < 0.0) throw std::invalid_argument("step_vehicles: dt must be >= 0");
    if (dt_s == 0.0 || vehicles.empty()) return;

    std::vector<std::vector<LaneOccupant>> occ(net.lanes.size());
    for (size_t k = 0; k < vehicles.size(); ++k)
        occ[vehicles[k].lane].push_back({vehicles[k].offset_m, vehicles[k].length_m,
                                         static_cast<int>(k)});

    // Leaders first within each lane so follower constraints see updated
    // leader positions; lanes in id order keeps the step deterministic.
    std::vector<int> order(vehicles.size());
    for (size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (vehicles[a].lane != vehicles[b].lane) return vehicles[a].lane < vehicles[b].lane;
        if (vehicles[a].offset_m != vehicles[b].offset_m)
            return vehicles[a].offset_m > vehicles[b].offset_m;
        return a < b;
    });

    for (int idx : order) {
        VehicleState& v = vehicles[idx];
        double budget = kSpeedLimitMps * dt_s;
        // A vehicle crosses at most a few lane ends in one step.
        for (int hop = 0; hop < 8 && budget > 1e-12; ++hop) {
            auto& lane_occ = occ[v.lane];
            double target = v.offset_m + budget;
            if (auto leader_rear = rear_of_leader(lane_occ, v.offset_m, idx))
                target = std::min(target, *leader_rear - kSafeGapM);
            const double lane_len = net.lanes[v.lane].length_m;
            const bool hits_end = target >= lane_len;
            const double reached = std::min(std::max(target, v.offset_m), lane_len);
            budget -= reached - v.offset_m;
            v.offset_m = reached;
            if (!hits_end || reached < lane_len) break;  // blocked or budget spent mid-lane

            // At the lane end: red light holds, otherwise take the seeded turn.
            if (net.red_at(net.lanes[v.lane].to_node, now_s)) break;
            const auto& succ = net.lane_successors[v.lane];
            if (succ.empty()) break;
            uint64_t h = v.turn_key ^ (0x9e3779b97f4a7c15ULL * (v.turn_count + 1));
            h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
            h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
            const int next_lane = succ[(h ^ (h >> 31)) % succ.size()];

            // Enter only if the tail of the next lane leaves room at offset 0.
            if (auto leader_rear = rear_of_leader(occ[next_lane], -1.0, idx)) {
                if (*leader_rear - kSafeGapM < 0.0) break;
            }
            auto self = std::find_if(lane_occ.begin(), lane_occ.end(),
                                     [&](const LaneOccupant& o) { return o.vehicle == idx; });
            lane_occ.erase(self);
            v.lane = next_lane;
            v.offset_m = 0.0;
            v.turn_count += 1;
            occ[next_lane].push_back({v.offset_m, v.length_m, idx});
        }
        // Record realized speed and sync the occupancy entry.
        const double advanced = kSpeedLimitMps * dt_s - budget;
        v.speed_mps = std::clamp(advanced / dt_s, 0.0, kSpeedLimitMps);
        for (auto& o : occ[v.lane])
            if (o.vehicle == idx) o.front = v.offset_m;
    }
}

TopologySnapshot snapshot(const std::vector<VehicleState>& vehicles, const RoadNetwork& net,
                          const std::vector<Vec2>& device_xy, const std::vector<Vec2>& server_xy,
                          const Ranges& ranges) {
    TopologySnapshot s;
    s.num_devices = static_cast<int>(device_xy.size());
    s.num_vehicles = static_cast<int>(vehicles.size());
    s.num_servers = static_cast<int>(server_xy.size());
    s.xy.reserve(s.num_devices + s.num_vehicles + s.num_servers);
    for (const auto& p : device_xy) s.xy.push_back(p);
    for (const auto& v : vehicles) s.xy.push_back(net.position(v.lane, v.offset_m));
    for (const auto& p : server_xy) s.xy.push_back(p);

    const int total = static_cast<int>(s.xy.size());
    s.adj.assign(total, {});
    auto connect = [&](int a, int b, double range) {
        const double d = distance_m(s.xy[a], s.xy[b]);
        if (d <= range) {
            s.adj[a].emplace_back(b, d);
            s.adj[b].emplace_back(a, d);
        }
    };
    for (int i = 0; i < s.num_devices; ++i) {
        for (int n = 0; n < s.num_vehicles; ++n) connect(s.device_node(i), s.vehicle_node(n), ranges.dev_range_m);
        for (int j = 0; j < s.num_servers; ++j) connect(s.device_node(i), s.server_node(j), ranges.es_cov_m);
    }
    for (int n = 0; n < s.num_vehicles; ++n) {
        for (int m = n + 1; m < s.num_vehicles; ++m) connect(s.vehicle_node(n), s.vehicle_node(m), ranges.v2v_range_m);
        for (int j = 0; j < s.num_servers; ++j) connect(s.vehicle_node(n), s.server_node(j), ranges.es_cov_m);
    }
    return s;
}

}  // namespace vecmec::mobility
