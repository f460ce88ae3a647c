#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "vecmec/rng.hpp"

namespace vecmec::mobility {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double distance_m(const Vec2& a, const Vec2& b);

constexpr double kSpeedLimitMps = 60.0 / 3.6;  // 60 km/h
constexpr double kVehicleLengthM = 4.0;
constexpr double kSafeGapM = 4.0;

struct TrafficLightCycle {
    double green_s = 30.0;
    double red_s = 30.0;
};

// Directed straight lane segments joined at junction nodes. Two-way streets
// are represented as a lane and its reverse.
struct Lane {
    Vec2 a, b;         // geometry, travel direction a -> b
    double length_m = 0.0;
    int from_node = -1;
    int to_node = -1;
};

struct RoadNetwork {
    std::vector<Lane> lanes;
    std::vector<Vec2> nodes;                        // junctions and boundary endpoints
    std::vector<std::vector<int>> lane_successors;  // continuations at each lane end
    std::vector<std::optional<TrafficLightCycle>> lights;  // per node, default off

    Vec2 position(int lane, double offset_m) const;
    bool red_at(int node, double now_s) const;

    // Axis-aligned two-way street grid: one lane pair per street segment
    // between consecutive crossings/boundaries. Streets span the full map.
    static RoadNetwork grid(double width_m, double height_m,
                            const std::vector<double>& street_xs,
                            const std::vector<double>& street_ys);
};

struct VehicleState {
    int id = 0;
    int lane = 0;
    double offset_m = 0.0;  // position of the vehicle front along the lane
    double speed_mps = kSpeedLimitMps;
    double length_m = kVehicleLengthM;
    uint64_t turn_key = 0;  // seeds the deterministic turn choice
    uint32_t turn_count = 0;
};

struct NodePosition {
    enum class Kind { device, vehicle, server };
    Kind kind;
    int id;
    Vec2 xy;
};

struct ScenarioInfeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ScenarioSpec {
    int num_devices = 0;
    int num_vehicles = 0;
    int num_servers = 0;
    RoadNetwork net;
    std::vector<Vec2> server_sites;  // at least num_servers entries
};

struct Scenario {
    RoadNetwork net;
    std::vector<VehicleState> vehicles;
    std::vector<Vec2> device_xy;  // fixed for the whole run
    std::vector<Vec2> server_xy;

    std::vector<NodePosition> all_nodes() const;
};

// Placement pieces: devices are fixed roadside points for a whole run,
// vehicles are re-placed per episode. Throws ScenarioInfeasible when N
// vehicles cannot be placed with legal gaps.
std::vector<Vec2> place_devices(const ScenarioSpec& spec, Rng& rng);
std::vector<VehicleState> place_vehicles(const ScenarioSpec& spec, Rng& rng);

// Places N vehicles with legal gaps, I devices at roadside points, and J
// servers at their configured sites. Identical (spec, seed) gives identical
// placement. Throws ScenarioInfeasible when N vehicles cannot be placed.
Scenario init_scenario(const ScenarioSpec& spec, uint64_t seed);

// Advances every vehicle by one step of dt seconds: speed-capped, gap-limited
// against the leader on the same lane, held at red lights, continuing onto a
// successor lane at lane ends (deterministic seeded turn).
void step_vehicles(std::vector<VehicleState>& vehicles, const RoadNetwork& net,
                   double now_s, double dt_s);

struct Ranges {
    double dev_range_m = 200.0;  // device <-> vehicle
    double v2v_range_m = 200.0;  // vehicle <-> vehicle
    double es_cov_m = 200.0;     // anything <-> server
};

// Frozen per-slot geometry plus the relay graph. Unified node ids:
// devices [0, I), vehicles [I, I+N), servers [I+N, I+N+J).
struct TopologySnapshot {
    int num_devices = 0;
    int num_vehicles = 0;
    int num_servers = 0;
    std::vector<Vec2> xy;                                   // by unified id
    std::vector<std::vector<std::pair<int, double>>> adj;   // (neighbor, meters)

    int device_node(int i) const { return i; }
    int vehicle_node(int n) const { return num_devices + n; }
    int server_node(int j) const { return num_devices + num_vehicles + j; }
    bool is_server_node(int node) const { return node >= num_devices + num_vehicles; }
    bool is_device_node(int node) const { return node < num_devices; }
};

TopologySnapshot snapshot(const std::vector<VehicleState>& vehicles, const RoadNetwork& net,
                          const std::vector<Vec2>& device_xy, const std::vector<Vec2>& server_xy,
                          const Ranges& ranges);

}  // namespace vecmec::mobility
