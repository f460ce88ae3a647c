#pragma once

#include <cstdint>
#include <cmath>
#include <string_view>

namespace vecmec {

// One RNG stream. A master seed is split into independent named streams
// (mobility, arrivals, network init, ...) so that sweeps perturb exactly one
// random factor at a time. The normal sampler is hand-rolled Box-Muller
// because std::normal_distribution output is not pinned by the standard.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {
        // splitmix64 warm-up so that small/sequential seeds diverge
        for (int i = 0; i < 4; ++i) next_u64();
    }

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return std::ldexp(static_cast<double>(next_u64() >> 11), -53); }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n), n > 0
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0, u2 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 1e-300);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    // Independent child stream identified by tag.
    Rng fork(uint64_t tag) {
        Rng child(state_ ^ (0xd1342543de82ef95ULL * (tag + 1)));
        return child;
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable stream tags (FNV-1a of the stream name, precomputed).
inline constexpr uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace stream {
inline constexpr uint64_t placement = fnv1a("placement");
inline constexpr uint64_t mobility = fnv1a("mobility");
inline constexpr uint64_t arrivals = fnv1a("arrivals");
inline constexpr uint64_t net_init = fnv1a("net_init");
inline constexpr uint64_t noise = fnv1a("noise");
inline constexpr uint64_t replay = fnv1a("replay");
inline constexpr uint64_t evaluation = fnv1a("evaluation");
}  // namespace stream

}  // namespace vecmec
