#include "vecmec/radio.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vecmec::radio {

void ChannelParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0)) throw std::invalid_argument(std::string("ChannelParams.") + name + " must be > 0");
    };
    positive(antenna_height_m, "antenna_height_m");
    positive(carrier_freq_mhz, "carrier_freq_mhz");
    positive(tx_power_w, "tx_power_w");
    positive(noise_w, "noise_w");
    positive(bandwidth_hz, "bandwidth_hz");
}

double path_loss_db(double distance_km, const ChannelParams& params) {
    if (!(distance_km > 0.0)) throw std::domain_error("path_loss_db: distance must be > 0");
    const double d = std::max(distance_km, 1e-3);  // clamp below 1 m
    return 40.0 * (1.0 - 4e-3 * params.antenna_height_m) * std::log10(d)
         - 18.0 * std::log10(params.antenna_height_m)
         + 21.0 * std::log10(params.carrier_freq_mhz)
         + 80.0;
}

double spectral_efficiency(double distance_km, const ChannelParams& params) {
    const double loss_db = path_loss_db(distance_km, params);
    const double snr = params.tx_power_w * std::pow(10.0, -loss_db / 10.0) / params.noise_w;
    return std::log2(1.0 + snr);
}

double link_rate_bps(double distance_km, double bandwidth_hz, const ChannelParams& params) {
    if (bandwidth_hz < 0.0) throw std::domain_error("link_rate_bps: bandwidth must be >= 0");
    return bandwidth_hz * spectral_efficiency(distance_km, params);
}

double LinkAllocation::share_of(int64_t task_id) const {
    for (const auto& [id, hz] : shares)
        if (id == task_id) return hz;
    return 0.0;
}

double LinkAllocation::total() const {
    double sum = 0.0;
    for (const auto& [id, hz] : shares) sum += hz;
    return sum;
}

LinkAllocation allocate_bandwidth(const std::vector<std::pair<int64_t, double>>& active_task_bits,
                                  double total_bandwidth_hz) {
    LinkAllocation alloc;
    if (active_task_bits.empty()) return alloc;
    double total_bits = 0.0;
    for (const auto& [id, bits] : active_task_bits) {
        if (!(bits > 0.0)) throw std::invalid_argument("allocate_bandwidth: task size must be > 0");
        total_bits += bits;
    }
    alloc.shares.reserve(active_task_bits.size());
    for (const auto& [id, bits] : active_task_bits)
        alloc.shares.emplace_back(id, total_bandwidth_hz * bits / total_bits);
    return alloc;
}

}  // namespace vecmec::radio
