#pragma once

#include <cstdint>
#include <vector>

namespace vecmec::radio {

// 3GPP-style propagation and Shannon-rate parameters. Defaults follow the
// evaluation setup: 1.5 m antennas, 2800 MHz carrier, 1 W transmitters,
// 5e-13 W noise floor, one shared 5 MHz band.
struct ChannelParams {
    double antenna_height_m = 1.5;
    double carrier_freq_mhz = 2800.0;
    double tx_power_w = 1.0;
    double noise_w = 5e-13;
    double bandwidth_hz = 5e6;

    void validate() const;  // throws std::invalid_argument naming the bad field
};

// Path loss in dB at distance d (km):
//   40(1 - 4e-3 H) log10(d) - 18 log10(H) + 21 log10(f) + 80
// Distances below 1 m are clamped to 1 m so coincident nodes keep a finite
// rate. d <= 0 throws std::domain_error.
double path_loss_db(double distance_km, const ChannelParams& params);

// Shannon rate in bit/s over bandwidth_hz: b * log2(1 + P * 10^(-PL/10) / sigma^2).
double link_rate_bps(double distance_km, double bandwidth_hz, const ChannelParams& params);

// log2(1 + SNR(d)); link_rate_bps(d, b) == b * spectral_efficiency(d).
double spectral_efficiency(double distance_km, const ChannelParams& params);

// Per-task bandwidth share for one slot.
struct LinkAllocation {
    std::vector<std::pair<int64_t, double>> shares;  // (task id, Hz), input order

    double share_of(int64_t task_id) const;  // 0 if absent
    double total() const;
};

// Proportional split of the shared band: b_i = B * W_i / sum(W). Every hop of
// task i uses b_i within the slot. Sizes must be positive.
LinkAllocation allocate_bandwidth(const std::vector<std::pair<int64_t, double>>& active_task_bits,
                                  double total_bandwidth_hz);

}  // namespace vecmec::radio
