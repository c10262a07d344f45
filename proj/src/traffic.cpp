#include "tddsim/traffic.hpp"

#include <cmath>
#include <limits>

namespace tddsim {

std::vector<double> generate_arrivals(double lambda_per_s, double horizon_ms, Rng& rng) {
    if (lambda_per_s <= 0.0) throw ConfigError("arrival rate must be positive");
    const double mean_ms = 1000.0 / lambda_per_s;
    std::vector<double> out;
    double t = mean_ms * -std::log(rng.next_uniform());
    while (t < horizon_ms) {
        out.push_back(t);
        t += mean_ms * -std::log(rng.next_uniform());
    }
    return out;
}

double hold(long buffer_bits, const RadioFrameConfig& rfc, SlotDir dir,
            double est_rate_bits_per_slot, double tti_ms) {
    if (buffer_bits <= 0) return 0.0;
    if (est_rate_bits_per_slot <= 0.0)
        throw SimulationError("head-of-line delay needs a positive rate estimate");
    const long slots_needed = static_cast<long>(
        std::ceil(static_cast<double>(buffer_bits) / est_rate_bits_per_slot));
    const int f = rfc.frame_len();
    long matching_in_frame = 0;
    for (int i = 0; i < f; ++i)
        if (rfc.slots[i] == dir) ++matching_in_frame;
    if (matching_in_frame == 0) return std::numeric_limits<double>::infinity();

    // Whole frames first, then walk the remainder.
    const long full_frames = (slots_needed - 1) / matching_in_frame;
    long remaining = slots_needed - full_frames * matching_in_frame;
    for (int i = 0; i < f; ++i) {
        if (rfc.slots[i] == dir && --remaining == 0)
            return (full_frames * f + i + 1) * tti_ms;
    }
    throw SimulationError("head-of-line walk failed");  // unreachable
}

double offered_load(int k_users, int packet_bits, double lambda_per_s) {
    return static_cast<double>(k_users) * static_cast<double>(packet_bits) *
           lambda_per_s / 1e6;
}

}  // namespace tddsim
