#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "tddsim/common.hpp"
#include "tddsim/frame.hpp"

namespace tddsim {

/**
 * FIFO transmission buffer of one UE. Bits live either in queued fragments or
 * inside an open HARQ process; both count toward the backlog Z that drives
 * frame selection and head-of-line delay.
 */
class TxBuffer {
public:
    struct Frag {
        long packet_id;
        long remaining;
    };
    struct Taken {
        long packet_id;
        long bits;
        bool finishes_packet;
    };

    void push(long packet_id, long bits) {
        frags_.push_back({packet_id, bits});
        queued_bits_ += bits;
    }

    // FIFO pull of up to n bits into an in-flight transport block.
    std::vector<Taken> take(long n) {
        std::vector<Taken> out;
        while (n > 0 && !frags_.empty()) {
            Frag& f = frags_.front();
            const long bits = f.remaining <= n ? f.remaining : n;
            f.remaining -= bits;
            n -= bits;
            queued_bits_ -= bits;
            in_flight_bits_ += bits;
            out.push_back({f.packet_id, bits, f.remaining == 0});
            if (f.remaining == 0) frags_.pop_front();
        }
        return out;
    }

    // Delivered bits leave the in-flight pool for good.
    void deliver(long bits) { in_flight_bits_ -= bits; }

    // A failed transport block's bits rejoin the head of the queue in their
    // original order.
    void requeue_front(const std::vector<Taken>& taken) {
        for (auto it = taken.rbegin(); it != taken.rend(); ++it) {
            in_flight_bits_ -= it->bits;
            if (!frags_.empty() && frags_.front().packet_id == it->packet_id)
                frags_.front().remaining += it->bits;
            else
                frags_.push_front({it->packet_id, it->bits});
            queued_bits_ += it->bits;
        }
    }

    long queued_bits() const { return queued_bits_; }
    long in_flight_bits() const { return in_flight_bits_; }
    long total_bits() const { return queued_bits_ + in_flight_bits_; }
    bool has_queued() const { return queued_bits_ > 0; }

private:
    std::deque<Frag> frags_;
    long queued_bits_ = 0;
    long in_flight_bits_ = 0;
};

// Poisson arrival process: exponential inter-arrival times with mean
// 1000/lambda ms. Returns ascending times within [0, horizon_ms).
std::vector<double> generate_arrivals(double lambda_per_s, double horizon_ms, Rng& rng);

// Incremental form used by the engine; one stream per UE.
class ArrivalStream {
public:
    ArrivalStream(double lambda_per_s, Rng rng) : rng_(rng) {
        if (lambda_per_s < 0.0) throw ConfigError("negative arrival rate");
        mean_ms_ = lambda_per_s > 0.0 ? 1000.0 / lambda_per_s : -1.0;
        if (mean_ms_ > 0.0) next_ms_ = mean_ms_ * -std::log(rng_.next_uniform());
    }
    // Next arrival time, or a negative value for a silent stream.
    double peek() const { return mean_ms_ > 0.0 ? next_ms_ : -1.0; }
    void pop() { next_ms_ += mean_ms_ * -std::log(rng_.next_uniform()); }

private:
    Rng rng_{0};
    double mean_ms_ = -1.0;
    double next_ms_ = -1.0;
};

/**
 * Head-of-line delay: time to drain `buffer_bits` at est_rate bits per
 * matching slot, walking the RFC cyclically from slot 0. Empty buffer -> 0;
 * an RFC with no matching slot cannot drain -> +inf (callers clamp).
 */
double hold(long buffer_bits, const RadioFrameConfig& rfc, SlotDir dir,
            double est_rate_bits_per_slot, double tti_ms);

// Aggregate offered load in Mbps for K users of f bits at lambda packets/s.
double offered_load(int k_users, int packet_bits, double lambda_per_s);

}  // namespace tddsim
