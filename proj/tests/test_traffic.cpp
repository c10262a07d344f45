#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "tddsim/common.hpp"
#include "tddsim/frame.hpp"
#include "tddsim/traffic.hpp"

using namespace tddsim;

namespace {

std::vector<SssSlot> default_sss() {
    return {{0, SlotDir::DL}, {1, SlotDir::DL}, {2, SlotDir::DL}, {3, SlotDir::DL},
            {4, SlotDir::UL}, {5, SlotDir::UL}, {6, SlotDir::UL}, {7, SlotDir::UL}};
}

// Oracle: subtract est_rate on every matching slot, cycling from slot 0,
// until the backlog is gone; return elapsed time.
double drain_oracle(long bits, const RadioFrameConfig& rfc, SlotDir dir, double rate,
                    double tti_ms) {
    if (bits <= 0) return 0.0;
    double left = static_cast<double>(bits);
    for (long slot = 0; slot < 100000000L; ++slot) {
        if (rfc.slots[slot % rfc.frame_len()] == dir) {
            left -= rate;
            if (left <= 0.0) return (slot + 1) * tti_ms;
        }
    }
    return std::numeric_limits<double>::infinity();
}

}  // namespace

TEST_CASE("arrival counts and spacing behave like a Poisson process") {
    Rng rng(8086);
    const double lambda = 167.0;
    const double horizon = 1.0e6;  // ms
    const auto times = generate_arrivals(lambda, horizon, rng);

    // Count within 3 standard deviations of the mean.
    const double expect = lambda * horizon / 1000.0;
    const double sd = std::sqrt(expect);
    CHECK(std::abs(static_cast<double>(times.size()) - expect) < 3.0 * sd);

    // Strictly ordered, inside the horizon.
    for (size_t i = 0; i < times.size(); ++i) {
        CHECK(times[i] >= 0.0);
        CHECK(times[i] < horizon);
        if (i) CHECK(times[i] > times[i - 1]);
    }

    // Exponential gaps: coefficient of variation 1.
    double sum = times.front(), sq = times.front() * times.front();
    for (size_t i = 1; i < times.size(); ++i) {
        const double gap = times[i] - times[i - 1];
        sum += gap;
        sq += gap * gap;
    }
    const double n = static_cast<double>(times.size());
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double cv = std::sqrt(var) / mean;
    CHECK(cv > 0.98);
    CHECK(cv < 1.02);
    CHECK(mean == doctest::Approx(1000.0 / lambda).epsilon(0.02));

    CHECK_THROWS_AS(generate_arrivals(0.0, 100.0, rng), ConfigError);
    CHECK_THROWS_AS(generate_arrivals(-1.0, 100.0, rng), ConfigError);
}

TEST_CASE("incremental stream replays the batch generator") {
    const uint64_t key = mix_key(5, 77);
    Rng batch_rng(key);
    const auto batch = generate_arrivals(620.0, 10000.0, batch_rng);

    ArrivalStream stream(620.0, Rng(key));
    for (size_t i = 0; i < batch.size() && i < 1000; ++i) {
        CHECK(stream.peek() == doctest::Approx(batch[i]).epsilon(1e-12));
        stream.pop();
    }

    // Silent stream for zero load; negative rates are rejected.
    ArrivalStream silent(0.0, Rng(key));
    CHECK(silent.peek() < 0.0);
    CHECK_THROWS_AS(ArrivalStream(-2.0, Rng(key)), ConfigError);
}

TEST_CASE("transmission buffer conserves bits through take/deliver/requeue") {
    TxBuffer buf;
    buf.push(1, 400);
    buf.push(2, 400);
    CHECK(buf.queued_bits() == 800);
    CHECK(buf.total_bits() == 800);

    // A 600-bit pull spans both packets.
    auto taken = buf.take(600);
    REQUIRE(taken.size() == 2);
    CHECK(taken[0].packet_id == 1);
    CHECK(taken[0].bits == 400);
    CHECK(taken[0].finishes_packet);
    CHECK(taken[1].packet_id == 2);
    CHECK(taken[1].bits == 200);
    CHECK_FALSE(taken[1].finishes_packet);
    CHECK(buf.queued_bits() == 200);
    CHECK(buf.in_flight_bits() == 600);
    CHECK(buf.total_bits() == 800);

    // Failure: the pulled bits rejoin the head in their original order.
    buf.requeue_front(taken);
    CHECK(buf.queued_bits() == 800);
    CHECK(buf.in_flight_bits() == 0);
    auto again = buf.take(500);
    REQUIRE(again.size() == 2);
    CHECK(again[0].packet_id == 1);
    CHECK(again[0].bits == 400);
    CHECK(again[1].packet_id == 2);
    CHECK(again[1].bits == 100);

    // Delivery retires in-flight bits for good.
    buf.deliver(500);
    CHECK(buf.in_flight_bits() == 0);
    CHECK(buf.total_bits() == 300);

    // Draining more than is queued returns only what exists.
    auto rest = buf.take(10000);
    REQUIRE(rest.size() == 1);
    CHECK(rest[0].bits == 300);
    CHECK(rest[0].finishes_packet);
    CHECK(buf.queued_bits() == 0);
}

TEST_CASE("head-of-line delay walks the frame") {
    const Codebook cb = build_codebook(
        20, default_sss(), {{2, 10}, {3, 9}, {4, 8}, {5, 7}, {6, 6}, {7, 5}, {8, 4}},
        8, 55);
    const auto& balanced = cb.rfcs[cb.groups[4][0]];  // 6:6 DSS, shift 0

    // One 400-bit packet at 800 bits per slot: done in the first DL slot.
    CHECK(hold(400, balanced, SlotDir::DL, 800.0, 0.5) == doctest::Approx(0.5));
    // First UL slot of the frame is slot 4.
    CHECK(hold(400, balanced, SlotDir::UL, 800.0, 0.5) == doctest::Approx(2.5));
    // Empty buffer: no delay.
    CHECK(hold(0, balanced, SlotDir::DL, 800.0, 0.5) == 0.0);

    // A direction the frame never serves cannot drain.
    RadioFrameConfig all_dl;
    all_dl.slots.assign(20, SlotDir::DL);
    all_dl.sss.assign(20, 0);
    CHECK(std::isinf(hold(100, all_dl, SlotDir::UL, 800.0, 0.5)));

    CHECK_THROWS_AS(hold(100, balanced, SlotDir::DL, 0.0, 0.5), SimulationError);

    // Random backlogs against the slot-by-slot oracle, all RFCs, both
    // directions, multi-frame horizons included.
    Rng rng(271);
    for (int trial = 0; trial < 400; ++trial) {
        const auto& rfc = cb.rfcs[rng.next_below(cb.size())];
        const SlotDir dir = rng.next_below(2) ? SlotDir::DL : SlotDir::UL;
        const long bits = 1 + static_cast<long>(rng.next_below(200000));
        const double rate = 21.0 + 2000.0 * rng.next_uniform();
        CHECK(hold(bits, rfc, dir, rate, 0.5) ==
              doctest::Approx(drain_oracle(bits, rfc, dir, rate, 0.5)).epsilon(1e-12));
    }
}

TEST_CASE("offered load arithmetic") {
    CHECK(offered_load(20, 400, 620.0) == doctest::Approx(4.96));
    CHECK(offered_load(10, 400, 620.0) == doctest::Approx(2.48));
    CHECK(offered_load(20, 400, 167.0) == doctest::Approx(1.336));
    CHECK(offered_load(20, 400, 334.0) == doctest::Approx(2.672));
}
