#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tddsim/common.hpp"
#include "tddsim/scheduler.hpp"

using namespace tddsim;

namespace {

// Brute-force re-derivation of the PF assignment: for every PRB in order,
// scan all candidates and pick the best metric by hand.
std::vector<int> pf_oracle(const std::vector<SchedCandidate>& cands,
                           const std::vector<std::vector<double>>& rate,
                           const std::vector<double>& avg, int n_prbs) {
    std::vector<long> left;
    for (const auto& c : cands) left.push_back(c.demand_bits);
    std::vector<int> owner(n_prbs, -1);
    for (int prb = 0; prb < n_prbs; ++prb) {
        int win = -1;
        for (size_t i = 0; i < cands.size(); ++i) {
            if (left[i] <= 0) continue;
            if (win < 0) {
                win = static_cast<int>(i);
                continue;
            }
            const double mi = rate[i][prb] / avg[i];
            const double mw = rate[win][prb] / avg[win];
            if (mi > mw || (mi == mw && cands[i].ue < cands[win].ue))
                win = static_cast<int>(i);
        }
        if (win >= 0) {
            owner[prb] = win;
            left[win] -= cands[win].prb_bits;
        }
    }
    return owner;
}

SchedCandidate cand(int ue, long demand, long prb_bits, int cqi) {
    return {ue, demand, 0, prb_bits, cqi};
}

}  // namespace

TEST_CASE("PF basics: lone user, dominant user, demand cutoff") {
    // One backlogged user takes every PRB its demand covers.
    std::vector<SchedCandidate> one = {cand(3, 100, 21, 5)};
    auto owner = pf_allocate_flat(one, {1.0}, 10);
    for (int prb = 0; prb < 5; ++prb) CHECK(owner[prb] == 0);  // ceil(100/21) PRBs
    for (int prb = 5; prb < 10; ++prb) CHECK(owner[prb] == -1);

    // Equal averages, strictly higher rate on every PRB: A wins everything.
    std::vector<SchedCandidate> two = {cand(0, 10000, 84, 10), cand(1, 10000, 42, 10)};
    owner = pf_allocate_flat(two, {1.0, 1.0}, 24);
    for (int prb = 0; prb < 24; ++prb) CHECK(owner[prb] == 0);

    // Once the leader's demand runs out the other user takes over.
    std::vector<SchedCandidate> drain = {cand(0, 84, 84, 10), cand(1, 10000, 42, 10)};
    owner = pf_allocate_flat(drain, {1.0, 1.0}, 4);
    CHECK(owner[0] == 0);
    for (int prb = 1; prb < 4; ++prb) CHECK(owner[prb] == 1);

    // Ties go to the lower UE id.
    std::vector<SchedCandidate> tie = {cand(7, 500, 42, 10), cand(2, 500, 42, 10)};
    owner = pf_allocate_flat(tie, {1.0, 1.0}, 1);
    CHECK(tie[owner[0]].ue == 2);

    CHECK(pf_allocate_flat({}, {}, 8) == std::vector<int>(8, -1));
}

TEST_CASE("PF matches brute force on randomized per-PRB rates") {
    Rng rng(90210);
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_below(8));
        const int prbs = 1 + static_cast<int>(rng.next_below(24));
        std::vector<SchedCandidate> cands;
        std::vector<std::vector<double>> rate;
        std::vector<double> avg;
        for (int i = 0; i < n; ++i) {
            cands.push_back(cand(i, static_cast<long>(rng.next_below(3000)),
                                 21 + static_cast<long>(rng.next_below(400)), 0));
            avg.push_back(1.0 + 500.0 * rng.next_uniform());
            std::vector<double> row;
            for (int p = 0; p < prbs; ++p) row.push_back(21.0 + 400.0 * rng.next_uniform());
            // Duplicate some entries so tie-breaking gets exercised.
            if (prbs > 2 && i > 0) row[1] = rate.empty() ? row[1] : rate[0][1];
            rate.push_back(row);
        }
        CHECK(pf_allocate(cands, rate, avg, prbs) == pf_oracle(cands, rate, avg, prbs));
    }
}

TEST_CASE("PF winners are invariant under common rate scaling") {
    Rng rng(1999);
    std::vector<SchedCandidate> cands;
    std::vector<std::vector<double>> rate;
    std::vector<double> avg;
    for (int i = 0; i < 6; ++i) {
        cands.push_back(cand(i, 2000, 84, 0));
        avg.push_back(1.0 + 100.0 * rng.next_uniform());
        std::vector<double> row;
        for (int p = 0; p < 24; ++p) row.push_back(rng.next_uniform() * 300.0);
        rate.push_back(row);
    }
    const auto base = pf_allocate(cands, rate, avg, 24);
    for (const double scale : {1e-6, 0.5, 3.0, 1e9}) {
        auto scaled = rate;
        for (auto& row : scaled)
            for (auto& r : row) r *= scale;
        CHECK(pf_allocate(cands, scaled, avg, 24) == base);
    }
}

TEST_CASE("static sub-frame admission is the ascending-CQI prefix") {
    // Capacity for one full demand: the worst channel goes first.
    std::vector<SchedCandidate> cands = {cand(0, 2016, 84, 12), cand(1, 2016, 84, 3),
                                         cand(2, 2016, 84, 7)};
    auto admitted = sss_admit(cands, 24);
    REQUIRE(admitted.size() == 1);
    CHECK(cands[admitted[0]].cqi_db == 3);

    // Budget for two: 3 then 7.
    admitted = sss_admit(cands, 48);
    REQUIRE(admitted.size() == 2);
    CHECK(cands[admitted[0]].cqi_db == 3);
    CHECK(cands[admitted[1]].cqi_db == 7);

    // Partial tail admission still enters the list.
    admitted = sss_admit(cands, 30);
    REQUIRE(admitted.size() == 2);
    CHECK(cands[admitted[1]].cqi_db == 7);

    // A single backlogged user is admitted regardless of its CQI.
    std::vector<SchedCandidate> lone = {cand(4, 100, 84, 30)};
    admitted = sss_admit(lone, 24);
    REQUIRE(admitted.size() == 1);
    CHECK(admitted[0] == 0);

    // Idle users never occupy a slot; CQI ties resolve to the lower UE id.
    std::vector<SchedCandidate> mixed = {cand(0, 0, 84, 1), cand(5, 10, 84, 4),
                                         cand(3, 10, 84, 4)};
    admitted = sss_admit(mixed, 24);
    REQUIRE(admitted.size() == 2);
    CHECK(mixed[admitted[0]].ue == 3);
    CHECK(mixed[admitted[1]].ue == 5);

    // Property: no admitted user has a strictly higher CQI than any excluded
    // backlogged user.
    Rng rng(3333);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<SchedCandidate> cs;
        const int n = 1 + static_cast<int>(rng.next_below(10));
        for (int i = 0; i < n; ++i)
            cs.push_back(cand(i, static_cast<long>(rng.next_below(4000)),
                              21 + static_cast<long>(rng.next_below(100)),
                              static_cast<int>(rng.next_below(25))));
        const auto adm = sss_admit(cs, 1 + static_cast<int>(rng.next_below(24)));
        // Ascending CQI within the admitted list.
        for (size_t i = 1; i < adm.size(); ++i)
            CHECK(cs[adm[i - 1]].cqi_db <= cs[adm[i]].cqi_db);
        for (size_t i = 0; i < cs.size(); ++i) {
            if (std::find(adm.begin(), adm.end(), static_cast<int>(i)) != adm.end())
                continue;
            if (cs[i].demand_bits <= 0) continue;
            for (int a : adm) CHECK(cs[a].cqi_db <= cs[i].cqi_db);
        }
    }
}

TEST_CASE("smoothed PF rate tracks deliveries and never sinks below its floor") {
    PfState pf(2);
    CHECK(pf.avg(0) == 1.0);
    pf.update(0, 1000.0);
    CHECK(pf.avg(0) == doctest::Approx(0.99 * 1.0 + 0.01 * 1000.0));
    const double after_one = pf.avg(0);
    pf.update(0, 0.0);
    CHECK(pf.avg(0) == doctest::Approx(0.99 * after_one));
    for (int i = 0; i < 3000; ++i) pf.update(0, 0.0);
    CHECK(pf.avg(0) == 1.0);  // floored, not vanishing
    CHECK(pf.avg(1) == 1.0);  // untouched user keeps its initial value

    CHECK_THROWS_AS(PfState(4, 0.0), ConfigError);
    CHECK_THROWS_AS(PfState(4, 0.01, -1.0), ConfigError);
}

TEST_CASE("HARQ lifecycle: ack, nack chain, transmission cap") {
    const HarqParams hp;
    HarqProcess p;
    CHECK(p.state == HarqProcess::State::Idle);

    p.start(3, 504, 3, {{7, 504, true}});
    CHECK(p.state == HarqProcess::State::WaitingFeedback);
    CHECK(p.transmissions == 1);
    REQUIRE(p.carried.size() == 1);

    // First-shot ack delivers.
    CHECK(harq_step(p, true, 10, hp) == HarqAction::Deliver);
    p.reset();
    CHECK(p.state == HarqProcess::State::Idle);

    // Nack chain: retransmission no earlier than rtt later, same TB shape.
    p.start(3, 504, 3, {{8, 504, true}});
    CHECK(harq_step(p, false, 10, hp) == HarqAction::Retx);
    CHECK(p.state == HarqProcess::State::PendingRetx);
    CHECK(p.retx_tick == 14);
    CHECK_THROWS_AS(p.retransmit(12), SimulationError);  // too early
    p.retransmit(14);
    CHECK(p.transmissions == 2);
    CHECK(p.tb_size == 504);
    CHECK(p.n_prbs == 3);

    // Wrong-state feedback is rejected.
    HarqProcess idle;
    CHECK_THROWS_AS(harq_step(idle, true, 0, hp), SimulationError);

    // Four straight failures exhaust the process.
    HarqProcess q;
    q.start(0, 21, 1, {{9, 21, false}});
    for (int tx = 1; tx < hp.max_tx; ++tx) {
        CHECK(harq_step(q, false, tx * 10, hp) == HarqAction::Retx);
        q.retransmit(q.retx_tick);
    }
    CHECK(q.transmissions == hp.max_tx);
    CHECK(harq_step(q, false, 100, hp) == HarqAction::Fail);

    // Double-start is a logic error.
    CHECK_THROWS_AS(q.start(0, 21, 1, {}), SimulationError);
}

TEST_CASE("Chase combining is the exact linear sum") {
    // Two transmissions at 0 dB combine to 3.0103 dB.
    const double eff = chase_effective({1.0, 1.0});
    CHECK(eff == 2.0);
    CHECK(lin_to_db(eff) == doctest::Approx(3.0102999566).epsilon(1e-6));

    Rng rng(424242);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> parts;
        double sum = 0.0;
        const int n = 1 + static_cast<int>(rng.next_below(4));
        for (int i = 0; i < n; ++i) {
            parts.push_back(db_to_lin(-10.0 + 30.0 * rng.next_uniform()));
            sum += parts.back();
        }
        CHECK(chase_effective(parts) == sum);  // exact, no tolerance
    }

    // Accumulation through the process mirrors the helper.
    HarqProcess p;
    p.start(2, 84, 1, {});
    p.add_transmission_sinr(1.0);
    p.add_transmission_sinr(1.0);
    CHECK(p.acc_sinr == 2.0);
}
