#pragma once

#include <vector>

#include "tddsim/common.hpp"
#include "tddsim/traffic.hpp"

namespace tddsim {

/**
 * Exponentially smoothed delivered rate per user: the proportional-fair
 * denominator. Updated once per TTI for every user with the bits actually
 * delivered that TTI (zero when idle or failed); floored so the PF metric
 * stays finite for long-starved users.
 */
class PfState {
public:
    explicit PfState(int n_ues, double smoothing = 0.01, double floor_bits = 1.0)
        : avg_(static_cast<size_t>(n_ues), floor_bits), a_(smoothing), floor_(floor_bits) {
        if (n_ues < 0 || smoothing <= 0.0 || smoothing > 1.0 || floor_bits <= 0.0)
            throw ConfigError("bad proportional-fair smoothing parameters");
    }
    double avg(int ue) const { return avg_[ue]; }
    void update(int ue, double delivered_bits) {
        avg_[ue] = std::max(floor_, (1.0 - a_) * avg_[ue] + a_ * delivered_bits);
    }
    int size() const { return static_cast<int>(avg_.size()); }

private:
    std::vector<double> avg_;
    double a_;
    double floor_;
};

// One user competing for this TTI's grant.
struct SchedCandidate {
    int ue;
    long demand_bits;  // queued backlog
    int mcs;
    long prb_bits;     // bits one PRB carries at this MCS
    int cqi_db;
};

/**
 * Per-PRB proportional-fair assignment. Each PRB goes to the candidate with
 * the highest inst_rate/avg_rate among those with demand left; ties resolve
 * to the lower UE id. A won PRB decrements the winner's demand by prb_bits.
 * Returns one candidate index per PRB, -1 where no demand remains.
 */
std::vector<int> pf_allocate(const std::vector<SchedCandidate>& cands,
                             const std::vector<std::vector<double>>& inst_rate,
                             const std::vector<double>& avg_rate, int n_prbs);

// Flat-rate convenience: the PF numerator is the candidate's prb_bits.
std::vector<int> pf_allocate_flat(const std::vector<SchedCandidate>& cands,
                                  const std::vector<double>& avg_rate, int n_prbs);

/**
 * Static-sub-frame admission: candidates sorted by ascending channel quality
 * (worst first, ties to the lower UE id) and admitted until the PRB budget is
 * spent; the last admission may be partial. Returns indices into cands in
 * admission order. Frequency-domain assignment among the admitted set stays
 * proportional-fair.
 */
std::vector<int> sss_admit(const std::vector<SchedCandidate>& cands, int n_prbs);

// ---- HARQ ---------------------------------------------------------------------

struct HarqParams {
    int rtt_slots = 4;   // decode feedback to earliest retransmission
    int max_tx = 4;
    int procs_per_ue = 8;
};

/**
 * One stop-and-wait HARQ process. A transport block keeps its size, MCS and
 * PRB count across retransmissions; decode attempts run against the Chase
 * accumulator (the exact linear sum of per-transmission post-detection SINRs).
 */
struct HarqProcess {
    enum class State { Idle, WaitingFeedback, PendingRetx };
    State state = State::Idle;
    int mcs = 0;
    long tb_size = 0;
    int n_prbs = 0;
    int transmissions = 0;
    double acc_sinr = 0.0;  // linear
    long retx_tick = 0;     // earliest tick a pending retransmission may go out
    std::vector<TxBuffer::Taken> carried;

    void start(int mcs_, long tb, int prbs, std::vector<TxBuffer::Taken> frags) {
        if (state != State::Idle) throw SimulationError("HARQ start on a busy process");
        state = State::WaitingFeedback;
        mcs = mcs_;
        tb_size = tb;
        n_prbs = prbs;
        transmissions = 1;
        acc_sinr = 0.0;
        carried = std::move(frags);
    }
    void retransmit(long now_tick) {
        if (state != State::PendingRetx || now_tick < retx_tick)
            throw SimulationError("HARQ retransmission before its turn");
        state = State::WaitingFeedback;
        ++transmissions;
    }
    void add_transmission_sinr(double post_lin) { acc_sinr += post_lin; }
    void reset() { *this = HarqProcess{}; }
};

enum class HarqAction {
    Deliver,  // acknowledged: carried bits leave the system
    Retx,     // negative: scheduled again no earlier than now + rtt
    Fail,     // negative at the transmission cap: bits return to the buffer head
};

// Applies one decode outcome to a process awaiting feedback.
HarqAction harq_step(HarqProcess& p, bool ack, long now_tick, const HarqParams& hp);

// Chase combining: the effective decode SINR is the exact linear sum.
double chase_effective(const std::vector<double>& post_sinr_lin);

}  // namespace tddsim
