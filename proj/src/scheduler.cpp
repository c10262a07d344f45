#include "tddsim/scheduler.hpp"

#include <algorithm>
#include <numeric>

namespace tddsim {

std::vector<int> pf_allocate(const std::vector<SchedCandidate>& cands,
                             const std::vector<std::vector<double>>& inst_rate,
                             const std::vector<double>& avg_rate, int n_prbs) {
    if (inst_rate.size() != cands.size() || avg_rate.size() != cands.size())
        throw SimulationError("PF input arrays disagree on the candidate count");
    for (const auto& row : inst_rate)
        if (static_cast<int>(row.size()) != n_prbs)
            throw SimulationError("PF rate row does not cover every PRB");
    for (const auto& c : cands)
        if (c.prb_bits <= 0) throw SimulationError("candidate carries no bits per PRB");

    std::vector<long> demand(cands.size());
    for (size_t i = 0; i < cands.size(); ++i) demand[i] = cands[i].demand_bits;

    std::vector<int> owner(static_cast<size_t>(n_prbs), -1);
    for (int prb = 0; prb < n_prbs; ++prb) {
        int best = -1;
        double best_metric = 0.0;
        for (size_t i = 0; i < cands.size(); ++i) {
            if (demand[i] <= 0) continue;
            const double metric = inst_rate[i][prb] / avg_rate[i];
            // Strict improvement, or an equal metric from a lower UE id.
            if (best < 0 || metric > best_metric ||
                (metric == best_metric && cands[i].ue < cands[best].ue)) {
                best = static_cast<int>(i);
                best_metric = metric;
            }
        }
        if (best < 0) break;  // nobody has demand left; the rest stays idle
        owner[prb] = best;
        demand[best] -= cands[best].prb_bits;
    }
    return owner;
}

std::vector<int> pf_allocate_flat(const std::vector<SchedCandidate>& cands,
                                  const std::vector<double>& avg_rate, int n_prbs) {
    std::vector<std::vector<double>> rate(cands.size());
    for (size_t i = 0; i < cands.size(); ++i)
        rate[i].assign(static_cast<size_t>(n_prbs),
                       static_cast<double>(cands[i].prb_bits));
    return pf_allocate(cands, rate, avg_rate, n_prbs);
}

std::vector<int> sss_admit(const std::vector<SchedCandidate>& cands, int n_prbs) {
    std::vector<int> order(cands.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (cands[a].cqi_db != cands[b].cqi_db) return cands[a].cqi_db < cands[b].cqi_db;
        return cands[a].ue < cands[b].ue;
    });

    std::vector<int> admitted;
    long budget = n_prbs;
    for (int i : order) {
        if (budget <= 0) break;
        if (cands[i].demand_bits <= 0) continue;
        if (cands[i].prb_bits <= 0) throw SimulationError("candidate carries no bits per PRB");
        admitted.push_back(i);
        budget -= (cands[i].demand_bits + cands[i].prb_bits - 1) / cands[i].prb_bits;
    }
    return admitted;
}

HarqAction harq_step(HarqProcess& p, bool ack, long now_tick, const HarqParams& hp) {
    if (p.state != HarqProcess::State::WaitingFeedback)
        throw SimulationError("HARQ feedback for a process not awaiting it");
    if (ack) return HarqAction::Deliver;
    if (p.transmissions >= hp.max_tx) return HarqAction::Fail;
    p.state = HarqProcess::State::PendingRetx;
    p.retx_tick = now_tick + hp.rtt_slots;
    return HarqAction::Retx;
}

double chase_effective(const std::vector<double>& post_sinr_lin) {
    double acc = 0.0;
    for (double s : post_sinr_lin) acc += s;
    return acc;
}

}  // namespace tddsim
