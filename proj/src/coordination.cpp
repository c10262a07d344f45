#include "tddsim/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

namespace tddsim {

void update_cli_filter(CliFilterState& state, double theta_bs_dbm, double theta_ue_dbm,
                       long z_dl_bits, long z_ul_bits, const CliFilterParams& params) {
    state.theta_bs_dbm = theta_bs_dbm;
    state.theta_ue_dbm = theta_ue_dbm;

    // Backlog-ratio weights; neutral when either direction is idle.
    if (z_dl_bits > 0 && z_ul_bits > 0) {
        state.mu = 1.0;
        state.beta = static_cast<double>(z_dl_bits) / static_cast<double>(z_ul_bits);
    } else {
        state.beta = state.mu = 1.0;
    }

    // Inversion applies only when both measurements sit at or below rho.
    const bool invert =
        theta_bs_dbm <= params.rho_dbm && theta_ue_dbm <= params.rho_dbm;
    state.beta_eff = invert ? 1.0 / state.beta : state.beta;
    state.mu_eff = invert ? 1.0 / state.mu : state.mu;

    const double bs_mw = dbm_to_mw(theta_bs_dbm);
    const double ue_mw = dbm_to_mw(theta_ue_dbm);
    const double weighted = state.beta_eff * bs_mw + state.mu_eff * ue_mw;
    state.xi = params.literal_xi ? weighted / (bs_mw + ue_mw)
                                 : weighted / (state.beta_eff + state.mu_eff);
    // The quantizer score keeps the weights unnormalized: a DL-heavy backlog
    // (large beta) amplifies the score rather than averaging it away, so the
    // cells most likely to be inflicting cross-link interference are also the
    // quickest to accept a tighter misalignment threshold. A normalized mean
    // does the opposite -- it divides the one hot reading by the very weight
    // that marks the cell as an aggressor.
    state.cli_score_dbm = mw_to_dbm(weighted);
}

int ThresholdQuantizer::cli_component(double cli_dbm) const {
    // Clamp before rounding so a measurement of +/-inf (no signal at all, or a
    // saturated receiver) lands on the end bins instead of tripping lround.
    const double x = std::clamp(cli_dbm, cli_lo_dbm, cli_hi_dbm);
    const double bin = (cli_hi_dbm - cli_lo_dbm) / levels;
    const long c = std::lround((cli_hi_dbm - x) / bin);
    return static_cast<int>(std::clamp(c, 1L, static_cast<long>(levels)));
}

int ThresholdQuantizer::hold_component(double hold_ms) const {
    const double x = std::clamp(hold_ms, hold_lo_ms, hold_hi_ms);
    const double bin = (hold_hi_ms - hold_lo_ms) / levels;
    const long c = std::lround((x - hold_lo_ms) / bin);
    return static_cast<int>(std::clamp(c, 1L, static_cast<long>(levels)));
}

int sliding_threshold(double cli_dbm, double hold_ms, const ThresholdQuantizer& q) {
    const int c_cli = q.cli_component(cli_dbm);
    const int c_hold = q.hold_component(hold_ms);
    // Integer mean rounds halves down: mean(1,10) -> 5, matching the tight
    // reading of the fair average.
    return (c_cli + c_hold) / 2;
}

int select_rfc_slave(long z_dl_bits, long z_ul_bits, const Codebook& cb) {
    // All groups share the DSS length, so fraction distances compare exactly
    // as |d_g * Ztot - dss_len * Zdl| in integers.
    const long zt = z_dl_bits + z_ul_bits;
    long best_dist = -1;
    int best_group = -1;
    for (size_t g = 0; g < cb.groups.size(); ++g) {
        if (cb.groups[g].empty()) continue;
        const long d = cb.group_dss_dl(static_cast<int>(g));
        const long dist = zt > 0 ? std::llabs(d * zt - static_cast<long>(cb.dss_len) * z_dl_bits)
                                 : std::llabs(2 * d - cb.dss_len);
        if (best_group < 0 || dist < best_dist) {
            best_dist = dist;
            best_group = static_cast<int>(g);
        }
    }
    if (best_group < 0) throw SimulationError("codebook has no populated group");
    // Shift 0 is always the group's first member (shift-ascending order).
    return cb.groups[best_group].front();
}

namespace {

// Steps (c)/(d): best member of one group under the keep rule. phi <= psi and
// |phi - psi| minimized; scan order is codebook order so ties keep the lowest
// index. Returns -1 when no member qualifies.
int best_in_group(const std::vector<int>& group, int common, int psi,
                  const Codebook& cb) {
    int best = -1;
    int best_gap = 0;
    for (int idx : group) {
        const int phi = slot_misalignment(cb.rfcs[idx], cb.rfcs[common]);
        if (phi > psi) continue;
        const int gap = psi - phi;
        if (best < 0 || gap < best_gap) {
            best = idx;
            best_gap = gap;
        }
    }
    return best;
}

}  // namespace

ArbitrationResult arbitrate_master(const std::vector<XnRequest>& requests,
                                   const Codebook& cb, Rng& rng) {
    if (requests.empty())
        throw SimulationError("arbitration without any slave request");
    for (const auto& r : requests)
        if (r.rfc_index < 0 || r.rfc_index >= cb.size())
            throw SimulationError("slave requested an RFC outside the codebook");

    // (a) modal request; ties to the lowest index, all-distinct drawn uniformly.
    std::map<int, int> counts;
    for (const auto& r : requests) ++counts[r.rfc_index];
    int common = -1, top = 0;
    for (const auto& [idx, n] : counts)
        if (n > top) {
            top = n;
            common = idx;
        }
    if (top <= 1) common = requests[rng.next_below(requests.size())].rfc_index;

    ArbitrationResult out;
    out.common_rfc = common;
    for (const auto& req : requests) {
        XnGrant grant{req.cell, -1};
        const int psi = req.psi;

        // (b) keep the request when it already sits within the threshold.
        if (slot_misalignment(cb.rfcs[req.rfc_index], cb.rfcs[common]) <= psi) {
            grant.granted_rfc_index = req.rfc_index;
            out.grants.push_back(grant);
            continue;
        }

        // (c) slide within the request's own group.
        const int own_group = cb.rfcs[req.rfc_index].group_id;
        grant.granted_rfc_index = best_in_group(cb.groups[own_group], common, psi, cb);

        // (d) other groups by ascending DSS ratio distance, then group id.
        if (grant.granted_rfc_index < 0) {
            const int own_d = cb.rfcs[req.rfc_index].dss_dl;
            std::vector<int> order;
            for (size_t g = 0; g < cb.groups.size(); ++g)
                if (static_cast<int>(g) != own_group && !cb.groups[g].empty())
                    order.push_back(static_cast<int>(g));
            std::stable_sort(order.begin(), order.end(), [&](int ga, int gb) {
                return std::abs(cb.group_dss_dl(ga) - own_d) <
                       std::abs(cb.group_dss_dl(gb) - own_d);
            });
            for (int g : order) {
                grant.granted_rfc_index = best_in_group(cb.groups[g], common, psi, cb);
                if (grant.granted_rfc_index >= 0) break;
            }
        }

        // (e) last resort: misalignment closest to psi over the whole codebook.
        if (grant.granted_rfc_index < 0) {
            int best_gap = 0;
            for (int idx = 0; idx < cb.size(); ++idx) {
                const int gap =
                    std::abs(slot_misalignment(cb.rfcs[idx], cb.rfcs[common]) - psi);
                if (grant.granted_rfc_index < 0 || gap < best_gap) {
                    grant.granted_rfc_index = idx;
                    best_gap = gap;
                }
            }
        }
        out.grants.push_back(grant);
    }
    return out;
}

int psi_field_bits(int levels) {
    int b = 0;
    while ((1 << b) < levels) ++b;
    return b;
}

void account_round(XnOverhead& acc, int n_slaves, int index_bits, int psi_bits) {
    acc.rounds += 1;
    acc.uplink_bits += static_cast<long>(n_slaves) * (index_bits + psi_bits);
    acc.downlink_bits += static_cast<long>(n_slaves) * index_bits;
}

}  // namespace tddsim
