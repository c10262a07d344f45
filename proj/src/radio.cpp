#include "tddsim/radio.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace tddsim {

// ---- link-to-system mapping -------------------------------------------------

namespace {

// QPSK 1/8 up to 64QAM 5/6. Thresholds are the post-detection SINRs at 10%
// block error for one mini-slot transport block.
const McsEntry kMcsTable[kNumMcs] = {
    {"QPSK-1/8", 0.25, -6.0},
    {"QPSK-1/4", 0.50, -3.0},
    {"QPSK-1/2", 1.00, 0.0},
    {"16QAM-1/2", 2.00, 6.0},
    {"16QAM-3/4", 3.00, 10.0},
    {"64QAM-2/3", 4.00, 14.0},
    {"64QAM-3/4", 4.50, 17.0},
    {"64QAM-5/6", 5.00, 19.0},
};

}  // namespace

const McsEntry& mcs_entry(int mcs) {
    if (mcs < 0 || mcs >= kNumMcs)
        throw SimulationError("MCS index " + std::to_string(mcs) + " out of table");
    return kMcsTable[mcs];
}

double bler(int mcs, double post_sinr_db) {
    const McsEntry& e = mcs_entry(mcs);
    // Logistic in dB anchored at BLER(threshold) = 0.1; the tail falls one
    // decade per dB: x0 = threshold - log10(9).
    const double x0 = e.threshold_db - 0.95424250943932487;
    return 1.0 / (1.0 + std::pow(10.0, post_sinr_db - x0));
}

int select_mcs(double cqi_db, double backoff_db) {
    const double budget = cqi_db - backoff_db;
    int best = 0;
    for (int m = 0; m < kNumMcs; ++m)
        if (kMcsTable[m].threshold_db <= budget) best = m;
    return best;
}

long tb_bits(int mcs, int n_prbs) {
    const McsEntry& e = mcs_entry(mcs);
    return static_cast<long>(n_prbs) *
           static_cast<long>(e.efficiency * kSymbolsPerPrb);
}

TbOutcome tb_success(double post_sinr_db, int mcs, long tb_size_bits, double u01) {
    const double p_err = bler(mcs, post_sinr_db);
    const bool ok = u01 >= p_err;
    return {ok, ok ? tb_size_bits : 0, p_err};
}

// ---- channels -----------------------------------------------------------------

CMat draw_link_matrix(uint64_t seed, uint64_t frame, LinkKind kind, int a, int b,
                      int rows, int cols) {
    Rng rng(mix_key(seed, 0x4348414eULL /* stream tag */, frame,
                    static_cast<uint64_t>(kind), static_cast<uint64_t>(a),
                    static_cast<uint64_t>(b)));
    CMat m(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) m(r, c) = rng.next_cnormal();
    return m;
}

ChannelSet draw_channels(const Topology& topo, uint64_t seed, uint64_t frame) {
    ChannelSet ch;
    ch.n_cells = topo.n_cells;
    ch.n_ues = topo.n_ues;
    ch.h_dl.resize(static_cast<size_t>(topo.n_ues) * topo.n_cells);
    ch.h_ul.resize(static_cast<size_t>(topo.n_ues) * topo.n_cells);
    ch.g_ue.resize(static_cast<size_t>(topo.n_ues) * topo.n_ues);
    ch.q_bs.resize(static_cast<size_t>(topo.n_cells) * topo.n_cells);
    for (int k = 0; k < topo.n_ues; ++k)
        for (int c = 0; c < topo.n_cells; ++c) {
            ch.h_dl[k * topo.n_cells + c] =
                draw_link_matrix(seed, frame, LinkKind::BsToUe, c, k, topo.mr, topo.nt);
            ch.h_ul[c * topo.n_ues + k] =
                draw_link_matrix(seed, frame, LinkKind::UeToBs, k, c, topo.nt, topo.mr);
        }
    for (int k = 0; k < topo.n_ues; ++k)
        for (int j = 0; j < topo.n_ues; ++j)
            ch.g_ue[k * topo.n_ues + j] =
                k == j ? CMat::Zero(topo.mr, topo.mr)
                       : draw_link_matrix(seed, frame, LinkKind::UeToUe, j, k, topo.mr,
                                          topo.mr);
    for (int c = 0; c < topo.n_cells; ++c)
        for (int i = 0; i < topo.n_cells; ++i)
            ch.q_bs[c * topo.n_cells + i] =
                c == i ? CMat::Zero(topo.nt, topo.nt)
                       : draw_link_matrix(seed, frame, LinkKind::BsToBs, i, c, topo.nt,
                                          topo.nt);
    return ch;
}

// ---- precoding and combining ---------------------------------------------------

CVec matched_precoder(const CMat& h) {
    Eigen::JacobiSVD<CMat> svd(h, Eigen::ComputeThinV);
    CVec v = svd.matrixV().col(0);
    v.normalize();
    return v;
}

Precoder zf_precoder(const CMat& h_serving, const std::vector<CRow>& co_scheduled) {
    Precoder out;
    out.v = matched_precoder(h_serving);
    if (co_scheduled.empty()) return out;

    const int nt = static_cast<int>(h_serving.cols());
    if (static_cast<int>(co_scheduled.size()) + 1 > nt)
        throw SimulationError("zero-forcing over more streams than antennas");

    CMat a(static_cast<int>(co_scheduled.size()), nt);
    for (size_t i = 0; i < co_scheduled.size(); ++i) a.row(static_cast<int>(i)) = co_scheduled[i];

    // Orthonormal basis of the co-scheduled row space; project the matched
    // direction onto its complement.
    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = sv.size() ? sv(0) * 1e-12 : 0.0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    CVec v = out.v;
    for (int i = 0; i < rank; ++i) {
        const CVec basis = svd.matrixV().col(i);
        v -= basis * (basis.dot(v));
    }
    if (v.norm() < 1e-9) {
        // Serving direction lies inside the interference row space.
        out.mf_fallback = true;
        return out;
    }
    v.normalize();
    out.v = v;
    return out;
}

namespace {

void check_covariance(const CMat& r) {
    if (!r.allFinite()) throw SimulationError("IRC covariance has non-finite entries");
    if ((r - r.adjoint()).norm() > 1e-9 * (1.0 + r.norm()))
        throw SimulationError("IRC covariance is not Hermitian");
}

}  // namespace

double lmmse_irc_combine(const CVec& h, const CMat& r) {
    check_covariance(r);
    if (!h.allFinite()) throw SimulationError("IRC signal vector has non-finite entries");
    Eigen::LLT<CMat> llt(r);
    if (llt.info() != Eigen::Success)
        throw SimulationError("IRC covariance is not positive definite");
    const CVec x = llt.solve(h);
    const double post = h.dot(x).real();
    if (!std::isfinite(post)) throw SimulationError("IRC post-SINR is non-finite");
    return post;
}

IrcDetection irc_detect(const CVec& h, const CMat& r_est, const CMat& r_true,
                        double noise_mw) {
    check_covariance(r_est);
    Eigen::LLT<CMat> llt(r_est);
    if (llt.info() != Eigen::Success)
        throw SimulationError("IRC estimated covariance is not positive definite");
    CVec a = llt.solve(h);
    const double signal = std::norm(a.dot(h));
    const double denom = (a.adjoint() * r_true * a).real().value();
    IrcDetection det;
    det.post_sinr = denom > 0.0 ? signal / denom : 0.0;
    const double a2 = a.squaredNorm();
    det.interference_mw =
        a2 > 0.0 ? std::max(0.0, ((a.adjoint() * r_true * a).real().value() -
                                  noise_mw * a2) /
                                     a2)
                 : 0.0;
    if (!std::isfinite(det.post_sinr))
        throw SimulationError("IRC post-SINR is non-finite");
    return det;
}

// ---- straight line-budget SINRs -------------------------------------------------

SinrReport sinr_dl(int k, const std::vector<int>& active_dl,
                   const std::vector<int>& active_ul, const Topology& topo,
                   const ChannelSet& ch, const TxState& tx, double noise_mw) {
    SinrReport rep;
    rep.downlink = true;
    rep.noise_mw = noise_mw;
    const int ck = topo.serving[k];
    rep.useful_mw = tx.dl_power_mw[k] * topo.g_bs_ue(k, ck) *
                    (ch.dl(k, ck) * tx.dl_precoder[k]).squaredNorm();
    for (int i : active_dl) {
        if (i == k) continue;
        const int ci = topo.serving[i];
        rep.same_link_mw += tx.dl_power_mw[i] * topo.g_bs_ue(k, ci) *
                            (ch.dl(k, ci) * tx.dl_precoder[i]).squaredNorm();
    }
    for (int j : active_ul)
        rep.cross_link_mw += tx.ul_power_mw[j] * topo.g_ue_ue(k, j) *
                             (ch.ue(k, j) * tx.ul_precoder[j]).squaredNorm();
    rep.gamma = rep.useful_mw / (rep.noise_mw + rep.same_link_mw + rep.cross_link_mw);
    return rep;
}

SinrReport sinr_ul(int k, const std::vector<int>& active_ul,
                   const std::vector<int>& active_dl, const Topology& topo,
                   const ChannelSet& ch, const TxState& tx, double noise_mw) {
    SinrReport rep;
    rep.downlink = false;
    rep.noise_mw = noise_mw;
    const int ck = topo.serving[k];
    rep.useful_mw = tx.ul_power_mw[k] * topo.g_bs_ue(k, ck) *
                    (ch.ul(ck, k) * tx.ul_precoder[k]).squaredNorm();
    for (int j : active_ul) {
        if (j == k) continue;
        rep.same_link_mw += tx.ul_power_mw[j] * topo.g_bs_ue(j, ck) *
                            (ch.ul(ck, j) * tx.ul_precoder[j]).squaredNorm();
    }
    for (int i : active_dl) {
        const int ci = topo.serving[i];
        rep.cross_link_mw += tx.dl_power_mw[i] * topo.g_bs_bs(ck, ci) *
                             (ch.bs(ck, ci) * tx.dl_precoder[i]).squaredNorm();
    }
    rep.gamma = rep.useful_mw / (rep.noise_mw + rep.same_link_mw + rep.cross_link_mw);
    return rep;
}

double ul_power(double pathloss_db, const RadioParams& p) {
    return std::min(p.ue_pmax_dbm, p.p0_dbm + p.alpha * pathloss_db);
}

}  // namespace tddsim
