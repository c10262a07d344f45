#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tddsim/common.hpp"

namespace tddsim {

// Antenna counts are small; fixed-capacity Eigen types keep the hot path off
// the heap.
constexpr int kMaxAnt = 8;
using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                           Eigen::ColMajor, kMaxAnt, kMaxAnt>;
using CVec = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, 1, Eigen::ColMajor,
                           kMaxAnt, 1>;
using CRow = Eigen::Matrix<std::complex<double>, 1, Eigen::Dynamic, Eigen::RowMajor,
                           1, kMaxAnt>;

// PL(dB) = a + b * log10(d_km)
struct PathlossModel {
    double a = 0.0;
    double b = 0.0;
    double loss_db(double d_km) const { return a + b * std::log10(d_km); }
};

struct RadioParams {
    int nt = 8;  // BS antennas
    int mr = 2;  // UE antennas
    int prbs = 24;
    double scs_khz = 30.0;
    double bs_power_dbm = 43.0;  // total, split evenly across all PRBs
    double ue_pmax_dbm = 23.0;
    double p0_dbm = -103.0;      // open-loop UL target per PRB
    double alpha = 1.0;
    double nf_ue_db = 9.0;
    double nf_bs_db = 5.0;
    PathlossModel pl_bs_ue{128.1, 37.6};
    PathlossModel pl_ue_ue{98.0, 40.0};
    PathlossModel pl_bs_bs{100.0, 22.0};
    double shadowing_sigma_db = 8.0;
    double cqi_backoff_db = 1.0;

    // Thermal floor over one PRB (12 subcarriers) plus the receiver's noise figure.
    double noise_prb_dbm(bool at_bs) const {
        return -174.0 + 10.0 * std::log10(12.0 * scs_khz * 1e3) +
               (at_bs ? nf_bs_db : nf_ue_db);
    }
    double bs_power_prb_mw() const {
        return dbm_to_mw(bs_power_dbm) / static_cast<double>(prbs);
    }
};

// ---- link-to-system mapping -------------------------------------------------

struct McsEntry {
    const char* name;
    double efficiency;    // information bits per resource element
    double threshold_db;  // post-detection SINR with 10% block error
};

constexpr int kNumMcs = 8;
const McsEntry& mcs_entry(int mcs);  // throws SimulationError when out of range

// Logistic block-error curve in dB: 10% at the threshold, one decade per dB.
double bler(int mcs, double post_sinr_db);

// Highest-efficiency MCS whose threshold fits under cqi_db - backoff_db;
// falls back to MCS 0 when even that does not fit.
int select_mcs(double cqi_db, double backoff_db);

// 12 subcarriers x 7 OFDM symbols per mini-slot; floored per PRB so capacity
// is exactly additive across PRBs.
constexpr int kSymbolsPerPrb = 84;
long tb_bits(int mcs, int n_prbs);

struct TbOutcome {
    bool ok;
    long delivered_bits;
    double block_error;
};

// Decides one transport block with a pre-drawn uniform in [0,1).
TbOutcome tb_success(double post_sinr_db, int mcs, long tb_size_bits, double u01);

// ---- geometry-independent channel container ---------------------------------

/**
 * Large-scale topology the radio layer works against: serving attachment plus
 * linear power gains for every link class. Built by the deployment code.
 */
struct Topology {
    int n_cells = 0;
    int n_ues = 0;
    int nt = 8;
    int mr = 2;
    std::vector<int> serving;       // per UE
    std::vector<double> gain_bs_ue; // [ue * n_cells + cell]
    std::vector<double> gain_ue_ue; // [victim * n_ues + source]
    std::vector<double> gain_bs_bs; // [victim * n_cells + source]

    double g_bs_ue(int ue, int cell) const { return gain_bs_ue[ue * n_cells + cell]; }
    double g_ue_ue(int victim, int src) const { return gain_ue_ue[victim * n_ues + src]; }
    double g_bs_bs(int victim, int src) const { return gain_bs_bs[victim * n_cells + src]; }
};

enum class LinkKind : uint64_t {
    BsToUe = 1,  // mr x nt
    UeToBs = 2,  // nt x mr
    UeToUe = 3,  // mr x mr
    BsToBs = 4,  // nt x nt
};

// Small-scale fading for one link and one frame, i.i.d. CN(0,1) entries.
// Pure in (seed, frame, kind, a, b), so lazy and eager evaluation coincide.
CMat draw_link_matrix(uint64_t seed, uint64_t frame, LinkKind kind, int a, int b,
                      int rows, int cols);

/**
 * Full small-scale channel set for one frame. Indexing mirrors Topology:
 * h_dl[ue][cell] (mr x nt), h_ul[cell][ue] (nt x mr), g_ue[victim][source],
 * q_bs[victim][source]. UL and DL draws are independent (no reciprocity).
 */
struct ChannelSet {
    int n_cells = 0, n_ues = 0;
    std::vector<CMat> h_dl, h_ul, g_ue, q_bs;
    const CMat& dl(int ue, int cell) const { return h_dl[ue * n_cells + cell]; }
    const CMat& ul(int cell, int ue) const { return h_ul[cell * n_ues + ue]; }
    const CMat& ue(int victim, int src) const { return g_ue[victim * n_ues + src]; }
    const CMat& bs(int victim, int src) const { return q_bs[victim * n_cells + src]; }
};

ChannelSet draw_channels(const Topology& topo, uint64_t seed, uint64_t frame = 0);

// ---- precoding and combining -------------------------------------------------

struct Precoder {
    CVec v;                // unit norm
    bool mf_fallback = false;  // set when the null-space projection degenerated
};

/**
 * Single-stream zero-forcing: matched direction of h_serving projected onto
 * the null space of the co-scheduled rows. Empty co_scheduled degenerates to
 * the matched filter.
 */
Precoder zf_precoder(const CMat& h_serving, const std::vector<CRow>& co_scheduled);

// Principal right singular direction; the matched single-stream transmit choice.
CVec matched_precoder(const CMat& h);

// Post-detection SINR h^H R^-1 h of the LMMSE-IRC combiner. R must be the
// Hermitian positive-definite interference-plus-noise covariance.
double lmmse_irc_combine(const CVec& h, const CMat& r);

struct IrcDetection {
    double post_sinr;          // linear
    double interference_mw;    // combiner-output interference power (noise excluded)
};

// Combiner built from r_est, evaluated against the true covariance r_true.
// r_est == r_true reduces to lmmse_irc_combine.
IrcDetection irc_detect(const CVec& h, const CMat& r_est, const CMat& r_true,
                        double noise_mw);

// ---- straight line-budget SINRs ----------------------------------------------

struct SinrReport {
    double gamma = 0.0;  // linear, pre-detection
    bool downlink = true;
    double useful_mw = 0.0;
    double same_link_mw = 0.0;
    double cross_link_mw = 0.0;
    double noise_mw = 0.0;
};

/**
 * Per-UE transmit state for one frame: unit-norm precoders and per-PRB powers.
 * dl_power_mw is the serving BS's per-PRB share; ul_power_mw the UE's own.
 */
struct TxState {
    std::vector<CVec> dl_precoder;  // nt-dim, for DL-attached UEs
    std::vector<CVec> ul_precoder;  // mr-dim, for UL-attached UEs
    std::vector<double> dl_power_mw;
    std::vector<double> ul_power_mw;
};

SinrReport sinr_dl(int k, const std::vector<int>& active_dl,
                   const std::vector<int>& active_ul, const Topology& topo,
                   const ChannelSet& ch, const TxState& tx, double noise_mw);

SinrReport sinr_ul(int k, const std::vector<int>& active_ul,
                   const std::vector<int>& active_dl, const Topology& topo,
                   const ChannelSet& ch, const TxState& tx, double noise_mw);

// Open-loop fractional power control, per PRB: min(p_max, P0 + alpha * PL).
double ul_power(double pathloss_db, const RadioParams& p);

}  // namespace tddsim
