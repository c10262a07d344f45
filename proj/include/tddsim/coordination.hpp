#pragma once

#include <cstdint>
#include <vector>

#include "tddsim/common.hpp"
#include "tddsim/frame.hpp"

namespace tddsim {

// Measurement floor reported when a cell saw no interference at all.
constexpr double kCliFloorDbm = -120.0;

struct CliFilterParams {
    double rho_dbm = -90.0;   // inversion threshold on both measurements
    bool literal_xi = true;   // normalize the score by (Theta_BS + Theta_UE)
};

/**
 * Buffer-weighted cross-link-interference filter of one cell. beta/mu weight
 * the BS-side and UE-side measurements by the cell's DL:UL backlog ratio and
 * are inverted when both measurements sit at or below rho. xi is the filtered
 * score exactly as configured; cli_score_dbm is the weighted power mean of the
 * two measurements, the dBm-scale quantity the threshold quantizer consumes.
 */
struct CliFilterState {
    double theta_bs_dbm = kCliFloorDbm;
    double theta_ue_dbm = kCliFloorDbm;
    double beta = 1.0;
    double mu = 1.0;
    double beta_eff = 1.0;
    double mu_eff = 1.0;
    double xi = 1.0;
    double cli_score_dbm = kCliFloorDbm;
};

void update_cli_filter(CliFilterState& state, double theta_bs_dbm, double theta_ue_dbm,
                       long z_dl_bits, long z_ul_bits, const CliFilterParams& params);

/**
 * Two-axis quantizer behind the sliding misalignment threshold. Both axes map
 * onto {1..levels} by nearest bin: interference inversely (strong CLI ->
 * tight threshold), head-of-line delay directly (long queue -> loose
 * threshold). Inputs outside a range clamp to its ends.
 */
struct ThresholdQuantizer {
    double cli_lo_dbm = -100.0;
    double cli_hi_dbm = -60.0;
    double hold_lo_ms = 0.0;
    double hold_hi_ms = 62.4;
    int levels = 12;  // DSS length

    int cli_component(double cli_dbm) const;
    int hold_component(double hold_ms) const;
};

// Fair average of the two components, rounding halves down. 1 <= psi <= levels.
int sliding_threshold(double cli_dbm, double hold_ms, const ThresholdQuantizer& q);

// RFC whose DSS DL fraction is nearest Zdl/(Zdl+Zul) (0.5 when both empty);
// ties go to the smaller group id, shift 0 within the group.
int select_rfc_slave(long z_dl_bits, long z_ul_bits, const Codebook& cb);

struct XnRequest {
    int cell;
    int rfc_index;
    int psi;  // slave's sliding threshold; a global Omega for preset schemes
};

struct XnGrant {
    int cell;
    int granted_rfc_index;
};

struct ArbitrationResult {
    int common_rfc = -1;
    std::vector<XnGrant> grants;
};

/**
 * Master arbitration. (a) the common RFC is the modal request (ties to the
 * lowest index; all-distinct picks uniformly with the run's RNG); per slave:
 * (b) keep the request when its misalignment to the common RFC is within psi;
 * (c) otherwise the request's group member with misalignment closest to psi
 * from below; (d) otherwise other groups in ascending ratio distance; (e)
 * otherwise the codebook entry with misalignment closest to psi. Every
 * distance tie resolves to the lowest codebook index.
 */
ArbitrationResult arbitrate_master(const std::vector<XnRequest>& requests,
                                   const Codebook& cb, Rng& rng);

// Signalling cost of one coordination round, in bits.
struct XnOverhead {
    long rounds = 0;
    long uplink_bits = 0;
    long downlink_bits = 0;
    long total() const { return uplink_bits + downlink_bits; }
};

// Field width for values 1..levels.
int psi_field_bits(int levels);

void account_round(XnOverhead& acc, int n_slaves, int index_bits, int psi_bits);

}  // namespace tddsim
