#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tddsim/common.hpp"

namespace tddsim {

enum class Scheme { Hfcs, Nc, Scc, Cfc, Static };

Scheme parse_scheme(const std::string& name);  // throws ConfigError
const char* scheme_name(Scheme s);

/**
 * Every configurable parameter of a run, grouped by the module it feeds.
 * Parsed from a sectioned key = value text file; unknown or repeated keys are
 * rejected by name so a manifest always describes exactly what ran.
 */
struct Scenario {
    // [deployment]
    int cells = 7;
    double isd_m = 500.0;
    int ues_dl_per_cell = 5;
    int ues_ul_per_cell = 5;
    bool wraparound = false;
    double min_dist_m = 10.0;

    // [radio]
    int bs_antennas = 8;
    int ue_antennas = 2;
    int prbs = 24;
    double scs_khz = 30.0;
    double bs_power_dbm = 43.0;
    double ue_pmax_dbm = 23.0;
    double p0_dbm = -103.0;
    double alpha = 1.0;
    double nf_ue_db = 9.0;
    double nf_bs_db = 5.0;
    double shadowing_sigma_db = 8.0;
    double cqi_backoff_db = 4.0;

    // [traffic]
    int packet_bits = 400;
    double lambda_dl_per_s = 392.0;
    double lambda_ul_per_s = 785.0;

    // [codebook]
    int frame_slots = 20;
    int sss_dl = 4;
    int sss_ul = 4;
    int shifts_per_group = 8;
    int codebook_target = 55;
    bool guard_slots = false;
    std::vector<std::pair<int, int>> dss_ratios = {{2, 10}, {3, 9}, {4, 8}, {5, 7},
                                                   {6, 6},  {7, 5}, {8, 4}};

    // [coordination]
    double rho_dbm = -90.0;
    double cli_lo_dbm = -100.0;
    double cli_hi_dbm = -60.0;
    double hold_lo_ms = 0.0;
    double hold_hi_ms = 62.4;
    double xn_delay_ms = 0.0;
    double cli_aging_db = 1.0;  // per-frame decay of held CLI estimates when unobserved
    int scc_omega = 3;

    // [scheduler]
    double pf_smoothing = 0.01;
    int harq_rtt_slots = 4;
    int harq_max_tx = 4;
    int harq_procs = 8;
    double est_rate_smoothing = 0.05;

    // [run]
    double tti_ms = 0.5;
    long ticks = 200000;
    int warmup_frames = 0;  // 0 = automatic: max(1, frames/100)
    Scheme scheme = Scheme::Hfcs;
    uint64_t seed = 1;
    std::string static_pattern = "DDDDDDGUUUUUUUUUUUUG";
    double epsilon_ms = 1.0;  // latency budget used for violation counting

    // Warmup actually applied, in frames.
    int resolved_warmup_frames() const;
    bool operator==(const Scenario&) const = default;
};

// Strict sectioned-text parser. Starts from defaults; every assignment must
// name a known [section] key, and no key may repeat.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Canonical text form; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);

// Cross-field consistency; throws ConfigError naming the offending field.
void validate_scenario(const Scenario& s);

}  // namespace tddsim
