#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tddsim/coordination.hpp"
#include "tddsim/frame.hpp"
#include "tddsim/radio.hpp"
#include "tddsim/scenario.hpp"

namespace tddsim {

// ---- deployment ---------------------------------------------------------------

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/**
 * Placed network: base station spiral, user positions, attachment directions
 * and the large-scale Topology (pathloss + shadowing as linear gains) the
 * radio layer consumes. Users are numbered cell-major, the DL-attached block
 * of each cell before its UL-attached block.
 */
struct Deployment {
    int n_cells = 0;
    int n_ues = 0;
    std::vector<Point> bs;
    std::vector<Point> ue;
    std::vector<uint8_t> dl_attached;  // per UE
    Topology topo;
    long dist_clamps = 0;  // links shorter than the 1 m pathloss validity floor
};

// Hexagonal-lattice spiral, cell 0 at the origin, neighbours isd_m apart.
std::vector<Point> hex_positions(int n_cells, double isd_m);

// The six translation vectors that tile the plane with this cluster. Only
// cluster sizes of the rhombic form i^2 + i*j + j^2 (1, 3, 4, 7, 12, 13, 19,
// ...) tile; anything else throws ConfigError.
std::vector<Point> wraparound_mirrors(int n_cells, double isd_m);

Deployment make_deployment(const Scenario& s, uint64_t seed);

// Frame built from a "DDUG..." pattern string; carries no static sub-frame.
RadioFrameConfig rfc_from_pattern(const std::string& pattern);

// The cyclic-shift codebook a scenario describes.
Codebook codebook_from(const Scenario& s);

// ---- metrics ------------------------------------------------------------------

struct LatencySample {
    long tick;  // delivery tick
    int cell;
    int ue;
    bool dl;
    double ms;
};

struct CellTputSample {
    long tick;
    int cell;
    bool dl;    // the slot's direction
    double mbps;
};

struct IntfSample {
    long tick;
    int cell;
    double dbm;  // mean combiner-output interference across this tick's UL receptions
};

struct UserTput {
    int ue;
    int cell;
    bool dl;
    double mbps;  // delivered bits over the measured interval
};

/**
 * Everything a run reports. Sample vectors are in emission order (time-major),
 * which together with the fixed iteration order of the engine makes every
 * serialization of the sink byte-reproducible.
 */
struct MetricsSink {
    std::string scheme;
    uint64_t seed = 0;
    long measured_ticks = 0;
    std::vector<LatencySample> latency;
    std::vector<CellTputSample> cell_tput;
    std::vector<IntfSample> ul_interference;
    std::vector<UserTput> user_tput;
    XnOverhead overhead;
    long packets_arrived = 0;
    long packets_delivered = 0;
    long latency_violations = 0;   // delivered packets over the epsilon budget
    long harq_failures = 0;        // transport blocks dropped at the retry cap
    long idle_data_slots = 0;      // per-cell data slots that carried nothing
    long sss_retx_grants = 0;      // retransmissions granted inside static slots
    long dist_clamps = 0;
    std::vector<std::string> xn_trace;
    std::vector<double> post_probe;  // fixed-allocation mode only, see RunOptions
};

// Nearest-rank percentile: rank max(1, ceil(p * N)) of the sorted values.
// p in [0, 1]. Empty input yields quiet NaN.
double percentile(std::vector<double> values, double p);

struct RunOptions {
    bool trace_xn = false;
    // Test hook: replaces the scheduler with a fixed even PRB split over all
    // direction-matched users (fixed MCS, no HARQ, no feedback loops) so that
    // two schemes produce the exact same transmission instances and their
    // post-detection SINRs line up one-to-one in post_probe. Used to assert
    // that removing cross-link interference can only help a reception.
    bool fixed_alloc = false;
};

// Runs one scenario to completion (scheme and seed come from the scenario).
MetricsSink run_simulation(const Scenario& s, const RunOptions& opt = {});

}  // namespace tddsim
