#pragma once

#include <string>
#include <vector>

#include "tddsim/engine.hpp"
#include "tddsim/scenario.hpp"

namespace tddsim {

// Shortest %.6g rendering shared by every CSV writer, so identical runs stay
// byte-identical.
std::string fmt_g6(double v);

/**
 * The percentile readouts one run contributes to a cross-scheme comparison:
 * latency at 50/90/99/99.9, per-user throughput at 10/50/95, post-combiner
 * UL interference at 20/50. NaN where a run produced no samples.
 */
struct RunStats {
    std::string scheme;
    uint64_t seed = 0;
    double lat_dl[4] = {};
    double lat_ul[4] = {};
    double tput_dl[3] = {};
    double tput_ul[3] = {};
    double intf_ul[2] = {};
    long xn_bits = 0;
};

RunStats compute_stats(const MetricsSink& m);

// Long-format sample dump: tick, cell, ue, metric, value, scheme. Aggregate
// rows (per-user throughput) carry tick -1; cell-level rows carry ue -1.
std::string metrics_csv(const MetricsSink& m);

// Percentiles, means, overhead totals and counters of one run.
std::string summary_json(const Scenario& s, const MetricsSink& m);

// Per-(scheme, seed) rows plus one seed-averaged row per scheme.
std::string comparison_csv(const std::vector<RunStats>& rows);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace tddsim
