#include "tddsim/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace tddsim {

namespace {

using ordered_json = nlohmann::ordered_json;

void append_row(std::string& out, long tick, int cell, int ue, const char* metric,
                double value, const std::string& scheme) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%ld,%d,%d,%s,%.6g,%s\n", tick, cell, ue, metric,
                  value, scheme.c_str());
    out += buf;
}

// json null for runs that produced no samples of a metric.
ordered_json num_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

struct SampleVectors {
    std::vector<double> lat_dl, lat_ul, tput_dl, tput_ul, intf;
};

SampleVectors split_samples(const MetricsSink& m) {
    SampleVectors s;
    for (const LatencySample& x : m.latency) (x.dl ? s.lat_dl : s.lat_ul).push_back(x.ms);
    for (const UserTput& x : m.user_tput) (x.dl ? s.tput_dl : s.tput_ul).push_back(x.mbps);
    for (const IntfSample& x : m.ul_interference) s.intf.push_back(x.dbm);
    return s;
}

}  // namespace

std::string fmt_g6(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

RunStats compute_stats(const MetricsSink& m) {
    RunStats r;
    r.scheme = m.scheme;
    r.seed = m.seed;
    r.xn_bits = m.overhead.total();
    const SampleVectors s = split_samples(m);
    const double lat_p[4] = {0.50, 0.90, 0.99, 0.999};
    const double tput_p[3] = {0.10, 0.50, 0.95};
    const double intf_p[2] = {0.20, 0.50};
    for (int i = 0; i < 4; ++i) {
        r.lat_dl[i] = percentile(s.lat_dl, lat_p[i]);
        r.lat_ul[i] = percentile(s.lat_ul, lat_p[i]);
    }
    for (int i = 0; i < 3; ++i) {
        r.tput_dl[i] = percentile(s.tput_dl, tput_p[i]);
        r.tput_ul[i] = percentile(s.tput_ul, tput_p[i]);
    }
    for (int i = 0; i < 2; ++i) r.intf_ul[i] = percentile(s.intf, intf_p[i]);
    return r;
}

std::string metrics_csv(const MetricsSink& m) {
    std::string out = "tick,cell,ue,metric,value,scheme\n";
    out.reserve(64 + 48 * (m.latency.size() + m.cell_tput.size() +
                           m.ul_interference.size() + m.user_tput.size()));
    for (const LatencySample& x : m.latency)
        append_row(out, x.tick, x.cell, x.ue, x.dl ? "dl_latency_ms" : "ul_latency_ms",
                   x.ms, m.scheme);
    for (const CellTputSample& x : m.cell_tput)
        append_row(out, x.tick, x.cell, -1,
                   x.dl ? "dl_cell_tput_mbps" : "ul_cell_tput_mbps", x.mbps, m.scheme);
    for (const IntfSample& x : m.ul_interference)
        append_row(out, x.tick, x.cell, -1, "ul_intf_dbm", x.dbm, m.scheme);
    for (const UserTput& x : m.user_tput)
        append_row(out, -1, x.cell, x.ue,
                   x.dl ? "dl_user_tput_mbps" : "ul_user_tput_mbps", x.mbps, m.scheme);
    return out;
}

std::string summary_json(const Scenario& s, const MetricsSink& m) {
    const SampleVectors v = split_samples(m);
    const RunStats r = compute_stats(m);

    auto latency_block = [](const double p[4], const std::vector<double>& samples) {
        return ordered_json{{"p50", num_or_null(p[0])},
                            {"p90", num_or_null(p[1])},
                            {"p99", num_or_null(p[2])},
                            {"p99_9", num_or_null(p[3])},
                            {"mean", num_or_null(mean_of(samples))},
                            {"samples", samples.size()}};
    };
    auto tput_block = [](const double p[3], const std::vector<double>& samples) {
        return ordered_json{{"p10", num_or_null(p[0])},
                            {"p50", num_or_null(p[1])},
                            {"p95", num_or_null(p[2])},
                            {"mean", num_or_null(mean_of(samples))},
                            {"users", samples.size()}};
    };

    std::vector<double> cell_dl, cell_ul;
    for (const CellTputSample& x : m.cell_tput)
        (x.dl ? cell_dl : cell_ul).push_back(x.mbps);

    ordered_json j;
    j["scheme"] = m.scheme;
    j["seed"] = m.seed;
    j["cells"] = s.cells;
    j["ticks"] = s.ticks;
    j["measured_ticks"] = m.measured_ticks;
    j["epsilon_ms"] = s.epsilon_ms;
    j["latency_ms"] = {{"dl", latency_block(r.lat_dl, v.lat_dl)},
                       {"ul", latency_block(r.lat_ul, v.lat_ul)}};
    j["user_throughput_mbps"] = {{"dl", tput_block(r.tput_dl, v.tput_dl)},
                                 {"ul", tput_block(r.tput_ul, v.tput_ul)}};
    j["cell_throughput_mbps"] = {{"dl_mean", num_or_null(mean_of(cell_dl))},
                                 {"ul_mean", num_or_null(mean_of(cell_ul))}};
    j["ul_interference_dbm"] = {{"p20", num_or_null(r.intf_ul[0])},
                                {"p50", num_or_null(r.intf_ul[1])},
                                {"samples", m.ul_interference.size()}};
    j["xn_overhead"] = {{"rounds", m.overhead.rounds},
                        {"uplink_bits", m.overhead.uplink_bits},
                        {"downlink_bits", m.overhead.downlink_bits},
                        {"total_bits", m.overhead.total()}};
    j["counters"] = {{"packets_arrived", m.packets_arrived},
                     {"packets_delivered", m.packets_delivered},
                     {"latency_violations", m.latency_violations},
                     {"harq_failures", m.harq_failures},
                     {"idle_data_slots", m.idle_data_slots},
                     {"sss_retx_grants", m.sss_retx_grants},
                     {"dist_clamps", m.dist_clamps}};
    return j.dump(2) + "\n";
}

std::string comparison_csv(const std::vector<RunStats>& rows) {
    std::string out =
        "scheme,seed,dl_lat_p50_ms,dl_lat_p90_ms,dl_lat_p99_ms,dl_lat_p999_ms,"
        "ul_lat_p50_ms,ul_lat_p90_ms,ul_lat_p99_ms,ul_lat_p999_ms,"
        "dl_tput_p10_mbps,dl_tput_p50_mbps,dl_tput_p95_mbps,"
        "ul_tput_p10_mbps,ul_tput_p50_mbps,ul_tput_p95_mbps,"
        "ul_intf_p20_dbm,ul_intf_p50_dbm,xn_total_bits\n";

    auto cell = [](double v) { return std::isfinite(v) ? fmt_g6(v) : std::string(); };
    auto emit = [&](const std::string& scheme, const std::string& seed_label,
                    const double* vals, double xn) {
        out += scheme + "," + seed_label;
        for (int i = 0; i < 16; ++i) out += "," + cell(vals[i]);
        out += "," + cell(xn) + "\n";
    };
    auto flatten = [](const RunStats& r, double* v) {
        int k = 0;
        for (int i = 0; i < 4; ++i) v[k++] = r.lat_dl[i];
        for (int i = 0; i < 4; ++i) v[k++] = r.lat_ul[i];
        for (int i = 0; i < 3; ++i) v[k++] = r.tput_dl[i];
        for (int i = 0; i < 3; ++i) v[k++] = r.tput_ul[i];
        for (int i = 0; i < 2; ++i) v[k++] = r.intf_ul[i];
    };

    // Group by scheme in first-seen order; per-seed rows then one average row.
    std::vector<std::string> order;
    for (const RunStats& r : rows)
        if (std::find(order.begin(), order.end(), r.scheme) == order.end())
            order.push_back(r.scheme);
    for (const std::string& scheme : order) {
        double acc[16] = {};
        long cnt[16] = {};
        double xn_acc = 0.0;
        long n = 0;
        for (const RunStats& r : rows) {
            if (r.scheme != scheme) continue;
            double v[16];
            flatten(r, v);
            emit(scheme, std::to_string(r.seed), v, static_cast<double>(r.xn_bits));
            for (int i = 0; i < 16; ++i)
                if (std::isfinite(v[i])) {
                    acc[i] += v[i];
                    ++cnt[i];
                }
            xn_acc += static_cast<double>(r.xn_bits);
            ++n;
        }
        double avg[16];
        for (int i = 0; i < 16; ++i)
            avg[i] = cnt[i] > 0 ? acc[i] / cnt[i]
                                : std::numeric_limits<double>::quiet_NaN();
        emit(scheme, "avg", avg, n > 0 ? xn_acc / n : 0.0);
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SimulationError("cannot open " + path + " for writing");
    f << content;
    f.flush();
    if (!f) throw SimulationError("short write to " + path);
}

}  // namespace tddsim
