#include "tddsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace tddsim {

Scheme parse_scheme(const std::string& name) {
    std::string up = name;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (up == "HFCS") return Scheme::Hfcs;
    if (up == "NC") return Scheme::Nc;
    if (up == "SCC") return Scheme::Scc;
    if (up == "CFC") return Scheme::Cfc;
    if (up == "STATIC") return Scheme::Static;
    throw ConfigError("unknown scheme '" + name +
                      "' (expected HFCS, NC, SCC, CFC or STATIC)");
}

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::Hfcs: return "HFCS";
        case Scheme::Nc: return "NC";
        case Scheme::Scc: return "SCC";
        case Scheme::Cfc: return "CFC";
        case Scheme::Static: return "STATIC";
    }
    throw SimulationError("unnamed scheme value");
}

int Scenario::resolved_warmup_frames() const {
    if (warmup_frames > 0) return warmup_frames;
    const long frames = ticks / frame_slots;
    return static_cast<int>(std::max(1L, frames / 100));
}

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Shortest decimal form that parses back to exactly the same double.
std::string fmt_double(double v) {
    char buf[64];
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
    throw ConfigError("bad value '" + value + "' for key '" + key + "'");
}

double to_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') bad_value(key, value);
    return v;
}

long to_long(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long v = std::strtol(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0') bad_value(key, value);
    return v;
}

int to_int(const std::string& key, const std::string& value) {
    return static_cast<int>(to_long(key, value));
}

uint64_t to_u64(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0' || value.find('-') != std::string::npos)
        bad_value(key, value);
    return v;
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    bad_value(key, value);
}

std::vector<std::pair<int, int>> to_ratios(const std::string& key,
                                           const std::string& value) {
    std::vector<std::pair<int, int>> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        const auto colon = item.find(':');
        if (colon == std::string::npos) bad_value(key, value);
        out.push_back({to_int(key, trim(item.substr(0, colon))),
                       to_int(key, trim(item.substr(colon + 1)))});
    }
    if (out.empty()) bad_value(key, value);
    return out;
}

std::string ratios_text(const std::vector<std::pair<int, int>>& ratios) {
    std::string out;
    for (const auto& [d, u] : ratios) {
        if (!out.empty()) out += ",";
        out += std::to_string(d) + ":" + std::to_string(u);
    }
    return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario s;
    std::string section;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string qual = section + "." + key;
        if (!seen.insert(qual).second)
            throw ConfigError("duplicate key '" + key + "' in section [" + section + "]");

        bool known = true;
        if (section == "deployment") {
            if (key == "cells") s.cells = to_int(qual, value);
            else if (key == "isd_m") s.isd_m = to_double(qual, value);
            else if (key == "ues_dl_per_cell") s.ues_dl_per_cell = to_int(qual, value);
            else if (key == "ues_ul_per_cell") s.ues_ul_per_cell = to_int(qual, value);
            else if (key == "wraparound") s.wraparound = to_bool(qual, value);
            else if (key == "min_dist_m") s.min_dist_m = to_double(qual, value);
            else known = false;
        } else if (section == "radio") {
            if (key == "bs_antennas") s.bs_antennas = to_int(qual, value);
            else if (key == "ue_antennas") s.ue_antennas = to_int(qual, value);
            else if (key == "prbs") s.prbs = to_int(qual, value);
            else if (key == "scs_khz") s.scs_khz = to_double(qual, value);
            else if (key == "bs_power_dbm") s.bs_power_dbm = to_double(qual, value);
            else if (key == "ue_pmax_dbm") s.ue_pmax_dbm = to_double(qual, value);
            else if (key == "p0_dbm") s.p0_dbm = to_double(qual, value);
            else if (key == "alpha") s.alpha = to_double(qual, value);
            else if (key == "nf_ue_db") s.nf_ue_db = to_double(qual, value);
            else if (key == "nf_bs_db") s.nf_bs_db = to_double(qual, value);
            else if (key == "shadowing_sigma_db") s.shadowing_sigma_db = to_double(qual, value);
            else if (key == "cqi_backoff_db") s.cqi_backoff_db = to_double(qual, value);
            else known = false;
        } else if (section == "traffic") {
            if (key == "packet_bits") s.packet_bits = to_int(qual, value);
            else if (key == "lambda_dl_per_s") s.lambda_dl_per_s = to_double(qual, value);
            else if (key == "lambda_ul_per_s") s.lambda_ul_per_s = to_double(qual, value);
            else known = false;
        } else if (section == "codebook") {
            if (key == "frame_slots") s.frame_slots = to_int(qual, value);
            else if (key == "sss_dl") s.sss_dl = to_int(qual, value);
            else if (key == "sss_ul") s.sss_ul = to_int(qual, value);
            else if (key == "shifts_per_group") s.shifts_per_group = to_int(qual, value);
            else if (key == "codebook_target") s.codebook_target = to_int(qual, value);
            else if (key == "guard_slots") s.guard_slots = to_bool(qual, value);
            else if (key == "dss_ratios") s.dss_ratios = to_ratios(qual, value);
            else known = false;
        } else if (section == "coordination") {
            if (key == "rho_dbm") s.rho_dbm = to_double(qual, value);
            else if (key == "cli_lo_dbm") s.cli_lo_dbm = to_double(qual, value);
            else if (key == "cli_hi_dbm") s.cli_hi_dbm = to_double(qual, value);
            else if (key == "hold_lo_ms") s.hold_lo_ms = to_double(qual, value);
            else if (key == "hold_hi_ms") s.hold_hi_ms = to_double(qual, value);
            else if (key == "xn_delay_ms") s.xn_delay_ms = to_double(qual, value);
            else if (key == "cli_aging_db") s.cli_aging_db = to_double(qual, value);
            else if (key == "scc_omega") s.scc_omega = to_int(qual, value);
            else known = false;
        } else if (section == "scheduler") {
            if (key == "pf_smoothing") s.pf_smoothing = to_double(qual, value);
            else if (key == "harq_rtt_slots") s.harq_rtt_slots = to_int(qual, value);
            else if (key == "harq_max_tx") s.harq_max_tx = to_int(qual, value);
            else if (key == "harq_procs") s.harq_procs = to_int(qual, value);
            else if (key == "est_rate_smoothing") s.est_rate_smoothing = to_double(qual, value);
            else known = false;
        } else if (section == "run") {
            if (key == "tti_ms") s.tti_ms = to_double(qual, value);
            else if (key == "ticks") s.ticks = to_long(qual, value);
            else if (key == "warmup_frames") s.warmup_frames = to_int(qual, value);
            else if (key == "scheme") s.scheme = parse_scheme(value);
            else if (key == "seed") s.seed = to_u64(qual, value);
            else if (key == "static_pattern") s.static_pattern = value;
            else if (key == "epsilon_ms") s.epsilon_ms = to_double(qual, value);
            else known = false;
        } else {
            throw ConfigError("unknown section [" + section + "]");
        }
        if (!known)
            throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
    }
    return s;
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string serialize_scenario(const Scenario& s) {
    std::ostringstream out;
    out << "[deployment]\n";
    out << "cells = " << s.cells << "\n";
    out << "isd_m = " << fmt_double(s.isd_m) << "\n";
    out << "ues_dl_per_cell = " << s.ues_dl_per_cell << "\n";
    out << "ues_ul_per_cell = " << s.ues_ul_per_cell << "\n";
    out << "wraparound = " << (s.wraparound ? "true" : "false") << "\n";
    out << "min_dist_m = " << fmt_double(s.min_dist_m) << "\n";
    out << "\n[radio]\n";
    out << "bs_antennas = " << s.bs_antennas << "\n";
    out << "ue_antennas = " << s.ue_antennas << "\n";
    out << "prbs = " << s.prbs << "\n";
    out << "scs_khz = " << fmt_double(s.scs_khz) << "\n";
    out << "bs_power_dbm = " << fmt_double(s.bs_power_dbm) << "\n";
    out << "ue_pmax_dbm = " << fmt_double(s.ue_pmax_dbm) << "\n";
    out << "p0_dbm = " << fmt_double(s.p0_dbm) << "\n";
    out << "alpha = " << fmt_double(s.alpha) << "\n";
    out << "nf_ue_db = " << fmt_double(s.nf_ue_db) << "\n";
    out << "nf_bs_db = " << fmt_double(s.nf_bs_db) << "\n";
    out << "shadowing_sigma_db = " << fmt_double(s.shadowing_sigma_db) << "\n";
    out << "cqi_backoff_db = " << fmt_double(s.cqi_backoff_db) << "\n";
    out << "\n[traffic]\n";
    out << "packet_bits = " << s.packet_bits << "\n";
    out << "lambda_dl_per_s = " << fmt_double(s.lambda_dl_per_s) << "\n";
    out << "lambda_ul_per_s = " << fmt_double(s.lambda_ul_per_s) << "\n";
    out << "\n[codebook]\n";
    out << "frame_slots = " << s.frame_slots << "\n";
    out << "sss_dl = " << s.sss_dl << "\n";
    out << "sss_ul = " << s.sss_ul << "\n";
    out << "shifts_per_group = " << s.shifts_per_group << "\n";
    out << "codebook_target = " << s.codebook_target << "\n";
    out << "guard_slots = " << (s.guard_slots ? "true" : "false") << "\n";
    out << "dss_ratios = " << ratios_text(s.dss_ratios) << "\n";
    out << "\n[coordination]\n";
    out << "rho_dbm = " << fmt_double(s.rho_dbm) << "\n";
    out << "cli_lo_dbm = " << fmt_double(s.cli_lo_dbm) << "\n";
    out << "cli_hi_dbm = " << fmt_double(s.cli_hi_dbm) << "\n";
    out << "hold_lo_ms = " << fmt_double(s.hold_lo_ms) << "\n";
    out << "hold_hi_ms = " << fmt_double(s.hold_hi_ms) << "\n";
    out << "xn_delay_ms = " << fmt_double(s.xn_delay_ms) << "\n";
    out << "cli_aging_db = " << fmt_double(s.cli_aging_db) << "\n";
    out << "scc_omega = " << s.scc_omega << "\n";
    out << "\n[scheduler]\n";
    out << "pf_smoothing = " << fmt_double(s.pf_smoothing) << "\n";
    out << "harq_rtt_slots = " << s.harq_rtt_slots << "\n";
    out << "harq_max_tx = " << s.harq_max_tx << "\n";
    out << "harq_procs = " << s.harq_procs << "\n";
    out << "est_rate_smoothing = " << fmt_double(s.est_rate_smoothing) << "\n";
    out << "\n[run]\n";
    out << "tti_ms = " << fmt_double(s.tti_ms) << "\n";
    out << "ticks = " << s.ticks << "\n";
    out << "warmup_frames = " << s.warmup_frames << "\n";
    out << "scheme = " << scheme_name(s.scheme) << "\n";
    out << "seed = " << s.seed << "\n";
    out << "static_pattern = " << s.static_pattern << "\n";
    out << "epsilon_ms = " << fmt_double(s.epsilon_ms) << "\n";
    return out.str();
}

void validate_scenario(const Scenario& s) {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw ConfigError(what);
    };
    require(s.cells >= 1, "deployment.cells must be at least 1");
    require(s.isd_m > 0.0, "deployment.isd_m must be positive");
    require(s.ues_dl_per_cell >= 0 && s.ues_ul_per_cell >= 0,
            "deployment UE counts must be non-negative");
    require(s.ues_dl_per_cell + s.ues_ul_per_cell > 0,
            "deployment needs at least one UE per cell");
    require(s.min_dist_m > 0.0 && s.min_dist_m < s.isd_m,
            "deployment.min_dist_m must lie in (0, isd_m)");

    require(s.bs_antennas >= 1 && s.bs_antennas <= 8,
            "radio.bs_antennas must be in [1, 8]");
    require(s.ue_antennas >= 1 && s.ue_antennas <= 8,
            "radio.ue_antennas must be in [1, 8]");
    require(s.prbs >= 1, "radio.prbs must be at least 1");
    require(s.scs_khz > 0.0, "radio.scs_khz must be positive");
    require(s.shadowing_sigma_db >= 0.0, "radio.shadowing_sigma_db must be >= 0");

    require(s.packet_bits >= 1, "traffic.packet_bits must be at least 1");
    require(s.lambda_dl_per_s >= 0.0 && s.lambda_ul_per_s >= 0.0,
            "traffic arrival rates must be non-negative");

    require(s.frame_slots >= 2, "codebook.frame_slots must be at least 2");
    require(s.sss_dl >= 1 && s.sss_ul >= 1,
            "codebook needs at least one static slot per direction");
    const int dss_len = s.frame_slots - s.sss_dl - s.sss_ul;
    require(dss_len >= 1, "codebook leaves no dynamic slots");
    require(!s.dss_ratios.empty(), "codebook.dss_ratios must not be empty");
    for (const auto& [d, u] : s.dss_ratios)
        require(d >= 0 && u >= 0 && d + u == dss_len,
                "codebook.dss_ratios entries must sum to the dynamic length " +
                    std::to_string(dss_len));
    require(s.shifts_per_group >= 1 && s.shifts_per_group <= dss_len,
            "codebook.shifts_per_group must be in [1, dynamic length]");
    require(s.codebook_target >= 0, "codebook.codebook_target must be >= 0");

    require(s.cli_lo_dbm < s.cli_hi_dbm,
            "coordination.cli_lo_dbm must be below cli_hi_dbm");
    require(s.hold_lo_ms < s.hold_hi_ms,
            "coordination.hold_lo_ms must be below hold_hi_ms");
    require(s.xn_delay_ms >= 0.0, "coordination.xn_delay_ms must be >= 0");
    require(s.cli_aging_db >= 0.0, "coordination.cli_aging_db must be >= 0");
    require(s.scc_omega >= 0 && s.scc_omega <= dss_len,
            "coordination.scc_omega must be in [0, dynamic length]");

    require(s.pf_smoothing > 0.0 && s.pf_smoothing <= 1.0,
            "scheduler.pf_smoothing must be in (0, 1]");
    require(s.est_rate_smoothing > 0.0 && s.est_rate_smoothing <= 1.0,
            "scheduler.est_rate_smoothing must be in (0, 1]");
    require(s.harq_rtt_slots >= 1, "scheduler.harq_rtt_slots must be >= 1");
    require(s.harq_max_tx >= 1, "scheduler.harq_max_tx must be >= 1");
    require(s.harq_procs >= 1, "scheduler.harq_procs must be >= 1");

    require(s.tti_ms > 0.0, "run.tti_ms must be positive");
    require(s.epsilon_ms > 0.0, "run.epsilon_ms must be positive");
    require(s.ticks >= s.frame_slots, "run.ticks must cover at least one frame");
    require(s.warmup_frames >= 0, "run.warmup_frames must be >= 0");
    require(static_cast<long>(s.resolved_warmup_frames()) * s.frame_slots < s.ticks,
            "warmup consumes the whole run");
    require(static_cast<int>(s.static_pattern.size()) == s.frame_slots,
            "run.static_pattern length must equal codebook.frame_slots");
    int sdl = 0, sul = 0;
    for (char c : s.static_pattern) {
        require(c == 'D' || c == 'U' || c == 'G',
                "run.static_pattern may contain only D, U and G");
        sdl += c == 'D';
        sul += c == 'U';
    }
    if (s.scheme == Scheme::Static)
        require(sdl >= 1 && sul >= 1,
                "run.static_pattern must serve both directions");
}

}  // namespace tddsim
