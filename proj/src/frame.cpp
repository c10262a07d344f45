#include "tddsim/frame.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace tddsim {

char slot_char(SlotDir d) {
    switch (d) {
        case SlotDir::DL: return 'D';
        case SlotDir::UL: return 'U';
        case SlotDir::Guard: return 'G';
    }
    return '?';
}

SlotDir slot_from_char(char c) {
    switch (c) {
        case 'D': return SlotDir::DL;
        case 'U': return SlotDir::UL;
        case 'G': return SlotDir::Guard;
        default: throw ConfigError(std::string("invalid slot character '") + c + "'");
    }
}

std::vector<SlotDir> RadioFrameConfig::dss_pattern() const {
    std::vector<SlotDir> out;
    out.reserve(slots.size());
    for (size_t i = 0; i < slots.size(); ++i)
        if (!sss[i]) out.push_back(slots[i]);
    return out;
}

int Codebook::group_dss_dl(int group) const {
    return rfcs[groups.at(group).front()].dss_dl;
}

namespace {

void recount(RadioFrameConfig& rfc) {
    rfc.dl_count = rfc.ul_count = rfc.dss_dl = rfc.dss_ul = 0;
    for (size_t i = 0; i < rfc.slots.size(); ++i) {
        const bool in_dss = !rfc.sss[i];
        if (rfc.slots[i] == SlotDir::DL) {
            ++rfc.dl_count;
            if (in_dss) ++rfc.dss_dl;
        } else if (rfc.slots[i] == SlotDir::UL) {
            ++rfc.ul_count;
            if (in_dss) ++rfc.dss_ul;
        }
    }
}

void insert_guards(RadioFrameConfig& rfc) {
    // A Guard replaces the first UL slot of every DL->UL transition; the frame
    // length is fixed, so insertion cannot extend it.
    for (size_t i = 0; i + 1 < rfc.slots.size(); ++i)
        if (rfc.slots[i] == SlotDir::DL && rfc.slots[i + 1] == SlotDir::UL)
            rfc.slots[i + 1] = SlotDir::Guard;
}

int bits_for(int n) {
    if (n <= 1) return 0;
    int b = 0;
    while ((1 << b) < n) ++b;
    return b;
}

}  // namespace

Codebook build_codebook(int frame_len,
                        const std::vector<SssSlot>& sss_pattern,
                        const std::vector<std::pair<int, int>>& dss_ratios,
                        int shifts_per_group,
                        int target_size,
                        bool guard_on_transition) {
    if (frame_len <= 0) throw ConfigError("frame length must be positive");
    std::vector<uint8_t> sss_mask(frame_len, 0);
    std::vector<SlotDir> sss_dirs(frame_len, SlotDir::Guard);
    for (const auto& s : sss_pattern) {
        if (s.pos < 0 || s.pos >= frame_len)
            throw ConfigError("SSS position out of frame");
        if (sss_mask[s.pos]) throw ConfigError("duplicate SSS position");
        sss_mask[s.pos] = 1;
        sss_dirs[s.pos] = s.dir;
    }
    const int dss_len = frame_len - static_cast<int>(sss_pattern.size());
    if (dss_len <= 0)
        throw ConfigError("dynamic sub-frame is empty: SSS covers the whole frame");
    if (dss_ratios.empty()) throw ConfigError("codebook needs at least one ratio group");
    for (const auto& [d, u] : dss_ratios)
        if (d < 0 || u < 0 || d + u != dss_len)
            throw ConfigError("ratio " + std::to_string(d) + ":" + std::to_string(u) +
                              " does not sum to the DSS length " + std::to_string(dss_len));
    if (shifts_per_group < 1 || shifts_per_group > dss_len)
        throw ConfigError("shifts_per_group must be in [1, DSS length]");

    std::vector<int> dss_positions;
    for (int i = 0; i < frame_len; ++i)
        if (!sss_mask[i]) dss_positions.push_back(i);

    const int n_groups = static_cast<int>(dss_ratios.size());

    // Distinct shifts per group, generation order preserved (shift-ascending).
    std::vector<std::vector<RadioFrameConfig>> per_group(n_groups);
    for (int g = 0; g < n_groups; ++g) {
        const int d = dss_ratios[g].first;
        for (int s = 0; s < shifts_per_group; ++s) {
            RadioFrameConfig rfc;
            rfc.slots.assign(frame_len, SlotDir::Guard);
            rfc.sss = sss_mask;
            rfc.group_id = g;
            rfc.shift = s;
            for (int i = 0; i < frame_len; ++i)
                if (sss_mask[i]) rfc.slots[i] = sss_dirs[i];
            for (int i = 0; i < dss_len; ++i) {
                const int base = ((i - s) % dss_len + dss_len) % dss_len;
                rfc.slots[dss_positions[i]] = base < d ? SlotDir::DL : SlotDir::UL;
            }
            if (guard_on_transition) insert_guards(rfc);
            recount(rfc);
            bool dup = false;
            for (const auto& prev : per_group[g])
                if (prev == rfc) { dup = true; break; }
            if (!dup) per_group[g].push_back(std::move(rfc));
        }
    }

    // Optional size cap: keep the lowest shifts, round-robin across groups.
    std::vector<int> keep(n_groups);
    for (int g = 0; g < n_groups; ++g) keep[g] = static_cast<int>(per_group[g].size());
    if (target_size > 0) {
        std::fill(keep.begin(), keep.end(), 0);
        int total = 0;
        bool grew = true;
        while (total < target_size && grew) {
            grew = false;
            for (int g = 0; g < n_groups && total < target_size; ++g) {
                if (keep[g] < static_cast<int>(per_group[g].size())) {
                    ++keep[g];
                    ++total;
                    grew = true;
                }
            }
        }
    }

    Codebook cb;
    cb.frame_len = frame_len;
    cb.dss_len = dss_len;
    cb.groups.resize(n_groups);
    for (int g = 0; g < n_groups; ++g) {
        for (int s = 0; s < keep[g]; ++s) {
            cb.groups[g].push_back(cb.size());
            cb.rfcs.push_back(per_group[g][s]);
        }
    }
    // Cross-group duplicates would break index uniqueness; groups with equal
    // ratios would collide at every shift, so reject them outright.
    for (int i = 0; i < cb.size(); ++i)
        for (int j = i + 1; j < cb.size(); ++j)
            if (cb.rfcs[i] == cb.rfcs[j])
                throw ConfigError("duplicate RFC across groups " +
                                  std::to_string(cb.rfcs[i].group_id) + " and " +
                                  std::to_string(cb.rfcs[j].group_id));
    if (cb.rfcs.empty()) throw ConfigError("codebook is empty");
    cb.index_bits = bits_for(cb.size());
    return cb;
}

int slot_misalignment(const RadioFrameConfig& a, const RadioFrameConfig& b) {
    if (a.slots.size() != b.slots.size())
        throw SimulationError("misalignment over different frame lengths");
    int phi = 0;
    for (size_t i = 0; i < a.slots.size(); ++i) {
        const bool conflict = (a.slots[i] == SlotDir::DL && b.slots[i] == SlotDir::UL) ||
                              (a.slots[i] == SlotDir::UL && b.slots[i] == SlotDir::DL);
        phi += conflict ? 1 : 0;
    }
    return phi;
}

double average_misalignment(const RadioFrameConfig& c,
                            const std::vector<RadioFrameConfig>& others) {
    if (others.empty()) return 0.0;
    long sum = 0;
    for (const auto& o : others) sum += slot_misalignment(c, o);
    return static_cast<double>(sum) / static_cast<double>(others.size());
}

uint32_t encode_index(const Codebook& cb, int index) {
    if (index < 0 || index >= cb.size())
        throw SimulationError("RFC index " + std::to_string(index) + " out of codebook");
    return static_cast<uint32_t>(index);
}

int decode_index(const Codebook& cb, uint32_t bits) {
    if (cb.index_bits < 32 && (bits >> cb.index_bits) != 0)
        throw SimulationError("index field wider than B bits");
    if (static_cast<int>(bits) >= cb.size())
        throw SimulationError("decoded RFC index out of codebook");
    return static_cast<int>(bits);
}

std::string serialize_codebook(const Codebook& cb) {
    std::ostringstream out;
    out << "# codebook frame_len=" << cb.frame_len << " index_bits=" << cb.index_bits
        << " sss=";
    bool first = true;
    const auto& ref = cb.rfcs.front();
    for (int i = 0; i < cb.frame_len; ++i) {
        if (!ref.sss[i]) continue;
        if (!first) out << ',';
        out << i << slot_char(ref.slots[i]);
        first = false;
    }
    out << '\n';
    for (const auto& rfc : cb.rfcs) {
        out << rfc.group_id << ", " << rfc.shift << ", ";
        for (int i = 0; i < cb.frame_len; ++i)
            if (rfc.sss[i]) out << slot_char(rfc.slots[i]);
        out << '|';
        for (int i = 0; i < cb.frame_len; ++i)
            if (!rfc.sss[i]) out << slot_char(rfc.slots[i]);
        out << '\n';
    }
    return out.str();
}

namespace {

// "12D" -> (12, DL); used by the serialized header.
std::pair<int, SlotDir> parse_sss_token(const std::string& tok) {
    size_t i = 0;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
    if (i == 0 || i + 1 != tok.size())
        throw ConfigError("bad SSS token '" + tok + "' in codebook text");
    return {std::stoi(tok.substr(0, i)), slot_from_char(tok[i])};
}

}  // namespace

Codebook parse_codebook(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int frame_len = -1;
    std::vector<SssSlot> sss;
    struct Row {
        int group, shift;
        std::string sss_str, dss_str;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string word;
            while (hs >> word) {
                const auto eq = word.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = word.substr(0, eq);
                const std::string val = word.substr(eq + 1);
                if (key == "frame_len") frame_len = std::stoi(val);
                else if (key == "sss") {
                    std::istringstream vs(val);
                    std::string tok;
                    while (std::getline(vs, tok, ',')) {
                        auto [pos, dir] = parse_sss_token(tok);
                        sss.push_back({pos, dir});
                    }
                }
            }
            continue;
        }
        Row r;
        std::istringstream ls(line);
        std::string field;
        if (!std::getline(ls, field, ',')) throw ConfigError("bad codebook row: " + line);
        r.group = std::stoi(field);
        if (!std::getline(ls, field, ',')) throw ConfigError("bad codebook row: " + line);
        r.shift = std::stoi(field);
        if (!std::getline(ls, field)) throw ConfigError("bad codebook row: " + line);
        const auto bar = field.find('|');
        if (bar == std::string::npos) throw ConfigError("codebook row missing '|': " + line);
        size_t start = field.find_first_not_of(' ');
        r.sss_str = field.substr(start, bar - start);
        r.dss_str = field.substr(bar + 1);
        rows.push_back(std::move(r));
    }
    if (frame_len < 0 || rows.empty())
        throw ConfigError("codebook text missing header or rows");
    if (sss.size() != rows.front().sss_str.size())
        throw ConfigError("codebook header SSS does not match row width");

    std::vector<uint8_t> mask(frame_len, 0);
    for (const auto& s : sss) {
        if (s.pos < 0 || s.pos >= frame_len) throw ConfigError("SSS position out of frame");
        mask[s.pos] = 1;
    }
    std::vector<int> dss_positions;
    for (int i = 0; i < frame_len; ++i)
        if (!mask[i]) dss_positions.push_back(i);

    Codebook cb;
    cb.frame_len = frame_len;
    cb.dss_len = static_cast<int>(dss_positions.size());
    for (const auto& r : rows) {
        if (static_cast<int>(r.dss_str.size()) != cb.dss_len)
            throw ConfigError("codebook row DSS width mismatch");
        RadioFrameConfig rfc;
        rfc.slots.assign(frame_len, SlotDir::Guard);
        rfc.sss = mask;
        rfc.group_id = r.group;
        rfc.shift = r.shift;
        for (size_t i = 0; i < sss.size(); ++i)
            rfc.slots[sss[i].pos] = slot_from_char(r.sss_str[i]);
        for (int i = 0; i < cb.dss_len; ++i)
            rfc.slots[dss_positions[i]] = slot_from_char(r.dss_str[i]);
        recount(rfc);
        if (r.group >= static_cast<int>(cb.groups.size())) cb.groups.resize(r.group + 1);
        cb.groups[r.group].push_back(cb.size());
        cb.rfcs.push_back(std::move(rfc));
    }
    cb.index_bits = bits_for(cb.size());
    return cb;
}

}  // namespace tddsim
