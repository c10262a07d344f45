#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tddsim/common.hpp"

namespace tddsim {

enum class SlotDir : uint8_t {
    DL,     // downlink mini-slot
    UL,     // uplink mini-slot
    Guard,  // transmission-free
};

char slot_char(SlotDir d);
SlotDir slot_from_char(char c);

/**
 * One radio frame configuration: a fixed static sub-frame (SSS) shared by the
 * whole codebook plus a dynamic sub-frame (DSS) pattern that is a cyclic shift
 * of its group's base DL-block pattern.
 */
struct RadioFrameConfig {
    std::vector<SlotDir> slots;   // full frame, mini-slot granularity
    std::vector<uint8_t> sss;     // 1 where the slot belongs to the static sub-frame
    int group_id = 0;
    int shift = 0;
    int dl_count = 0;             // whole-frame totals
    int ul_count = 0;
    int dss_dl = 0;               // dynamic sub-frame only
    int dss_ul = 0;

    int frame_len() const { return static_cast<int>(slots.size()); }
    // Directions of the dynamic sub-frame in ascending slot order.
    std::vector<SlotDir> dss_pattern() const;
    bool operator==(const RadioFrameConfig& o) const { return slots == o.slots; }
};

struct Codebook {
    std::vector<RadioFrameConfig> rfcs;
    std::vector<std::vector<int>> groups;  // group id -> rfc indices, shift-ascending
    int index_bits = 0;                    // B = ceil(log2(N)), 0 for N <= 1
    int frame_len = 0;
    int dss_len = 0;

    int size() const { return static_cast<int>(rfcs.size()); }
    // DSS DL fraction of a group, exact as integers: (dss_dl, dss_len).
    int group_dss_dl(int group) const;
};

struct SssSlot {
    int pos;
    SlotDir dir;
};

/**
 * Builds the cyclic-shift codebook. Each group g contributes cyclic shifts of
 * a base DSS pattern with dss_ratios[g].first contiguous DL slots followed by
 * UL; coincident shifts are deduplicated. target_size > 0 caps the total size,
 * keeping low shifts round-robin across groups (how a reported codebook size
 * that is not a multiple of the group count is realized). guard_on_transition
 * replaces the slot after every DL->UL transition with a Guard slot.
 */
Codebook build_codebook(int frame_len,
                        const std::vector<SssSlot>& sss_pattern,
                        const std::vector<std::pair<int, int>>& dss_ratios,
                        int shifts_per_group,
                        int target_size = 0,
                        bool guard_on_transition = false);

// Count of slots where one frame is DL while the other is UL. Guard conflicts
// with nothing. Symmetric.
int slot_misalignment(const RadioFrameConfig& a, const RadioFrameConfig& b);

double average_misalignment(const RadioFrameConfig& c,
                            const std::vector<RadioFrameConfig>& others);

// Index <-> B-bit field. Throws SimulationError when the value does not fit.
uint32_t encode_index(const Codebook& cb, int index);
int decode_index(const Codebook& cb, uint32_t bits);

// Text form: a header line with the geometry, then one line per RFC:
//   group, shift, SSS-slot string '|' DSS-slot string
std::string serialize_codebook(const Codebook& cb);
Codebook parse_codebook(const std::string& text);

}  // namespace tddsim
