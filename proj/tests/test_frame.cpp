#include <doctest.h>

#include <algorithm>
#include <set>

#include "tddsim/common.hpp"
#include "tddsim/frame.hpp"

using namespace tddsim;

namespace {

std::vector<SssSlot> default_sss() {
    return {{0, SlotDir::DL}, {1, SlotDir::DL}, {2, SlotDir::DL}, {3, SlotDir::DL},
            {4, SlotDir::UL}, {5, SlotDir::UL}, {6, SlotDir::UL}, {7, SlotDir::UL}};
}

std::vector<std::pair<int, int>> default_ratios() {
    return {{2, 10}, {3, 9}, {4, 8}, {5, 7}, {6, 6}, {7, 5}, {8, 4}};
}

Codebook default_codebook() {
    return build_codebook(20, default_sss(), default_ratios(), 8, 55);
}

// Oracle: conflict table evaluated slot by slot, written independently of the
// production counting loop.
int misalignment_oracle(const RadioFrameConfig& a, const RadioFrameConfig& b) {
    int n = 0;
    for (int i = 0; i < a.frame_len(); ++i) {
        SlotDir x = a.slots[i], y = b.slots[i];
        if (x == SlotDir::Guard || y == SlotDir::Guard) continue;
        if (x != y) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("reported codebook geometry: 55 RFCs, 7 groups, 6 index bits") {
    const Codebook cb = default_codebook();
    CHECK(cb.size() == 55);
    CHECK(cb.groups.size() == 7);
    CHECK(cb.index_bits == 6);
    CHECK(cb.dss_len == 12);
    // Low shifts are kept round-robin, so exactly one group is one short.
    int with8 = 0, with7 = 0;
    for (const auto& g : cb.groups) {
        if (g.size() == 8) ++with8;
        if (g.size() == 7) ++with7;
    }
    CHECK(with8 == 6);
    CHECK(with7 == 1);
}

TEST_CASE("codebook invariants: SSS identity, distinctness, counts, closure") {
    const Codebook cb = default_codebook();
    const auto& ref = cb.rfcs.front();

    for (const auto& rfc : cb.rfcs) {
        REQUIRE(rfc.frame_len() == 20);
        // SSS positions carry identical directions in every RFC.
        for (int i = 0; i < 20; ++i)
            if (ref.sss[i]) CHECK(rfc.slots[i] == ref.slots[i]);
        CHECK(rfc.dl_count + rfc.ul_count == 20);
        CHECK(rfc.dss_dl + rfc.dss_ul == 12);
    }

    // Pairwise distinct.
    std::set<std::vector<SlotDir>> seen;
    for (const auto& rfc : cb.rfcs) seen.insert(rfc.slots);
    CHECK(static_cast<int>(seen.size()) == cb.size());

    // Group members share the ratio and are cyclic shifts of one another.
    for (const auto& group : cb.groups) {
        for (int ia : group) {
            for (int ib : group) {
                const auto& a = cb.rfcs[ia];
                const auto& b = cb.rfcs[ib];
                CHECK(a.dss_dl == b.dss_dl);
                const auto pa = a.dss_pattern();
                const auto pb = b.dss_pattern();
                const int n = static_cast<int>(pa.size());
                const int delta = ((b.shift - a.shift) % n + n) % n;
                for (int i = 0; i < n; ++i)
                    CHECK(pb[(i + delta) % n] == pa[i]);
            }
        }
    }
}

TEST_CASE("degenerate groups collapse under dedup") {
    // All-DL dynamic sub-frame: every shift coincides.
    auto cb = build_codebook(20, default_sss(), {{12, 0}}, 12);
    CHECK(cb.size() == 1);
    CHECK(cb.index_bits == 0);

    // One DL slot in twelve: all 12 rotations distinct.
    cb = build_codebook(20, default_sss(), {{1, 11}}, 12);
    CHECK(cb.size() == 12);
    CHECK(cb.index_bits == 4);
}

TEST_CASE("codebook rejects malformed configurations") {
    CHECK_THROWS_AS(build_codebook(20, default_sss(), {{5, 5}}, 4), ConfigError);
    std::vector<SssSlot> full;
    for (int i = 0; i < 8; ++i) full.push_back({i, SlotDir::DL});
    CHECK_THROWS_AS(build_codebook(8, full, {{0, 0}}, 1), ConfigError);
    CHECK_THROWS_AS(build_codebook(20, default_sss(), {}, 4), ConfigError);
    CHECK_THROWS_AS(build_codebook(20, default_sss(), default_ratios(), 0), ConfigError);
    CHECK_THROWS_AS(build_codebook(20, default_sss(), default_ratios(), 13), ConfigError);
    // Equal ratios in two groups collide at every shift.
    CHECK_THROWS_AS(build_codebook(20, default_sss(), {{6, 6}, {6, 6}}, 4), ConfigError);
}

TEST_CASE("guard insertion at DL->UL transitions") {
    const Codebook cb =
        build_codebook(20, default_sss(), default_ratios(), 8, 0, true);
    for (const auto& rfc : cb.rfcs) {
        for (int i = 0; i + 1 < 20; ++i)
            CHECK_FALSE((rfc.slots[i] == SlotDir::DL && rfc.slots[i + 1] == SlotDir::UL));
        // The SSS DL->UL boundary at 3->4 turns slot 4 into a Guard everywhere.
        CHECK(rfc.slots[4] == SlotDir::Guard);
    }
    // SSS identity survives guard insertion.
    const auto& ref = cb.rfcs.front();
    for (const auto& rfc : cb.rfcs)
        for (int i = 0; i < 20; ++i)
            if (ref.sss[i]) CHECK(rfc.slots[i] == ref.slots[i]);
}

TEST_CASE("slot misalignment: anchors and 1000 random pairs vs oracle") {
    const Codebook cb = default_codebook();

    CHECK(slot_misalignment(cb.rfcs[0], cb.rfcs[0]) == 0);

    // Fully opposed hand-built frames: conflict everywhere.
    RadioFrameConfig all_dl, all_ul;
    all_dl.slots.assign(20, SlotDir::DL);
    all_ul.slots.assign(20, SlotDir::UL);
    all_dl.sss.assign(20, 0);
    all_ul.sss.assign(20, 0);
    CHECK(slot_misalignment(all_dl, all_ul) == 20);

    // Guard conflicts with nothing.
    RadioFrameConfig guards = all_dl;
    guards.slots.assign(20, SlotDir::Guard);
    CHECK(slot_misalignment(guards, all_ul) == 0);
    CHECK(slot_misalignment(guards, all_dl) == 0);

    Rng rng(20260817);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto& a = cb.rfcs[rng.next_below(cb.size())];
        const auto& b = cb.rfcs[rng.next_below(cb.size())];
        const int phi = slot_misalignment(a, b);
        CHECK(phi == misalignment_oracle(a, b));
        CHECK(phi == slot_misalignment(b, a));  // symmetric
        CHECK(phi <= cb.dss_len);               // SSS never conflicts
    }
}

TEST_CASE("average misalignment is the arithmetic mean") {
    const Codebook cb = default_codebook();
    // Pick others with phi 2 and 4 against a reference by construction.
    const auto& c = cb.rfcs[cb.groups[2][0]];  // 4:8, shift 0
    std::vector<RadioFrameConfig> others;
    for (const auto& rfc : cb.rfcs) {
        const int phi = slot_misalignment(c, rfc);
        if (phi == 2 && others.empty()) others.push_back(rfc);
        if (phi == 4 && others.size() == 1) others.push_back(rfc);
    }
    REQUIRE(others.size() == 2);
    CHECK(average_misalignment(c, others) == doctest::Approx(3.0));
    CHECK(average_misalignment(c, {}) == 0.0);
}

TEST_CASE("index round-trips in B bits") {
    const Codebook cb = default_codebook();
    for (int i = 0; i < cb.size(); ++i) {
        const uint32_t bits = encode_index(cb, i);
        CHECK(bits < (1u << cb.index_bits));
        CHECK(decode_index(cb, bits) == i);
    }
    CHECK_THROWS_AS(encode_index(cb, 55), SimulationError);
    CHECK_THROWS_AS(encode_index(cb, -1), SimulationError);
    CHECK_THROWS_AS(decode_index(cb, 63), SimulationError);  // fits in B, no RFC
}

TEST_CASE("codebook text round-trips") {
    const Codebook cb = default_codebook();
    const std::string text = serialize_codebook(cb);
    const Codebook back = parse_codebook(text);
    REQUIRE(back.size() == cb.size());
    CHECK(back.index_bits == cb.index_bits);
    CHECK(back.dss_len == cb.dss_len);
    for (int i = 0; i < cb.size(); ++i) {
        CHECK(back.rfcs[i].slots == cb.rfcs[i].slots);
        CHECK(back.rfcs[i].group_id == cb.rfcs[i].group_id);
        CHECK(back.rfcs[i].shift == cb.rfcs[i].shift);
    }
    CHECK(serialize_codebook(back) == text);

    // The documented row shape: "group, shift, SSS|DSS".
    const auto nl = text.find('\n');
    const std::string row = text.substr(nl + 1, text.find('\n', nl + 1) - nl - 1);
    CHECK(row == "0, 0, DDDDUUUU|DDUUUUUUUUUU");
}
