#include <doctest.h>

#include <string>

#include "tddsim/common.hpp"
#include "tddsim/scenario.hpp"

using namespace tddsim;

TEST_CASE("defaults serialize and re-parse to the identical scenario") {
    const Scenario def;
    validate_scenario(def);
    const std::string text = serialize_scenario(def);
    const Scenario back = parse_scenario(text);
    CHECK(back == def);
    CHECK(serialize_scenario(back) == text);
}

TEST_CASE("awkward floating-point values survive the round trip") {
    Scenario s;
    s.hold_hi_ms = 62.4;
    s.est_rate_smoothing = 0.05;
    s.lambda_ul_per_s = 620.0;
    s.alpha = 0.8;
    s.tti_ms = 0.5;
    s.isd_m = 1723.456789012345;
    s.p0_dbm = -103.7;
    s.seed = 18446744073709551615ULL;  // u64 max
    s.scheme = Scheme::Scc;
    s.dss_ratios = {{1, 11}, {6, 6}, {11, 1}};
    s.shifts_per_group = 3;
    const Scenario back = parse_scenario(serialize_scenario(s));
    CHECK(back == s);
}

TEST_CASE("parser tolerates comments, blanks and spacing") {
    const Scenario got = parse_scenario(
        "# leading comment\n"
        "\n"
        "[deployment]\n"
        "  cells =  3   # inline comment\n"
        "isd_m=250.5 ; another comment style\n"
        "\n"
        "[run]\n"
        "scheme = cfc\n"
        "ticks = 4000\n");
    CHECK(got.cells == 3);
    CHECK(got.isd_m == 250.5);
    CHECK(got.scheme == Scheme::Cfc);
    CHECK(got.ticks == 4000);
    // Untouched keys keep their defaults.
    CHECK(got.prbs == 24);
}

TEST_CASE("rejections name the offending key") {
    // Unknown key within a known section.
    CHECK_THROWS_WITH_AS(parse_scenario("[radio]\nfoo = 1\n"),
                         doctest::Contains("foo"), ConfigError);
    // Unknown section.
    CHECK_THROWS_WITH_AS(parse_scenario("[nonsense]\ncells = 1\n"),
                         doctest::Contains("nonsense"), ConfigError);
    // Duplicate key.
    CHECK_THROWS_WITH_AS(parse_scenario("[deployment]\ncells = 2\ncells = 3\n"),
                         doctest::Contains("duplicate"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_scenario("[deployment]\ncells = 2\ncells = 3\n"),
                         doctest::Contains("cells"), ConfigError);
    // Garbage values name the key they were meant for.
    CHECK_THROWS_WITH_AS(parse_scenario("[radio]\nprbs = many\n"),
                         doctest::Contains("prbs"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_scenario("[deployment]\nwraparound = maybe\n"),
                         doctest::Contains("wraparound"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_scenario("[codebook]\ndss_ratios = 2-10\n"),
                         doctest::Contains("dss_ratios"), ConfigError);
    // Key assignments before any section header land in section "".
    CHECK_THROWS_AS(parse_scenario("cells = 2\n"), ConfigError);
    // Malformed lines.
    CHECK_THROWS_AS(parse_scenario("[deployment\ncells = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_scenario("[deployment]\njust words\n"), ConfigError);

    CHECK_THROWS_AS(load_scenario_file("/nonexistent/path.ini"), ConfigError);
}

TEST_CASE("scheme names parse case-insensitively") {
    CHECK(parse_scheme("HFCS") == Scheme::Hfcs);
    CHECK(parse_scheme("hfcs") == Scheme::Hfcs);
    CHECK(parse_scheme("nc") == Scheme::Nc);
    CHECK(parse_scheme("Static") == Scheme::Static);
    CHECK_THROWS_AS(parse_scheme("TDD"), ConfigError);
    for (Scheme s : {Scheme::Hfcs, Scheme::Nc, Scheme::Scc, Scheme::Cfc, Scheme::Static})
        CHECK(parse_scheme(scheme_name(s)) == s);
}

TEST_CASE("validation catches cross-field inconsistencies by name") {
    auto broken = [](auto mutate) {
        Scenario s;
        mutate(s);
        return s;
    };
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) { s.cells = 0; })),
        doctest::Contains("cells"), ConfigError);
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) { s.bs_antennas = 9; })),
        doctest::Contains("bs_antennas"), ConfigError);
    // Ratio rows must match the dynamic sub-frame length.
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) { s.dss_ratios = {{3, 3}}; })),
        doctest::Contains("dss_ratios"), ConfigError);
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) { s.cli_lo_dbm = -50.0; })),
        doctest::Contains("cli_lo_dbm"), ConfigError);
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) { s.scc_omega = 13; })),
        doctest::Contains("scc_omega"), ConfigError);
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) { s.static_pattern = "DDDUUU"; })),
        doctest::Contains("static_pattern"), ConfigError);
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) { s.static_pattern[3] = 'X'; })),
        doctest::Contains("static_pattern"), ConfigError);
    // A static run must carry traffic somewhere in both directions.
    CHECK_THROWS_AS(validate_scenario(broken([](Scenario& s) {
                        s.scheme = Scheme::Static;
                        s.static_pattern = std::string(20, 'D');
                    })),
                    ConfigError);
    // Warmup longer than the run is caught up front.
    CHECK_THROWS_WITH_AS(
        validate_scenario(broken([](Scenario& s) {
            s.ticks = 100;
            s.warmup_frames = 5;
        })),
        doctest::Contains("warmup"), ConfigError);
}

TEST_CASE("automatic warmup is one frame per hundred, at least one") {
    Scenario s;
    CHECK(s.resolved_warmup_frames() == 100);  // 200000 ticks / 20 / 100
    s.ticks = 40;
    CHECK(s.resolved_warmup_frames() == 1);
    s.warmup_frames = 7;
    CHECK(s.resolved_warmup_frames() == 7);
}
