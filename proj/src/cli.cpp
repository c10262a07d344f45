#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tddsim/cli.hpp"
#include "tddsim/engine.hpp"
#include "tddsim/report.hpp"
#include "tddsim/scenario.hpp"

namespace fs = std::filesystem;

namespace tddsim {

namespace {

Scenario load_or_default(const std::string& path) {
    if (path.empty()) return Scenario{};
    return load_scenario_file(path);
}

int cmd_run(const std::string& path, bool seed_set, uint64_t seed,
            const std::string& scheme, const std::string& out_dir, bool trace_xn) {
    Scenario s = load_or_default(path);
    if (seed_set) s.seed = seed;
    if (!scheme.empty()) s.scheme = parse_scheme(scheme);
    validate_scenario(s);

    RunOptions opt;
    opt.trace_xn = trace_xn;
    const MetricsSink sink = run_simulation(s, opt);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    write_text_file((dir / "metrics.csv").string(), metrics_csv(sink));
    write_text_file((dir / "summary.json").string(), summary_json(s, sink));
    // The manifest is the fully resolved configuration: defaults filled in,
    // command-line overrides applied. Re-running it reproduces this run.
    write_text_file((dir / "manifest.txt").string(), serialize_scenario(s));
    if (trace_xn) {
        std::string trace;
        for (const auto& line : sink.xn_trace) trace += line + "\n";
        write_text_file((dir / "xn_trace.txt").string(), trace);
    }

    const RunStats st = compute_stats(sink);
    std::cout << "scheme=" << sink.scheme << " seed=" << sink.seed
              << " cells=" << s.cells << " ticks=" << s.ticks
              << " measured=" << sink.measured_ticks << "\n";
    std::cout << "p99 latency ms: dl=" << fmt_g6(st.lat_dl[2])
              << " ul=" << fmt_g6(st.lat_ul[2])
              << "  xn bits: " << sink.overhead.total() << "\n";
    std::cout << "wrote " << (dir / "metrics.csv").string() << ", "
              << (dir / "summary.json").string() << ", "
              << (dir / "manifest.txt").string();
    if (trace_xn) std::cout << ", " << (dir / "xn_trace.txt").string();
    std::cout << "\n";
    return 0;
}

int cmd_compare(const std::string& path, const std::vector<std::string>& schemes,
                const std::vector<uint64_t>& seeds, const std::string& out_dir) {
    const Scenario base = load_or_default(path);

    // Materialize and validate every job before spawning anything, so a bad
    // scheme name or scenario fails fast with exit code 2.
    std::vector<Scenario> jobs;
    for (const auto& name : schemes) {
        const Scheme scheme = parse_scheme(name);
        for (uint64_t seed : seeds) {
            Scenario s = base;
            s.scheme = scheme;
            s.seed = seed;
            validate_scenario(s);
            jobs.push_back(std::move(s));
        }
    }
    if (jobs.empty()) throw ConfigError("compare needs at least one scheme and one seed");

    // Drops are independent; a small pool keeps peak memory bounded. Workers
    // reduce each run to its RunStats immediately and drop the sample vectors.
    std::vector<RunStats> rows(jobs.size());
    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mu;

    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t n_workers = std::min({jobs.size(), static_cast<size_t>(hw), size_t{5}});
    std::vector<std::thread> pool;
    for (size_t w = 0; w < n_workers; ++w) {
        pool.emplace_back([&] {
            while (!failed.load()) {
                const size_t i = next.fetch_add(1);
                if (i >= jobs.size()) break;
                try {
                    rows[i] = compute_stats(run_simulation(jobs[i]));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);

    fs::create_directories(out_dir);
    const fs::path out = fs::path(out_dir) / "comparison.csv";
    write_text_file(out.string(), comparison_csv(rows));
    std::cout << "ran " << jobs.size() << " simulations (" << schemes.size()
              << " schemes x " << seeds.size() << " seeds)\n";
    std::cout << "wrote " << out.string() << "\n";
    return 0;
}

int cmd_codebook(const std::string& path, bool dump) {
    const Scenario s = load_or_default(path);
    validate_scenario(s);
    const Codebook cb = codebook_from(s);
    if (dump) {
        std::cout << serialize_codebook(cb);
    } else {
        std::cout << "codebook: " << cb.size() << " frame configurations in "
                  << cb.groups.size() << " groups, " << cb.index_bits
                  << " index bits (frame " << cb.frame_len << " slots, dynamic "
                  << cb.dss_len << ")\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Multi-cell dynamic-TDD system simulator"};
    app.require_subcommand(0, 1);

    bool print_defaults = false;
    app.add_flag("--print-defaults", print_defaults,
                 "Print the default scenario file and exit");

    std::string scenario_path;
    uint64_t seed = 0;
    std::string scheme;
    std::string out_dir = "out";
    bool trace_xn = false;

    auto* run = app.add_subcommand("run", "Run one simulation and write its outputs");
    run->add_option("scenario", scenario_path, "Scenario file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    auto* seed_opt = run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--scheme", scheme, "Override the coordination scheme");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();
    run->add_flag("--trace-xn", trace_xn, "Also write the per-frame coordination trace");

    std::vector<std::string> schemes{"hfcs", "nc", "scc", "cfc", "static"};
    std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
    auto* compare = app.add_subcommand("compare", "Run a scheme x seed matrix and join the stats");
    compare->add_option("scenario", scenario_path, "Scenario file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    compare->add_option("--schemes", schemes, "Schemes to run")
        ->delimiter(',')
        ->capture_default_str();
    compare->add_option("--seeds", seeds, "Seeds to run per scheme")
        ->delimiter(',')
        ->capture_default_str();
    compare->add_option("--out", out_dir, "Output directory")->capture_default_str();

    bool dump = false;
    auto* codebook = app.add_subcommand("codebook", "Inspect the scenario's frame codebook");
    codebook->add_option("scenario", scenario_path, "Scenario file (defaults when omitted)")
        ->check(CLI::ExistingFile);
    codebook->add_flag("--dump", dump, "Print every frame configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (print_defaults) {
            std::cout << serialize_scenario(Scenario{});
            return 0;
        }
        if (run->parsed())
            return cmd_run(scenario_path, seed_opt->count() > 0, seed, scheme, out_dir,
                           trace_xn);
        if (compare->parsed()) return cmd_compare(scenario_path, schemes, seeds, out_dir);
        if (codebook->parsed()) return cmd_codebook(scenario_path, dump);
        std::cout << app.help();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace tddsim
