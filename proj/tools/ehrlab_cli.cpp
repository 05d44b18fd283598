// ehrlab: run, check and sweep packet-balance scenarios.

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "ehrlab/errors.hpp"
#include "ehrlab/scenario.hpp"

using namespace ehrlab;

namespace {

int do_run(const std::string& config_path, const std::string& out, long dump_every, const std::string& resume) {
    const ScenarioConfig cfg = load_config(config_path);
    RunOptions opt;
    if (!out.empty()) opt.out_dir = out;
    opt.dump_every = dump_every;
    if (!resume.empty()) opt.resume = read_snapshot(resume);
    const RunResult r = run_scenario(cfg, opt);
    std::cout << report_text(cfg, r);
    std::cout << "outputs written to " << (opt.out_dir ? *opt.out_dir : cfg.output_dir).string() << "\n";
    if (r.aborted) return 3;
    return r.report && !r.report->all_pass ? 1 : 0;
}

int do_check(const std::string& config_path) {
    const ScenarioConfig cfg = load_config(config_path);
    bool ok = true;
    for (const auto& line : run_checks(cfg)) {
        std::cout << (line.pass ? "PASS " : "FAIL ") << std::left << std::setw(36) << line.name << line.detail << "\n";
        ok = ok && line.pass;
    }
    return ok ? 0 : 1;
}

int do_sweep(const std::string& config_path, const std::string& out, long dump_every) {
    const ScenarioConfig cfg = load_config(config_path);
    RunOptions opt;
    if (!out.empty()) opt.out_dir = out;
    opt.dump_every = dump_every;
    const SweepResult s = run_sweep(cfg, opt);
    std::cout << std::setprecision(6);
    std::cout << (s.kind == SweepKind::WidthHalving ? "width" : "dt")
              << "  res_integral_max  res_point_rms  res_corrected_rms  continuity_max\n";
    for (const auto& r : s.rows)
        std::cout << r.parameter << "  " << r.res_integral << "  " << r.res_point << "  " << r.res_corrected << "  "
                  << r.max_continuity << (r.aborted ? "  (aborted)" : "") << "\n";
    std::cout << "fitted order: corrected " << s.order_corrected << ", integral " << s.order_integral
              << ", continuity " << s.order_continuity << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relativistic wave-packet energy/momentum balance checker"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    std::string resume;
    long dump_every = 0;

    auto* run = app.add_subcommand("run", "Evolve a scenario and write trajectory, residuals, report and snapshots");
    run->add_option("config", config, "Scenario config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory (overrides [output] directory)");
    run->add_option("--dump-every", dump_every, "Sampling interval in steps (overrides config)")
        ->check(CLI::PositiveNumber);
    run->add_option("--resume", resume, "Continue from a snapshot file")->check(CLI::ExistingFile);

    auto* check = app.add_subcommand("check", "Run the invariant suite on the initial state");
    check->add_option("config", config, "Scenario config file")->required()->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "Run a width- or dt-halving convergence study");
    sweep->add_option("config", config, "Scenario config file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", out, "Output directory (overrides [output] directory)");
    sweep->add_option("--dump-every", dump_every, "Sampling interval in steps at the coarsest level")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return do_run(config, out, dump_every, resume);
        if (*check) return do_check(config);
        if (*sweep) return do_sweep(config, out, dump_every);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
