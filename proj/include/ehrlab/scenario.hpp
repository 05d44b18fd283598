#pragma once

// Run orchestration: initialise, evolve, sample observables, evaluate the
// balance laws, write outputs. Plus the convergence sweep and the invariant
// checks behind the `check` verb.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ehrlab/config.hpp"
#include "ehrlab/ehrenfest.hpp"
#include "ehrlab/io.hpp"
#include "ehrlab/observables.hpp"

namespace ehrlab {

struct RunOptions {
    bool write_outputs = true;
    std::optional<std::filesystem::path> out_dir;  // overrides config
    long dump_every = 0;                           // > 0 overrides config
    std::optional<Snapshot> resume;
};

struct RunResult {
    std::vector<TrajectoryRecord> records;
    std::vector<BalanceSample> samples;
    std::optional<EhrenfestReport> report;
    std::vector<double> continuity;        // per dump with both neighbours available
    std::vector<Vec3> classical;           // comparator positions at the dump times
    double max_classical_deviation = -1.0; // < 0 when the comparator was skipped
    double orbit_radius = 0.0;             // |P0| / (|e| |B|) for magnetic runs, else 0
    MatterState final_state;
    long steps_done = 0;
    bool aborted = false;
    std::string abort_message;
    std::vector<std::string> warnings;
};

/// Throws InvalidArgument for configs that cannot start (e.g. dt above the
/// stability bound). Guard trips during the run set `aborted` instead and
/// leave last_good.snap in the output directory.
RunResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Member configs of a sweep: width-halving divides the packet width by 2 per
/// level; dt-halving divides dt by 2 and doubles steps and dump_every.
std::vector<ScenarioConfig> sweep_members(const ScenarioConfig& config);

struct SweepRow {
    double parameter = 0.0;
    double res_integral = 0.0;     // max relative momentum residual, integral form
    double res_point = 0.0;        // RMS relative, point form
    double res_corrected = 0.0;    // RMS relative, point + first-order correction
    double max_continuity = 0.0;
    double max_classical_deviation = -1.0;
    bool aborted = false;
};

struct SweepResult {
    SweepKind kind = SweepKind::None;
    std::vector<SweepRow> rows;
    double order_corrected = 0.0;
    double order_integral = 0.0;
    double order_continuity = 0.0;
};

/// Runs the members concurrently (EHRLAB_THREADS caps workers; 0 = auto),
/// each in out/level_<i>, and writes out/sweep_report.txt.
SweepResult run_sweep(const ScenarioConfig& config, const RunOptions& options = {});

struct CheckLine {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Invariant suite on the initial state, without a full run.
std::vector<CheckLine> run_checks(const ScenarioConfig& config);

/// Smooth periodic real function: a few low Fourier modes with pseudo-random
/// amplitudes and phases from a fixed seed.
RealField smooth_periodic_function(const GridPtr& grid, unsigned seed, int modes, double amplitude);

/// Worker count from EHRLAB_THREADS (unset or 0 = hardware concurrency).
unsigned worker_count();

std::string report_text(const ScenarioConfig& config, const RunResult& result);

}  // namespace ehrlab
