#pragma once

// Trajectory/residual CSV files, text reports and binary snapshots.
//
// Snapshot layout: a text header
//   EHRLAB1
//   key = value      (model, dims, points, extent, t, m, e, components, ...)
//   <blank line>
// followed by little-endian float64 (re, im) pairs, component by component,
// each in row-major (x, y, z) order.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ehrlab/ehrenfest.hpp"
#include "ehrlab/matter.hpp"
#include "ehrlab/observables.hpp"

namespace ehrlab {

/// Writes via a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string trajectory_csv(const std::vector<TrajectoryRecord>& records);
void write_timeseries(const std::filesystem::path& path, const std::vector<TrajectoryRecord>& records);
std::vector<TrajectoryRecord> read_timeseries(const std::filesystem::path& path);

std::string residuals_csv(const std::vector<BalanceSample>& samples);

struct Snapshot {
    MatterState state;
    std::map<std::string, std::string> extra;  // optional header keys beyond the fixed set
};

std::string encode_snapshot(const MatterState& state, const std::map<std::string, std::string>& extra = {});
Snapshot decode_snapshot(const std::string& bytes);

void write_snapshot(const std::filesystem::path& path, const MatterState& state,
                    const std::map<std::string, std::string>& extra = {});
Snapshot read_snapshot(const std::filesystem::path& path);

/// Shortest decimal form that reads back to the same double.
std::string exact_decimal(double v);

}  // namespace ehrlab
