#pragma once

#include "rcgs/common.hpp"
#include "rcgs/driver_systems.hpp"
#include "rcgs/reservoir.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace rcgs {

struct GSOptions {
    /// Driving time discarded before the verdict window is considered.
    double transient_time = 10.0;
    double test_time = 50.0;
    /// Threshold on the per-node RMS distance ||r_A - r_B|| / sqrt(N).
    double tolerance = 1e-8;
    /// Fraction of test_time at the end over which the distance must stay below tolerance.
    double verdict_window = 0.1;
    /// Distances at or below this are treated as numerically zero when fitting.
    double distance_floor = 1e-14;
    std::size_t scatter_points = 1000;
};

struct ConditionalLe {
    /// Least-squares slope of ln d against t (1/time).
    double slope = 0.0;
    /// Too few points above the floor to fit; slope is -infinity.
    bool faster_than_measurable = false;
    /// First time the distance is at or below the floor, NaN if never.
    double floor_crossing_time = 0.0;
    std::size_t points_used = 0;
};

/// Fits ln d = a + slope * t over the points preceding the first floor
/// crossing whose distance is below `saturation`. Needs at least 10 points.
ConditionalLe estimate_conditional_le(const std::vector<std::pair<double, double>>& distance_series,
                                      double floor = 1e-14, double saturation = INFINITY);

struct GSReport {
    bool converged = false;
    /// Largest per-node RMS distance over the verdict window.
    double final_distance = 0.0;
    double conditional_le = 0.0;
    bool conditional_le_faster_than_measurable = false;
    double floor_crossing_time = 0.0;
    double transient_time = 0.0;
    double test_time = 0.0;
    double tolerance_used = 0.0;
    /// The driven reservoir itself diverged; the verdict is a failure.
    bool unstable = false;
    std::string diagnostic;
    /// (r_A[0], r_B[0]) sampled over the verdict window.
    std::vector<std::pair<double, double>> scatter_sample;
    /// (t, per-node RMS distance) at every input sample.
    std::vector<std::pair<double, double>> distance_series;
};

/// Auxiliary-system test: two copies of the reservoir driven by the same
/// input from the given initial states.
GSReport auxiliary_test_from_states(const Reservoir& res, const Trajectory& input, const Vector& r_a0,
                                    const Vector& r_b0, const GSOptions& opt = {});

/// Initial states drawn uniform on [-1, 1]^N from the two seeds.
GSReport auxiliary_test(const Reservoir& res, const Trajectory& input, std::pair<std::uint64_t, std::uint64_t> seeds,
                        const GSOptions& opt = {});

/// Seed pair used by scans for a given reservoir seed.
std::pair<std::uint64_t, std::uint64_t> auxiliary_seeds(std::uint64_t reservoir_seed);

struct GSCellSummary {
    ReservoirParams params;
    int trials = 0;
    double pass_fraction = 0.0;
    /// Mean over trials with a measurable slope; NaN when there is none.
    double mean_conditional_le = 0.0;
    int unstable = 0;
    std::vector<std::string> errors;
};

/// Seed for trial `trial` of a cell whose params carry `base_seed`.
std::uint64_t trial_seed(std::uint64_t base_seed, int trial);

/// One summary per grid entry, in grid order. Cell failures are recorded, never thrown.
std::vector<GSCellSummary> gs_region_scan(const std::vector<ReservoirParams>& grid, const Trajectory& input,
                                          int trials_per_cell, const GSOptions& opt = {}, int workers = 1);

/// Columns: sr,pnz,gamma,sigma,pass_fraction,mean_cond_le,trials
void write_gs_scan_csv(const std::filesystem::path& path, const std::vector<GSCellSummary>& cells);
std::string gs_report_to_json(const GSReport& report, int indent = 2);
void write_gs_scatter_csv(const std::filesystem::path& path, const GSReport& report);

}  // namespace rcgs
