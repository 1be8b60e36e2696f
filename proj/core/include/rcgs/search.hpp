#pragma once

#include "rcgs/evaluation.hpp"
#include "rcgs/gs_test.hpp"
#include "rcgs/reservoir.hpp"
#include "rcgs/training.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rcgs {

enum class Gate { kGsOnly, kGsThenTrain, kTrainAll };

std::string to_string(Gate gate);
Gate gate_from_string(const std::string& name);

/// Value lists for the scanned parameters; an empty list keeps the fixed value.
struct SearchAxes {
    std::vector<double> spectral_radius;
    std::vector<double> pnz;
    std::vector<double> gamma;
    std::vector<double> sigma;
};

struct SearchPlan {
    SearchAxes axes;
    /// Values for every parameter not on an axis. The seed field is ignored.
    ReservoirParams fixed;
    int trials_per_cell = 1;
    Gate gate = Gate::kGsThenTrain;
    std::uint64_t base_seed = 0;
    /// Cells that differ only in spectral radius, gamma or sigma share one
    /// network draw (the raw adjacency and W depend on pnz and trial only).
    bool shared_network = false;

    GSOptions gs;
    TrainOptions training;
    /// Leading part of the input used for the GS test and training; the rest is for evaluation.
    double training_time = 500.0;
    EvaluationOptions evaluation;

    /// Number of RC exponents per trained cell; 0 disables the spectrum stage.
    int lyapunov_k = 0;
    double lyapunov_time = 100.0;
    RcLyapunovOptions lyapunov;
    /// Reference for spectrum matching; required when lyapunov_k > 0.
    std::optional<LyapunovSpectrum> driver_spectrum;
    double match_tolerance = 0.15;

    int workers = 1;

    void validate() const;
    /// Cartesian product size, without trials.
    std::size_t cell_count() const;
    /// Cell parameters in row-major order over (sr, pnz, gamma, sigma); seed left at zero.
    std::vector<ReservoirParams> cells() const;
};

/// Reservoir seed for one cell and trial.
std::uint64_t cell_seed(const SearchPlan& plan, const ReservoirParams& cell, int trial);

struct StageTimes {
    double gs = 0.0;
    double train = 0.0;
    double evaluate = 0.0;
    double lyapunov = 0.0;
};

struct CellResult {
    std::size_t cell = 0;
    int trial = 0;
    /// Coordinates plus the derived seed.
    ReservoirParams params;
    /// Verdict and conditional exponent; the distance series is dropped.
    std::optional<GSReport> gs;
    bool trained = false;
    std::optional<TrainingDiagnostics> training;
    std::optional<ForecastMetrics> metrics;
    std::optional<SpectrumMatchReport> spectrum;
    StageTimes wall_clock;
    std::vector<std::string> errors;
};

/// Every (cell, trial) pair, ordered by cell then trial. Stage failures are
/// recorded in the result and never abort the search.
std::vector<CellResult> run_search(const SearchPlan& plan, const Trajectory& input);

struct SavingsReport {
    double gated_cost = 0.0;
    double ungated_cost_estimate = 0.0;
    /// Absent when no cell was trained.
    std::optional<double> ratio;
    std::size_t results = 0;
    std::size_t gs_passing = 0;
    std::size_t trained = 0;
};

/// Gated cost: every GS test plus training and evaluation of GS-passing
/// results. Ungated cost: training and evaluation of every result, using the
/// measured cost where a result was trained and the mean measured cost otherwise.
SavingsReport savings_report(const std::vector<CellResult>& results);

struct SrSweepPoint {
    double spectral_radius = 0.0;
    int trials = 0;
    /// Averages over trials that produced the quantity; NaN when none did.
    double mean_valid_time = 0.0;
    double gs_pass_fraction = 0.0;
    Vector rc_exponents;
};

/// Search with a single spectral-radius axis, summarized per radius.
std::vector<SrSweepPoint> sr_sweep(const SearchPlan& plan, const Trajectory& input,
                                   std::vector<CellResult>* details = nullptr);
std::vector<SrSweepPoint> summarize_sr_sweep(const SearchPlan& plan, const std::vector<CellResult>& results);

/// Flattened results, one row per cell and trial. No timing fields.
void write_results_csv(const std::filesystem::path& path, const std::vector<CellResult>& results);
/// Columns: sr,mean_valid_time,gs_pass_fraction,trials,lambda1..lambdak
void write_sr_sweep_csv(const std::filesystem::path& path, const std::vector<SrSweepPoint>& points);
/// Plan echo, counts and recorded failures.
std::string search_summary_json(const SearchPlan& plan, const std::vector<CellResult>& results, int indent = 2);
/// Per-result stage times and the savings report.
std::string search_timing_json(const std::vector<CellResult>& results, int indent = 2);

}  // namespace rcgs
