#pragma once

#include <rcgs/evaluation.hpp>
#include <rcgs/gs_test.hpp>
#include <rcgs/reservoir.hpp>
#include <rcgs/search.hpp>
#include <rcgs/training.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace rcgs::cli {

struct DriverConfig {
    std::string system = "lorenz63";
    int dim = 3;
    std::map<std::string, double> params;
    double dt = 0.01;
    /// Attractor relaxation discarded before recording.
    double transient = 100.0;
    double duration = 1200.0;
    std::uint64_t seed = 0;
    bool standardize = true;
    /// Integration length of the reference Benettin run.
    double lyapunov_time = 1000.0;
};

struct TrainingConfig {
    TrainOptions options;
    /// Leading part of the generated series used for training; the rest is held out.
    double training_time = 500.0;
};

struct EvaluationConfig {
    EvaluationOptions options;
    /// Overrides the driver's computed lambda1 when set.
    std::optional<double> lambda1;
    /// RC exponents to compute; defaults to dim + 5.
    std::optional<int> k;
    double lyapunov_time = 100.0;
    RcLyapunovOptions lyapunov;
    double match_tolerance = 0.15;
};

struct SearchConfig {
    SearchAxes axes;
    int trials_per_cell = 1;
    Gate gate = Gate::kGsThenTrain;
    bool shared_network = false;
    int lyapunov_k = 0;
};

struct RunConfig {
    DriverConfig driver;
    ReservoirParams reservoir;
    TrainingConfig training;
    EvaluationConfig evaluation;
    GSOptions gs;
    std::optional<SearchConfig> search;
    std::string output = "rcgs-out";
    int workers = 1;

    /// Range and consistency checks across sections.
    void validate() const;
    int rc_exponents() const { return evaluation.k.value_or(driver.dim + 5); }
};

RunConfig default_config();
/// Strict: unknown keys and wrongly typed values raise ErrorKind::kInvalidArgument.
RunConfig parse_config(const std::string& json_text);
/// Canonical JSON with every field spelled out.
std::string config_to_json(const RunConfig& config, int indent = 2);

/// Sets every seed in the config to `seed`.
void override_seeds(RunConfig& config, std::uint64_t seed);

SearchPlan make_search_plan(const RunConfig& config);

}  // namespace rcgs::cli
