#pragma once

#include "rcgs/common.hpp"
#include "rcgs/lyapunov.hpp"
#include "rcgs/reservoir.hpp"
#include "rcgs/training.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace rcgs {

/// Time, in units of lambda1 * t, until the normalized error
/// ||prediction - truth|| / sqrt(D) first exceeds `threshold`. Returns the full
/// horizon when it never does.
double valid_time(const Trajectory& truth, const Trajectory& prediction, double threshold, double lambda1);

struct EvaluationOptions {
    int n_starts = 20;
    /// Driven synchronization before each forecast, time units.
    double sync_time = 10.0;
    double horizon = 20.0;
    double threshold = 0.4;
    /// Leading driver exponent, 1/time.
    double lambda1 = 0.906;
    int workers = 1;
};

struct ForecastMetrics {
    std::vector<double> per_start_valid_time;
    std::vector<Eigen::Index> start_index;
    /// Time at which each forecast begins (end of its synchronization window).
    std::vector<double> start_time;
    double mean_valid_time = 0.0;
    /// Population standard deviation of per_start_valid_time.
    double std_valid_time = 0.0;
    double threshold = 0.0;
    int n_starts = 0;
    double lambda1_driver = 0.0;
};

/// Evenly spaced, non-overlapping windows over `truth`; each is synchronized
/// by driving for sync_time then forecast for horizon.
ForecastMetrics mean_valid_time(const Reservoir& res, const Readout& readout, const Trajectory& truth,
                                const EvaluationOptions& opt);

/// Tangent linearization of the autonomous (readout-closed) reservoir at r.
class RcJacobian {
public:
    RcJacobian(const Reservoir& res, const Readout& readout, const Vector& r);

    Vector apply(const Vector& v) const;
    /// Column-wise action on a row-major block.
    void apply(const RowMatrix& v, RowMatrix& out) const;
    /// Dense N x N form; for small reservoirs and tests.
    Matrix dense() const;

    /// d phi / d r (D x N).
    const Matrix& readout_jacobian() const noexcept { return g_; }
    /// 1 - tanh^2(A r + sigma W phi(r)).
    const Vector& slope() const noexcept { return slope_; }

private:
    const Reservoir& res_;
    Vector slope_;
    Matrix g_;
};

/// d phi / d r for a readout (D x N).
Matrix readout_jacobian(const Readout& readout, const Vector& r);

/// Autonomous vector field gamma (-r + tanh(A r + sigma W phi(r))).
Vector autonomous_vector_field(const Reservoir& res, const Readout& readout, const Vector& r);

struct RcLyapunovOptions {
    /// Autonomous evolution discarded before tangent evolution starts.
    double transient_time = 10.0;
    /// Infinity-norm bound on r; leaving it flags the result.
    double state_bound = 2.0;
    BenettinOptions benettin;
};

/// Benettin spectrum of the autonomous reservoir with an N x k tangent block.
LyapunovSpectrum lyapunov_spectrum_rc(const Reservoir& res, const Readout& readout, const Vector& r0, int k,
                                      double dt, long n_steps, const RcLyapunovOptions& opt = {});

struct SpectrumMatchReport {
    LyapunovSpectrum driver_spectrum;
    LyapunovSpectrum rc_spectrum;
    /// |rc_i - driver_i| for the first D exponents.
    std::vector<double> per_exponent_error;
    /// Per driver exponent: "positive", "zero" or "negative".
    std::vector<std::string> classification;
    std::vector<bool> matched;
    bool leading_match = false;
    bool tail_negative = false;
    double tolerance = 0.0;
    double zero_tolerance = 0.0;
};

/// Positive driver exponents match within tol * |lambda_i|; an exponent with
/// |lambda_i| <= zero_fraction * lambda_1 is the flow's zero exponent and
/// matches within that absolute band. Negative ones are reported only.
SpectrumMatchReport spectrum_match(const LyapunovSpectrum& driver, const LyapunovSpectrum& rc, double tol,
                                   double zero_fraction = 0.05);

/// Columns: start_index,t_start,valid_time_lyap
void write_metrics_csv(const std::filesystem::path& path, const ForecastMetrics& m);
std::string metrics_summary_json(const ForecastMetrics& m, int indent = 2);
std::string spectrum_match_json(const SpectrumMatchReport& r, int indent = 2);

}  // namespace rcgs
