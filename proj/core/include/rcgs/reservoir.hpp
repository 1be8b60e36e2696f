#pragma once

#include "rcgs/common.hpp"
#include "rcgs/driver_systems.hpp"
#include "rcgs/sparse.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rcgs {

struct ReservoirParams {
    int n_nodes = 2000;
    int input_dim = 3;
    double spectral_radius = 0.9;
    /// Probability that an adjacency entry is nonzero.
    double pnz = 0.02;
    /// Timescale constant, 1/time.
    double gamma = 5.0;
    /// Input weight applied at evaluation time.
    double sigma = 0.1;
    std::uint64_t seed = 0;

    /// Field ranges only.
    void validate_ranges() const;
    /// Ranges plus the embedding requirement n_nodes > input_dim.
    void validate() const;

    bool operator==(const ReservoirParams&) const = default;
};

/// Index/value triplets of a sparse matrix, row-major order.
struct SparseTriplets {
    std::int64_t n = 0;
    std::vector<std::int64_t> rows;
    std::vector<std::int64_t> cols;
    std::vector<double> values;

    std::size_t nnz() const noexcept { return values.size(); }
    Eigen::SparseMatrix<double, Eigen::RowMajor> to_sparse() const;
    Matrix to_dense() const;
    bool operator==(const SparseTriplets&) const = default;
};

/// Draws entries independently with probability pnz, values uniform on [-1, 1],
/// then rescales so the dominant eigenvalue magnitude equals spectral_radius.
/// The raw draw depends only on (n_nodes, pnz, seed).
SparseTriplets build_adjacency(const ReservoirParams& params);

/// Entries uniform on [-1, 1]; independent of sigma and spectral_radius.
Matrix build_input_matrix(const ReservoirParams& params);

enum class SpectralMethod { kAuto, kArnoldi, kDense };

struct SpectralRadiusOptions {
    SpectralMethod method = SpectralMethod::kAuto;
    double tolerance = 1e-6;
    int krylov_dim = 80;
    int max_restarts = 400;
    /// kAuto falls back to the dense solver when Arnoldi fails and n <= this.
    int dense_limit = 500;
    std::uint64_t start_seed = 0x5eed;
};

/// Magnitude of the dominant eigenvalue.
double estimate_spectral_radius(const SparseTriplets& matrix, const SpectralRadiusOptions& opt = {});
double dense_spectral_radius(const Matrix& matrix);

class Reservoir {
public:
    /// Random construction from params (validate() applies).
    static Reservoir build(const ReservoirParams& params);
    /// Explicit matrices; only validate_ranges() applies.
    static Reservoir from_matrices(const ReservoirParams& params, SparseTriplets adjacency, Matrix input_matrix);

    const ReservoirParams& params() const noexcept { return params_; }
    int n() const noexcept { return params_.n_nodes; }
    int input_dim() const noexcept { return params_.input_dim; }
    const SparseTriplets& adjacency() const noexcept { return triplets_; }
    const CsrMatrix& adjacency_csr() const noexcept { return a_; }
    const Matrix& input_matrix() const noexcept { return w_; }

    /// gamma * (-r + tanh(A r + drive)) where drive is the already-weighted
    /// input sigma * W u. `out` must not alias `r`.
    void rhs(const Vector& r, const Vector& drive, Vector& out) const;
    /// sigma * W u.
    Vector input_drive(const Vector& u) const;

    /// Uniform on [-1, 1]^N from the given seed.
    Vector random_state(std::uint64_t seed) const;

    bool operator==(const Reservoir& other) const
    {
        return params_ == other.params_ && triplets_ == other.triplets_ && w_ == other.w_;
    }

private:
    Reservoir(const ReservoirParams& params, SparseTriplets triplets, Matrix w);

    ReservoirParams params_;
    SparseTriplets triplets_;
    CsrMatrix a_;
    Matrix w_;
};

/// dr/dt = gamma (-r + tanh(A r + sigma W u)).
Vector reservoir_vector_field(const Reservoir& res, const Vector& r, const Vector& u);

struct ReservoirTrajectory {
    double dt = 0.0;
    double t0 = 0.0;
    RowMatrix states;
};

/// Called with (sample index, reservoir state at that sample).
using StateVisitor = std::function<void(Eigen::Index, const Vector&)>;
using EnsembleVisitor = std::function<void(Eigen::Index, const std::vector<Vector>&)>;

/// Drives the reservoir with RK4 at the input's dt, interpolating the input
/// linearly at half steps. The visitor sees every sample from `first` to
/// `last` inclusive (-1 means the final input row), including the initial one.
/// Returns the state at `last`.
Vector drive_visit(const Reservoir& res, const Trajectory& input, const Vector& r0, const StateVisitor& visit,
                   Eigen::Index first = 0, Eigen::Index last = -1);

/// Several independent copies driven by the same input, advanced in lockstep.
void drive_ensemble(const Reservoir& res, const Trajectory& input, std::vector<Vector>& states,
                    const EnsembleVisitor& visit, Eigen::Index first = 0, Eigen::Index last = -1);

/// Full state history sampled at the input's sample times.
ReservoirTrajectory drive(const Reservoir& res, const Trajectory& input, const Vector& r0);

/// Final state only.
Vector drive_to_end(const Reservoir& res, const Trajectory& input, const Vector& r0);

class Readout;

struct ForecastResult {
    Trajectory prediction;
    ReservoirTrajectory states;
};

/// Closed-loop integration substituting the readout for the input at every
/// RK4 stage. n_steps = 0 returns r0 and the readout at r0.
ForecastResult forecast(const Reservoir& res, const Readout& readout, const Vector& r0, long n_steps, double dt,
                        double t0 = 0.0);

/// As forecast() without storing reservoir states. `r` is advanced in place.
Trajectory forecast_observable(const Reservoir& res, const Readout& readout, Vector& r, long n_steps, double dt,
                               double t0 = 0.0);

}  // namespace rcgs
