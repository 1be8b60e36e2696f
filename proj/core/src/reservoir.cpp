#include "rcgs/reservoir.hpp"

#include "rcgs/rng.hpp"
#include "rcgs/training.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <sstream>

namespace rcgs {

void ReservoirParams::validate_ranges() const
{
    require(n_nodes >= 1, "reservoir: n_nodes must be positive");
    require(input_dim >= 1, "reservoir: input_dim must be positive");
    require(std::isfinite(spectral_radius) && spectral_radius > 0.0, "reservoir: spectral_radius must be > 0");
    require(std::isfinite(pnz) && pnz > 0.0 && pnz <= 1.0, "reservoir: pnz must lie in (0, 1]");
    require(std::isfinite(gamma) && gamma > 0.0, "reservoir: gamma must be > 0");
    require(std::isfinite(sigma) && sigma >= 0.0, "reservoir: sigma must be >= 0");
}

void ReservoirParams::validate() const
{
    validate_ranges();
    require(n_nodes > input_dim, "reservoir: n_nodes must exceed input_dim");
}

Eigen::SparseMatrix<double, Eigen::RowMajor> SparseTriplets::to_sparse() const
{
    std::vector<Eigen::Triplet<double, std::int64_t>> t;
    t.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) t.emplace_back(rows[i], cols[i], values[i]);
    Eigen::SparseMatrix<double, Eigen::RowMajor> m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
}

Matrix SparseTriplets::to_dense() const
{
    Matrix m = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < values.size(); ++i) m(rows[i], cols[i]) += values[i];
    return m;
}

double dense_spectral_radius(const Matrix& matrix)
{
    require(matrix.rows() == matrix.cols() && matrix.rows() >= 1, "dense_spectral_radius: matrix must be square");
    Eigen::EigenSolver<Matrix> es(matrix, false);
    if (es.info() != Eigen::Success) fail(ErrorKind::kConvergence, "dense eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

struct ArnoldiOutcome {
    double radius = 0.0;
    bool converged = false;
    int restarts = 0;
    double residual = 0.0;
};

// Explicitly restarted Arnoldi. The restart vector is the real span of the
// dominant Ritz vector, which keeps a complex-conjugate pair in play.
ArnoldiOutcome arnoldi_radius(const CsrMatrix& a, const SpectralRadiusOptions& opt)
{
    const Eigen::Index n = a.rows();
    const Eigen::Index m = std::min<Eigen::Index>(opt.krylov_dim, n);

    Rng rng(opt.start_seed);
    Vector v0(n);
    for (Eigen::Index i = 0; i < n; ++i) v0[i] = rng.uniform(-1.0, 1.0);
    v0.normalize();

    Matrix v(n, m + 1);
    Matrix h(m + 1, m);
    Vector w(n);
    double previous = -1.0;
    ArnoldiOutcome out;

    for (int restart = 0; restart <= opt.max_restarts; ++restart) {
        out.restarts = restart;
        v.col(0) = v0;
        h.setZero();
        Eigen::Index built = m;
        bool invariant = false;
        for (Eigen::Index j = 0; j < m; ++j) {
            a.multiply(v.col(j).data(), w.data());
            const double wnorm = w.norm();
            auto basis = v.leftCols(j + 1);
            Vector coef = basis.transpose() * w;
            w.noalias() -= basis * coef;
            Vector again = basis.transpose() * w;
            w.noalias() -= basis * again;
            coef += again;
            h.col(j).head(j + 1) = coef;
            const double beta = w.norm();
            h(j + 1, j) = beta;
            if (beta <= 1e-13 * std::max(wnorm, 1e-300)) {
                built = j + 1;
                invariant = true;
                break;
            }
            v.col(j + 1) = w / beta;
        }

        Eigen::EigenSolver<Matrix> es(h.topLeftCorner(built, built), true);
        if (es.info() != Eigen::Success) return out;
        const auto& theta = es.eigenvalues();
        Eigen::Index best = 0;
        theta.cwiseAbs().maxCoeff(&best);
        const double radius = std::abs(theta[best]);
        out.radius = radius;
        if (invariant || radius == 0.0) {
            out.converged = true;
            out.residual = 0.0;
            return out;
        }

        Eigen::VectorXcd s = es.eigenvectors().col(best);
        s /= s.norm();
        const double residual = std::abs(h(built, built - 1)) * std::abs(s[built - 1]);
        out.residual = residual / radius;
        if (out.residual < 1e-3 * opt.tolerance && std::abs(radius - previous) <= 1e-2 * opt.tolerance * radius) {
            out.converged = true;
            return out;
        }
        previous = radius;

        const Eigen::VectorXcd y = v.leftCols(built).cast<std::complex<double>>() * s;
        v0 = y.real() + y.imag();
        const double norm = v0.norm();
        if (!(norm > 0.0)) return out;
        v0 /= norm;
    }
    return out;
}

}  // namespace

double estimate_spectral_radius(const SparseTriplets& matrix, const SpectralRadiusOptions& opt)
{
    require(matrix.n >= 1, "estimate_spectral_radius: empty matrix");
    require(matrix.nnz() > 0, "estimate_spectral_radius: matrix has no nonzero entries");

    if (opt.method == SpectralMethod::kDense) return dense_spectral_radius(matrix.to_dense());

    const ArnoldiOutcome outcome = arnoldi_radius(CsrMatrix(matrix), opt);
    if (outcome.converged) return outcome.radius;
    if (opt.method == SpectralMethod::kAuto && matrix.n <= opt.dense_limit)
        return dense_spectral_radius(matrix.to_dense());

    std::ostringstream msg;
    msg << "spectral radius iteration did not converge: n=" << matrix.n << " restarts=" << outcome.restarts
        << " last estimate=" << outcome.radius << " relative residual=" << outcome.residual;
    fail(ErrorKind::kConvergence, msg.str());
}

SparseTriplets build_adjacency(const ReservoirParams& params)
{
    params.validate_ranges();
    Rng rng(stream_seed(params.seed, Stream::kAdjacency));
    SparseTriplets t;
    t.n = params.n_nodes;
    const auto expected = static_cast<std::size_t>(params.pnz * params.n_nodes * static_cast<double>(params.n_nodes));
    t.rows.reserve(expected + expected / 8 + 16);
    t.cols.reserve(expected + expected / 8 + 16);
    t.values.reserve(expected + expected / 8 + 16);
    for (std::int64_t i = 0; i < t.n; ++i) {
        for (std::int64_t j = 0; j < t.n; ++j) {
            if (rng.uniform01() < params.pnz) {
                t.rows.push_back(i);
                t.cols.push_back(j);
                t.values.push_back(rng.uniform(-1.0, 1.0));
            }
        }
    }
    if (t.nnz() == 0)
        fail(ErrorKind::kInvalidArgument, "build_adjacency: random draw has no nonzero entries; "
                                          "use a different seed or a larger pnz");

    const double raw = estimate_spectral_radius(t);
    if (!(raw > 0.0))
        fail(ErrorKind::kInvalidArgument, "build_adjacency: random draw is nilpotent (spectral radius 0); "
                                          "use a different seed or a larger pnz");
    const double scale = params.spectral_radius / raw;
    for (double& v : t.values) v *= scale;
    return t;
}

Matrix build_input_matrix(const ReservoirParams& params)
{
    params.validate_ranges();
    Rng rng(stream_seed(params.seed, Stream::kInputMatrix));
    Matrix w(params.n_nodes, params.input_dim);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-1.0, 1.0);
    return w;
}

Reservoir::Reservoir(const ReservoirParams& params, SparseTriplets triplets, Matrix w)
    : params_(params), triplets_(std::move(triplets)), a_(triplets_), w_(std::move(w))
{
}

Reservoir Reservoir::build(const ReservoirParams& params)
{
    params.validate();
    return Reservoir(params, build_adjacency(params), build_input_matrix(params));
}

Reservoir Reservoir::from_matrices(const ReservoirParams& params, SparseTriplets adjacency, Matrix input_matrix)
{
    params.validate_ranges();
    require(adjacency.n == params.n_nodes, "reservoir: adjacency size does not match n_nodes");
    require(adjacency.rows.size() == adjacency.nnz() && adjacency.cols.size() == adjacency.nnz(),
            "reservoir: ragged adjacency triplets");
    for (std::size_t i = 0; i < adjacency.nnz(); ++i) {
        require(adjacency.rows[i] >= 0 && adjacency.rows[i] < adjacency.n && adjacency.cols[i] >= 0 &&
                    adjacency.cols[i] < adjacency.n,
                "reservoir: adjacency index out of range");
        require(std::isfinite(adjacency.values[i]), "reservoir: non-finite adjacency value");
    }
    require(input_matrix.rows() == params.n_nodes && input_matrix.cols() == params.input_dim,
            "reservoir: input matrix must be n_nodes x input_dim");
    require(input_matrix.allFinite(), "reservoir: non-finite input matrix");
    return Reservoir(params, std::move(adjacency), std::move(input_matrix));
}

void Reservoir::rhs(const Vector& r, const Vector& drive, Vector& out) const
{
    a_.multiply(r, out);
    out = params_.gamma * (fast_tanh(out.array() + drive.array()) - r.array()).matrix();
}

Vector Reservoir::input_drive(const Vector& u) const { return params_.sigma * (w_ * u); }

Vector Reservoir::random_state(std::uint64_t seed) const
{
    Rng rng(seed);
    Vector r(n());
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = rng.uniform(-1.0, 1.0);
    return r;
}

Vector reservoir_vector_field(const Reservoir& res, const Vector& r, const Vector& u)
{
    require(r.size() == res.n(), "reservoir_vector_field: r has wrong dimension");
    require(u.size() == res.input_dim(), "reservoir_vector_field: u has wrong dimension");
    require(r.allFinite() && u.allFinite(), "reservoir_vector_field: non-finite input");
    Vector out(res.n());
    res.rhs(r, res.input_drive(u), out);
    return out;
}

namespace {

/// RK4 workspace for one reservoir trajectory.
class Rk4Workspace {
public:
    explicit Rk4Workspace(Eigen::Index n) : k_(n), acc_(n), tmp_(n) {}

    /// Driven step; drive terms at t, t + dt/2 and t + dt.
    void driven(const Reservoir& res, Vector& r, const Vector& d0, const Vector& dmid, const Vector& d1, double dt)
    {
        res.rhs(r, d0, k_);
        acc_ = k_;
        tmp_ = r + 0.5 * dt * k_;
        res.rhs(tmp_, dmid, k_);
        acc_ += 2.0 * k_;
        tmp_ = r + 0.5 * dt * k_;
        res.rhs(tmp_, dmid, k_);
        acc_ += 2.0 * k_;
        tmp_ = r + dt * k_;
        res.rhs(tmp_, d1, k_);
        acc_ += k_;
        r += (dt / 6.0) * acc_;
    }

    /// Autonomous step with the readout closing the loop at every stage.
    void autonomous(const Reservoir& res, const Readout& readout, Vector& r, double dt)
    {
        stage(res, readout, r);
        acc_ = k_;
        tmp_ = r + 0.5 * dt * k_;
        stage(res, readout, tmp_);
        acc_ += 2.0 * k_;
        tmp_ = r + 0.5 * dt * k_;
        stage(res, readout, tmp_);
        acc_ += 2.0 * k_;
        tmp_ = r + dt * k_;
        stage(res, readout, tmp_);
        acc_ += k_;
        r += (dt / 6.0) * acc_;
    }

private:
    void stage(const Reservoir& res, const Readout& readout, const Vector& x)
    {
        readout.apply(x, u_);
        drive_.noalias() = res.params().sigma * (res.input_matrix() * u_);
        res.rhs(x, drive_, k_);
    }

    Vector k_, acc_, tmp_, u_, drive_;
};

void guard_state(const Vector& r, Eigen::Index step)
{
    if (!r.allFinite() || r.norm() > kOverflowGuard) {
        std::ostringstream msg;
        msg << "reservoir integration diverged at step " << step;
        fail(ErrorKind::kDivergence, msg.str());
    }
}

}  // namespace

void drive_ensemble(const Reservoir& res, const Trajectory& input, std::vector<Vector>& states,
                    const EnsembleVisitor& visit, Eigen::Index first, Eigen::Index last)
{
    require(input.size() >= 2, "drive: input needs at least two samples");
    require(input.dim() == res.input_dim(), "drive: input dimension does not match the reservoir");
    require(input.dt > 0.0, "drive: input dt must be positive");
    if (last < 0) last = input.size() - 1;
    require(first >= 0 && first <= last && last < input.size(), "drive: sample range out of bounds");
    for (const Vector& r : states) require(r.size() == res.n() && r.allFinite(), "drive: r0 must be a finite N-vector");

    Rk4Workspace ws(res.n());
    Vector d0 = res.input_drive(input.states.row(first).transpose());
    Vector d1(res.n()), dmid(res.n());
    if (visit) visit(first, states);
    for (Eigen::Index k = first + 1; k <= last; ++k) {
        d1 = res.input_drive(input.states.row(k).transpose());
        dmid = 0.5 * (d0 + d1);
        for (Vector& r : states) {
            ws.driven(res, r, d0, dmid, d1, input.dt);
            guard_state(r, k);
        }
        if (visit) visit(k, states);
        d0.swap(d1);
    }
}

Vector drive_visit(const Reservoir& res, const Trajectory& input, const Vector& r0, const StateVisitor& visit,
                   Eigen::Index first, Eigen::Index last)
{
    std::vector<Vector> states{r0};
    EnsembleVisitor each;
    if (visit) each = [&](Eigen::Index k, const std::vector<Vector>& s) { visit(k, s.front()); };
    drive_ensemble(res, input, states, each, first, last);
    return std::move(states.front());
}

ReservoirTrajectory drive(const Reservoir& res, const Trajectory& input, const Vector& r0)
{
    ReservoirTrajectory out;
    out.dt = input.dt;
    out.t0 = input.t0;
    out.states.resize(input.size(), res.n());
    drive_visit(res, input, r0, [&](Eigen::Index k, const Vector& r) { out.states.row(k) = r.transpose(); });
    return out;
}

Vector drive_to_end(const Reservoir& res, const Trajectory& input, const Vector& r0)
{
    return drive_visit(res, input, r0, {});
}

namespace {

void check_forecast_args(const Reservoir& res, const Readout& readout, const Vector& r0, long n_steps, double dt)
{
    require(readout.n_nodes() == res.n(), "forecast: readout was trained for a different reservoir size");
    require(readout.output_dim() == res.input_dim(), "forecast: readout output dimension does not match the input");
    require(r0.size() == res.n() && r0.allFinite(), "forecast: r0 must be a finite N-vector");
    require(n_steps >= 0, "forecast: n_steps must be non-negative");
    require(dt > 0.0, "forecast: dt must be positive");
}

}  // namespace

ForecastResult forecast(const Reservoir& res, const Readout& readout, const Vector& r0, long n_steps, double dt,
                        double t0)
{
    check_forecast_args(res, readout, r0, n_steps, dt);
    ForecastResult out;
    out.prediction.dt = dt;
    out.prediction.t0 = t0;
    out.prediction.states.resize(n_steps + 1, res.input_dim());
    out.states.dt = dt;
    out.states.t0 = t0;
    out.states.states.resize(n_steps + 1, res.n());

    Rk4Workspace ws(res.n());
    Vector r = r0;
    Vector u(res.input_dim());
    for (long s = 0;; ++s) {
        readout.apply(r, u);
        out.prediction.states.row(s) = u.transpose();
        out.states.states.row(s) = r.transpose();
        if (s == n_steps) break;
        ws.autonomous(res, readout, r, dt);
        guard_state(r, s + 1);
    }
    return out;
}

Trajectory forecast_observable(const Reservoir& res, const Readout& readout, Vector& r, long n_steps, double dt,
                               double t0)
{
    check_forecast_args(res, readout, r, n_steps, dt);
    Trajectory out;
    out.dt = dt;
    out.t0 = t0;
    out.states.resize(n_steps + 1, res.input_dim());
    Rk4Workspace ws(res.n());
    Vector u(res.input_dim());
    for (long s = 0;; ++s) {
        readout.apply(r, u);
        out.states.row(s) = u.transpose();
        if (s == n_steps) break;
        ws.autonomous(res, readout, r, dt);
        guard_state(r, s + 1);
    }
    return out;
}

}  // namespace rcgs
