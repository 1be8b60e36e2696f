#pragma once

#include "rcgs/common.hpp"

#include <functional>
#include <map>
#include <string>

namespace rcgs {

/// A named autonomous ODE du/dt = F(u) with an analytic Jacobian.
class DriverSystem {
public:
    using Field = std::function<void(const Vector& x, Vector& dx)>;
    using Jacobian = std::function<void(const Vector& x, Matrix& jac)>;

    DriverSystem(std::string name, int dim, std::map<std::string, double> params, Field field,
                 Jacobian jacobian);

    const std::string& name() const noexcept { return name_; }
    int dim() const noexcept { return dim_; }
    const std::map<std::string, double>& params() const noexcept { return params_; }

    void field(const Vector& x, Vector& dx) const { field_(x, dx); }
    Vector field(const Vector& x) const;
    void jacobian(const Vector& x, Matrix& jac) const { jacobian_(x, jac); }
    Matrix jacobian(const Vector& x) const;

private:
    std::string name_;
    int dim_;
    std::map<std::string, double> params_;
    Field field_;
    Jacobian jacobian_;
};

struct Lorenz63Params {
    double sigma = 10.0;
    double rho = 28.0;
    double beta = 8.0 / 3.0;
};

Vector lorenz63_vector_field(const Vector& state, const Lorenz63Params& p = {});
Vector lorenz96_vector_field(const Vector& state, double forcing = 8.0);

DriverSystem lorenz63(const Lorenz63Params& p = {});
DriverSystem lorenz96(int dim, double forcing = 8.0);
/// du/dt = diag(rates) u. Exists for analytic checks of the Lyapunov machinery.
DriverSystem linear_diagonal(const Vector& rates);

/// Builds a system by name ("lorenz63", "lorenz96", "linear"). Unknown parameter
/// names are rejected. `dim` is only consulted by systems of variable dimension.
DriverSystem make_driver(const std::string& name, int dim, const std::map<std::string, double>& params);

/// Uniformly sampled time series, one row per sample.
struct Trajectory {
    double dt = 0.0;
    double t0 = 0.0;
    RowMatrix states;

    int dim() const noexcept { return static_cast<int>(states.cols()); }
    Eigen::Index size() const noexcept { return states.rows(); }
    double time(Eigen::Index k) const noexcept { return t0 + static_cast<double>(k) * dt; }
    double duration() const noexcept { return static_cast<double>(size() - 1) * dt; }

    /// Rows [first, first + count) with t0 shifted accordingly.
    Trajectory slice(Eigen::Index first, Eigen::Index count) const;
    /// Throws unless every entry is finite and there is at least one row.
    void validate() const;
};

/// Converts a duration to a whole number of steps; rejects durations that are
/// not a multiple of dt to within 1e-9 relative.
long steps_for(double duration, double dt);

/// Classical fourth-order Runge-Kutta step in place.
void rk4_step(const DriverSystem& system, Vector& x, double dt);

/// n_steps + 1 rows, the first being x0. Throws ErrorKind::kDivergence naming
/// the step when the state norm exceeds kOverflowGuard or becomes non-finite.
Trajectory integrate_rk4(const DriverSystem& system, const Vector& x0, double dt, long n_steps);

/// Integrates for `transient` time units, discards them, then records
/// `duration` time units. The returned t0 is 0.
Trajectory integrate_on_attractor(const DriverSystem& system, const Vector& x0, double dt, double transient,
                                  double duration);

/// Per-component affine map to zero mean, unit sample (n-1) standard deviation.
struct Standardization {
    Vector mean;
    Vector scale;

    Trajectory apply(const Trajectory& traj) const;
    Trajectory invert(const Trajectory& traj) const;
};

/// Fits on `traj` and returns (standardized trajectory, transform).
std::pair<Trajectory, Standardization> standardize(const Trajectory& traj);

}  // namespace rcgs
