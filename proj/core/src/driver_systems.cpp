#include "rcgs/driver_systems.hpp"

#include <cmath>
#include <sstream>

namespace rcgs {

DriverSystem::DriverSystem(std::string name, int dim, std::map<std::string, double> params, Field field,
                           Jacobian jacobian)
    : name_(std::move(name)), dim_(dim), params_(std::move(params)), field_(std::move(field)),
      jacobian_(std::move(jacobian))
{
    require(dim_ >= 1, "DriverSystem: dim must be positive");
}

Vector DriverSystem::field(const Vector& x) const
{
    require(x.size() == dim_, "DriverSystem::field: state has wrong dimension");
    Vector dx(dim_);
    field_(x, dx);
    return dx;
}

Matrix DriverSystem::jacobian(const Vector& x) const
{
    require(x.size() == dim_, "DriverSystem::jacobian: state has wrong dimension");
    Matrix jac(dim_, dim_);
    jacobian_(x, jac);
    return jac;
}

namespace {

void l63_field(const Lorenz63Params& p, const Vector& s, Vector& dx)
{
    dx[0] = p.sigma * (s[1] - s[0]);
    dx[1] = s[0] * (p.rho - s[2]) - s[1];
    dx[2] = s[0] * s[1] - p.beta * s[2];
}

void l63_jacobian(const Lorenz63Params& p, const Vector& s, Matrix& j)
{
    j << -p.sigma, p.sigma, 0.0,
         p.rho - s[2], -1.0, -s[0],
         s[1], s[0], -p.beta;
}

// Cyclic indices: x_{-1} = x_{D-1}, x_{-2} = x_{D-2}, x_D = x_0.
void l96_field(double forcing, const Vector& x, Vector& dx)
{
    const Eigen::Index d = x.size();
    for (Eigen::Index i = 0; i < d; ++i) {
        const double xp1 = x[(i + 1) % d];
        const double xm1 = x[(i + d - 1) % d];
        const double xm2 = x[(i + d - 2) % d];
        dx[i] = (xp1 - xm2) * xm1 - x[i] + forcing;
    }
}

void l96_jacobian(const Vector& x, Matrix& j)
{
    const Eigen::Index d = x.size();
    j.setZero();
    for (Eigen::Index i = 0; i < d; ++i) {
        const Eigen::Index ip1 = (i + 1) % d;
        const Eigen::Index im1 = (i + d - 1) % d;
        const Eigen::Index im2 = (i + d - 2) % d;
        j(i, ip1) += x[im1];
        j(i, im2) -= x[im1];
        j(i, im1) += x[ip1] - x[im2];
        j(i, i) -= 1.0;
    }
}

}  // namespace

Vector lorenz63_vector_field(const Vector& state, const Lorenz63Params& p)
{
    require(state.size() == 3, "lorenz63_vector_field: state must have 3 components");
    require(state.allFinite(), "lorenz63_vector_field: non-finite state");
    Vector dx(3);
    l63_field(p, state, dx);
    return dx;
}

Vector lorenz96_vector_field(const Vector& state, double forcing)
{
    require(state.size() >= 4, "lorenz96_vector_field: dimension must be at least 4");
    require(state.allFinite() && std::isfinite(forcing), "lorenz96_vector_field: non-finite input");
    Vector dx(state.size());
    l96_field(forcing, state, dx);
    return dx;
}

DriverSystem lorenz63(const Lorenz63Params& p)
{
    return DriverSystem(
        "lorenz63", 3, {{"sigma", p.sigma}, {"rho", p.rho}, {"beta", p.beta}},
        [p](const Vector& x, Vector& dx) { l63_field(p, x, dx); },
        [p](const Vector& x, Matrix& j) { l63_jacobian(p, x, j); });
}

DriverSystem lorenz96(int dim, double forcing)
{
    require(dim >= 4, "lorenz96: dimension must be at least 4");
    return DriverSystem(
        "lorenz96", dim, {{"F", forcing}},
        [forcing](const Vector& x, Vector& dx) { l96_field(forcing, x, dx); },
        [](const Vector& x, Matrix& j) { l96_jacobian(x, j); });
}

DriverSystem linear_diagonal(const Vector& rates)
{
    std::map<std::string, double> params;
    for (Eigen::Index i = 0; i < rates.size(); ++i) params["a" + std::to_string(i)] = rates[i];
    return DriverSystem(
        "linear", static_cast<int>(rates.size()), params,
        [rates](const Vector& x, Vector& dx) { dx = rates.cwiseProduct(x); },
        [rates](const Vector&, Matrix& j) { j = rates.asDiagonal(); });
}

DriverSystem make_driver(const std::string& name, int dim, const std::map<std::string, double>& params)
{
    auto take = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [key, value] : params) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            require(ok, "driver '" + name + "': unknown parameter '" + key + "'");
            require(std::isfinite(value), "driver '" + name + "': parameter '" + key + "' is not finite");
        }
    };
    auto get = [&](const char* key, double fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };

    if (name == "lorenz63") {
        take({"sigma", "rho", "beta"});
        require(dim == 0 || dim == 3, "lorenz63 has dimension 3");
        Lorenz63Params p;
        return lorenz63({get("sigma", p.sigma), get("rho", p.rho), get("beta", p.beta)});
    }
    if (name == "lorenz96") {
        take({"F"});
        return lorenz96(dim == 0 ? 5 : dim, get("F", 8.0));
    }
    if (name == "linear") {
        require(dim >= 1, "linear driver needs a dimension");
        Vector rates(dim);
        for (int i = 0; i < dim; ++i) {
            const std::string key = "a" + std::to_string(i);
            require(params.count(key) == 1, "linear driver: missing parameter '" + key + "'");
            rates[i] = params.at(key);
        }
        require(static_cast<int>(params.size()) == dim, "linear driver: unexpected extra parameters");
        return linear_diagonal(rates);
    }
    fail(ErrorKind::kInvalidArgument, "unknown driver system '" + name + "'");
}

Trajectory Trajectory::slice(Eigen::Index first, Eigen::Index count) const
{
    require(first >= 0 && count >= 1 && first + count <= size(), "Trajectory::slice: range out of bounds");
    Trajectory out;
    out.dt = dt;
    out.t0 = time(first);
    out.states = states.middleRows(first, count);
    return out;
}

void Trajectory::validate() const
{
    require(size() >= 1, "trajectory has no samples");
    require(dt > 0.0 && std::isfinite(dt), "trajectory dt must be positive");
    require(states.allFinite(), "trajectory contains non-finite entries");
}

long steps_for(double duration, double dt)
{
    require(dt > 0.0 && duration >= 0.0, "steps_for: need dt > 0 and duration >= 0");
    const double ratio = duration / dt;
    const double rounded = std::round(ratio);
    require(std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio),
            "duration is not a whole number of time steps");
    return static_cast<long>(rounded);
}

void rk4_step(const DriverSystem& system, Vector& x, double dt)
{
    const int d = system.dim();
    Vector k(d), tmp(d);
    Vector acc(d);
    system.field(x, k);
    acc = k;
    tmp = x + 0.5 * dt * k;
    system.field(tmp, k);
    acc += 2.0 * k;
    tmp = x + 0.5 * dt * k;
    system.field(tmp, k);
    acc += 2.0 * k;
    tmp = x + dt * k;
    system.field(tmp, k);
    acc += k;
    x += (dt / 6.0) * acc;
}

namespace {

void guard(const Vector& x, long step)
{
    if (!x.allFinite() || x.norm() > kOverflowGuard) {
        std::ostringstream msg;
        msg << "integration diverged at step " << step << " (state norm exceeds " << kOverflowGuard << ")";
        fail(ErrorKind::kDivergence, msg.str());
    }
}

}  // namespace

Trajectory integrate_rk4(const DriverSystem& system, const Vector& x0, double dt, long n_steps)
{
    require(dt > 0.0 && std::isfinite(dt), "integrate_rk4: dt must be positive");
    require(n_steps >= 1, "integrate_rk4: n_steps must be at least 1");
    require(x0.size() == system.dim(), "integrate_rk4: x0 has wrong dimension");
    require(x0.allFinite(), "integrate_rk4: x0 is not finite");

    Trajectory out;
    out.dt = dt;
    out.states.resize(n_steps + 1, system.dim());
    out.states.row(0) = x0.transpose();
    Vector x = x0;
    for (long s = 1; s <= n_steps; ++s) {
        rk4_step(system, x, dt);
        guard(x, s);
        out.states.row(s) = x.transpose();
    }
    return out;
}

Trajectory integrate_on_attractor(const DriverSystem& system, const Vector& x0, double dt, double transient,
                                  double duration)
{
    require(x0.size() == system.dim() && x0.allFinite(), "integrate_on_attractor: bad x0");
    Vector x = x0;
    const long relax = steps_for(transient, dt);
    for (long s = 1; s <= relax; ++s) {
        rk4_step(system, x, dt);
        guard(x, s);
    }
    return integrate_rk4(system, x, dt, steps_for(duration, dt));
}

Trajectory Standardization::apply(const Trajectory& traj) const
{
    require(traj.dim() == mean.size(), "Standardization::apply: dimension mismatch");
    Trajectory out = traj;
    out.states = ((traj.states.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
    return out;
}

Trajectory Standardization::invert(const Trajectory& traj) const
{
    require(traj.dim() == mean.size(), "Standardization::invert: dimension mismatch");
    Trajectory out = traj;
    out.states = ((traj.states.array().rowwise() * scale.transpose().array()).rowwise() + mean.transpose().array())
                     .matrix();
    return out;
}

std::pair<Trajectory, Standardization> standardize(const Trajectory& traj)
{
    require(traj.size() >= 2, "standardize: need at least two samples");
    const double n = static_cast<double>(traj.size());
    Standardization t;
    t.mean = traj.states.colwise().mean().transpose();
    t.scale.resize(traj.dim());
    for (int c = 0; c < traj.dim(); ++c) {
        const double ss = (traj.states.col(c).array() - t.mean[c]).square().sum();
        t.scale[c] = std::sqrt(ss / (n - 1.0));
        if (!(t.scale[c] > 0.0))
            fail(ErrorKind::kInvalidArgument, "standardize: component " + std::to_string(c) + " has zero variance");
    }
    return {t.apply(traj), t};
}

}  // namespace rcgs
