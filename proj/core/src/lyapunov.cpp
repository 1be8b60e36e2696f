#include "rcgs/lyapunov.hpp"

namespace rcgs {

namespace {

/// State plus tangent block advanced by RK4 on the joint (x, Q) system.
class OdeTangentFlow {
public:
    OdeTangentFlow(const DriverSystem& system, Vector x, double dt)
        : system_(system), x_(std::move(x)), dt_(dt), jac_(system.dim(), system.dim())
    {
    }

    int dim() const { return system_.dim(); }
    double dt() const { return dt_; }
    Matrix& tangent() { return q_; }

    bool advance()
    {
        const int d = dim();
        Vector k[4];
        Matrix kq[4];
        Vector xs = x_;
        Matrix qs = q_;
        for (int stage = 0; stage < 4; ++stage) {
            k[stage].resize(d);
            system_.field(xs, k[stage]);
            system_.jacobian(xs, jac_);
            kq[stage] = jac_ * qs;
            if (stage < 3) {
                const double h = stage < 2 ? 0.5 * dt_ : dt_;
                xs = x_ + h * k[stage];
                qs = q_ + h * kq[stage];
            }
        }
        x_ += (dt_ / 6.0) * (k[0] + 2.0 * k[1] + 2.0 * k[2] + k[3]);
        q_ += (dt_ / 6.0) * (kq[0] + 2.0 * kq[1] + 2.0 * kq[2] + kq[3]);
        return x_.allFinite() && x_.norm() <= kOverflowGuard && q_.allFinite();
    }

private:
    const DriverSystem& system_;
    Vector x_;
    double dt_;
    Matrix jac_;
    Matrix q_;
};

}  // namespace

LyapunovSpectrum lyapunov_spectrum_ode(const DriverSystem& system, const Vector& x0, double dt, long n_steps, int k,
                                       const OdeLyapunovOptions& opt)
{
    require(k >= 1 && k <= system.dim(), "lyapunov_spectrum_ode: k must lie in [1, dim]");
    require(dt > 0.0, "lyapunov_spectrum_ode: dt must be positive");
    require(x0.size() == system.dim() && x0.allFinite(), "lyapunov_spectrum_ode: bad x0");

    Vector x = x0;
    const long relax = steps_for(opt.transient_time, dt);
    for (long s = 0; s < relax; ++s) rk4_step(system, x, dt);
    if (!x.allFinite() || x.norm() > kOverflowGuard)
        fail(ErrorKind::kDivergence, "lyapunov_spectrum_ode: transient diverged");

    OdeTangentFlow flow(system, x, dt);
    LyapunovSpectrum spec = benettin(flow, k, n_steps, opt.benettin);
    spec.transient_discarded = opt.transient_time;
    return spec;
}

}  // namespace rcgs
