#include "rcgs/evaluation.hpp"

#include "rcgs/format.hpp"
#include "rcgs/parallel.hpp"
#include "rcgs/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace rcgs {

double valid_time(const Trajectory& truth, const Trajectory& prediction, double threshold, double lambda1)
{
    require(threshold > 0.0 && lambda1 > 0.0, "valid_time: threshold and lambda1 must be positive");
    require(truth.size() == prediction.size() && truth.dim() == prediction.dim() && truth.size() >= 1,
            "valid_time: trajectories are misaligned (different length or dimension)");
    require(std::abs(truth.dt - prediction.dt) <= 1e-12 * truth.dt, "valid_time: trajectories have different dt");
    require(std::abs(truth.t0 - prediction.t0) <= 1e-9 * std::max(1.0, std::abs(truth.t0)),
            "valid_time: trajectories start at different times");

    const double root_d = std::sqrt(static_cast<double>(truth.dim()));
    for (Eigen::Index k = 0; k < truth.size(); ++k) {
        const double err = (prediction.states.row(k) - truth.states.row(k)).norm() / root_d;
        if (!(err <= threshold)) return static_cast<double>(k) * truth.dt * lambda1;
    }
    return truth.duration() * lambda1;
}

ForecastMetrics mean_valid_time(const Reservoir& res, const Readout& readout, const Trajectory& truth,
                                const EvaluationOptions& opt)
{
    require(opt.n_starts >= 1, "mean_valid_time: n_starts must be at least 1");
    require(opt.sync_time > 0.0 && opt.horizon > 0.0, "mean_valid_time: sync_time and horizon must be positive");
    require(truth.dim() == res.input_dim(), "mean_valid_time: truth dimension does not match the reservoir");
    const long sync = steps_for(opt.sync_time, truth.dt);
    const long horizon = steps_for(opt.horizon, truth.dt);
    const Eigen::Index window = sync + horizon + 1;
    if (static_cast<Eigen::Index>(opt.n_starts) * window > truth.size()) {
        std::ostringstream msg;
        msg << "mean_valid_time: truth has " << truth.size() << " samples, too short for " << opt.n_starts
            << " windows of " << window << " samples; at most " << truth.size() / window << " starts fit";
        fail(ErrorKind::kInvalidArgument, msg.str());
    }
    const Eigen::Index spacing = opt.n_starts > 1 ? (truth.size() - window) / (opt.n_starts - 1) : 0;

    ForecastMetrics m;
    m.threshold = opt.threshold;
    m.n_starts = opt.n_starts;
    m.lambda1_driver = opt.lambda1;
    m.per_start_valid_time.resize(static_cast<std::size_t>(opt.n_starts));
    m.start_index.resize(static_cast<std::size_t>(opt.n_starts));
    m.start_time.resize(static_cast<std::size_t>(opt.n_starts));

    const Vector r_init = res.random_state(stream_seed(res.params().seed, Stream::kInitialState));
    parallel_for(static_cast<std::size_t>(opt.n_starts), opt.workers, [&](std::size_t i) {
        const Eigen::Index first = static_cast<Eigen::Index>(i) * spacing;
        const Eigen::Index launch = first + sync;
        Vector r = drive_visit(res, truth, r_init, {}, first, launch);
        const Trajectory reference = truth.slice(launch, horizon + 1);
        const Trajectory pred = forecast_observable(res, readout, r, horizon, truth.dt, reference.t0);
        m.per_start_valid_time[i] = valid_time(reference, pred, opt.threshold, opt.lambda1);
        m.start_index[i] = first;
        m.start_time[i] = reference.t0;
    });

    double sum = 0.0;
    for (double v : m.per_start_valid_time) sum += v;
    m.mean_valid_time = sum / opt.n_starts;
    double ss = 0.0;
    for (double v : m.per_start_valid_time) ss += (v - m.mean_valid_time) * (v - m.mean_valid_time);
    m.std_valid_time = std::sqrt(ss / opt.n_starts);
    return m;
}

Matrix readout_jacobian(const Readout& readout, const Vector& r)
{
    require(r.size() == readout.n_nodes(), "readout_jacobian: state has wrong dimension");
    Matrix g = readout.linear_block();
    if (readout.has_squares()) g += (readout.squares_block().array().rowwise() * (2.0 * r).transpose().array()).matrix();
    return g;
}

Vector autonomous_vector_field(const Reservoir& res, const Readout& readout, const Vector& r)
{
    require(r.size() == res.n() && readout.n_nodes() == res.n(), "autonomous_vector_field: dimension mismatch");
    Vector out(res.n());
    res.rhs(r, res.input_drive(readout(r)), out);
    return out;
}

RcJacobian::RcJacobian(const Reservoir& res, const Readout& readout, const Vector& r) : res_(res)
{
    require(r.size() == res.n(), "rc_jacobian: state has wrong dimension");
    require(readout.n_nodes() == res.n() && readout.output_dim() == res.input_dim(),
            "rc_jacobian: readout does not match the reservoir");
    require(r.allFinite(), "rc_jacobian: non-finite state");
    Vector a(res.n());
    res.adjacency_csr().multiply(r, a);
    a += res.input_drive(readout(r));
    slope_ = (1.0 - fast_tanh(a.array()).square()).matrix();
    g_ = rcgs::readout_jacobian(readout, r);
}

Vector RcJacobian::apply(const Vector& v) const
{
    require(v.size() == res_.n(), "rc_jacobian: vector has wrong dimension");
    Vector av(res_.n());
    res_.adjacency_csr().multiply(v, av);
    av += res_.params().sigma * (res_.input_matrix() * (g_ * v));
    return res_.params().gamma * (slope_.cwiseProduct(av) - v);
}

void RcJacobian::apply(const RowMatrix& v, RowMatrix& out) const
{
    require(v.rows() == res_.n(), "rc_jacobian: block has wrong row count");
    RowMatrix av;
    res_.adjacency_csr().multiply(v, av);
    av.noalias() += res_.params().sigma * (res_.input_matrix() * (g_ * v));
    out = res_.params().gamma * ((av.array().colwise() * slope_.array()) - v.array()).matrix();
}

Matrix RcJacobian::dense() const
{
    Matrix a = res_.adjacency().to_dense();
    a.noalias() += res_.params().sigma * (res_.input_matrix() * g_);
    Matrix j = res_.params().gamma * (slope_.asDiagonal() * a);
    j.diagonal().array() -= res_.params().gamma;
    return j;
}

namespace {

/// RK4 on the joint (r, Q) system of the autonomous reservoir. State and
/// tangent share one row-major block so each stage makes a single pass over A.
class RcTangentFlow {
public:
    RcTangentFlow(const Reservoir& res, const Readout& readout, Vector r, double dt, double bound)
        : res_(res), readout_(readout), r_(std::move(r)), dt_(dt), bound_(bound)
    {
    }

    int dim() const { return res_.n(); }
    double dt() const { return dt_; }
    RowMatrix& tangent() { return q_; }

    bool advance()
    {
        const Eigen::Index k = q_.cols();
        RowMatrix y(dim(), k + 1);
        y.col(0) = r_;
        y.rightCols(k) = q_;

        RowMatrix acc = RowMatrix::Zero(dim(), k + 1);
        RowMatrix slope_k;
        static constexpr double kWeight[4] = {1.0, 2.0, 2.0, 1.0};
        static constexpr double kStep[3] = {0.5, 0.5, 1.0};
        RowMatrix ys = y;
        for (int stage = 0; stage < 4; ++stage) {
            derivative(ys, slope_k);
            acc += kWeight[stage] * slope_k;
            if (stage < 3) ys = y + (kStep[stage] * dt_) * slope_k;
        }
        y += (dt_ / 6.0) * acc;
        r_ = y.col(0);
        q_ = y.rightCols(k);
        return r_.allFinite() && r_.cwiseAbs().maxCoeff() <= bound_ && q_.allFinite();
    }

    const Vector& state() const { return r_; }

private:
    void derivative(const RowMatrix& y, RowMatrix& dy)
    {
        const Eigen::Index k = y.cols() - 1;
        const Vector r = y.col(0);
        res_.adjacency_csr().multiply(y, ay_);

        readout_.apply(r, u_);
        Vector a = ay_.col(0) + res_.input_drive(u_);
        const Eigen::ArrayXd t = fast_tanh(a.array());
        const Eigen::ArrayXd slope = 1.0 - t.square();

        // d phi / dr applied to the tangent block without forming the D x N Jacobian.
        const auto q = y.rightCols(k);
        Matrix gq = readout_.linear_block() * q;
        if (readout_.has_squares())
            gq.noalias() += readout_.squares_block() * (q.array().colwise() * (2.0 * r).array()).matrix();

        const double gamma = res_.params().gamma;
        dy.resize(y.rows(), y.cols());
        dy.col(0) = gamma * (t - r.array()).matrix();
        RowMatrix inner = ay_.rightCols(k);
        inner.noalias() += res_.params().sigma * (res_.input_matrix() * gq);
        dy.rightCols(k) = gamma * ((inner.array().colwise() * slope) - q.array()).matrix();
    }

    const Reservoir& res_;
    const Readout& readout_;
    Vector r_;
    RowMatrix q_;
    double dt_;
    double bound_;
    RowMatrix ay_;
    Vector u_;
};

}  // namespace

LyapunovSpectrum lyapunov_spectrum_rc(const Reservoir& res, const Readout& readout, const Vector& r0, int k,
                                      double dt, long n_steps, const RcLyapunovOptions& opt)
{
    require(k >= 1 && k <= res.n(), "lyapunov_spectrum_rc: k must lie in [1, N]");
    require(dt > 0.0 && n_steps >= 1, "lyapunov_spectrum_rc: need dt > 0 and n_steps >= 1");
    require(readout.n_nodes() == res.n() && readout.output_dim() == res.input_dim(),
            "lyapunov_spectrum_rc: readout does not match the reservoir");

    Vector r = r0;
    const long relax = steps_for(opt.transient_time, dt);
    LyapunovSpectrum spec;
    if (relax > 0) {
        try {
            forecast_observable(res, readout, r, relax, dt);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::kDivergence) throw;
            r.setConstant(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (!r.allFinite() || r.cwiseAbs().maxCoeff() > opt.state_bound) {
        spec.k = k;
        spec.exponents = Vector::Constant(k, std::numeric_limits<double>::quiet_NaN());
        spec.escape_time = 0.0;
        spec.transient_discarded = opt.transient_time;
        return spec;
    }

    RcTangentFlow flow(res, readout, r, dt, opt.state_bound);
    spec = benettin(flow, k, n_steps, opt.benettin);
    spec.transient_discarded = opt.transient_time;
    return spec;
}

SpectrumMatchReport spectrum_match(const LyapunovSpectrum& driver, const LyapunovSpectrum& rc, double tol,
                                   double zero_fraction)
{
    const Eigen::Index d = driver.exponents.size();
    require(d >= 1, "spectrum_match: driver spectrum is empty");
    require(rc.exponents.size() >= d, "spectrum_match: RC spectrum has fewer exponents than the driver");
    require(tol > 0.0 && zero_fraction > 0.0, "spectrum_match: tolerances must be positive");

    SpectrumMatchReport out;
    out.driver_spectrum = driver;
    out.rc_spectrum = rc;
    out.tolerance = tol;
    out.zero_tolerance = zero_fraction * std::abs(driver.exponents[0]);
    out.leading_match = true;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double ld = driver.exponents[i];
        const double err = std::abs(rc.exponents[i] - ld);
        out.per_exponent_error.push_back(err);
        if (std::abs(ld) <= out.zero_tolerance) {
            out.classification.emplace_back("zero");
            out.matched.push_back(err <= out.zero_tolerance);
        } else if (ld > 0.0) {
            out.classification.emplace_back("positive");
            out.matched.push_back(err <= tol * std::abs(ld));
        } else {
            out.classification.emplace_back("negative");
            out.matched.push_back(err <= tol * std::abs(ld));
            continue;
        }
        out.leading_match = out.leading_match && out.matched.back();
    }
    out.tail_negative = true;
    for (Eigen::Index i = d; i < rc.exponents.size(); ++i)
        out.tail_negative = out.tail_negative && rc.exponents[i] < 0.0;
    if (rc.escape_time) out.leading_match = out.tail_negative = false;
    return out;
}

void write_metrics_csv(const std::filesystem::path& path, const ForecastMetrics& m)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
    out << "start_index,t_start,valid_time_lyap\n";
    for (std::size_t i = 0; i < m.per_start_valid_time.size(); ++i)
        out << m.start_index[i] << ',' << format_double(m.start_time[i]) << ','
            << format_double(m.per_start_valid_time[i]) << '\n';
    if (!out) fail(ErrorKind::kIo, "failed writing " + path.string());
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json vector_json(const Vector& v)
{
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(finite_or_null(x));
    return a;
}

nlohmann::json spectrum_brief(const LyapunovSpectrum& s)
{
    nlohmann::json j;
    j["exponents"] = vector_json(s.exponents);
    j["k"] = s.k;
    j["converged"] = s.converged;
    j["tolerance"] = s.tolerance;
    j["drift"] = vector_json(s.drift);
    j["averaging_time"] = s.averaging_time;
    j["transient_discarded"] = s.transient_discarded;
    j["escape_time"] = s.escape_time ? nlohmann::json(*s.escape_time) : nlohmann::json(nullptr);
    return j;
}

}  // namespace

std::string metrics_summary_json(const ForecastMetrics& m, int indent)
{
    nlohmann::json j;
    j["mean_valid_time"] = m.mean_valid_time;
    j["std_valid_time"] = m.std_valid_time;
    j["threshold"] = m.threshold;
    j["n_starts"] = m.n_starts;
    j["lambda1"] = m.lambda1_driver;
    j["units"] = "lambda1 t";
    return j.dump(indent);
}

std::string spectrum_match_json(const SpectrumMatchReport& r, int indent)
{
    nlohmann::json j;
    j["driver"] = spectrum_brief(r.driver_spectrum);
    j["rc"] = spectrum_brief(r.rc_spectrum);
    j["per_exponent_error"] = r.per_exponent_error;
    j["classification"] = r.classification;
    j["matched"] = r.matched;
    j["leading_match"] = r.leading_match;
    j["tail_negative"] = r.tail_negative;
    j["tolerance"] = r.tolerance;
    j["zero_tolerance"] = r.zero_tolerance;
    return j.dump(indent);
}

}  // namespace rcgs
