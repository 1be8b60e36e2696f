#include "rcgs/training.hpp"

#include "rcgs/rng.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <mutex>

#if defined(RCGS_HAVE_CBLAS)
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace rcgs {

std::string to_string(FeatureKind kind)
{
    return kind == FeatureKind::kLinear ? "linear" : "linear_plus_squares";
}

FeatureKind feature_kind_from_string(const std::string& name)
{
    if (name == "linear") return FeatureKind::kLinear;
    if (name == "linear_plus_squares") return FeatureKind::kLinearPlusSquares;
    fail(ErrorKind::kInvalidArgument, "unknown feature kind '" + name + "'");
}

void features_into(const FeatureSpec& spec, const Vector& r, Eigen::Ref<Vector> out)
{
    const Eigen::Index n = r.size();
    require(out.size() == spec.dimension(n), "features: output slice has wrong length");
    out.head(n) = r;
    Eigen::Index at = n;
    if (spec.kind == FeatureKind::kLinearPlusSquares) {
        out.segment(n, n) = r.array().square().matrix();
        at += n;
    }
    if (spec.includes_bias) out[at] = 1.0;
}

Vector features(const FeatureSpec& spec, const Vector& r)
{
    require(r.allFinite(), "features: non-finite reservoir state");
    Vector out(spec.dimension(r.size()));
    features_into(spec, r, out);
    return out;
}

Readout::Readout(FeatureSpec spec, Matrix weights, double ridge_beta, TrainingDiagnostics diagnostics)
    : spec_(spec), weights_(std::move(weights)), beta_(ridge_beta), diagnostics_(std::move(diagnostics))
{
    require(weights_.allFinite(), "readout: non-finite weights");
    require(ridge_beta >= 0.0, "readout: ridge beta must be non-negative");
    const Eigen::Index per = spec_.kind == FeatureKind::kLinearPlusSquares ? 2 : 1;
    const Eigen::Index body = weights_.cols() - (spec_.includes_bias ? 1 : 0);
    require(body >= per && body % per == 0, "readout: weight width does not match the feature spec");
    n_nodes_ = body / per;
}

void Readout::apply(const Vector& r, Vector& out) const
{
    out.noalias() = linear_block() * r;
    if (has_squares()) out.noalias() += squares_block() * r.array().square().matrix();
    if (spec_.includes_bias) out += weights_.col(weights_.cols() - 1);
}

Vector Readout::operator()(const Vector& r) const
{
    require(r.size() == n_nodes_, "readout: state has wrong dimension");
    Vector out;
    apply(r, out);
    return out;
}

Readout zero_readout(const FeatureSpec& spec, Eigen::Index n_nodes, Eigen::Index output_dim)
{
    return Readout(spec, Matrix::Zero(output_dim, spec.dimension(n_nodes)), 0.0);
}

namespace {

Eigen::Index washout_samples(const Trajectory& input, double washout)
{
    require(washout >= 0.0, "harvest: washout must be non-negative");
    require(washout < input.duration(), "harvest: washout must be shorter than the input");
    return steps_for(washout, input.dt);
}

}  // namespace

HarvestResult harvest(const Reservoir& res, const Trajectory& input, double washout, const Vector& r0)
{
    const Eigen::Index skip = washout_samples(input, washout);
    HarvestResult out;
    out.states.resize(input.size() - skip, res.n());
    out.targets = input.states.bottomRows(input.size() - skip);
    drive_visit(res, input, r0, [&](Eigen::Index k, const Vector& r) {
        if (k >= skip) out.states.row(k - skip) = r.transpose();
    });
    return out;
}

NormalEquations::NormalEquations(Eigen::Index feature_dim, Eigen::Index output_dim, Eigen::Index block_rows)
    : gram_(Matrix::Zero(feature_dim, feature_dim)), cross_(Matrix::Zero(feature_dim, output_dim)),
      block_phi_(feature_dim, block_rows), block_target_(output_dim, block_rows),
      target_sumsq_(Vector::Zero(output_dim))
{
    require(feature_dim >= 1 && output_dim >= 1 && block_rows >= 1, "NormalEquations: bad dimensions");
}

void NormalEquations::add(const Eigen::Ref<const Vector>& phi, const Eigen::Ref<const Vector>& target)
{
    block_phi_.col(pending_) = phi;
    block_target_.col(pending_) = target;
    target_sumsq_ += target.array().square().matrix();
    ++samples_;
    symmetric_ = false;
    if (++pending_ == block_phi_.cols()) flush();
}

void NormalEquations::add_rows(const Matrix& features, const Matrix& targets)
{
    require(features.rows() == targets.rows(), "NormalEquations: row count mismatch");
    require(features.cols() == gram_.rows() && targets.cols() == cross_.cols(), "NormalEquations: width mismatch");
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        add(features.row(i).transpose(), targets.row(i).transpose());
}

void NormalEquations::flush()
{
    if (pending_ == 0) return;
    const auto phi = block_phi_.leftCols(pending_);
#if defined(RCGS_HAVE_CBLAS)
    // Eigen's rank update runs at a fraction of BLAS syrk speed at this size.
    // Single-threaded BLAS keeps results independent of the thread count.
    static std::once_flag single_thread;
    std::call_once(single_thread, [] { openblas_set_num_threads(1); });
    cblas_dsyrk(CblasColMajor, CblasLower, CblasNoTrans, static_cast<int>(gram_.rows()), static_cast<int>(pending_),
                1.0, block_phi_.data(), static_cast<int>(block_phi_.rows()), 1.0, gram_.data(),
                static_cast<int>(gram_.rows()));
#else
    gram_.selfadjointView<Eigen::Lower>().rankUpdate(phi);
#endif
    cross_.noalias() += phi * block_target_.leftCols(pending_).transpose();
    pending_ = 0;
}

const Matrix& NormalEquations::gram()
{
    flush();
    if (!symmetric_) {
        gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
        symmetric_ = true;
    }
    return gram_;
}

const Matrix& NormalEquations::cross()
{
    flush();
    return cross_;
}

RidgeSolution solve_normal_equations(const Matrix& gram, const Matrix& cross, double beta)
{
    require(gram.rows() == gram.cols() && gram.rows() == cross.rows(), "ridge: inconsistent normal equations");
    require(std::isfinite(beta) && beta >= 0.0, "ridge: beta must be a finite non-negative number");

    Matrix m = gram;
    m.diagonal().array() += beta;
    Eigen::LLT<Matrix> llt(m);
    const Vector pivots = llt.matrixLLT().diagonal();
    const double pmin = pivots.cwiseAbs().minCoeff();
    const double pmax = pivots.cwiseAbs().maxCoeff();
    const double condition = pmin > 0.0 ? (pmax / pmin) * (pmax / pmin) : INFINITY;
    if (llt.info() != Eigen::Success || !pivots.allFinite() || !(pmin > 0.0) ||
        (beta == 0.0 && condition > 1e15)) {
        fail(ErrorKind::kNumerical,
             beta == 0.0 ? "ridge: normal equations are singular; use beta > 0"
                         : "ridge: regularized normal equations could not be factorized");
    }

    Matrix x = llt.solve(cross);
    const double cnorm = cross.norm();
    auto residual_of = [&](const Matrix& sol) {
        return cnorm > 0.0 ? (m * sol - cross).norm() / cnorm : (m * sol).norm();
    };
    double residual = residual_of(x);
    // Iterative refinement; stops as soon as a step fails to help.
    for (int it = 0; it < 3 && residual > 1e-14; ++it) {
        Matrix candidate = x + llt.solve(cross - m * x);
        const double r = residual_of(candidate);
        if (!(r < residual)) break;
        x = std::move(candidate);
        residual = r;
    }

    RidgeSolution out;
    out.weights = x.transpose();
    out.normal_residual = residual;
    out.condition_estimate = condition;
    return out;
}

Matrix ridge_fit(const Matrix& features, const Matrix& targets, double beta)
{
    require(features.rows() >= 1, "ridge_fit: need at least one sample");
    require(features.rows() == targets.rows(), "ridge_fit: features and targets differ in row count");
    require(features.allFinite() && targets.allFinite(), "ridge_fit: non-finite data");
    require(beta >= 0.0, "ridge_fit: beta must be non-negative");
    require(features.cols() <= features.rows() || beta > 0.0,
            "ridge_fit: more features than samples requires beta > 0");
    const Matrix gram = features.transpose() * features;
    const Matrix cross = features.transpose() * targets;
    return solve_normal_equations(gram, cross, beta).weights;
}

Readout train(const Reservoir& res, const Trajectory& input, const TrainOptions& opt)
{
    require(input.dim() == res.input_dim(), "train: input dimension does not match the reservoir");
    const Eigen::Index skip = washout_samples(input, opt.washout);
    const Eigen::Index f = opt.spec.dimension(res.n());
    const Eigen::Index d = res.input_dim();

    NormalEquations ne(f, d);
    Vector phi(f);
    const Vector r0 = res.random_state(stream_seed(res.params().seed, Stream::kInitialState));
    drive_visit(res, input, r0, [&](Eigen::Index k, const Vector& r) {
        if (k < skip) return;
        features_into(opt.spec, r, phi);
        ne.add(phi, input.states.row(k).transpose());
    });
    require(f <= ne.samples() || opt.beta > 0.0, "train: more features than samples requires beta > 0");

    const Matrix& gram = ne.gram();
    const Matrix& cross = ne.cross();
    RidgeSolution sol = solve_normal_equations(gram, cross, opt.beta);

    TrainingDiagnostics diag;
    diag.samples = ne.samples();
    diag.normal_residual = sol.normal_residual;
    diag.condition_estimate = sol.condition_estimate;
    diag.rmse.resize(d);
    // SSE_c = U_c.U_c - 2 w_c.C_c + w_c^T G w_c, from the accumulated moments.
    for (Eigen::Index c = 0; c < d; ++c) {
        const Vector w = sol.weights.row(c).transpose();
        const double sse = ne.target_sumsq()[c] - 2.0 * w.dot(cross.col(c)) + w.dot(gram * w);
        diag.rmse[c] = std::sqrt(std::max(0.0, sse) / static_cast<double>(diag.samples));
    }
    return Readout(opt.spec, std::move(sol.weights), opt.beta, std::move(diag));
}

}  // namespace rcgs
