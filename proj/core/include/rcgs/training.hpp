#pragma once

#include "rcgs/common.hpp"
#include "rcgs/driver_systems.hpp"
#include "rcgs/reservoir.hpp"

#include <string>

namespace rcgs {

enum class FeatureKind { kLinear, kLinearPlusSquares };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

/// Polynomial feature map. Layout: (r, r*r if squares, 1 if bias).
struct FeatureSpec {
    FeatureKind kind = FeatureKind::kLinearPlusSquares;
    bool includes_bias = true;

    Eigen::Index dimension(Eigen::Index n_nodes) const noexcept
    {
        return n_nodes * (kind == FeatureKind::kLinearPlusSquares ? 2 : 1) + (includes_bias ? 1 : 0);
    }
    bool operator==(const FeatureSpec&) const = default;
};

Vector features(const FeatureSpec& spec, const Vector& r);
/// Writes into a preallocated slice of length spec.dimension(r.size()).
void features_into(const FeatureSpec& spec, const Vector& r, Eigen::Ref<Vector> out);

struct TrainingDiagnostics {
    long samples = 0;
    /// Per observable component, in the units of the training targets.
    Vector rmse;
    /// ||(G + beta I) W^T - Phi^T U|| / ||Phi^T U||.
    double normal_residual = 0.0;
    /// Ratio of largest to smallest pivot of the regularized Gram factorization.
    double condition_estimate = 0.0;
};

/// Trained output map phi(r) = W_out * features(r).
class Readout {
public:
    Readout() = default;
    Readout(FeatureSpec spec, Matrix weights, double ridge_beta, TrainingDiagnostics diagnostics = {});

    const FeatureSpec& spec() const noexcept { return spec_; }
    const Matrix& weights() const noexcept { return weights_; }
    double ridge_beta() const noexcept { return beta_; }
    const TrainingDiagnostics& diagnostics() const noexcept { return diagnostics_; }
    Eigen::Index output_dim() const noexcept { return weights_.rows(); }
    Eigen::Index n_nodes() const noexcept { return n_nodes_; }

    /// phi(r) without materializing the feature vector.
    void apply(const Vector& r, Vector& out) const;
    Vector operator()(const Vector& r) const;

    /// Linear-term block (D x N).
    auto linear_block() const { return weights_.leftCols(n_nodes_); }
    bool has_squares() const noexcept { return spec_.kind == FeatureKind::kLinearPlusSquares; }
    /// Squares block (D x N); only meaningful when has_squares().
    auto squares_block() const { return weights_.middleCols(n_nodes_, n_nodes_); }

private:
    FeatureSpec spec_;
    Matrix weights_;
    double beta_ = 0.0;
    TrainingDiagnostics diagnostics_;
    Eigen::Index n_nodes_ = 0;
};

/// Zero readout of the right shape, for untrained baselines.
Readout zero_readout(const FeatureSpec& spec, Eigen::Index n_nodes, Eigen::Index output_dim);

struct HarvestResult {
    /// S x N.
    Matrix states;
    /// S x D.
    Matrix targets;
};

/// Drives the reservoir and keeps samples at or after the washout; the
/// retained count is input rows - washout / dt.
HarvestResult harvest(const Reservoir& res, const Trajectory& input, double washout, const Vector& r0);

/// Streaming accumulation of Phi^T Phi and Phi^T U. Memory is O(F^2).
class NormalEquations {
public:
    NormalEquations(Eigen::Index feature_dim, Eigen::Index output_dim, Eigen::Index block_rows = 256);

    void add(const Eigen::Ref<const Vector>& phi, const Eigen::Ref<const Vector>& target);
    /// Adds every row of (features, targets).
    void add_rows(const Matrix& features, const Matrix& targets);

    long samples() const noexcept { return samples_; }
    /// Full symmetric Phi^T Phi (flushes pending rows).
    const Matrix& gram();
    const Matrix& cross();
    /// Sum of squared targets per component, for residual diagnostics.
    const Vector& target_sumsq() const noexcept { return target_sumsq_; }

private:
    void flush();

    Matrix gram_;
    Matrix cross_;
    Matrix block_phi_;
    Matrix block_target_;
    Vector target_sumsq_;
    Eigen::Index pending_ = 0;
    long samples_ = 0;
    bool symmetric_ = false;
};

struct RidgeSolution {
    /// D x F.
    Matrix weights;
    double normal_residual = 0.0;
    double condition_estimate = 0.0;
};

/// Solves (G + beta I) W^T = C with G = Phi^T Phi, C = Phi^T U.
RidgeSolution solve_normal_equations(const Matrix& gram, const Matrix& cross, double beta);

/// Minimizes ||Phi W^T - U||^2 + beta ||W||^2. Returns D x F weights.
Matrix ridge_fit(const Matrix& features, const Matrix& targets, double beta);

struct TrainOptions {
    FeatureSpec spec;
    double beta = 1e-6;
    double washout = 20.0;
};

/// harvest + features + ridge_fit, streamed. The initial reservoir state is
/// Reservoir::random_state on the reservoir's initial-state stream.
Readout train(const Reservoir& res, const Trajectory& input, const TrainOptions& opt);

}  // namespace rcgs
