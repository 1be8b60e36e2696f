#pragma once

#include "rcgs/common.hpp"
#include "rcgs/driver_systems.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <type_traits>
#include <vector>

namespace rcgs {

struct LyapunovSpectrum {
    /// Sorted non-increasing, units 1/time.
    Vector exponents;
    int k = 0;
    double transient_discarded = 0.0;
    double averaging_time = 0.0;
    /// Running means after each renormalization, columns in the final sort order.
    std::vector<Vector> convergence_history;
    /// Max minus min of each running mean over the last 20% of the history.
    Vector drift;
    /// Convergence threshold applied to every entry of `drift`.
    double tolerance = 0.0;
    bool converged = false;
    /// Set when the underlying trajectory left its admissible region.
    std::optional<double> escape_time;
};

struct BenettinOptions {
    int renorm_interval = 10;
    /// Drift threshold as a fraction of |lambda_1|.
    double tolerance_fraction = 0.01;
    /// Fraction of the history over which drift is measured.
    double drift_window = 0.2;
};

/// Tangent flow concept consumed by benettin():
///   int dim() const; double dt() const;
///   M& tangent();                       // dim x k block (any dense Eigen type) evolved in place
///   bool advance();                     // one step of state + tangent; false on escape
template <typename Flow>
LyapunovSpectrum benettin(Flow& flow, int k, long n_steps, const BenettinOptions& opt = {})
{
    require(k >= 1 && k <= flow.dim(), "benettin: k must lie in [1, dim]");
    require(n_steps >= opt.renorm_interval && opt.renorm_interval >= 1,
            "benettin: need at least one renormalization interval");

    auto& q = flow.tangent();
    using Tangent = std::decay_t<decltype(q)>;
    q = Tangent::Identity(flow.dim(), k);

    Vector log_sum = Vector::Zero(k);
    LyapunovSpectrum out;
    out.k = k;
    out.convergence_history.reserve(static_cast<std::size_t>(n_steps / opt.renorm_interval));

    double elapsed = 0.0;
    for (long step = 1; step <= n_steps; ++step) {
        if (!flow.advance()) {
            out.escape_time = static_cast<double>(step) * flow.dt();
            break;
        }
        if (step % opt.renorm_interval != 0) continue;

        Eigen::HouseholderQR<Matrix> qr(q);
        const Matrix& packed = qr.matrixQR();
        for (int i = 0; i < k; ++i) log_sum[i] += std::log(std::abs(packed(i, i)));
        q = qr.householderQ() * Tangent::Identity(flow.dim(), k);
        // HouseholderQR does not normalize signs; fold them into Q so the
        // tangent basis evolves continuously between renormalizations.
        for (int i = 0; i < k; ++i)
            if (packed(i, i) < 0) q.col(i) = -q.col(i);

        elapsed = static_cast<double>(step) * flow.dt();
        out.convergence_history.push_back(log_sum / elapsed);
    }

    require(!out.convergence_history.empty(), "benettin: trajectory escaped before the first renormalization");
    out.averaging_time = elapsed;

    const Vector& raw = out.convergence_history.back();
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return raw[a] > raw[b]; });

    auto permute = [&](const Vector& v) {
        Vector p(k);
        for (int i = 0; i < k; ++i) p[i] = v[order[static_cast<std::size_t>(i)]];
        return p;
    };
    for (auto& h : out.convergence_history) h = permute(h);
    out.exponents = out.convergence_history.back();

    const std::size_t total = out.convergence_history.size();
    const std::size_t window = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(opt.drift_window * static_cast<double>(total))));
    Vector lo = out.convergence_history[total - window];
    Vector hi = lo;
    for (std::size_t i = total - window; i < total; ++i) {
        lo = lo.cwiseMin(out.convergence_history[i]);
        hi = hi.cwiseMax(out.convergence_history[i]);
    }
    out.drift = hi - lo;
    out.tolerance = opt.tolerance_fraction * std::abs(out.exponents[0]);
    out.converged = !out.escape_time && (out.drift.array() < out.tolerance).all();
    return out;
}

struct OdeLyapunovOptions {
    /// Attractor relaxation before tangent evolution starts.
    double transient_time = 100.0;
    BenettinOptions benettin;
};

/// Benettin spectrum of a driver system, tangent dynamics from its analytic Jacobian.
LyapunovSpectrum lyapunov_spectrum_ode(const DriverSystem& system, const Vector& x0, double dt, long n_steps,
                                       int k, const OdeLyapunovOptions& opt = {});

}  // namespace rcgs
