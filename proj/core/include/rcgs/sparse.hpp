#pragma once

#include "rcgs/common.hpp"

#include <cstdint>
#include <vector>

namespace rcgs {

struct SparseTriplets;

/// Compressed sparse rows with 32-bit indices; the reservoir's only sparse kernel.
class CsrMatrix {
public:
    CsrMatrix() = default;
    explicit CsrMatrix(const SparseTriplets& t);

    Eigen::Index rows() const noexcept { return static_cast<Eigen::Index>(row_ptr_.size()) - 1; }
    std::size_t nnz() const noexcept { return values_.size(); }

    /// y = A x. x and y must not alias.
    void multiply(const double* x, double* y) const;
    void multiply(const Vector& x, Vector& y) const
    {
        y.resize(rows());
        multiply(x.data(), y.data());
    }
    /// Y = A X for a row-major block with any number of columns.
    void multiply(const RowMatrix& x, RowMatrix& y) const;

private:
    std::vector<std::int32_t> row_ptr_{0};
    std::vector<std::int32_t> cols_;
    std::vector<double> values_;
};

/// Elementwise tanh via tanh(x) = 1 - 2 / (exp(2x) + 1), which Eigen vectorizes.
/// Absolute error is below 1e-15 everywhere.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& x)
{
    return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

}  // namespace rcgs
