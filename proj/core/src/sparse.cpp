#include "rcgs/sparse.hpp"

#include "rcgs/reservoir.hpp"

#include <limits>
#include <numeric>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace rcgs {

CsrMatrix::CsrMatrix(const SparseTriplets& t)
{
    require(t.n >= 0 && t.n < std::numeric_limits<std::int32_t>::max(), "CsrMatrix: dimension too large");
    require(t.nnz() < static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()), "CsrMatrix: too many entries");
    const auto n = static_cast<std::size_t>(t.n);
    row_ptr_.assign(n + 1, 0);
    for (std::int64_t r : t.rows) ++row_ptr_[static_cast<std::size_t>(r) + 1];
    std::partial_sum(row_ptr_.begin(), row_ptr_.end(), row_ptr_.begin());

    cols_.resize(t.nnz());
    values_.resize(t.nnz());
    std::vector<std::int32_t> fill(row_ptr_.begin(), row_ptr_.end() - 1);
    for (std::size_t i = 0; i < t.nnz(); ++i) {
        const auto at = static_cast<std::size_t>(fill[static_cast<std::size_t>(t.rows[i])]++);
        cols_[at] = static_cast<std::int32_t>(t.cols[i]);
        values_[at] = t.values[i];
    }
}

void CsrMatrix::multiply(const double* x, double* y) const
{
    const Eigen::Index n = rows();
    const std::int32_t* cols = cols_.data();
    const double* vals = values_.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        std::int32_t k = row_ptr_[static_cast<std::size_t>(i)];
        const std::int32_t end = row_ptr_[static_cast<std::size_t>(i) + 1];
        double sum = 0.0;
#if defined(__AVX512F__)
        __m512d acc = _mm512_setzero_pd();
        for (; k + 8 <= end; k += 8) {
            const __m256i idx = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(cols + k));
            acc = _mm512_fmadd_pd(_mm512_loadu_pd(vals + k), _mm512_i32gather_pd(idx, x, 8), acc);
        }
        sum = _mm512_reduce_add_pd(acc);
#endif
        for (; k < end; ++k) sum += vals[k] * x[cols[k]];
        y[i] = sum;
    }
}

void CsrMatrix::multiply(const RowMatrix& x, RowMatrix& y) const
{
    require(x.rows() == rows(), "CsrMatrix: block has wrong row count");
    y.setZero(rows(), x.cols());
    for (Eigen::Index i = 0; i < rows(); ++i) {
        auto out = y.row(i);
        for (std::int32_t k = row_ptr_[static_cast<std::size_t>(i)]; k < row_ptr_[static_cast<std::size_t>(i) + 1]; ++k)
            out.noalias() += values_[static_cast<std::size_t>(k)] * x.row(cols_[static_cast<std::size_t>(k)]);
    }
}

}  // namespace rcgs
