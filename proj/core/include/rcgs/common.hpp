#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rcgs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-per-sample storage used by every time series in the library.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
    kInvalidArgument,
    kNumerical,
    kDivergence,
    kConvergence,
    kIo,
    kPrerequisite,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what)
{
    if (!cond) fail(ErrorKind::kInvalidArgument, what);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x)
{
    return x.allFinite();
}

/// States whose Euclidean norm exceeds this are treated as diverged.
inline constexpr double kOverflowGuard = 1e12;

}  // namespace rcgs
