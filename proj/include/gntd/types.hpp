#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gntd {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Q-values over (s,a) pairs, index = s * n_actions + a.
using QTable = Eigen::VectorXd;

/// Probability vector over (s,a) pairs, same indexing as QTable.
using StationaryDistribution = Eigen::VectorXd;

/// Raised when an input breaks an operation's preconditions (shapes,
/// probability constraints, parameter ranges).
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A linear solve or factorization that could not be completed within
/// tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Power iteration on the induced (s,a) chain did not settle.
class PeriodicOrReducibleChain : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EnumerationBudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition)
        throw ContractViolation(message);
}

/// Weighted inner product sum_i mu_i x_i y_i.
template <typename DerivedA, typename DerivedB, typename DerivedMu>
double mu_inner(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y,
                const Eigen::MatrixBase<DerivedMu>& mu) {
    require(x.size() == mu.size() && y.size() == mu.size(), "mu_inner: length mismatch");
    return (mu.array() * x.array() * y.array()).sum();
}

template <typename DerivedA, typename DerivedMu>
double mu_norm(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedMu>& mu) {
    const double sq = mu_inner(x, x, mu);
    return std::sqrt(std::max(sq, 0.0));
}

} // namespace gntd
