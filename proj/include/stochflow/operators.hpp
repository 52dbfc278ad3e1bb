#pragma once

// Finite-dimensional operator algebra on span{e_1..e_n}.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace stochflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense n x n real matrix of a bounded operator in the basis e_1..e_n.
/// Every instance is finite and has dim >= 1.
class TruncatedOperator {
public:
    explicit TruncatedOperator(Matrix entries);

    static TruncatedOperator identity(std::size_t dim);
    static TruncatedOperator zero(std::size_t dim);
    static TruncatedOperator diagonal(std::span<const double> entries);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    const Matrix& matrix() const noexcept { return entries_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }

    TruncatedOperator transpose() const;

    friend TruncatedOperator operator*(const TruncatedOperator& a, const TruncatedOperator& b);
    friend TruncatedOperator operator+(const TruncatedOperator& a, const TruncatedOperator& b);
    friend TruncatedOperator operator-(const TruncatedOperator& a, const TruncatedOperator& b);
    friend TruncatedOperator operator*(double c, const TruncatedOperator& a);

private:
    Matrix entries_;
};

/// Drift B_0 plus noise operators B_1..B_K with cached norms and M = sum ||B_k||.
class OperatorFamily {
public:
    OperatorFamily(TruncatedOperator drift, std::vector<TruncatedOperator> noise);

    /// Family with zero drift.
    static OperatorFamily noise_only(std::vector<TruncatedOperator> noise);

    std::size_t dim() const noexcept { return drift_.dim(); }
    std::size_t noise_count() const noexcept { return noise_.size(); }

    const TruncatedOperator& drift() const noexcept { return drift_; }
    const std::vector<TruncatedOperator>& noise() const noexcept { return noise_; }

    /// Member by family index: 0 is the drift, k >= 1 the k-th noise operator.
    const TruncatedOperator& member(std::size_t index) const;

    const std::vector<double>& norms() const noexcept { return norms_; }
    double bound() const noexcept { return bound_; }

    /// sum_k B_k^2 over the noise members.
    TruncatedOperator noise_square_sum() const;

    /// First pair (i, j) of family members with ||B_i B_j - B_j B_i|| > tol ||B_i|| ||B_j||,
    /// or (-1, -1) when all members commute. Indices follow member().
    std::pair<int, int> first_noncommuting_pair(double tol = 1e-10) const;

private:
    TruncatedOperator drift_;
    std::vector<TruncatedOperator> noise_;
    std::vector<double> norms_;
    double bound_ = 0.0;
};

/// alpha = (alpha_1..alpha_n) with entries in {0..max_index}.
class MultiIndex {
public:
    MultiIndex(std::vector<int> entries, int max_index);

    std::size_t order() const noexcept { return entries_.size(); }
    const std::vector<int>& entries() const noexcept { return entries_; }
    int max_index() const noexcept { return max_index_; }

private:
    std::vector<int> entries_;
    int max_index_;
};

/// Singular values, descending. Deterministic two-sided Jacobi SVD.
Vector singular_values(const Matrix& m);

double operator_norm(const TruncatedOperator& t);
double operator_norm(const Matrix& m);

/// (sum_j s_j^p)^{1/p}; p < 1 raises DomainError.
double schatten_norm(const TruncatedOperator& t, double p);
double schatten_norm(const Matrix& m, double p);

/// e^T via Eigen MatrixFunctions (Pade scaling and squaring).
TruncatedOperator matrix_exponential(const TruncatedOperator& t);
Matrix matrix_exponential(const Matrix& m);

/// B_{alpha_1} B_{alpha_2} ... B_{alpha_n}.
TruncatedOperator multi_index_operator(const OperatorFamily& family, const MultiIndex& alpha);

/// M = sum_{k>=1} ||B_k||.
double family_bound(const OperatorFamily& family);

bool all_finite(const Matrix& m);

}  // namespace stochflow
