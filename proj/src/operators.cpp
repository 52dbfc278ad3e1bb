#include "stochflow/operators.hpp"

#include "stochflow/errors.hpp"

#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace stochflow {

bool all_finite(const Matrix& m) { return m.allFinite(); }

TruncatedOperator::TruncatedOperator(Matrix entries) : entries_(std::move(entries)) {
    if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
        throw InvalidOperator("operator must be square with dim >= 1, got " +
                              std::to_string(entries_.rows()) + "x" + std::to_string(entries_.cols()));
    }
    if (!entries_.allFinite()) {
        throw InvalidOperator("operator has non-finite entries");
    }
}

TruncatedOperator TruncatedOperator::identity(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return TruncatedOperator(Matrix::Identity(n, n));
}

TruncatedOperator TruncatedOperator::zero(std::size_t dim) {
    const auto n = static_cast<Eigen::Index>(dim);
    return TruncatedOperator(Matrix::Zero(n, n));
}

TruncatedOperator TruncatedOperator::diagonal(std::span<const double> entries) {
    Vector d(static_cast<Eigen::Index>(entries.size()));
    for (std::size_t i = 0; i < entries.size(); ++i) d(static_cast<Eigen::Index>(i)) = entries[i];
    return TruncatedOperator(Matrix(d.asDiagonal()));
}

TruncatedOperator TruncatedOperator::transpose() const { return TruncatedOperator(entries_.transpose()); }

namespace {

void require_same_dim(const TruncatedOperator& a, const TruncatedOperator& b, const char* op) {
    if (a.dim() != b.dim()) {
        std::ostringstream msg;
        msg << "dimension mismatch in " << op << ": " << a.dim() << " vs " << b.dim();
        throw DimensionMismatch(msg.str());
    }
}

}  // namespace

TruncatedOperator operator*(const TruncatedOperator& a, const TruncatedOperator& b) {
    require_same_dim(a, b, "product");
    return TruncatedOperator(a.entries_ * b.entries_);
}

TruncatedOperator operator+(const TruncatedOperator& a, const TruncatedOperator& b) {
    require_same_dim(a, b, "sum");
    return TruncatedOperator(a.entries_ + b.entries_);
}

TruncatedOperator operator-(const TruncatedOperator& a, const TruncatedOperator& b) {
    require_same_dim(a, b, "difference");
    return TruncatedOperator(a.entries_ - b.entries_);
}

TruncatedOperator operator*(double c, const TruncatedOperator& a) { return TruncatedOperator(c * a.entries_); }

// ---------------------------------------------------------------------------
// OperatorFamily

OperatorFamily::OperatorFamily(TruncatedOperator drift, std::vector<TruncatedOperator> noise)
    : drift_(std::move(drift)), noise_(std::move(noise)) {
    norms_.reserve(noise_.size());
    for (std::size_t k = 0; k < noise_.size(); ++k) {
        if (noise_[k].dim() != drift_.dim()) {
            throw DimensionMismatch("noise operator " + std::to_string(k + 1) + " has dim " +
                                    std::to_string(noise_[k].dim()) + ", drift has dim " +
                                    std::to_string(drift_.dim()));
        }
        norms_.push_back(operator_norm(noise_[k]));
    }
    for (double n : norms_) bound_ += n;
}

OperatorFamily OperatorFamily::noise_only(std::vector<TruncatedOperator> noise) {
    if (noise.empty()) throw InvalidOperator("noise_only family needs at least one operator to fix dim");
    const auto dim = noise.front().dim();
    return OperatorFamily(TruncatedOperator::zero(dim), std::move(noise));
}

const TruncatedOperator& OperatorFamily::member(std::size_t index) const {
    if (index == 0) return drift_;
    if (index > noise_.size()) {
        throw IndexOutOfRange("family index " + std::to_string(index) + " exceeds K = " +
                              std::to_string(noise_.size()));
    }
    return noise_[index - 1];
}

TruncatedOperator OperatorFamily::noise_square_sum() const {
    Matrix acc = Matrix::Zero(static_cast<Eigen::Index>(dim()), static_cast<Eigen::Index>(dim()));
    for (const auto& b : noise_) acc += b.matrix() * b.matrix();
    return TruncatedOperator(std::move(acc));
}

std::pair<int, int> OperatorFamily::first_noncommuting_pair(double tol) const {
    const std::size_t count = noise_.size() + 1;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& bi = member(i).matrix();
        const double ni = operator_norm(bi);
        for (std::size_t j = i + 1; j < count; ++j) {
            const auto& bj = member(j).matrix();
            const double nj = operator_norm(bj);
            const double comm = operator_norm(Matrix(bi * bj - bj * bi));
            if (comm > tol * ni * nj) return {static_cast<int>(i), static_cast<int>(j)};
        }
    }
    return {-1, -1};
}

// ---------------------------------------------------------------------------
// MultiIndex

MultiIndex::MultiIndex(std::vector<int> entries, int max_index)
    : entries_(std::move(entries)), max_index_(max_index) {
    if (entries_.empty()) throw IndexOutOfRange("multi-index must be nonempty");
    for (int e : entries_) {
        if (e < 0 || e > max_index_) {
            throw IndexOutOfRange("multi-index entry " + std::to_string(e) + " outside {0.." +
                                  std::to_string(max_index_) + "}");
        }
    }
}

// ---------------------------------------------------------------------------
// Norms

Vector singular_values(const Matrix& m) {
    if (!m.allFinite()) throw InvalidOperator("singular values requested for non-finite matrix");
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues();
}

double operator_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return singular_values(m)(0);
}

double operator_norm(const TruncatedOperator& t) { return operator_norm(t.matrix()); }

double schatten_norm(const Matrix& m, double p) {
    if (!(p >= 1.0)) throw DomainError("Schatten exponent must satisfy p >= 1, got " + std::to_string(p));
    const Vector s = singular_values(m);
    const double top = s.size() ? s(0) : 0.0;
    if (top == 0.0) return 0.0;
    // scale by the largest singular value so s^p cannot overflow
    double acc = 0.0;
    for (Eigen::Index i = s.size() - 1; i >= 0; --i) acc += std::pow(s(i) / top, p);
    return top * std::pow(acc, 1.0 / p);
}

double schatten_norm(const TruncatedOperator& t, double p) { return schatten_norm(t.matrix(), p); }

// ---------------------------------------------------------------------------
// Matrix exponential (Eigen: Pade scaling and squaring)

Matrix matrix_exponential(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidOperator("matrix exponential of non-square matrix");
    if (!m.allFinite()) throw InvalidOperator("matrix exponential of non-finite matrix");
    const Matrix result = m.exp();
    if (!result.allFinite()) {
        const double norm2 = operator_norm(m);
        std::ostringstream msg;
        msg << "matrix exponential overflows double range (||T|| = " << norm2 << ")";
        throw OverflowError(msg.str(), norm2);
    }
    return result;
}

TruncatedOperator matrix_exponential(const TruncatedOperator& t) {
    return TruncatedOperator(matrix_exponential(t.matrix()));
}

TruncatedOperator multi_index_operator(const OperatorFamily& family, const MultiIndex& alpha) {
    Matrix acc = family.member(static_cast<std::size_t>(alpha.entries().front())).matrix();
    for (std::size_t i = 1; i < alpha.order(); ++i) {
        acc = acc * family.member(static_cast<std::size_t>(alpha.entries()[i])).matrix();
    }
    return TruncatedOperator(std::move(acc));
}

double family_bound(const OperatorFamily& family) { return family.bound(); }

}  // namespace stochflow
