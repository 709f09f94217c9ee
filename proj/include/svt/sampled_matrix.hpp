#pragma once

#include <cmath>
#include <memory>
#include <utility>

#include "svt/core.hpp"
#include "svt/index_set.hpp"
#include "svt/low_rank.hpp"
#include "svt/rng.hpp"

namespace svt {

/// Sparse matrix supported on a fixed index set. The pattern is shared
/// and immutable; values are mutated in place across solver iterations.
class SampledMatrix {
  public:
    SampledMatrix(std::shared_ptr<const IndexSet> pattern, Vector values)
        : pattern_(std::move(pattern)), values_(std::move(values)) {
        if (!pattern_) throw ValidationError("SampledMatrix: null pattern");
        if (values_.size() != pattern_->size())
            throw DimensionError("SampledMatrix: " + std::to_string(values_.size()) +
                                 " values for " + std::to_string(pattern_->size()) +
                                 " indices");
        if (!values_.allFinite())
            throw ValidationError("SampledMatrix: non-finite values");
    }

    SampledMatrix(IndexSet pattern, Vector values)
        : SampledMatrix(std::make_shared<const IndexSet>(std::move(pattern)),
                        std::move(values)) {}

    static SampledMatrix zeros(std::shared_ptr<const IndexSet> pattern) {
        const Index nnz = pattern->size();
        return SampledMatrix(std::move(pattern), Vector::Zero(nnz));
    }

    Index rows() const { return pattern_->rows(); }
    Index cols() const { return pattern_->cols(); }
    Index nnz() const { return pattern_->size(); }

    const IndexSet& pattern() const { return *pattern_; }
    std::shared_ptr<const IndexSet> pattern_ptr() const { return pattern_; }

    const Vector& values() const { return values_; }
    void set_values(Vector v) {
        if (v.size() != values_.size())
            throw DimensionError("SampledMatrix::set_values: length mismatch");
        values_ = std::move(v);
    }
    /// In-place value update on the fixed pattern.
    void axpy(double alpha, const Vector& delta) {
        if (delta.size() != values_.size())
            throw DimensionError("SampledMatrix::axpy: length mismatch");
        values_ += alpha * delta;
    }

    /// y = S x, cost O(nnz).
    Vector apply(const Vector& x) const {
        if (x.size() != cols())
            throw DimensionError("SampledMatrix::apply: vector length " +
                                 std::to_string(x.size()) + " vs cols " +
                                 std::to_string(cols()));
        Vector y = Vector::Zero(rows());
        const IndexSet& p = *pattern_;
        for (Index k = 0; k < p.size(); ++k) y[p.row(k)] += values_[k] * x[p.col(k)];
        return y;
    }

    /// x = S^T y, cost O(nnz).
    Vector apply_adjoint(const Vector& y) const {
        if (y.size() != rows())
            throw DimensionError("SampledMatrix::apply_adjoint: vector length " +
                                 std::to_string(y.size()) + " vs rows " +
                                 std::to_string(rows()));
        Vector x = Vector::Zero(cols());
        const IndexSet& p = *pattern_;
        for (Index k = 0; k < p.size(); ++k) x[p.col(k)] += values_[k] * y[p.row(k)];
        return x;
    }

    double frobenius_norm() const { return values_.norm(); }

    /// Largest singular value estimated by power iteration on S^T S
    /// from a fixed seeded start vector. The Aitken-style error
    /// estimate keeps slow geometric convergence from stopping early.
    double spectral_norm_est(double tol = 1e-6, std::uint64_t seed = 777) const {
        if (nnz() == 0) return 0.0;
        Rng rng(seed);
        Vector v = rng.unit_vector(cols());
        double sigma = 0.0;
        double prev_diff = -1.0;
        const int max_iters = 20000;
        for (int it = 0; it < max_iters; ++it) {
            Vector w = apply(v);
            const double norm_w = w.norm();
            if (norm_w == 0.0) {
                // v fell in the null space; restart from a fresh direction
                v = rng.unit_vector(cols());
                continue;
            }
            const double sigma_new = norm_w;
            Vector z = apply_adjoint(w / norm_w);
            const double norm_z = z.norm();
            if (norm_z == 0.0) return sigma_new;
            v = z / norm_z;
            const double diff = std::abs(sigma_new - sigma);
            if (it > 0) {
                double err_est = diff;
                if (prev_diff > 0.0 && diff < prev_diff) {
                    const double ratio = diff / prev_diff;
                    err_est = diff * ratio / (1.0 - ratio);
                }
                if (err_est <= tol * sigma_new && diff <= tol * sigma_new)
                    return sigma_new;
            }
            prev_diff = diff;
            sigma = sigma_new;
        }
        return sigma;
    }

    Matrix to_dense(Index cap_entries = kDensifyCapEntries) const {
        if (rows() * cols() > cap_entries)
            throw SizeCapError("SampledMatrix::to_dense: " + dim_string(rows(), cols()) +
                               " exceeds densification cap");
        Matrix out = Matrix::Zero(rows(), cols());
        const IndexSet& p = *pattern_;
        for (Index k = 0; k < p.size(); ++k) out(p.row(k), p.col(k)) = values_[k];
        return out;
    }

  private:
    std::shared_ptr<const IndexSet> pattern_;
    Vector values_;
};

/// P_Omega(A) for dense A.
inline SampledMatrix project(const Matrix& a, std::shared_ptr<const IndexSet> omega) {
    if (a.rows() != omega->rows() || a.cols() != omega->cols())
        throw DimensionError("project: matrix " + dim_string(a.rows(), a.cols()) +
                             " vs pattern " + dim_string(omega->rows(), omega->cols()));
    Vector vals(omega->size());
    for (Index k = 0; k < omega->size(); ++k) vals[k] = a(omega->row(k), omega->col(k));
    return SampledMatrix(std::move(omega), std::move(vals));
}

/// Values of P_Omega(X) for factored X, entry (i,j) = sum_t U_it s_t V_jt,
/// cost O(|Omega| r) with no densification.
inline Vector project_values(const LowRankMatrix& x, const IndexSet& omega) {
    if (x.rows() != omega.rows() || x.cols() != omega.cols())
        throw DimensionError("project_values: matrix " + dim_string(x.rows(), x.cols()) +
                             " vs pattern " + dim_string(omega.rows(), omega.cols()));
    Vector vals = Vector::Zero(omega.size());
    if (x.rank() == 0) return vals;
    const Matrix usig = x.u() * x.sigma().asDiagonal();
    const Matrix& v = x.v();
    for (Index k = 0; k < omega.size(); ++k)
        vals[k] = usig.row(omega.row(k)).dot(v.row(omega.col(k)));
    return vals;
}

inline SampledMatrix project(const LowRankMatrix& x,
                             std::shared_ptr<const IndexSet> omega) {
    Vector vals = project_values(x, *omega);
    return SampledMatrix(std::move(omega), std::move(vals));
}

/// S + sign * P_Omega(X) on the pattern of S.
inline SampledMatrix lowrank_add_project(const LowRankMatrix& x, const SampledMatrix& s,
                                         double sign) {
    Vector vals = project_values(x, s.pattern());
    vals = s.values() + sign * vals;
    return SampledMatrix(s.pattern_ptr(), std::move(vals));
}

}  // namespace svt
