#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <utility>

#include "svt/core.hpp"
#include "svt/dense_svd.hpp"
#include "svt/index_set.hpp"
#include "svt/rng.hpp"
#include "svt/sampled_matrix.hpp"

namespace svt {

/// Linear operator A mapping n1 x n2 matrices to R^m, with adjoint and
/// an upper bound on ||A||_2. A sampling operator additionally carries
/// its index set so solvers can stay on the sparse path.
class LinearMap {
  public:
    using ApplyFn = std::function<Vector(const Matrix&)>;
    using AdjointFn = std::function<Matrix(const Vector&)>;

    LinearMap(Index out_dim, Index rows, Index cols, ApplyFn apply, AdjointFn adjoint,
              double op_norm_bound)
        : out_dim_(out_dim), rows_(rows), cols_(cols), apply_(std::move(apply)),
          adjoint_(std::move(adjoint)), op_norm_bound_(op_norm_bound) {
        if (out_dim_ < 1 || rows_ < 1 || cols_ < 1)
            throw ValidationError("LinearMap: dimensions must be positive");
        if (!(op_norm_bound_ > 0))
            throw ValidationError("LinearMap: op_norm_bound must be positive");
    }

    /// A(X) = entries of X on Omega in pattern order; A^*A = P_Omega and
    /// ||A||_2 = 1.
    static LinearMap sampling_operator(std::shared_ptr<const IndexSet> omega) {
        const Index m = omega->size();
        if (m == 0) throw ValidationError("LinearMap: empty sampling set");
        auto apply = [omega](const Matrix& x) {
            Vector out(omega->size());
            for (Index k = 0; k < omega->size(); ++k)
                out[k] = x(omega->row(k), omega->col(k));
            return out;
        };
        auto adjoint = [omega](const Vector& y) {
            Matrix out = Matrix::Zero(omega->rows(), omega->cols());
            for (Index k = 0; k < omega->size(); ++k)
                out(omega->row(k), omega->col(k)) = y[k];
            return out;
        };
        LinearMap map(m, omega->rows(), omega->cols(), std::move(apply),
                      std::move(adjoint), 1.0);
        map.sampling_ = std::move(omega);
        return map;
    }

    /// Dense operator given row by row: A(X)_i = <rows[i], X> where each
    /// row is an m x (n1*n2) matrix slice in row-major vec order.
    static LinearMap from_dense(Matrix a, Index rows, Index cols) {
        if (a.cols() != rows * cols)
            throw DimensionError("LinearMap::from_dense: operator has " +
                                 std::to_string(a.cols()) + " columns, expected " +
                                 std::to_string(rows * cols));
        const DenseSvd svd = svd_dense(a);
        const double norm = svd.sigma.size() ? svd.sigma[0] : 0.0;
        auto mat = std::make_shared<Matrix>(std::move(a));
        auto apply = [mat, rows, cols](const Matrix& x) -> Vector {
            Vector vec(rows * cols);
            for (Index i = 0; i < rows; ++i)
                for (Index j = 0; j < cols; ++j) vec[i * cols + j] = x(i, j);
            return *mat * vec;
        };
        auto adjoint = [mat, rows, cols](const Vector& y) -> Matrix {
            Vector vec = mat->transpose() * y;
            Matrix out(rows, cols);
            for (Index i = 0; i < rows; ++i)
                for (Index j = 0; j < cols; ++j) out(i, j) = vec[i * cols + j];
            return out;
        };
        return LinearMap(mat->rows(), rows, cols, std::move(apply), std::move(adjoint),
                         std::max(norm, 1e-300));
    }

    Index out_dim() const { return out_dim_; }
    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    double op_norm_bound() const { return op_norm_bound_; }
    /// Lipschitz constant of F(X) = b - A(X).
    double lipschitz() const { return op_norm_bound_; }

    bool is_sampling() const { return sampling_ != nullptr; }
    std::shared_ptr<const IndexSet> sampling_pattern() const { return sampling_; }

    Vector apply(const Matrix& x) const {
        if (x.rows() != rows_ || x.cols() != cols_)
            throw DimensionError("LinearMap::apply: matrix " + dim_string(x.rows(), x.cols()) +
                                 " vs " + dim_string(rows_, cols_));
        return apply_(x);
    }

    Matrix apply_adjoint(const Vector& y) const {
        if (y.size() != out_dim_)
            throw DimensionError("LinearMap::apply_adjoint: vector length " +
                                 std::to_string(y.size()) + " vs m = " +
                                 std::to_string(out_dim_));
        return adjoint_(y);
    }

  private:
    Index out_dim_, rows_, cols_;
    ApplyFn apply_;
    AdjointFn adjoint_;
    double op_norm_bound_;
    std::shared_ptr<const IndexSet> sampling_;
};

/// Verify <A(X), y> = <X, A*(y)> on random probes. Returns the largest
/// relative defect observed.
inline double adjoint_defect(const LinearMap& map, std::uint64_t seed = 99,
                             int probes = 5) {
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < probes; ++t) {
        Matrix x(map.rows(), map.cols());
        for (Index i = 0; i < x.rows(); ++i)
            for (Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
        Vector y = rng.normal_vector(map.out_dim());
        const double lhs = map.apply(x).dot(y);
        const double rhs = (x.array() * map.apply_adjoint(y).array()).sum();
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
        worst = std::max(worst, std::abs(lhs - rhs) / scale);
    }
    return worst;
}

inline void require_adjoint_consistency(const LinearMap& map, double tol = 1e-10) {
    if (map.is_sampling()) return;  // exact by construction
    const double defect = adjoint_defect(map);
    if (defect > tol)
        throw ValidationError("LinearMap: adjoint inconsistency " +
                              std::to_string(defect) + " exceeds " + std::to_string(tol));
}

}  // namespace svt
