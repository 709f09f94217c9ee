#pragma once

#include <Eigen/SVD>

#include <algorithm>

#include "svt/core.hpp"

namespace svt {

/// Full reduced SVD of a dense matrix: A = U diag(sigma) V^T with
/// r = min(n1, n2) columns, zero singular values retained, sigma
/// nonincreasing.
struct DenseSvd {
    Matrix u;
    Vector sigma;
    Matrix v;
};

inline DenseSvd svd_dense(const Matrix& a, Index cap = kDenseSvdCap) {
    if (!a.allFinite())
        throw ValidationError("svd_dense: input has non-finite entries");
    const Index mindim = std::min(a.rows(), a.cols());
    if (mindim > cap)
        throw SizeCapError("svd_dense: min dimension " + std::to_string(mindim) +
                           " exceeds dense-SVD cap " + std::to_string(cap));
    if (mindim == 0)
        return {Matrix(a.rows(), 0), Vector(0), Matrix(a.cols(), 0)};

    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
        throw NumericalError("svd_dense: decomposition did not converge");
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace svt
