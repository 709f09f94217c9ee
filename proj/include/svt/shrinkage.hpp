#pragma once

#include <cmath>
#include <limits>

#include "svt/core.hpp"
#include "svt/dense_svd.hpp"
#include "svt/low_rank.hpp"
#include "svt/partial_svd.hpp"
#include "svt/sampled_matrix.hpp"

namespace svt {

/// Output of the singular value shrinkage operator. `rank` counts the
/// input singular values strictly greater than tau; values exactly
/// equal to tau shrink to zero. `threshold_ambiguous` counts singular
/// values within triplet_tol * sigma_1 of tau, for diagnostics.
struct ShrinkageOutcome {
    LowRankMatrix x;
    Index rank = 0;
    bool crossed_threshold = false;
    Index threshold_ambiguous = 0;
    Index s_used = 0;
    Index growth_rounds = 0;
    double sigma_min_computed = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline ShrinkageOutcome shrink_from_triplets(const Matrix& u, const Vector& sigma,
                                             const Matrix& v, double tau,
                                             double ambiguity_band) {
    Index r = 0;
    while (r < sigma.size() && sigma[r] > tau) ++r;
    Index ambiguous = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        if (std::abs(sigma[i] - tau) <= ambiguity_band) ++ambiguous;

    ShrinkageOutcome out;
    out.rank = r;
    out.threshold_ambiguous = ambiguous;
    out.sigma_min_computed = sigma.size() ? sigma[sigma.size() - 1] : 0.0;
    if (r == 0) {
        out.x = LowRankMatrix::zero(u.rows(), v.rows());
    } else {
        out.x = LowRankMatrix(u.leftCols(r), sigma.head(r).array() - tau,
                              v.leftCols(r), 1e-8);
    }
    return out;
}

}  // namespace detail

/// D_tau via a full dense SVD: X = sum_{sigma_i > tau} (sigma_i - tau) u_i v_i^T.
inline ShrinkageOutcome shrink_dense(const Matrix& y, double tau,
                                     Index cap = kDenseSvdCap) {
    if (tau < 0) throw ValidationError("shrink_dense: tau must be nonnegative");
    DenseSvd svd = svd_dense(y, cap);
    const double sigma1 = svd.sigma.size() ? svd.sigma[0] : 0.0;
    ShrinkageOutcome out =
        detail::shrink_from_triplets(svd.u, svd.sigma, svd.v, tau, 1e-8 * sigma1);
    out.s_used = svd.sigma.size();
    out.crossed_threshold = svd.sigma.size() == 0 || out.sigma_min_computed <= tau;
    return out;
}

/// D_tau for a sparse operator via the incremental partial SVD: grow s
/// from s_start by ell until the threshold is crossed, then soft-
/// threshold the computed part. tau = 0 would require a full SVD and is
/// rejected on this path.
inline ShrinkageOutcome shrink_sparse(const SampledMatrix& y, double tau, Index s_start,
                                      Index ell, const PartialSvdParams& params = {}) {
    if (!(tau > 0)) throw ValidationError("shrink_sparse: tau must be positive");
    ThresholdedSvdResult t = svd_above_threshold(y, tau, s_start, ell, params);
    const LowRankMatrix& trip = t.triplets;
    const double sigma1 = trip.rank() ? trip.sigma()[0] : 0.0;
    ShrinkageOutcome out = detail::shrink_from_triplets(
        trip.u(), trip.sigma(), trip.v(), tau, params.triplet_tol * sigma1);
    out.crossed_threshold = t.crossed_threshold;
    out.s_used = t.computed_count;
    out.growth_rounds = t.growth_rounds();
    if (trip.rank() == 0) out.x = LowRankMatrix::zero(y.rows(), y.cols());
    return out;
}

}  // namespace svt
