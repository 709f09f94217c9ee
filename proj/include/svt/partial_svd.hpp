#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "svt/core.hpp"
#include "svt/low_rank.hpp"
#include "svt/rng.hpp"
#include "svt/sampled_matrix.hpp"

namespace svt {

struct PartialSvdParams {
    Index max_lanczos_steps = 0;  // 0 selects 10*s + 30
    double reorth_threshold = 1.4901161193847656e-08;  // sqrt(machine epsilon)
    double triplet_tol = 1e-8;  // accepted residual ||A v - sigma u|| / sigma_1
    std::uint64_t seed = 12345;
    bool full_reorth = false;  // debugging fallback: reorthogonalize every step

    void validate(Index s) const {
        if (!(triplet_tol > 0))
            throw ValidationError("PartialSvdParams: triplet_tol must be positive");
        if (!(reorth_threshold > 0))
            throw ValidationError("PartialSvdParams: reorth_threshold must be positive");
        if (max_lanczos_steps != 0 && max_lanczos_steps < s)
            throw ValidationError("PartialSvdParams: max_lanczos_steps < s");
    }
    Index steps_for(Index s) const {
        return max_lanczos_steps > 0 ? max_lanczos_steps : 10 * s + 30;
    }
};

/// Result of top_singular_triplets. `short_count` signals that the
/// operator rank is below the requested count and only rank(S)
/// triplets exist.
struct TripletSet {
    LowRankMatrix triplets;
    Index requested = 0;
    bool short_count = false;
};

/// Result of the grow-until-crossed strategy. `triplets` holds every
/// computed triplet with sigma > 0, `crossed_threshold` is true iff the
/// smallest computed singular value fell at or below tau, and
/// `s_history` logs the successive subspace sizes.
struct ThresholdedSvdResult {
    LowRankMatrix triplets;
    Index computed_count = 0;
    bool crossed_threshold = false;
    std::vector<Index> s_history;

    Index growth_rounds() const {
        return s_history.empty() ? 0 : static_cast<Index>(s_history.size()) - 1;
    }
};

namespace detail {

// Golub-Kahan-Lanczos bidiagonalization of a SampledMatrix with
// partial reorthogonalization. Orthogonality of the frontier vector
// against the stored basis is tracked with the classical coupled
// recurrences
//   beta_j  nu_{j+1,i} = alpha_i mu_{j,i} + beta_{i-1} mu_{j,i-1} - alpha_j nu_{j,i}
//   alpha_{j+1} mu_{j+1,i} = alpha_i nu_{j+1,i} + beta_i nu_{j+1,i+1} - beta_j mu_{j,i}
// and a full sweep against the basis is performed whenever an estimate
// exceeds the threshold. Exact invariant subspaces (breakdowns) are
// locked and the process restarts deflated, which also resolves
// singular values of multiplicity greater than one.
class GkLanczosEngine {
  public:
    GkLanczosEngine(const SampledMatrix& a, const PartialSvdParams& params)
        : a_(a), params_(params), rng_(params.seed) {
        scale_ = a.frobenius_norm();  // upper bound proxy for sigma_1
        breakdown_tol_ = 1e-14 * scale_;
    }

    /// Compute up to `want` leading triplets. Throws NumericalError if
    /// the Krylov budget is exhausted before the requested pairs
    /// converge; returns short when rank(A) < want.
    TripletSet compute(Index want) {
        locked_.clear();
        null_v_ = Matrix(a_.cols(), 0);
        locked_u_ = Matrix(a_.rows(), 0);
        locked_v_ = Matrix(a_.cols(), 0);

        int restarts = 0;
        while (locked_count() < want) {
            Vector start(a_.cols());
            if (!fresh_start_vector(start)) break;  // column space exhausted
            const Index budget = params_.steps_for(want);
            const bool progressed = run_once(want - locked_count(), budget, start);
            if (!progressed && ++restarts > 16)
                throw NumericalError("partial SVD: restart budget exhausted");
        }
        return assemble(want);
    }

  private:
    struct Triplet {
        double sigma;
        Vector u, v;
    };

    Index locked_count() const { return static_cast<Index>(locked_.size()); }

    // Random unit vector orthogonal to everything already locked or
    // known to be in the null space. Returns false when no direction
    // with a nonzero image remains.
    bool fresh_start_vector(Vector& out) {
        for (int attempt = 0; attempt < 4; ++attempt) {
            Vector v = rng_.unit_vector(a_.cols());
            for (int pass = 0; pass < 2; ++pass) {
                project_out(locked_v_, v);
                project_out(null_v_, v);
            }
            const double norm = v.norm();
            if (norm <= 1e-8) continue;  // basis nearly spans the space
            v /= norm;
            Vector image = a_.apply(v);
            project_out(locked_u_, image);
            if (image.norm() > std::max(breakdown_tol_, 1e-300)) {
                out = v;
                return true;
            }
            // v maps to ~0: remember it as a null direction and retry
            append_column(null_v_, v);
        }
        return false;
    }

    // One deflated GK run; locks any converged triplets found. Returns
    // true if at least one triplet (or null direction) was locked.
    bool run_once(Index want, Index max_steps, const Vector& start) {
        const Index n1 = a_.rows(), n2 = a_.cols();
        const Index cap = max_steps + 1;
        Matrix ubasis(n1, cap), vbasis(n2, cap);
        std::vector<double> alpha, beta;
        alpha.reserve(cap);
        beta.reserve(cap);

        vbasis.col(0) = start;
        Vector p = a_.apply(start);
        project_out(locked_u_, p);
        double a0 = p.norm();
        if (a0 <= breakdown_tol_) return lock_from_rectangular(ubasis, vbasis, alpha, beta, 0);
        alpha.push_back(a0);
        ubasis.col(0) = p / a0;
        scale_ = std::max(scale_, a0);

        // Orthogonality estimates of the frontier vectors against the
        // stored basis; entry j of each run is exact (== 1).
        std::vector<double> nu{1.0}, mu{1.0};
        const double eps = std::numeric_limits<double>::epsilon();

        for (Index j = 0; j + 1 < cap; ++j) {
            // r = A^T u_j - alpha_j v_j  ->  beta_j, v_{j+1}
            Vector r = a_.apply_adjoint(ubasis.col(j)) - alpha[j] * vbasis.col(j);
            project_out(locked_v_, r);
            project_out(null_v_, r);

            std::vector<double> nu_next(j + 2, 0.0);
            bool sweep = params_.full_reorth;
            double bj = r.norm();
            if (bj > 0 && !sweep) {
                for (Index i = 0; i <= j; ++i) {
                    double est = alpha[i] * mu[i] - alpha[j] * nu[i];
                    if (i > 0) est += beta[i - 1] * mu[i - 1];
                    est /= bj;
                    est += std::copysign(eps * scale_ / bj, est);
                    nu_next[i] = est;
                    if (std::abs(est) > params_.reorth_threshold) sweep = true;
                }
            } else {
                sweep = true;
            }
            if (sweep) {
                reorth_sweep(vbasis, j + 1, r);
                project_out(locked_v_, r);
                project_out(null_v_, r);
                std::fill(nu_next.begin(), nu_next.end(), eps);
                bj = r.norm();
            }

            // With B_j complete and beta_j fresh, Ritz residuals are
            // beta_j |last row of P|; check for acceptance.
            if (j + 1 >= want || bj <= breakdown_tol_) {
                if (bj <= breakdown_tol_) {
                    return lock_from_square(ubasis, vbasis, alpha, beta, j + 1, bj,
                                            /*exact=*/true, want);
                }
                const bool final_step = (j + 2 == cap);
                if (final_step || (j + 1 - want) % 5 == 0) {
                    if (lock_from_square(ubasis, vbasis, alpha, beta, j + 1, bj,
                                         /*exact=*/false, want))
                        return true;
                    if (final_step)
                        throw NumericalError(
                            "partial SVD: no convergence within max_lanczos_steps = " +
                            std::to_string(max_steps));
                }
            }

            beta.push_back(bj);
            nu_next[j + 1] = 1.0;
            vbasis.col(j + 1) = r / bj;

            // p = A v_{j+1} - beta_j u_j  ->  alpha_{j+1}, u_{j+1}
            p = a_.apply(vbasis.col(j + 1)) - bj * ubasis.col(j);
            project_out(locked_u_, p);

            std::vector<double> mu_next(j + 2, 0.0);
            bool sweep_u = params_.full_reorth;
            double aj1 = p.norm();
            if (aj1 > 0 && !sweep_u) {
                for (Index i = 0; i <= j; ++i) {
                    double est = alpha[i] * nu_next[i] + beta[i] * nu_next[i + 1] -
                                 beta[j] * mu[i];
                    est /= aj1;
                    est += std::copysign(eps * scale_ / aj1, est);
                    mu_next[i] = est;
                    if (std::abs(est) > params_.reorth_threshold) sweep_u = true;
                }
            } else {
                sweep_u = true;
            }
            if (sweep_u) {
                reorth_sweep(ubasis, j + 1, p);
                project_out(locked_u_, p);
                std::fill(mu_next.begin(), mu_next.end(), eps);
                aj1 = p.norm();
            }
            if (aj1 <= breakdown_tol_)
                return lock_from_rectangular(ubasis, vbasis, alpha, beta, j + 1);

            alpha.push_back(aj1);
            mu_next[j + 1] = 1.0;
            ubasis.col(j + 1) = p / aj1;
            scale_ = std::max({scale_, aj1, bj});
            nu = std::move(nu_next);
            mu = std::move(mu_next);
        }
        throw NumericalError("partial SVD: no convergence within max_lanczos_steps = " +
                             std::to_string(max_steps));
    }

    // Square factorization A V_k = U_k B_k, A^T U_k = V_k B_k^T + beta_k v' e_k^T.
    // Residual of Ritz pair i is beta_k |P(k-1, i)|. When `exact`, the
    // subspace is invariant and every pair is locked; otherwise lock
    // only if the `want` leading pairs all converged.
    bool lock_from_square(const Matrix& ubasis, const Matrix& vbasis,
                          const std::vector<double>& alpha, const std::vector<double>& beta,
                          Index k, double beta_k, bool exact, Index want) {
        Matrix b = Matrix::Zero(k, k);
        for (Index i = 0; i < k; ++i) {
            b(i, i) = alpha[static_cast<std::size_t>(i)];
            if (i + 1 < k) b(i, i + 1) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Vector& theta = svd.singularValues();
        const double theta0 = theta.size() ? theta[0] : 0.0;

        Index accept = 0;
        if (exact) {
            accept = k;
        } else {
            const Index need = std::min(want, k);
            for (Index i = 0; i < need; ++i) {
                const double resid = beta_k * std::abs(svd.matrixU()(k - 1, i));
                if (resid > params_.triplet_tol * theta0) return false;
            }
            accept = need;
        }
        lock_ritz(ubasis, vbasis, k, k, svd.matrixU(), svd.matrixV(), theta, accept);
        return true;
    }

    // Rectangular breakdown: alpha_{k+1} ~ 0 with k+1 right vectors and
    // k left vectors; A V_{k+1} = U_k B with B k x (k+1), both residuals
    // vanish and all k pairs are exact.
    bool lock_from_rectangular(const Matrix& ubasis, const Matrix& vbasis,
                               const std::vector<double>& alpha,
                               const std::vector<double>& beta, Index k) {
        if (k == 0) return false;  // A v1 ~ 0: start vector was null, handled by caller
        Matrix b = Matrix::Zero(k, k + 1);
        for (Index i = 0; i < k; ++i) {
            b(i, i) = alpha[static_cast<std::size_t>(i)];
            b(i, i + 1) = beta[static_cast<std::size_t>(i)];
        }
        Eigen::BDCSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
        lock_ritz(ubasis, vbasis, k, k + 1, svd.matrixU(), svd.matrixV(),
                  svd.singularValues(), svd.singularValues().size());
        return true;
    }

    void lock_ritz(const Matrix& ubasis, const Matrix& vbasis, Index ku, Index kv,
                   const Matrix& p, const Matrix& q, const Vector& theta, Index accept) {
        const double zero_cut =
            std::max(static_cast<double>(std::max(a_.rows(), a_.cols())) *
                         std::numeric_limits<double>::epsilon() * scale_,
                     1e-300);
        for (Index i = 0; i < accept; ++i) {
            Vector rv = vbasis.leftCols(kv) * q.col(i);
            if (theta[i] <= zero_cut) {
                // numerically zero singular value: a null direction
                append_column(null_v_, rv);
                continue;
            }
            Triplet t;
            t.sigma = theta[i];
            t.u = ubasis.leftCols(ku) * p.col(i);
            t.v = std::move(rv);
            append_column(locked_u_, t.u);
            append_column(locked_v_, t.v);
            locked_.push_back(std::move(t));
        }
    }

    TripletSet assemble(Index want) const {
        std::vector<Index> order(locked_.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            return locked_[static_cast<std::size_t>(a)].sigma >
                   locked_[static_cast<std::size_t>(b)].sigma;
        });
        const Index count = std::min<Index>(want, static_cast<Index>(order.size()));
        Matrix u(a_.rows(), count), v(a_.cols(), count);
        Vector sigma(count);
        for (Index i = 0; i < count; ++i) {
            const Triplet& t = locked_[static_cast<std::size_t>(order[i])];
            u.col(i) = t.u;
            v.col(i) = t.v;
            sigma[i] = t.sigma;
        }
        TripletSet out{LowRankMatrix(a_.rows(), a_.cols()), want, count < want};
        if (count > 0)
            out.triplets =
                LowRankMatrix(std::move(u), std::move(sigma), std::move(v), 1e-8);
        return out;
    }

    static void append_column(Matrix& m, const Vector& c) {
        m.conservativeResize(Eigen::NoChange, m.cols() + 1);
        m.col(m.cols() - 1) = c.normalized();
    }

    // Single classical Gram-Schmidt pass (used for locked bases, whose
    // products stay at machine level).
    static void project_out(const Matrix& basis, Vector& x) {
        if (basis.cols() == 0) return;
        x.noalias() -= basis * (basis.transpose() * x);
    }

    // Two classical Gram-Schmidt passes against the leading `count`
    // columns; restores orthogonality to machine level.
    static void reorth_sweep(const Matrix& basis, Index count, Vector& x) {
        if (count == 0) return;
        auto b = basis.leftCols(count);
        x.noalias() -= b * (b.transpose() * x);
        x.noalias() -= b * (b.transpose() * x);
    }

    const SampledMatrix& a_;
    PartialSvdParams params_;
    Rng rng_;
    double scale_ = 0.0;
    double breakdown_tol_ = 0.0;

    std::vector<Triplet> locked_;
    Matrix locked_u_{0, 0}, locked_v_{0, 0};
    Matrix null_v_{0, 0};
};

}  // namespace detail

/// Leading `s` singular triplets of a sparse operator. Returns fewer
/// triplets (short_count) when rank(S) < s; throws NumericalError when
/// the Krylov budget is exhausted without convergence.
inline TripletSet top_singular_triplets(const SampledMatrix& s, Index want,
                                        const PartialSvdParams& params = {}) {
    const Index mindim = std::min(s.rows(), s.cols());
    if (want < 1 || want > mindim)
        throw ValidationError("top_singular_triplets: s must lie in [1, min(n1,n2)]");
    params.validate(want);
    detail::GkLanczosEngine engine(s, params);
    return engine.compute(want);
}

/// Compute s_start triplets and grow s by ell until some computed
/// singular value falls to tau or below (or the operator rank is
/// exhausted). Each growth round recomputes from scratch; warm-starting
/// the existing factorization is a known extension point left undone.
inline ThresholdedSvdResult svd_above_threshold(const SampledMatrix& s, double tau,
                                                Index s_start, Index ell,
                                                const PartialSvdParams& params = {}) {
    if (tau < 0) throw ValidationError("svd_above_threshold: tau must be nonnegative");
    if (s_start < 1) throw ValidationError("svd_above_threshold: s_start must be >= 1");
    if (ell < 1) throw ValidationError("svd_above_threshold: ell must be >= 1");
    const Index mindim = std::min(s.rows(), s.cols());

    ThresholdedSvdResult out;
    Index size = std::min(s_start, mindim);
    for (;;) {
        out.s_history.push_back(size);
        TripletSet set = top_singular_triplets(s, size, params);
        out.triplets = std::move(set.triplets);
        out.computed_count = size;
        const Index got = out.triplets.rank();
        if (set.short_count) {
            // rank(S) exhausted before tau was crossed
            out.crossed_threshold =
                got > 0 && out.triplets.sigma()[got - 1] <= tau;
            return out;
        }
        if (got > 0 && out.triplets.sigma()[got - 1] <= tau) {
            out.crossed_threshold = true;
            return out;
        }
        if (size >= mindim) {
            out.crossed_threshold = false;
            return out;
        }
        size = std::min(size + ell, mindim);
    }
}

}  // namespace svt
