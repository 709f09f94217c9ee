#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>
#include <utility>

#include "svt/core.hpp"
#include "svt/dense_svd.hpp"
#include "svt/linear_map.hpp"
#include "svt/low_rank.hpp"
#include "svt/sampled_matrix.hpp"
#include "svt/shrinkage.hpp"
#include "svt/solve_report.hpp"

namespace svt {

/// The integer k0 with tau / (delta ||P_Omega(M)||_2) in (k0 - 1, k0]:
/// the number of leading iterations during which X^k stays zero and may
/// be skipped in closed form.
inline Index compute_k0(double tau, double delta, double pom_spectral) {
    if (!(tau > 0) || !(delta > 0) || !(pom_spectral > 0))
        throw ValidationError("compute_k0: all inputs must be positive");
    const double ratio = tau / (delta * pom_spectral);
    const Index k0 = static_cast<Index>(std::ceil(ratio));
    return std::max<Index>(k0, 1);
}

/// Lagrangian value a_k = f_tau(X^k) + <Y^{k-1}, P_Omega(M - X^k)> and
/// primal value b_k = f_tau(X^k + P_Omega(M - X^k)) of the projected
/// feasible point; b_k - a_k bounds the duality gap. The feasible point
/// is not low rank, so b_k needs densification and is refused above the
/// cap.
inline std::pair<double, double> duality_gap(const LowRankMatrix& x,
                                             const SampledMatrix& y_pre,
                                             const SampledMatrix& obs, double tau,
                                             Index densify_cap = kDensifyCapEntries) {
    if (y_pre.nnz() != obs.nnz() || y_pre.rows() != obs.rows() ||
        y_pre.cols() != obs.cols())
        throw DimensionError("duality_gap: Y and observations disagree");
    Vector pomx = project_values(x, obs.pattern());
    Vector diff = obs.values() - pomx;
    const double f_x = tau * x.nuclear_norm() +
                       0.5 * x.frobenius_norm() * x.frobenius_norm();
    const double a = f_x + y_pre.values().dot(diff);

    if (obs.rows() * obs.cols() > densify_cap)
        throw SizeCapError("duality_gap: feasible projection would densify " +
                           dim_string(obs.rows(), obs.cols()) +
                           "; use the residual rule at this scale");
    Matrix xt = x.to_dense(densify_cap);
    const IndexSet& p = obs.pattern();
    for (Index k = 0; k < p.size(); ++k) xt(p.row(k), p.col(k)) += diff[k];
    DenseSvd svd = svd_dense(xt);
    const double b = tau * svd.sigma.sum() + 0.5 * xt.squaredNorm();
    return {a, b};
}

/// Early-stopping test for noisy data: ||P_Omega(X - B)||_F^2 <= (1+eps) m sigma^2.
inline bool noisy_stop_check(const LowRankMatrix& x, const SampledMatrix& obs_b,
                             Index m, double sigma, double eps) {
    if (sigma < 0) throw ValidationError("noisy_stop_check: sigma must be nonnegative");
    Vector pomx = project_values(x, obs_b.pattern());
    const double disc = (obs_b.values() - pomx).squaredNorm();
    return disc <= (1.0 + eps) * static_cast<double>(m) * sigma * sigma;
}

namespace detail {

inline double relative_to(double value, double denom) {
    return denom > 0 ? value / denom : value;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
    double seconds() const { return ms() / 1000.0; }
};

struct DivergenceDetector {
    double initial = -1.0;
    int streak = 0;
    /// True once the residual has been at least 10x its initial value
    /// for 20 consecutive iterations.
    bool update(double residual) {
        if (initial < 0) {
            initial = residual;
            return false;
        }
        if (residual >= 10.0 * initial && initial > 0) {
            if (++streak >= 20) return true;
        } else {
            streak = 0;
        }
        return false;
    }
};

struct ResolvedStep {
    double tau = 0, delta = 0;
    bool unsafe = false;
    std::vector<std::string> notices;
};

inline ResolvedStep resolve_step(const SvtConfig& cfg, Index n1, Index n2, Index m,
                                 double safe_bound, double general_default) {
    ResolvedStep out;
    out.tau = cfg.tau > 0 ? cfg.tau : 5.0 * static_cast<double>(std::max(n1, n2));
    out.unsafe = cfg.unsafe_step;
    if (cfg.delta > 0) {
        out.delta = cfg.delta;
        if (out.delta >= safe_bound && !cfg.unsafe_step)
            throw ValidationError("delta = " + std::to_string(out.delta) +
                                  " is at or beyond the proven bound " +
                                  std::to_string(safe_bound) +
                                  "; set unsafe_step to proceed");
    } else if (general_default > 0) {
        out.delta = general_default;
    } else {
        const double p = static_cast<double>(m) /
                         (static_cast<double>(n1) * static_cast<double>(n2));
        out.delta = 1.2 / p;
        if (out.delta >= safe_bound) {
            out.unsafe = true;
            out.notices.push_back(
                "default step 1.2/p = " + std::to_string(out.delta) +
                " exceeds the proven bound " + std::to_string(safe_bound) +
                " (heuristic); divergence detector active");
        }
    }
    return out;
}

inline void finish_report(SolveReport& rep, const SvtConfig& cfg, double tau,
                          double delta, bool unsafe, Index k0) {
    rep.tau = tau;
    rep.delta = delta;
    rep.eps = cfg.eps;
    rep.ell = cfg.ell;
    rep.k_max = cfg.k_max;
    rep.stop_rule = cfg.stop_rule;
    rep.unsafe_step = unsafe;
    rep.k0_skip = k0;
}

// Shared worker for svt_complete and the sampling-operator path of
// svt_linear: the iteration state is Y^k on Omega, updated in place.
inline SolveReport completion_core(const SampledMatrix& obs, const SvtConfig& cfg) {
    cfg.validate_base();
    if (obs.nnz() == 0) throw ValidationError("svt_complete: empty observation set");

    const Index n1 = obs.rows(), n2 = obs.cols(), m = obs.nnz();
    ResolvedStep step = resolve_step(cfg, n1, n2, m, /*safe_bound=*/2.0,
                                     /*general_default=*/0.0);

    const double pom_f = obs.frobenius_norm();
    const double pom_2 = pom_f > 0 ? obs.spectral_norm_est(1e-6) : 0.0;
    const Index k0 = pom_2 > 0 ? compute_k0(step.tau, step.delta, pom_2) : 1;

    SampledMatrix y(obs.pattern_ptr(),
                    (static_cast<double>(k0) * step.delta) * obs.values());

    SolveReport rep;
    rep.x_opt = LowRankMatrix::zero(n1, n2);
    rep.notices = step.notices;
    finish_report(rep, cfg, step.tau, step.delta, step.unsafe, k0);

    Stopwatch total;
    DivergenceDetector divergence;
    Index r_prev = 0;
    rep.status = SolveStatus::max_iters;

    for (Index k = 1; k <= cfg.k_max; ++k) {
        Stopwatch iter;
        const Index s_k = std::min<Index>(r_prev + 1, std::min(n1, n2));
        ShrinkageOutcome sh;
        try {
            sh = shrink_sparse(y, step.tau, s_k, cfg.ell, cfg.svd);
        } catch (const NumericalError& e) {
            rep.status = SolveStatus::numerical_failure;
            rep.notices.emplace_back(e.what());
            break;
        }
        Vector pomx = project_values(sh.x, obs.pattern());
        Vector diff = obs.values() - pomx;
        const double resid = relative_to(diff.norm(), pom_f);

        rep.trajectory.push_back({k, resid, sh.rank, sh.s_used, sh.sigma_min_computed,
                                  iter.ms(), sh.growth_rounds});
        rep.iterations = k;
        rep.relative_residual = resid;
        rep.x_opt = sh.x;
        r_prev = sh.rank;

        bool stop = false;
        switch (cfg.stop_rule) {
            case StopRule::relative_residual:
                stop = resid <= cfg.eps;
                break;
            case StopRule::noisy_discrepancy:
                stop = diff.squaredNorm() <= (1.0 + cfg.noise_eps) *
                                                 static_cast<double>(m) *
                                                 cfg.noise_sigma * cfg.noise_sigma;
                break;
            case StopRule::duality_gap: {
                auto [a_k, b_k] = duality_gap(sh.x, y, obs, step.tau, cfg.densify_cap);
                rep.gap_sequence.emplace_back(a_k, b_k);
                stop = (b_k - a_k) <= cfg.gap_tol * std::max(1.0, std::abs(b_k));
                break;
            }
        }

        if (cfg.on_iteration) {
            IterationView view;
            view.k = k;
            view.residual = resid;
            view.x = &sh.x;
            view.y_pre = &y;
            cfg.on_iteration(view);
        }

        if (stop) {
            rep.status = SolveStatus::converged;
            break;
        }
        y.axpy(step.delta, diff);  // Y^k = Y^{k-1} + delta (M - X^k) on Omega
        if (divergence.update(resid)) {
            rep.status = SolveStatus::diverged;
            break;
        }
    }
    rep.final_rank = rep.x_opt.rank();
    rep.wall_seconds = total.seconds();
    return rep;
}

}  // namespace detail

/// SVT for matrix completion: X^k = D_tau(Y^{k-1}),
/// Y^k = Y^{k-1} + delta P_Omega(M - X^k), starting from the closed-form
/// fast-forward Y^0 = k0 delta P_Omega(M).
inline SolveReport svt_complete(const SampledMatrix& obs, const SvtConfig& cfg = {}) {
    return detail::completion_core(obs, cfg);
}

/// Uzawa iteration for min f_tau(X) s.t. A(X) = b:
///   X^k = D_tau(A^*(y^{k-1})),  y^k = y^{k-1} + delta (b - A(X^k)).
/// A sampling operator keeps the sparse representation of A^*(y); other
/// operators materialize it densely (small problems only).
inline SolveReport svt_linear(const LinearMap& map, const Vector& b,
                              const SvtConfig& cfg = {}) {
    cfg.validate_base();
    if (b.size() != map.out_dim())
        throw DimensionError("svt_linear: b has length " + std::to_string(b.size()) +
                             ", expected " + std::to_string(map.out_dim()));
    require_adjoint_consistency(map);

    const Index n1 = map.rows(), n2 = map.cols(), m = map.out_dim();
    const double bound = 2.0 / (map.op_norm_bound() * map.op_norm_bound());

    if (map.is_sampling()) {
        // y and Y = A^*(y) share storage on Omega; this path follows the
        // multiplier iteration literally and reproduces svt_complete.
        auto pattern = map.sampling_pattern();
        detail::ResolvedStep step =
            detail::resolve_step(cfg, n1, n2, m, bound, /*general_default=*/0.0);

        SampledMatrix obs(pattern, b);
        const double b_norm = b.norm();
        const double pom_2 = b_norm > 0 ? obs.spectral_norm_est(1e-6) : 0.0;
        const Index k0 = pom_2 > 0 ? compute_k0(step.tau, step.delta, pom_2) : 1;

        Vector y = (static_cast<double>(k0) * step.delta) * b;

        SolveReport rep;
        rep.x_opt = LowRankMatrix::zero(n1, n2);
        rep.notices = step.notices;
        detail::finish_report(rep, cfg, step.tau, step.delta, step.unsafe, k0);

        detail::Stopwatch total;
        detail::DivergenceDetector divergence;
        Index r_prev = 0;
        rep.status = SolveStatus::max_iters;

        for (Index k = 1; k <= cfg.k_max; ++k) {
            detail::Stopwatch iter;
            SampledMatrix ystar(pattern, y);  // A^*(y^{k-1})
            const Index s_k = std::min<Index>(r_prev + 1, std::min(n1, n2));
            ShrinkageOutcome sh;
            try {
                sh = shrink_sparse(ystar, step.tau, s_k, cfg.ell, cfg.svd);
            } catch (const NumericalError& e) {
                rep.status = SolveStatus::numerical_failure;
                rep.notices.emplace_back(e.what());
                break;
            }
            Vector ax = project_values(sh.x, *pattern);  // A(X^k)
            Vector residvec = b - ax;
            const double resid = detail::relative_to(residvec.norm(), b_norm);

            rep.trajectory.push_back({k, resid, sh.rank, sh.s_used,
                                      sh.sigma_min_computed, iter.ms(),
                                      sh.growth_rounds});
            rep.iterations = k;
            rep.relative_residual = resid;
            rep.x_opt = sh.x;
            r_prev = sh.rank;

            bool stop = false;
            switch (cfg.stop_rule) {
                case StopRule::relative_residual:
                    stop = resid <= cfg.eps;
                    break;
                case StopRule::noisy_discrepancy:
                    stop = residvec.squaredNorm() <=
                           (1.0 + cfg.noise_eps) * static_cast<double>(m) *
                               cfg.noise_sigma * cfg.noise_sigma;
                    break;
                case StopRule::duality_gap: {
                    auto [a_k, b_k] =
                        duality_gap(sh.x, ystar, obs, step.tau, cfg.densify_cap);
                    rep.gap_sequence.emplace_back(a_k, b_k);
                    stop = (b_k - a_k) <= cfg.gap_tol * std::max(1.0, std::abs(b_k));
                    break;
                }
            }
            if (stop) {
                if (cfg.on_iteration) {
                    IterationView view;
                    view.k = k;
                    view.residual = resid;
                    view.x = &sh.x;
                    view.multiplier_post = &y;
                    cfg.on_iteration(view);
                }
                rep.status = SolveStatus::converged;
                break;
            }
            y += step.delta * residvec;
            if (cfg.on_iteration) {
                IterationView view;
                view.k = k;
                view.residual = resid;
                view.x = &sh.x;
                view.multiplier_post = &y;
                cfg.on_iteration(view);
            }
            if (divergence.update(resid)) {
                rep.status = SolveStatus::diverged;
                break;
            }
        }
        rep.final_rank = rep.x_opt.rank();
        rep.wall_seconds = total.seconds();
        return rep;
    }

    // General operator: A^*(y) is materialized densely.
    if (n1 * n2 > cfg.densify_cap || std::min(n1, n2) > kDenseSvdCap)
        throw SizeCapError("svt_linear: general operators require dense D_tau; " +
                           dim_string(n1, n2) + " exceeds the configured caps");
    if (cfg.stop_rule == StopRule::duality_gap)
        throw ValidationError("svt_linear: the duality-gap rule needs a sampling operator");

    detail::ResolvedStep step =
        detail::resolve_step(cfg, n1, n2, m, bound, /*general_default=*/0.9 * bound);

    const double b_norm = b.norm();
    Index k0 = 1;
    if (b_norm > 0) {
        const DenseSvd ab = svd_dense(map.apply_adjoint(b));
        if (ab.sigma.size() && ab.sigma[0] > 0)
            k0 = compute_k0(step.tau, step.delta, ab.sigma[0]);
    }
    Vector y = (static_cast<double>(k0) * step.delta) * b;

    SolveReport rep;
    rep.x_opt = LowRankMatrix::zero(n1, n2);
    rep.notices = step.notices;
    detail::finish_report(rep, cfg, step.tau, step.delta, step.unsafe, k0);

    detail::Stopwatch total;
    detail::DivergenceDetector divergence;
    rep.status = SolveStatus::max_iters;

    for (Index k = 1; k <= cfg.k_max; ++k) {
        detail::Stopwatch iter;
        Matrix ystar = map.apply_adjoint(y);
        ShrinkageOutcome sh = shrink_dense(ystar, step.tau);
        Vector ax = sh.x.rank() == 0 ? Vector::Zero(m).eval()
                                     : map.apply(sh.x.to_dense(cfg.densify_cap));
        Vector residvec = b - ax;
        const double resid = detail::relative_to(residvec.norm(), b_norm);

        rep.trajectory.push_back({k, resid, sh.rank, sh.s_used, sh.sigma_min_computed,
                                  iter.ms(), sh.growth_rounds});
        rep.iterations = k;
        rep.relative_residual = resid;
        rep.x_opt = sh.x;

        bool stop = false;
        if (cfg.stop_rule == StopRule::relative_residual) {
            stop = resid <= cfg.eps;
        } else {  // noisy_discrepancy
            stop = residvec.squaredNorm() <= (1.0 + cfg.noise_eps) *
                                                 static_cast<double>(m) *
                                                 cfg.noise_sigma * cfg.noise_sigma;
        }
        if (!stop) y += step.delta * residvec;
        if (cfg.on_iteration) {
            IterationView view;
            view.k = k;
            view.residual = resid;
            view.x = &sh.x;
            view.multiplier_post = &y;
            cfg.on_iteration(view);
        }
        if (stop) {
            rep.status = SolveStatus::converged;
            break;
        }
        if (divergence.update(resid)) {
            rep.status = SolveStatus::diverged;
            break;
        }
    }
    rep.final_rank = rep.x_opt.rank();
    rep.wall_seconds = total.seconds();
    return rep;
}

/// Uzawa iteration with multiplier projection for
/// min f_tau(X) s.t. A(X) >= b:
///   X^k = D_tau(A^*(y^{k-1})),  y^k = [y^{k-1} + delta (b - A(X^k))]_+.
/// Stops when the constraint violation is within eps (relative) and the
/// multiplier stalls; the paper gives no stopping rule for this
/// iteration, so both conditions are logged.
inline SolveReport svt_inequality(const LinearMap& map, const Vector& b,
                                  const SvtConfig& cfg = {}) {
    cfg.validate_base();
    if (b.size() != map.out_dim())
        throw DimensionError("svt_inequality: b has length " + std::to_string(b.size()) +
                             ", expected " + std::to_string(map.out_dim()));
    require_adjoint_consistency(map);
    const Index n1 = map.rows(), n2 = map.cols(), m = map.out_dim();
    if (n1 * n2 > cfg.densify_cap || std::min(n1, n2) > kDenseSvdCap)
        throw SizeCapError("svt_inequality: " + dim_string(n1, n2) +
                           " exceeds the configured dense caps");

    const double lips = map.lipschitz();
    const double bound = 2.0 / (lips * lips);
    detail::ResolvedStep step =
        detail::resolve_step(cfg, n1, n2, m, bound, /*general_default=*/0.9 * bound);

    const double b_scale = std::max(1.0, b.norm());
    Vector y = Vector::Zero(m);

    SolveReport rep;
    rep.x_opt = LowRankMatrix::zero(n1, n2);
    rep.notices = step.notices;
    detail::finish_report(rep, cfg, step.tau, step.delta, step.unsafe, 0);

    detail::Stopwatch total;
    detail::DivergenceDetector divergence;
    rep.status = SolveStatus::max_iters;

    for (Index k = 1; k <= cfg.k_max; ++k) {
        detail::Stopwatch iter;
        Matrix ystar = map.apply_adjoint(y);
        ShrinkageOutcome sh = shrink_dense(ystar, step.tau);
        Vector ax = sh.x.rank() == 0 ? Vector::Zero(m).eval()
                                     : map.apply(sh.x.to_dense(cfg.densify_cap));
        Vector slack = b - ax;  // constraint violated where positive
        const double viol = slack.cwiseMax(0.0).norm() / b_scale;

        rep.trajectory.push_back({k, viol, sh.rank, sh.s_used, sh.sigma_min_computed,
                                  iter.ms(), sh.growth_rounds});
        rep.iterations = k;
        rep.relative_residual = viol;
        rep.x_opt = sh.x;

        Vector y_next = (y + step.delta * slack).cwiseMax(0.0);
        const double stall = (y_next - y).norm() / std::max(1.0, y_next.norm());
        y = std::move(y_next);

        if (cfg.on_iteration) {
            IterationView view;
            view.k = k;
            view.residual = viol;
            view.x = &sh.x;
            view.multiplier_post = &y;
            cfg.on_iteration(view);
        }
        if (viol <= cfg.eps && stall <= cfg.eps) {
            rep.status = SolveStatus::converged;
            break;
        }
        if (divergence.update(viol)) {
            rep.status = SolveStatus::diverged;
            break;
        }
    }
    rep.final_rank = rep.x_opt.rank();
    rep.wall_seconds = total.seconds();
    return rep;
}

/// Matrix Dantzig selector on a sampling set:
///   X^k = D_tau(Y_+^{k-1} - Y_-^{k-1}),
///   Y_±^k = [Y_±^{k-1} + delta P_Omega(±(B - X^k) - E)]_+,
/// stopping when |B - X^k| <= E + eps*scale on Omega and the stacked
/// multipliers stall. L(F)^2 = 2 for the two stacked sampling operators.
inline SolveReport svt_dantzig(const SampledMatrix& obs, const SampledMatrix& tol_e,
                               const SvtConfig& cfg = {}) {
    cfg.validate_base();
    if (obs.nnz() == 0) throw ValidationError("svt_dantzig: empty observation set");
    if (!(obs.pattern() == tol_e.pattern()))
        throw DimensionError("svt_dantzig: tolerance array must share the sampling set");
    if (tol_e.values().minCoeff() < 0)
        throw ValidationError("svt_dantzig: tolerances must be nonnegative");

    const Index n1 = obs.rows(), n2 = obs.cols(), m = obs.nnz();
    const double bound = 1.0;  // 2 / L(F)^2 with L(F)^2 = 2
    detail::ResolvedStep step =
        detail::resolve_step(cfg, n1, n2, m, bound, /*general_default=*/0.0);

    const double scale = std::max(1.0, obs.values().cwiseAbs().maxCoeff());
    auto pattern = obs.pattern_ptr();
    SampledMatrix y_plus = SampledMatrix::zeros(pattern);
    SampledMatrix y_minus = SampledMatrix::zeros(pattern);

    SolveReport rep;
    rep.x_opt = LowRankMatrix::zero(n1, n2);
    rep.notices = step.notices;
    detail::finish_report(rep, cfg, step.tau, step.delta, step.unsafe, 0);

    detail::Stopwatch total;
    detail::DivergenceDetector divergence;
    Index r_prev = 0;
    rep.status = SolveStatus::max_iters;

    for (Index k = 1; k <= cfg.k_max; ++k) {
        detail::Stopwatch iter;
        SampledMatrix ydiff(pattern, y_plus.values() - y_minus.values());
        const Index s_k = std::min<Index>(r_prev + 1, std::min(n1, n2));
        ShrinkageOutcome sh;
        try {
            sh = shrink_sparse(ydiff, step.tau, s_k, cfg.ell, cfg.svd);
        } catch (const NumericalError& e) {
            rep.status = SolveStatus::numerical_failure;
            rep.notices.emplace_back(e.what());
            break;
        }
        Vector pomx = project_values(sh.x, *pattern);
        Vector dev = obs.values() - pomx;  // B - X^k on Omega
        const double viol =
            (dev.cwiseAbs() - tol_e.values()).cwiseMax(0.0).maxCoeff() / scale;

        rep.trajectory.push_back({k, viol, sh.rank, sh.s_used, sh.sigma_min_computed,
                                  iter.ms(), sh.growth_rounds});
        rep.iterations = k;
        rep.relative_residual = viol;
        rep.x_opt = sh.x;
        r_prev = sh.rank;

        Vector yp_next =
            (y_plus.values() + step.delta * (dev - tol_e.values())).cwiseMax(0.0);
        Vector ym_next =
            (y_minus.values() + step.delta * (-dev - tol_e.values())).cwiseMax(0.0);
        const double change = std::sqrt((yp_next - y_plus.values()).squaredNorm() +
                                        (ym_next - y_minus.values()).squaredNorm());
        const double mult_norm =
            std::sqrt(yp_next.squaredNorm() + ym_next.squaredNorm());
        const double stall = change / std::max(1.0, mult_norm);
        y_plus.set_values(std::move(yp_next));
        y_minus.set_values(std::move(ym_next));

        if (cfg.on_iteration) {
            IterationView view;
            view.k = k;
            view.residual = viol;
            view.x = &sh.x;
            view.y_plus_post = &y_plus;
            view.y_minus_post = &y_minus;
            cfg.on_iteration(view);
        }
        if (viol <= cfg.eps && stall <= cfg.eps) {
            rep.status = SolveStatus::converged;
            break;
        }
        if (divergence.update(viol)) {
            rep.status = SolveStatus::diverged;
            break;
        }
    }
    rep.final_rank = rep.x_opt.rank();
    rep.wall_seconds = total.seconds();
    return rep;
}

}  // namespace svt
