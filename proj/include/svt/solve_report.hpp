#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "svt/core.hpp"
#include "svt/low_rank.hpp"
#include "svt/partial_svd.hpp"
#include "svt/sampled_matrix.hpp"

namespace svt {

enum class StopRule { relative_residual, duality_gap, noisy_discrepancy };
enum class SolveStatus { converged, max_iters, numerical_failure, diverged };

inline const char* to_string(StopRule r) {
    switch (r) {
        case StopRule::relative_residual: return "residual";
        case StopRule::duality_gap: return "gap";
        case StopRule::noisy_discrepancy: return "noisy";
    }
    return "?";
}

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_iters: return "max_iters";
        case SolveStatus::numerical_failure: return "numerical_failure";
        case SolveStatus::diverged: return "diverged";
    }
    return "?";
}

/// Per-iteration view handed to an optional observer; pointers are null
/// when the quantity does not exist for the solver variant or the
/// iteration stopped before the dual update.
struct IterationView {
    Index k = 0;
    double residual = 0.0;
    const LowRankMatrix* x = nullptr;
    const SampledMatrix* y_pre = nullptr;
    const SampledMatrix* y_post = nullptr;
    const Vector* multiplier_post = nullptr;
    const SampledMatrix* y_plus_post = nullptr;
    const SampledMatrix* y_minus_post = nullptr;
};

struct SvtConfig {
    double tau = 0;    // 0 selects 5 * max(n1, n2)
    double delta = 0;  // 0 selects 1.2 * n1*n2 / m
    double eps = 1e-4;
    Index ell = 5;
    Index k_max = 500;
    PartialSvdParams svd;
    StopRule stop_rule = StopRule::relative_residual;
    double gap_tol = 1e-3;      // on (b_k - a_k) / max(1, |b_k|)
    double noise_sigma = 0.0;   // for the noisy discrepancy rule
    double noise_eps = 0.05;
    bool unsafe_step = false;   // permit delta at or beyond the proven bound
    Index densify_cap = kDensifyCapEntries;
    std::function<void(const IterationView&)> on_iteration;

    void validate_base() const {
        if (tau < 0) throw ValidationError("SvtConfig: tau must be nonnegative");
        if (delta < 0) throw ValidationError("SvtConfig: delta must be nonnegative");
        if (!(eps > 0)) throw ValidationError("SvtConfig: eps must be positive");
        if (ell < 1) throw ValidationError("SvtConfig: ell must be >= 1");
        if (k_max < 1) throw ValidationError("SvtConfig: k_max must be >= 1");
        if (stop_rule == StopRule::noisy_discrepancy && noise_sigma < 0)
            throw ValidationError("SvtConfig: noise_sigma must be nonnegative");
    }
};

struct TrajectoryRow {
    Index k = 0;
    double residual = 0.0;
    Index rank = 0;
    Index s_k = 0;
    double sigma_min = 0.0;
    double wall_ms = 0.0;
    Index growth_rounds = 0;
};

struct SolveReport {
    SolveStatus status = SolveStatus::max_iters;
    Index iterations = 0;
    LowRankMatrix x_opt{0, 0};
    std::vector<TrajectoryRow> trajectory;
    std::vector<std::pair<double, double>> gap_sequence;  // (a_k, b_k)
    double relative_residual = 0.0;
    Index final_rank = 0;
    double wall_seconds = 0.0;
    Index k0_skip = 0;
    std::vector<std::string> notices;

    // resolved configuration echo
    double tau = 0, delta = 0, eps = 0;
    Index ell = 0, k_max = 0;
    StopRule stop_rule = StopRule::relative_residual;
    bool unsafe_step = false;

    void write_trajectory_csv(std::ostream& out) const {
        out << "k,residual,rank,s_k,sigma_min,wall_ms\n";
        out.precision(17);
        for (const TrajectoryRow& row : trajectory)
            out << row.k << "," << row.residual << "," << row.rank << "," << row.s_k
                << "," << row.sigma_min << "," << row.wall_ms << "\n";
    }

    void write_trajectory_csv(const std::filesystem::path& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open " + path.string());
        write_trajectory_csv(out);
    }

    nlohmann::json to_json() const {
        nlohmann::json j{
            {"status", to_string(status)},
            {"iterations", iterations},
            {"relative_residual", relative_residual},
            {"final_rank", final_rank},
            {"wall_seconds", wall_seconds},
            {"config",
             {{"tau", tau},
              {"delta", delta},
              {"eps", eps},
              {"ell", ell},
              {"k_max", k_max},
              {"stop_rule", to_string(stop_rule)},
              {"unsafe_step", unsafe_step},
              {"k0_skip", k0_skip}}},
        };
        if (!notices.empty()) j["notices"] = notices;
        return j;
    }
};

}  // namespace svt
