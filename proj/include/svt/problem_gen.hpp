#pragma once

#include <Eigen/QR>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "svt/core.hpp"
#include "svt/dense_svd.hpp"
#include "svt/index_set.hpp"
#include "svt/low_rank.hpp"
#include "svt/matrix_market.hpp"
#include "svt/rng.hpp"
#include "svt/sampled_matrix.hpp"

namespace svt {

inline Index degrees_of_freedom(Index n1, Index n2, Index r) {
    if (r < 0 || r > std::min(n1, n2))
        throw ValidationError("degrees_of_freedom: r must lie in [0, min(n1,n2)]");
    return r * (n1 + n2 - r);
}

struct ProblemSpec {
    Index n1 = 0, n2 = 0;
    Index rank = 0;
    Index m = 0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (n1 < 1 || n2 < 1) throw ValidationError("ProblemSpec: dimensions must be positive");
        if (rank < 0 || rank > std::min(n1, n2))
            throw ValidationError("ProblemSpec: rank must lie in [0, min(n1,n2)]");
        if (m < 0 || m > n1 * n2)
            throw ValidationError("ProblemSpec: m must lie in [0, n1*n2]");
        if (noise_sigma < 0) throw ValidationError("ProblemSpec: noise_sigma must be >= 0");
    }

    nlohmann::json to_json() const {
        return {{"n1", n1},   {"n2", n2},     {"rank", rank},
                {"m", m},     {"noise_sigma", noise_sigma}, {"seed", seed}};
    }
    static ProblemSpec from_json(const nlohmann::json& j) {
        ProblemSpec s;
        s.n1 = j.at("n1").get<Index>();
        s.n2 = j.at("n2").get<Index>();
        s.rank = j.at("rank").get<Index>();
        s.m = j.at("m").get<Index>();
        s.noise_sigma = j.value("noise_sigma", 0.0);
        s.seed = j.value("seed", std::uint64_t{1});
        return s;
    }
};

struct GeneratedProblem {
    ProblemSpec spec;
    LowRankMatrix m_true{0, 0};
    std::shared_ptr<const IndexSet> omega;
    SampledMatrix obs{IndexSet(1, 1, {{0, 0}}), Vector::Zero(1)};
    bool undersampled_warning = false;  // m < d_r

    Index d_r = 0;
    double oversampling = 0.0;       // m / d_r
    double sampling_fraction = 0.0;  // m / (n1 n2)
    double noise_ratio = 0.0;        // ||P_Omega(Z)||_F / ||P_Omega(M)||_F
};

namespace detail {

/// Exact factored SVD of M_L M_R^T at cost O(n r^2): QR both factors,
/// then the SVD of the small r x r core.
inline LowRankMatrix factored_product_svd(const Matrix& ml, const Matrix& mr) {
    const Index r = ml.cols();
    if (r == 0) return LowRankMatrix::zero(ml.rows(), mr.rows());
    Eigen::HouseholderQR<Matrix> ql(ml), qr(mr);
    Matrix q_l = ql.householderQ() * Matrix::Identity(ml.rows(), r);
    Matrix q_r = qr.householderQ() * Matrix::Identity(mr.rows(), r);
    Matrix r_l = ql.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    Matrix r_r = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    DenseSvd core = svd_dense(r_l * r_r.transpose());
    Index keep = 0;
    while (keep < core.sigma.size() && core.sigma[keep] > 0) ++keep;
    return LowRankMatrix(q_l * core.u.leftCols(keep), core.sigma.head(keep),
                         q_r * core.v.leftCols(keep));
}

/// Floyd's uniform sampling of m cells without replacement; O(m) memory
/// so it scales to very large grids.
inline std::vector<std::pair<Index, Index>> sample_cells(Index n1, Index n2, Index m,
                                                         Rng& rng) {
    const std::uint64_t total = static_cast<std::uint64_t>(n1) * static_cast<std::uint64_t>(n2);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(static_cast<std::size_t>(m) * 2);
    for (std::uint64_t j = total - static_cast<std::uint64_t>(m); j < total; ++j) {
        const std::uint64_t t = rng.below(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    std::vector<std::pair<Index, Index>> cells;
    cells.reserve(chosen.size());
    for (std::uint64_t flat : chosen)
        cells.emplace_back(static_cast<Index>(flat / static_cast<std::uint64_t>(n2)),
                           static_cast<Index>(flat % static_cast<std::uint64_t>(n2)));
    return cells;
}

}  // namespace detail

/// Draw M = M_L M_R^T with i.i.d. standard normal n x r factors, a
/// uniform sampling set of cardinality m, and optional Gaussian noise
/// on the observed entries. Deterministic given the seed; the stream
/// order is M_L (row major), M_R (row major), Omega, then noise in
/// pattern order.
inline GeneratedProblem generate(const ProblemSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    Matrix ml(spec.n1, spec.rank), mr(spec.n2, spec.rank);
    for (Index i = 0; i < spec.n1; ++i)
        for (Index j = 0; j < spec.rank; ++j) ml(i, j) = rng.normal();
    for (Index i = 0; i < spec.n2; ++i)
        for (Index j = 0; j < spec.rank; ++j) mr(i, j) = rng.normal();

    GeneratedProblem out;
    out.spec = spec;
    out.m_true = detail::factored_product_svd(ml, mr);

    auto cells = detail::sample_cells(spec.n1, spec.n2, spec.m, rng);
    out.omega = std::make_shared<const IndexSet>(spec.n1, spec.n2, std::move(cells));

    Vector m_values = project_values(out.m_true, *out.omega);
    double z_norm = 0.0;
    Vector obs_values = m_values;
    if (spec.noise_sigma > 0) {
        Vector noise(out.omega->size());
        for (Index k = 0; k < noise.size(); ++k) noise[k] = spec.noise_sigma * rng.normal();
        obs_values += noise;
        z_norm = noise.norm();
    }
    out.obs = SampledMatrix(out.omega, std::move(obs_values));

    out.d_r = degrees_of_freedom(spec.n1, spec.n2, spec.rank);
    out.undersampled_warning = spec.m < out.d_r;
    out.oversampling = out.d_r > 0 ? static_cast<double>(spec.m) / out.d_r
                                   : std::numeric_limits<double>::infinity();
    out.sampling_fraction = static_cast<double>(spec.m) /
                            (static_cast<double>(spec.n1) * static_cast<double>(spec.n2));
    const double m_norm = m_values.norm();
    out.noise_ratio = z_norm == 0.0 ? 0.0
                      : m_norm > 0  ? z_norm / m_norm
                                    : std::numeric_limits<double>::infinity();
    return out;
}

/// ||X - M||_F / ||M||_F computed from the factors.
inline double relative_error(const LowRankMatrix& x, const LowRankMatrix& m) {
    const double m_norm = m.frobenius_norm();
    if (m_norm == 0) throw ValidationError("relative_error: ||M||_F is zero");
    return LowRankMatrix::distance(x, m) / m_norm;
}

/// ||P_Omega(Z)||_F / ||P_Omega(M)||_F from value vectors on Omega.
inline double noise_ratio(const Vector& z_on_omega, const Vector& m_on_omega) {
    if (z_on_omega.size() != m_on_omega.size())
        throw DimensionError("noise_ratio: length mismatch");
    const double denom = m_on_omega.norm();
    if (denom == 0) throw ValidationError("noise_ratio: ||P_Omega(M)||_F is zero");
    return z_on_omega.norm() / denom;
}

/// Emit a generated instance: observations as MatrixMarket, ground
/// truth as a LowRankMatrix directory, spec as JSON.
inline void save_problem(const GeneratedProblem& problem,
                         const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_matrix_market(dir / "observations.mtx", problem.obs);
    problem.m_true.save(dir / "truth");
    nlohmann::json j = problem.spec.to_json();
    j["d_r"] = problem.d_r;
    j["oversampling"] = problem.oversampling;
    j["sampling_fraction"] = problem.sampling_fraction;
    j["noise_ratio"] = problem.noise_ratio;
    std::ofstream out(dir / "problem.json");
    if (!out) throw IoError("cannot open " + (dir / "problem.json").string());
    out << j.dump(2) << "\n";
}

}  // namespace svt
