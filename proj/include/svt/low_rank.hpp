#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>

#include "json.hpp"
#include "svt/core.hpp"

namespace svt {

/// Factored matrix X = U diag(sigma) V^T with orthonormal U (n1 x r),
/// V (n2 x r) and strictly positive, nonincreasing sigma. Rank zero is
/// represented with empty factors.
class LowRankMatrix {
  public:
    LowRankMatrix(Index rows, Index cols)
        : rows_(rows), cols_(cols), u_(rows, 0), sigma_(0), v_(cols, 0) {}

    /// Validating constructor. `orth_tol` bounds ||U^T U - I||_F and
    /// ||V^T V - I||_F; engines with weaker orthogonality guarantees
    /// pass their own documented tolerance.
    LowRankMatrix(Matrix u, Vector sigma, Matrix v, double orth_tol = 1e-10)
        : rows_(u.rows()), cols_(v.rows()),
          u_(std::move(u)), sigma_(std::move(sigma)), v_(std::move(v)) {
        validate(orth_tol);
    }

    static LowRankMatrix zero(Index rows, Index cols) {
        return LowRankMatrix(rows, cols);
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index rank() const { return sigma_.size(); }

    const Matrix& u() const { return u_; }
    const Vector& sigma() const { return sigma_; }
    const Matrix& v() const { return v_; }

    double frobenius_norm() const { return sigma_.norm(); }
    double nuclear_norm() const { return sigma_.sum(); }

    /// Expand to a dense matrix; refuses above `cap_entries`.
    Matrix to_dense(Index cap_entries = kDensifyCapEntries) const {
        if (rows_ * cols_ > cap_entries)
            throw SizeCapError("LowRankMatrix::to_dense: " + dim_string(rows_, cols_) +
                               " exceeds densification cap of " +
                               std::to_string(cap_entries) + " entries");
        if (rank() == 0) return Matrix::Zero(rows_, cols_);
        return u_ * sigma_.asDiagonal() * v_.transpose();
    }

    /// <X, Y> = trace(X^T Y) computed from the factors in O((rX+rY)^2 n).
    static double inner(const LowRankMatrix& x, const LowRankMatrix& y) {
        if (x.rows() != y.rows() || x.cols() != y.cols())
            throw DimensionError("LowRankMatrix::inner: shape mismatch " +
                                 dim_string(x.rows(), x.cols()) + " vs " +
                                 dim_string(y.rows(), y.cols()));
        if (x.rank() == 0 || y.rank() == 0) return 0.0;
        const Matrix gu = x.u().transpose() * y.u();
        const Matrix gv = x.v().transpose() * y.v();
        double acc = 0.0;
        for (Index a = 0; a < x.rank(); ++a)
            for (Index b = 0; b < y.rank(); ++b)
                acc += x.sigma()[a] * y.sigma()[b] * gu(a, b) * gv(a, b);
        return acc;
    }

    /// ||X - Y||_F without densifying either operand.
    static double distance(const LowRankMatrix& x, const LowRankMatrix& y) {
        const double sq = x.sigma().squaredNorm() + y.sigma().squaredNorm() -
                          2.0 * inner(x, y);
        return std::sqrt(std::max(0.0, sq));
    }

    /// Write the factors to `dir` as U.csv, sigma.csv, V.csv plus
    /// meta.json {n1, n2, rank}.
    void save(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        write_csv(dir / "U.csv", u_);
        write_csv(dir / "V.csv", v_);
        {
            std::ofstream out(dir / "sigma.csv");
            if (!out) throw IoError("cannot open " + (dir / "sigma.csv").string());
            out.precision(17);
            for (Index i = 0; i < sigma_.size(); ++i) out << sigma_[i] << "\n";
        }
        nlohmann::json meta{{"n1", rows_}, {"n2", cols_}, {"rank", rank()}};
        std::ofstream out(dir / "meta.json");
        if (!out) throw IoError("cannot open " + (dir / "meta.json").string());
        out << meta.dump(2) << "\n";
    }

    static LowRankMatrix load(const std::filesystem::path& dir) {
        std::ifstream meta_in(dir / "meta.json");
        if (!meta_in) throw IoError("cannot open " + (dir / "meta.json").string());
        nlohmann::json meta;
        try {
            meta_in >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw IoError((dir / "meta.json").string() + ": " + e.what());
        }
        const Index n1 = meta.at("n1").get<Index>();
        const Index n2 = meta.at("n2").get<Index>();
        const Index r = meta.at("rank").get<Index>();
        if (r == 0) return LowRankMatrix(n1, n2);
        Matrix u = read_csv(dir / "U.csv", n1, r);
        Matrix v = read_csv(dir / "V.csv", n2, r);
        Matrix s = read_csv(dir / "sigma.csv", r, 1);
        return LowRankMatrix(std::move(u), s.col(0), std::move(v));
    }

  private:
    void validate(double orth_tol) const {
        if (u_.cols() != sigma_.size() || v_.cols() != sigma_.size())
            throw ValidationError("LowRankMatrix: factor rank mismatch");
        if (rank() > std::min(rows_, cols_))
            throw ValidationError("LowRankMatrix: rank exceeds min dimension");
        if (!u_.allFinite() || !v_.allFinite() || !sigma_.allFinite())
            throw ValidationError("LowRankMatrix: non-finite factor entries");
        for (Index i = 0; i < rank(); ++i) {
            if (!(sigma_[i] > 0))
                throw ValidationError("LowRankMatrix: sigma must be strictly positive");
            if (i > 0 && sigma_[i] > sigma_[i - 1])
                throw ValidationError("LowRankMatrix: sigma must be nonincreasing");
        }
        if (rank() > 0) {
            const Matrix iu = u_.transpose() * u_ - Matrix::Identity(rank(), rank());
            const Matrix iv = v_.transpose() * v_ - Matrix::Identity(rank(), rank());
            if (iu.norm() > orth_tol || iv.norm() > orth_tol)
                throw ValidationError("LowRankMatrix: factors not orthonormal within " +
                                      std::to_string(orth_tol));
        }
    }

    static void write_csv(const std::filesystem::path& path, const Matrix& m) {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open " + path.string());
        out.precision(17);
        for (Index i = 0; i < m.rows(); ++i) {
            for (Index j = 0; j < m.cols(); ++j) {
                if (j > 0) out << ",";
                out << m(i, j);
            }
            out << "\n";
        }
    }

    static Matrix read_csv(const std::filesystem::path& path, Index rows, Index cols) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open " + path.string());
        Matrix m(rows, cols);
        std::string line;
        for (Index i = 0; i < rows; ++i) {
            if (!std::getline(in, line))
                throw IoError(path.string() + ": expected " + std::to_string(rows) +
                              " rows, got " + std::to_string(i));
            std::istringstream ss(line);
            std::string cell;
            for (Index j = 0; j < cols; ++j) {
                if (!std::getline(ss, cell, ','))
                    throw IoError(path.string() + ": line " + std::to_string(i + 1) +
                                  ": expected " + std::to_string(cols) + " columns");
                try {
                    m(i, j) = std::stod(cell);
                } catch (const std::exception&) {
                    throw IoError(path.string() + ": line " + std::to_string(i + 1) +
                                  ": bad number '" + cell + "'");
                }
            }
        }
        return m;
    }

    Index rows_, cols_;
    Matrix u_;
    Vector sigma_;
    Matrix v_;
};

}  // namespace svt
