#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace svt {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dimension mismatch between operands (rows/cols/lengths).
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Invalid argument value or violated construction invariant.
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Iterative method failed to converge or produced non-finite values.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Operation refused because it would exceed a configured size cap.
struct SizeCapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File parsing / serialization failure; message carries a line number
/// where applicable.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Largest min(n1, n2) accepted by the dense SVD path.
inline constexpr Index kDenseSvdCap = 2000;
// Largest n1*n2 a factored matrix may be expanded to.
inline constexpr Index kDensifyCapEntries = 4'000'000;

inline std::string dim_string(Index rows, Index cols) {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace svt
