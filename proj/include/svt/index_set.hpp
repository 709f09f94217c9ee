#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "svt/core.hpp"

namespace svt {

/// Fixed sampling set Omega: unique (row, col) pairs sorted
/// lexicographically, with a CSR-style row offset table built once.
class IndexSet {
  public:
    IndexSet(Index rows, Index cols, std::vector<std::pair<Index, Index>> entries)
        : rows_(rows), cols_(cols) {
        if (rows < 0 || cols < 0)
            throw ValidationError("IndexSet: negative dimensions");
        std::sort(entries.begin(), entries.end());
        row_.reserve(entries.size());
        col_.reserve(entries.size());
        for (std::size_t k = 0; k < entries.size(); ++k) {
            const auto [i, j] = entries[k];
            if (i < 0 || i >= rows || j < 0 || j >= cols)
                throw ValidationError("IndexSet: index (" + std::to_string(i) + "," +
                                      std::to_string(j) + ") out of range for " +
                                      dim_string(rows, cols));
            if (k > 0 && entries[k] == entries[k - 1])
                throw ValidationError("IndexSet: duplicate index (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
            row_.push_back(i);
            col_.push_back(j);
        }
        row_start_.assign(static_cast<std::size_t>(rows) + 1, 0);
        for (Index i : row_) ++row_start_[static_cast<std::size_t>(i) + 1];
        for (std::size_t i = 1; i < row_start_.size(); ++i)
            row_start_[i] += row_start_[i - 1];
    }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const { return static_cast<Index>(row_.size()); }

    Index row(Index k) const { return row_[static_cast<std::size_t>(k)]; }
    Index col(Index k) const { return col_[static_cast<std::size_t>(k)]; }

    /// Entries with row index i occupy [row_begin(i), row_end(i)).
    Index row_begin(Index i) const { return row_start_[static_cast<std::size_t>(i)]; }
    Index row_end(Index i) const { return row_start_[static_cast<std::size_t>(i) + 1]; }

    bool operator==(const IndexSet& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ &&
               row_ == other.row_ && col_ == other.col_;
    }

  private:
    Index rows_, cols_;
    std::vector<Index> row_, col_;
    std::vector<Index> row_start_;
};

}  // namespace svt
