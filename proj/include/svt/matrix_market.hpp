#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "svt/core.hpp"
#include "svt/sampled_matrix.hpp"

namespace svt {

/// Read a MatrixMarket coordinate file (`%%MatrixMarket matrix
/// coordinate real general`, 1-based indices). Parse failures raise
/// IoError with the offending line number.
inline SampledMatrix read_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    auto fail = [&](long line_no, const std::string& what) -> IoError {
        return IoError(path.string() + ":" + std::to_string(line_no) + ": " + what);
    };

    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) throw fail(1, "empty file");
    ++line_no;
    {
        std::istringstream ss(line);
        std::string banner, object, format, field, symmetry;
        ss >> banner >> object >> format >> field >> symmetry;
        if (banner != "%%MatrixMarket" || object != "matrix" ||
            format != "coordinate" || field != "real" || symmetry != "general")
            throw fail(line_no,
                       "expected header '%%MatrixMarket matrix coordinate real general'");
    }

    Index rows = 0, cols = 0, nnz = 0;
    bool have_size = false;
    std::vector<std::pair<Index, Index>> entries;
    std::vector<double> values;

    while (std::getline(in, line)) {
        ++line_no;
        std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '%') continue;
        std::istringstream ss(line);
        if (!have_size) {
            if (!(ss >> rows >> cols >> nnz))
                throw fail(line_no, "malformed size line, expected 'rows cols nnz'");
            std::string trail;
            if (ss >> trail) throw fail(line_no, "trailing tokens on size line");
            if (rows < 0 || cols < 0 || nnz < 0)
                throw fail(line_no, "negative size field");
            have_size = true;
            entries.reserve(static_cast<std::size_t>(nnz));
            values.reserve(static_cast<std::size_t>(nnz));
            continue;
        }
        Index i = 0, j = 0;
        double v = 0.0;
        if (!(ss >> i >> j >> v))
            throw fail(line_no, "malformed entry, expected 'row col value'");
        std::string trail;
        if (ss >> trail) throw fail(line_no, "trailing tokens on entry line");
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw fail(line_no, "index (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") out of range for " + dim_string(rows, cols));
        entries.emplace_back(i - 1, j - 1);
        values.push_back(v);
    }
    if (!have_size) throw fail(line_no + 1, "missing size line");
    if (static_cast<Index>(entries.size()) != nnz)
        throw fail(line_no + 1, "entry count " + std::to_string(entries.size()) +
                                    " does not match declared nnz " + std::to_string(nnz));

    // IndexSet sorts lexicographically; carry the values along.
    std::vector<Index> order(entries.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<Index>(k);
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
        return entries[static_cast<std::size_t>(a)] < entries[static_cast<std::size_t>(b)];
    });
    Vector vals(nnz);
    std::vector<std::pair<Index, Index>> sorted_entries(entries.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        sorted_entries[k] = entries[static_cast<std::size_t>(order[k])];
        vals[static_cast<Index>(k)] = values[static_cast<std::size_t>(order[k])];
    }
    try {
        IndexSet pattern(rows, cols, std::move(sorted_entries));
        return SampledMatrix(std::move(pattern), std::move(vals));
    } catch (const ValidationError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

inline void write_matrix_market(const std::filesystem::path& path,
                                const SampledMatrix& s) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string());
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << s.rows() << " " << s.cols() << " " << s.nnz() << "\n";
    out.precision(17);
    const IndexSet& p = s.pattern();
    for (Index k = 0; k < p.size(); ++k)
        out << p.row(k) + 1 << " " << p.col(k) + 1 << " " << s.values()[k] << "\n";
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace svt
