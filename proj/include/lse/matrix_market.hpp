#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lse/errors.hpp"
#include "lse/sparse_matrix.hpp"

namespace lse {

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace detail

/// Reads a Matrix Market file (coordinate or array format, real or
/// integer field, general or symmetric).  Symmetric inputs are expanded
/// to the full pattern, duplicates are summed and 1-based indices
/// converted.
inline SparseMatrix read_matrix_market(std::istream& in) {
    std::string line;
    idx lineno = 0;
    if (!std::getline(in, line)) throw ParseError("empty input", 1);
    ++lineno;
    std::istringstream header(line);
    std::string banner, object, format, field, symmetry;
    header >> banner >> object >> format >> field >> symmetry;
    if (detail::lower(banner) != "%%matrixmarket") throw ParseError("missing MatrixMarket banner", lineno);
    if (detail::lower(object) != "matrix") throw ParseError("object must be 'matrix'", lineno);
    format = detail::lower(format);
    field = detail::lower(field);
    symmetry = detail::lower(symmetry);
    if (format != "coordinate" && format != "array")
        throw ParseError("format must be coordinate or array", lineno);
    if (field != "real" && field != "integer")
        throw ParseError("field must be real or integer", lineno);
    if (symmetry != "general" && symmetry != "symmetric")
        throw ParseError("symmetry must be general or symmetric", lineno);

    auto next_data_line = [&](std::string& out) {
        while (std::getline(in, line)) {
            ++lineno;
            size_t pos = line.find_first_not_of(" \t\r\n");
            if (pos == std::string::npos || line[pos] == '%') continue;
            out = line;
            return true;
        }
        return false;
    };

    std::string sizes;
    if (!next_data_line(sizes)) throw ParseError("missing size line", lineno + 1);
    std::istringstream szs(sizes);

    if (format == "coordinate") {
        long long m = -1, n = -1, nz = -1;
        if (!(szs >> m >> n >> nz) || m < 0 || n < 0 || nz < 0)
            throw ParseError("bad coordinate size line", lineno);
        std::vector<Triplet> trips;
        trips.reserve(static_cast<size_t>(nz));
        std::string data;
        for (long long e = 0; e < nz; ++e) {
            if (!next_data_line(data)) throw ParseError("unexpected end of file", lineno + 1);
            std::istringstream es(data);
            long long i = 0, j = 0;
            double v = 0.0;
            if (!(es >> i >> j >> v)) throw ParseError("bad coordinate entry", lineno);
            if (i < 1 || i > m || j < 1 || j > n) throw ParseError("index out of bounds", lineno);
            trips.push_back({static_cast<idx>(i - 1), static_cast<idx>(j - 1), v});
            if (symmetry == "symmetric" && i != j)
                trips.push_back({static_cast<idx>(j - 1), static_cast<idx>(i - 1), v});
        }
        return SparseMatrix::from_triplets(static_cast<idx>(m), static_cast<idx>(n),
                                           std::move(trips));
    }

    long long m = -1, n = -1;
    if (!(szs >> m >> n) || m < 0 || n < 0) throw ParseError("bad array size line", lineno);
    std::vector<Triplet> trips;
    std::string data;
    std::istringstream es;
    auto read_value = [&]() {
        double v;
        while (true) {
            if (es >> v) return v;
            if (!next_data_line(data)) throw ParseError("unexpected end of file", lineno + 1);
            es.clear();
            es.str(data);
        }
    };
    if (symmetry == "general") {
        for (long long j = 0; j < n; ++j)
            for (long long i = 0; i < m; ++i) {
                double v = read_value();
                if (v != 0.0) trips.push_back({static_cast<idx>(i), static_cast<idx>(j), v});
            }
    } else {
        for (long long j = 0; j < n; ++j)
            for (long long i = j; i < m; ++i) {
                double v = read_value();
                if (v != 0.0) {
                    trips.push_back({static_cast<idx>(i), static_cast<idx>(j), v});
                    if (i != j) trips.push_back({static_cast<idx>(j), static_cast<idx>(i), v});
                }
            }
    }
    return SparseMatrix::from_triplets(static_cast<idx>(m), static_cast<idx>(n), std::move(trips));
}

inline SparseMatrix read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    try {
        return read_matrix_market(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Writes coordinate/real/general format with full round-trip precision.
inline void write_matrix_market(const SparseMatrix& M, std::ostream& out) {
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << M.nrows() << " " << M.ncols() << " " << M.nnz() << "\n";
    char buf[64];
    for (idx j = 0; j < M.ncols(); ++j) {
        for (idx k = M.col_begin(j); k < M.col_end(j); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", M.value_at(k));
            out << (M.row_at(k) + 1) << " " << (j + 1) << " " << buf << "\n";
        }
    }
}

inline void write_matrix_market(const SparseMatrix& M, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_matrix_market(M, out);
}

}  // namespace lse
