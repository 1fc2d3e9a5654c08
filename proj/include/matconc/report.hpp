#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "matconc/errors.hpp"
#include "matconc/hermitian.hpp"
#include "matconc/inequalities.hpp"

namespace matconc {

using json = nlohmann::ordered_json;

#ifndef MATCONC_VERSION
#define MATCONC_VERSION "0.1.0"
#endif

inline constexpr const char* version = MATCONC_VERSION;

/// Row-major nested arrays of [re, im] pairs.
inline json matrix_to_json(const GeneralMatrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json matrix_to_json(const HermitianMatrix& m) { return matrix_to_json(m.matrix()); }

inline json real_matrix_to_json(const RealMatrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline GeneralMatrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw PreconditionError("matrix_from_json: expected a nonempty array of rows");
    }
    const auto rows = static_cast<Index>(j.size());
    const auto cols = static_cast<Index>(j.front().size());
    GeneralMatrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const json& row = j.at(static_cast<std::size_t>(r));
        if (static_cast<Index>(row.size()) != cols) {
            throw PreconditionError("matrix_from_json: ragged rows");
        }
        for (Index c = 0; c < cols; ++c) {
            const json& e = row.at(static_cast<std::size_t>(c));
            m(r, c) = Complex(e.at(0).get<double>(), e.at(1).get<double>());
        }
    }
    return m;
}

inline json to_json(const InequalityGap& g) {
    return json{{"lhs", g.lhs}, {"rhs", g.rhs}, {"gap", g.gap}, {"scale", g.scale}, {"holds", g.holds}};
}

/// Shortest decimal form that round-trips ("%.17g").
/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

/// A CSV table with a header row; cells are written verbatim.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }

    std::string str() const {
        std::string out;
        auto emit = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i != 0) {
                    out += ',';
                }
                out += cells[i];
            }
            out += '\n';
        };
        emit(header);
        for (const auto& r : rows) {
            emit(r);
        }
        return out;
    }
};

inline void write_text_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << contents;
    if (!out) {
        throw Error("write to " + path.string() + " failed");
    }
}

}  // namespace matconc
