#pragma once

#include <charconv>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "rbridge/core/error.hpp"
#include "rbridge/io/hash.hpp"

namespace rbridge::io {

/// Decimal with 17 significant digits, enough to round-trip any double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Sample CSV: header x0,...,x{d-1}, then one row per column of `points`.
inline std::string samples_to_csv(const Eigen::MatrixXd& points, std::size_t dim) {
    std::string out;
    for (std::size_t j = 0; j < dim; ++j) {
        out += (j ? ",x" : "x") + std::to_string(j);
    }
    out += '\n';
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        for (Eigen::Index j = 0; j < points.rows(); ++j) {
            if (j) {
                out += ',';
            }
            out += format_double(points(j, c));
        }
        out += '\n';
    }
    return out;
}

inline void write_samples(const std::string& path, const Eigen::MatrixXd& points, std::size_t dim) {
    write_file(path, samples_to_csv(points, dim));
}

namespace detail {

inline double parse_double(std::string_view field, const std::string& where) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
        field.remove_prefix(1);
    }
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw UsageError(where + ": cannot parse number '" + std::string(field) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

} // namespace detail

/// Parses a sample CSV (header row required) into a dim x n matrix.
inline Eigen::MatrixXd parse_samples(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) {
        throw UsageError(source + ": empty sample file (header expected)");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const std::size_t dim = detail::split(line, ',').size();
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto fields = detail::split(line, ',');
        const std::string where = source + ":" + std::to_string(line_no);
        if (fields.size() != dim) {
            throw UsageError(where + ": expected " + std::to_string(dim) + " columns");
        }
        for (auto f : fields) {
            values.push_back(detail::parse_double(f, where));
        }
        ++rows;
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < dim; ++j) {
            m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r)) = values[r * dim + j];
        }
    }
    return m;
}

inline Eigen::MatrixXd read_samples(const std::string& path) { return parse_samples(read_file(path), path); }

} // namespace rbridge::io
