#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "poisson_approx/errors.hpp"

namespace poisson_approx {

// Shortest exact decimal round-trip; stable across runs and thread counts.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0.0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct Cell {
    enum class Kind { Empty, Number, Integer, Text };
    Kind kind = Kind::Empty;
    double number = 0.0;
    std::int64_t integer = 0;
    std::string text;

    static Cell empty() { return {}; }
    static Cell num(double x) { return {Kind::Number, x, 0, {}}; }
    static Cell count(std::int64_t n) { return {Kind::Integer, 0.0, n, {}}; }
    static Cell str(std::string s) { return {Kind::Text, 0.0, 0, std::move(s)}; }
};

namespace detail {

inline std::string csv_cell(const Cell& cell) {
    switch (cell.kind) {
        case Cell::Kind::Empty: return "";
        case Cell::Kind::Number: return format_double(cell.number);
        case Cell::Kind::Integer: return std::to_string(cell.integer);
        case Cell::Kind::Text: {
            if (cell.text.find_first_of(",\"\n") == std::string::npos) return cell.text;
            std::string quoted = "\"";
            for (char c : cell.text) {
                if (c == '"') quoted += '"';
                quoted += c;
            }
            quoted += '"';
            return quoted;
        }
    }
    throw BadInput("unknown cell kind");
}

inline std::string json_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

inline std::string json_cell(const Cell& cell) {
    switch (cell.kind) {
        case Cell::Kind::Empty: return "null";
        case Cell::Kind::Number: {
            if (std::isnan(cell.number) || std::isinf(cell.number)) {
                return json_string(format_double(cell.number));
            }
            return format_double(cell.number);
        }
        case Cell::Kind::Integer: return std::to_string(cell.integer);
        case Cell::Kind::Text: return json_string(cell.text);
    }
    throw BadInput("unknown cell kind");
}

}  // namespace detail

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) {
        if (row.size() != header.size()) {
            throw BadInput("report row width does not match header");
        }
        rows.push_back(std::move(row));
    }

    void write_csv(std::ostream& out) const {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c) out << ',';
            out << header[c];
        }
        out << '\n';
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out << ',';
                out << detail::csv_cell(row[c]);
            }
            out << '\n';
        }
    }

    // one object per row; Empty cells are omitted
    void write_json(std::ostream& out) const {
        out << "[\n";
        for (std::size_t r = 0; r < rows.size(); ++r) {
            out << '{';
            bool first = true;
            for (std::size_t c = 0; c < rows[r].size(); ++c) {
                if (rows[r][c].kind == Cell::Kind::Empty) continue;
                if (!first) out << ',';
                first = false;
                out << detail::json_string(header[c]) << ':'
                    << detail::json_cell(rows[r][c]);
            }
            out << (r + 1 < rows.size() ? "},\n" : "}\n");
        }
        out << "]\n";
    }
};

// flat ordered JSON object, for single-result commands
inline void write_json_object(std::ostream& out,
                              const std::vector<std::pair<std::string, Cell>>& fields) {
    out << "{\n";
    for (std::size_t k = 0; k < fields.size(); ++k) {
        out << "  " << detail::json_string(fields[k].first) << ": "
            << detail::json_cell(fields[k].second)
            << (k + 1 < fields.size() ? ",\n" : "\n");
    }
    out << "}\n";
}

}  // namespace poisson_approx
