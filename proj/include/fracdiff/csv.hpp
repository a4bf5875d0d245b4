#pragma once

// Minimal CSV writing/reading for the command-line artifacts: numeric-only
// tables with one header line, '\n' line ends, full round-trip precision,
// and '#'-prefixed comment lines (ignored on read, appendable on write).

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fracdiff/errors.hpp"

namespace fracdiff {

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[40];
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof(buf), "%.0f", v);
        return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // try trimming to fewer digits while the value still round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) {
            return probe;
        }
    }
    return buf;
}

struct csv_table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> comments;  // '#' lines in order of appearance
};

inline void write_csv(std::ostream& os, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows,
                      const std::vector<std::string>& trailing_comments = {}) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) {
            os << ',';
        }
        os << header[i];
    }
    os << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw domain_error("csv row width does not match the header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                os << ',';
            }
            os << format_double(row[i]);
        }
        os << '\n';
    }
    for (const auto& c : trailing_comments) {
        os << "# " << c << '\n';
    }
}

inline void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                           const std::vector<std::vector<double>>& rows,
                           const std::vector<std::string>& trailing_comments = {}) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw domain_error("cannot open '" + path + "' for writing");
    }
    write_csv(f, header, rows, trailing_comments);
    if (!f) {
        throw domain_error("write to '" + path + "' failed");
    }
}

inline csv_table read_csv(std::istream& is) {
    csv_table t;
    std::string line;
    bool have_header = false;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            t.comments.push_back(line);
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) {
                break;
            }
            start = comma + 1;
        }
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            const char* s = c.c_str();
            char* end = nullptr;
            const double v = std::strtod(s, &end);
            if (end == s || *end != '\0') {
                throw parse_error("csv", "cell '" + c + "' is not a number");
            }
            row.push_back(v);
        }
        if (row.size() != t.header.size()) {
            throw parse_error("csv", "row width does not match the header");
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) {
        throw parse_error("csv", "missing header line");
    }
    return t;
}

inline csv_table read_csv_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw domain_error("cannot open '" + path + "' for reading");
    }
    return read_csv(f);
}

}  // namespace fracdiff
