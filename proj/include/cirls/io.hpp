#ifndef CIRLS_IO_HPP
#define CIRLS_IO_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cirls/common.hpp"

namespace cirls {

// Minimal strict CSV: comma separated, header row required, UTF-8, '.'
// decimal. Missing cells are errors, never NA-dropped.
struct Table {
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;

    int n_rows() const { return static_cast<int>(rows.size()); }

    int column_index(const std::string &name) const
    {
        for (std::size_t j = 0; j < headers.size(); ++j)
            if (headers[j] == name)
                return static_cast<int>(j);
        fail(ErrorCode::InvalidConfig, "column '" + name + "' not found in CSV header");
    }

    Vector numeric_column(const std::string &name) const
    {
        int j = column_index(name);
        Vector out(n_rows());
        for (int i = 0; i < n_rows(); ++i) {
            const std::string &cell = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (cell.empty())
                fail(ErrorCode::InvalidData,
                     "missing value in column '" + name + "' at data row " + std::to_string(i + 1));
            char *end = nullptr;
            double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0')
                fail(ErrorCode::InvalidData, "non-numeric value '" + cell + "' in column '" +
                                                 name + "' at data row " + std::to_string(i + 1));
            out(i) = v;
        }
        return out;
    }
};

inline std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.push_back("");
    return out;
}

inline Table read_csv(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        fail(ErrorCode::InvalidData, "cannot open CSV file '" + path + "'");
    Table t;
    std::string line;
    if (!std::getline(in, line))
        fail(ErrorCode::InvalidData, "CSV file '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    t.headers = split_csv_line(line);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.headers.size())
            fail(ErrorCode::InvalidData, "row " + std::to_string(lineno) + " of '" + path +
                                             "' has " + std::to_string(cells.size()) +
                                             " cells, expected " +
                                             std::to_string(t.headers.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

// Shortest round-trip formatting so reruns are byte-identical.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        for (int prec = 1; prec < 17; ++prec) {
            char shorter[32];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            if (std::strtod(shorter, nullptr) == v)
                return shorter;
        }
    }
    return buf;
}

} // namespace cirls

#endif
