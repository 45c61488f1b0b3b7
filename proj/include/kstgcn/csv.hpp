#pragma once

// Small CSV helpers shared by the file interfaces. Comma separated, UTF-8,
// first line is a header. No quoting: none of the formats carry embedded commas.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace kstgcn::csv {

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;   // data rows, header excluded
    std::vector<int> line_numbers;                // 1-based source line per row
};

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Table t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (t.header.empty()) {
            t.header = split_line(line);
        } else {
            t.rows.push_back(split_line(line));
            t.line_numbers.push_back(lineno);
        }
    }
    if (t.header.empty()) throw std::runtime_error(path + ": empty file, expected a header line");
    return t;
}

// %.17g keeps doubles exact over a write/read round trip.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Fixed presentation format for metric outputs.
inline std::string format_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path);
    }
    void row(const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(context + ": not a number: '" + s + "'");
    }
}

inline long parse_long(const std::string& s, const std::string& context) {
    try {
        size_t pos = 0;
        long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(context + ": not an integer: '" + s + "'");
    }
}

}  // namespace kstgcn::csv
