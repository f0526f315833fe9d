#pragma once

// Locale-independent CSV text: shortest round-trip decimal doubles, comma
// separated, no quoting needed for the numeric tables this project emits.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace glassyqpe::csv {

inline std::string format(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    if (res.ec != std::errc{}) throw std::runtime_error("csv: cannot format double");
    return std::string(buf, res.ptr);
}

inline std::string format(std::uint64_t value) { return std::to_string(value); }
inline std::string format(int value) { return std::to_string(value); }
inline std::string format(bool value) { return value ? "true" : "false"; }
inline std::string format(std::string_view value) { return std::string(value); }
inline std::string format(const char *value) { return value; }

template <class... Fields>
void write_row(std::ostream &os, const Fields &...fields) {
    bool first = true;
    ((os << (first ? "" : ",") << format(fields), first = false), ...);
    os << '\n';
}

inline double parse_double(std::string_view text) {
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("csv: not a number: '" + std::string(text) + "'");
    }
    return value;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw std::invalid_argument("csv: missing column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split_line(const std::string &line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline Table read(std::istream &is) {
    Table t;
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.header = split_line(line);
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        t.rows.push_back(split_line(line));
        if (t.rows.back().size() != t.header.size()) throw std::invalid_argument("csv: ragged row");
    }
    return t;
}

inline Table read_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("csv: cannot open " + path);
    return read(in);
}

}  // namespace glassyqpe::csv
