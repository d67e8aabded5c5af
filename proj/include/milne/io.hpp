#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

namespace milne::io {

using ojson = nlohmann::ordered_json;

/// Shortest text that keeps 17 significant digits; independent of the C locale.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Shortest round-trip text, for labels built from parameter values.
inline std::string label_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e) throw std::runtime_error("not a number: '" + s + "'");
    return v;
}

namespace detail {

inline void escape(std::ostream& os, const std::string& s) {
    os << ojson(s).dump();
}

inline void emit(std::ostream& os, const ojson& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case ojson::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            std::size_t k = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++k) {
                os << pad;
                escape(os, it.key());
                os << ": ";
                emit(os, it.value(), indent, depth + 1);
                os << (k + 1 < j.size() ? ",\n" : "\n");
            }
            os << close << "}";
            return;
        }
        case ojson::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            os << "[";
            for (std::size_t k = 0; k < j.size(); ++k) {
                if (k) os << ", ";
                emit(os, j[k], indent, depth + 1);
            }
            os << "]";
            return;
        }
        case ojson::value_t::number_float: {
            const double v = j.get<double>();
            if (std::isfinite(v)) os << format_double(v);
            else os << "null";
            return;
        }
        default:
            os << j.dump();
    }
}

}  // namespace detail

/// JSON text with every float written at 17 significant digits.
inline std::string dump(const ojson& j) {
    std::ostringstream os;
    detail::emit(os, j, 2, 0);
    os << "\n";
    return os.str();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (header[c] == name) return c;
        throw std::runtime_error("missing column " + name);
    }
    std::vector<double> col(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[c]);
        return out;
    }
};

inline std::string write_csv(const Table& t) {
    std::string s;
    for (std::size_t c = 0; c < t.header.size(); ++c) s += (c ? "," : "") + t.header[c];
    s += "\n";
    for (const auto& r : t.rows) {
        for (std::size_t c = 0; c < r.size(); ++c) s += (c ? "," : "") + format_double(r[c]);
        s += "\n";
    }
    return s;
}

inline Table read_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    auto split = [](const std::string& l) {
        std::vector<std::string> out;
        std::string cur;
        for (char ch : l) {
            if (ch == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (ch != '\r') {
                cur += ch;
            }
        }
        out.push_back(cur);
        return out;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (t.header.empty()) {
            t.header = split(line);
            continue;
        }
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.header.size()) + " fields");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c));
        t.rows.push_back(std::move(row));
    }
    return t;
}

}  // namespace milne::io
