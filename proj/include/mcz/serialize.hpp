#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "mcz/errors.hpp"
#include "mcz/grid.hpp"

namespace mcz {

using Json = nlohmann::ordered_json;

/// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{}) throw config_error("parse_double: bad number '" + s + "'");
    return v;
}

// ---------------------------------------------------------------------------
// GridFunction, plain-text form: header then row-major values.
// ---------------------------------------------------------------------------

inline std::string to_text(const GridFunction& f) {
    const GridSpec& g = f.grid();
    std::ostringstream os;
    os << "gridfunction 1\n";
    os << "n " << g.n << "\n";
    os << "h " << format_double(g.h) << "\n";
    os << "lo";
    for (auto v : g.lo) os << " " << v;
    os << "\nhi";
    for (auto v : g.hi) os << " " << v;
    os << "\nvalues\n";
    for (std::size_t i = 0; i < f.values().size(); ++i) {
        os << format_double(f.values()[i]);
        os << (((i + 1) % 8 == 0) ? '\n' : ' ');
    }
    if (f.values().size() % 8 != 0) os << '\n';
    return os.str();
}

inline GridFunction grid_function_from_text(std::istream& in) {
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "gridfunction" || version != 1) throw config_error("grid_function_from_text: bad header");
    int n = 0;
    std::string key, hstr;
    in >> key >> n;
    if (key != "n") throw config_error("grid_function_from_text: expected 'n'");
    in >> key >> hstr;
    if (key != "h") throw config_error("grid_function_from_text: expected 'h'");
    double h = parse_double(hstr);
    std::vector<std::int64_t> lo(n), hi(n);
    in >> key;
    if (key != "lo") throw config_error("grid_function_from_text: expected 'lo'");
    for (auto& v : lo) in >> v;
    in >> key;
    if (key != "hi") throw config_error("grid_function_from_text: expected 'hi'");
    for (auto& v : hi) in >> v;
    in >> key;
    if (key != "values") throw config_error("grid_function_from_text: expected 'values'");
    GridSpec g(n, h, std::move(lo), std::move(hi));
    std::vector<double> vals(g.cell_count());
    for (auto& v : vals) {
        std::string s;
        if (!(in >> s)) throw config_error("grid_function_from_text: truncated values");
        v = parse_double(s);
    }
    return GridFunction(std::move(g), std::move(vals));
}

inline GridFunction grid_function_from_text(const std::string& text) {
    std::istringstream is(text);
    return grid_function_from_text(is);
}

// ---------------------------------------------------------------------------
// GridFunction, JSON form. Bit-exact round trip: nlohmann serializes doubles
// with the shortest representation that parses back to the same value.
// ---------------------------------------------------------------------------

inline Json to_json(const GridFunction& f) {
    const GridSpec& g = f.grid();
    Json j;
    j["n"] = g.n;
    j["h"] = g.h;
    j["lo"] = g.lo;
    j["hi"] = g.hi;
    j["values"] = f.values();
    return j;
}

inline GridFunction grid_function_from_json(const Json& j) {
    GridSpec g(j.at("n").get<int>(), j.at("h").get<double>(),
               j.at("lo").get<std::vector<std::int64_t>>(), j.at("hi").get<std::vector<std::int64_t>>());
    return GridFunction(std::move(g), j.at("values").get<std::vector<double>>());
}

// ---------------------------------------------------------------------------
// CSV: deterministic shortest-float cells, '\n' line ends.
// ---------------------------------------------------------------------------

inline std::string to_csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open for writing: " + path);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace mcz
