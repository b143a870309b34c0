#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mcz/errors.hpp"

namespace mcz {

using Point = std::vector<double>;

/// Closed axis-aligned box [lo_1,hi_1] x ... x [lo_n,hi_n].
struct Box {
    Point lo;
    Point hi;

    int dim() const { return static_cast<int>(lo.size()); }

    double side(int axis) const { return hi[axis] - lo[axis]; }

    double max_side() const {
        double s = 0.0;
        for (int a = 0; a < dim(); ++a) s = std::max(s, side(a));
        return s;
    }

    bool contains(const Point& p) const {
        for (int a = 0; a < dim(); ++a)
            if (p[a] < lo[a] || p[a] > hi[a]) return false;
        return true;
    }
};

inline double sq(double x) { return x * x; }

inline double dist2_points(const Point& a, const Point& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += sq(a[i] - b[i]);
    return d;
}

/// Squared Euclidean gap between two closed boxes (0 if they touch).
inline double box_gap2(const Box& a, const Box& b) {
    double d = 0.0;
    for (int ax = 0; ax < a.dim(); ++ax) {
        double g = std::max({0.0, b.lo[ax] - a.hi[ax], a.lo[ax] - b.hi[ax]});
        d += g * g;
    }
    return d;
}

/// Exact log2 of a positive power of two; throws otherwise.
inline int exact_log2(double v, const char* what) {
    if (!(v > 0.0)) throw config_error(std::string(what) + " must be positive");
    int e = 0;
    double m = std::frexp(v, &e); // v = m * 2^e, m in [0.5, 1)
    if (m != 0.5) throw config_error(std::string(what) + " must be a power of two, got " + std::to_string(v));
    return e - 1;
}

inline bool is_dyadic_power(double v) {
    if (!(v > 0.0)) return false;
    int e = 0;
    return std::frexp(v, &e) == 0.5;
}

/// Log-uniform grid of `count` values spanning [lo, hi].
inline std::vector<double> log_spaced(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1)
        throw config_error("log_spaced: need 0 < lo <= hi and count >= 1");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double r = std::log(hi / lo);
    for (int i = 0; i < count; ++i) g[i] = lo * std::exp(r * i / (count - 1));
    g.back() = hi;
    return g;
}

} // namespace mcz
