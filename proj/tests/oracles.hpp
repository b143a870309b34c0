#pragma once

// Independent oracles for the test suite. Everything here recomputes expected
// values by brute force or from closed forms, without touching the library's
// optimized paths.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mcz/grid.hpp"
#include "mcz/kernel.hpp"

namespace oracle {

/// Brute-force distance from box q to the closed complement: scans every
/// complement cell plus the extent-exterior slabs. Exact, O(#cells) per query.
inline double dist2_brute(const mcz::CellSet& s, const mcz::Box& q) {
    const mcz::GridSpec& g = s.grid();
    const mcz::Box ext = g.extent_box();
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.n; ++a) {
        const double gap = std::min(q.lo[a] - ext.lo[a], ext.hi[a] - q.hi[a]);
        if (gap <= 0.0) return 0.0;
        best = std::min(best, gap * gap);
    }
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        if (s.contains(c)) continue;
        best = std::min(best, mcz::box_gap2(q, g.cell_box(g.unflatten(c))));
        if (best == 0.0) return 0.0;
    }
    return best;
}

/// Brute-force 1D uncentered maximal function: all interval endpoint pairs.
inline std::vector<double> maximal_1d_brute(const mcz::GridFunction& f) {
    const auto& v = f.values();
    const std::int64_t n = static_cast<std::int64_t>(v.size());
    std::vector<double> prefix(n + 1, 0.0);
    for (std::int64_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + std::fabs(v[i]);
    std::vector<double> out(n, 0.0);
    for (std::int64_t c = 0; c < n; ++c)
        for (std::int64_t a = 0; a <= c; ++a)
            for (std::int64_t b = c + 1; b <= n; ++b)
                out[c] = std::max(out[c], (prefix[b] - prefix[a]) / static_cast<double>(b - a));
    return out;
}

/// Closed form of the uncentered maximal function of the indicator of [0,1].
inline double maximal_indicator_closed(double x) {
    if (x < 0.0) return 1.0 / (1.0 - x);
    if (x > 1.0) return 1.0 / x;
    return 1.0;
}

/// Adaptive-free composite Simpson quadrature on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 4096) {
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

} // namespace oracle
