#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <vector>

#include "mcz/errors.hpp"
#include "mcz/grid.hpp"

namespace mcz {

namespace detail {

// Max average over intervals [a,b) containing cell c equals the maximum slope
// between a point (a, P[a]), a <= c, and a point (b, P[b]), b >= c+1, where P
// is the prefix sum of |f| in cell units. The maximizing endpoints lie on the
// lower hull of the left points and the upper hull of the right points; both
// slices of the slope function are unimodal along their hull, and a pairwise
// local optimum is global, so alternating climbs converge.
class MaxAverage1D {
public:
    explicit MaxAverage1D(const std::vector<double>& abs_values) {
        const std::int64_t n = static_cast<std::int64_t>(abs_values.size());
        prefix_.resize(n + 1);
        prefix_[0] = 0.0;
        for (std::int64_t i = 0; i < n; ++i) prefix_[i + 1] = prefix_[i] + abs_values[i];

        // suffix upper hulls as persistent parent chains: hull({i..n}) = i -> parent[i] -> ...
        parent_.assign(n + 1, -1);
        std::int64_t cur = n;
        for (std::int64_t i = n - 1; i >= 0; --i) {
            while (parent_[cur] != -1 && slope(i, cur) <= slope(cur, parent_[cur])) cur = parent_[cur];
            parent_[i] = cur;
            cur = i;
        }
    }

    /// Runs over all cells in order; calls out(c, max_average).
    template <typename F>
    void run(F&& out) {
        const std::int64_t n = static_cast<std::int64_t>(prefix_.size()) - 1;
        std::vector<std::int64_t> left_hull; // ascending indices, lower hull
        std::vector<std::int64_t> right;     // materialized suffix hull
        for (std::int64_t c = 0; c < n; ++c) {
            push_left(left_hull, c);
            right.clear();
            for (std::int64_t v = c + 1; v != -1; v = parent_[v]) right.push_back(v);
            out(c, best_slope(left_hull, right));
        }
    }

private:
    double slope(std::int64_t a, std::int64_t b) const {
        return (prefix_[b] - prefix_[a]) / static_cast<double>(b - a);
    }

    void push_left(std::vector<std::int64_t>& hull, std::int64_t i) const {
        while (hull.size() >= 2) {
            std::int64_t o = hull[hull.size() - 2], a = hull.back();
            if (slope(o, a) >= slope(a, i))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(i);
    }

    double best_slope(const std::vector<std::int64_t>& lh, const std::vector<std::int64_t>& rh) const {
        std::size_t ia = lh.size() - 1, ib = 0;
        double cur = slope(lh[ia], rh[ib]);
        const std::size_t cap = lh.size() + rh.size() + 4;
        for (std::size_t phase = 0; phase < cap; ++phase) {
            bool moved = false;
            while (ib + 1 < rh.size() && slope(lh[ia], rh[ib + 1]) >= cur) {
                ++ib;
                cur = slope(lh[ia], rh[ib]);
                moved = true;
            }
            while (ib > 0 && slope(lh[ia], rh[ib - 1]) > cur) {
                --ib;
                cur = slope(lh[ia], rh[ib]);
                moved = true;
            }
            while (ia > 0 && slope(lh[ia - 1], rh[ib]) >= cur) {
                --ia;
                cur = slope(lh[ia], rh[ib]);
                moved = true;
            }
            while (ia + 1 < lh.size() && slope(lh[ia + 1], rh[ib]) > cur) {
                ++ia;
                cur = slope(lh[ia], rh[ib]);
                moved = true;
            }
            if (!moved) return cur;
        }
        // fallback: exhaustive over both hulls
        double best = cur;
        for (std::int64_t a : lh)
            for (std::int64_t b : rh) best = std::max(best, slope(a, b));
        return best;
    }

    std::vector<double> prefix_;
    std::vector<std::int64_t> parent_;
};

/// For each cell index r in [0, cells): max of src over the position window
/// [max(0, r-s+1), min(r, positions-1)]. Both window ends are nondecreasing in
/// r, so a monotone deque applies. strided access: src[i*stride], dst[i*stride].
inline void position_window_max(const double* src, std::int64_t positions, double* dst, std::int64_t cells,
                                std::int64_t s, std::int64_t stride) {
    std::deque<std::int64_t> dq;
    std::int64_t hi = -1;
    for (std::int64_t r = 0; r < cells; ++r) {
        const std::int64_t want_hi = std::min(r, positions - 1);
        while (hi < want_hi) {
            ++hi;
            while (!dq.empty() && src[dq.back() * stride] <= src[hi * stride]) dq.pop_back();
            dq.push_back(hi);
        }
        const std::int64_t lo = std::max<std::int64_t>(0, r - s + 1);
        while (dq.front() < lo) dq.pop_front();
        dst[r * stride] = src[dq.front() * stride];
    }
}

} // namespace detail

/// Uncentered Hardy-Littlewood maximal function over axis-aligned cubes with
/// grid-aligned corners inside the extent box. In one dimension every interval
/// is searched exactly; in two dimensions cube sides are restricted to powers
/// of two times the cell width.
inline GridFunction maximal_function(const GridFunction& f) {
    const GridSpec& g = f.grid();
    std::vector<double> absv(f.values().size());
    for (std::size_t i = 0; i < absv.size(); ++i) absv[i] = std::fabs(f.values()[i]);

    if (g.n == 1) {
        std::vector<double> out(absv.size(), 0.0);
        detail::MaxAverage1D engine(absv);
        engine.run([&](std::int64_t c, double v) { out[c] = v; });
        return GridFunction(g, std::move(out));
    }
    if (g.n == 2) {
        const std::int64_t rows = g.size(0), cols = g.size(1);
        std::vector<double> out(absv.size(), 0.0);
        // prefix sums with a zero border
        std::vector<double> pre((rows + 1) * (cols + 1), 0.0);
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t x = 0; x < cols; ++x)
                pre[(r + 1) * (cols + 1) + (x + 1)] = absv[r * cols + x] + pre[r * (cols + 1) + (x + 1)] +
                                                      pre[(r + 1) * (cols + 1) + x] - pre[r * (cols + 1) + x];
        for (std::int64_t s = 1; s <= std::min(rows, cols); s *= 2) {
            const std::int64_t prows = rows - s + 1, pcols = cols - s + 1;
            std::vector<double> sums(prows * pcols);
            for (std::int64_t r = 0; r < prows; ++r)
                for (std::int64_t x = 0; x < pcols; ++x)
                    sums[r * pcols + x] = pre[(r + s) * (cols + 1) + (x + s)] - pre[r * (cols + 1) + (x + s)] -
                                          pre[(r + s) * (cols + 1) + x] + pre[r * (cols + 1) + x];
            // max over the squares covering each cell: per-axis position windows
            std::vector<double> rowmax(prows * cols);
            for (std::int64_t r = 0; r < prows; ++r)
                detail::position_window_max(&sums[r * pcols], pcols, &rowmax[r * cols], cols, s, 1);
            std::vector<double> cellmax(rows * cols);
            for (std::int64_t x = 0; x < cols; ++x)
                detail::position_window_max(&rowmax[x], prows, &cellmax[x], rows, s, cols);
            const double inv = 1.0 / static_cast<double>(s * s);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], cellmax[i] * inv);
        }
        return GridFunction(g, std::move(out));
    }
    throw config_error("maximal_function: dimensions above 2 are not supported");
}

/// Superlevel set of the maximal function at threshold t^(1/m).
inline CellSet level_set_G(const GridFunction& f, double t, int m) {
    if (!(t > 0.0)) throw config_error("level_set_G: t must be positive");
    if (m < 1) throw config_error("level_set_G: m must be at least 1");
    return superlevel_set(maximal_function(f), std::pow(t, 1.0 / m));
}

/// Empirical weak (1,1) constant sup_t t |{Mf > t}| / ||f||_1 over the grid of thresholds.
inline double weak11_constant(const GridFunction& f, const std::vector<double>& tgrid) {
    const double norm = l1_norm(f);
    if (norm == 0.0) return 0.0;
    GridFunction mf = maximal_function(f);
    double best = 0.0;
    for (double t : tgrid) best = std::max(best, t * measure(superlevel_set(mf, t)) / norm);
    return best;
}

} // namespace mcz
