#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mcz/common.hpp"
#include "mcz/errors.hpp"
#include "mcz/grid.hpp"

namespace mcz {

/// Dyadic cube prod_i [z_i 2^-k, (z_i+1) 2^-k), anchored at the origin.
struct DyadicCube {
    int k = 0;                    // level; side length 2^-k
    std::vector<std::int64_t> z;  // integer coordinates

    int dim() const { return static_cast<int>(z.size()); }

    double side() const { return std::ldexp(1.0, -k); }
    double diam() const { return std::sqrt(static_cast<double>(dim())) * side(); }
    double diam2() const { return static_cast<double>(dim()) * std::ldexp(1.0, -2 * k); }

    Point center() const {
        Point c(z.size());
        for (std::size_t a = 0; a < z.size(); ++a) c[a] = (static_cast<double>(z[a]) + 0.5) * side();
        return c;
    }

    Box box() const {
        Box b;
        b.lo.resize(z.size());
        b.hi.resize(z.size());
        for (std::size_t a = 0; a < z.size(); ++a) {
            b.lo[a] = static_cast<double>(z[a]) * side();
            b.hi[a] = static_cast<double>(z[a] + 1) * side();
        }
        return b;
    }

    DyadicCube parent() const {
        DyadicCube p;
        p.k = k - 1;
        p.z.resize(z.size());
        for (std::size_t a = 0; a < z.size(); ++a)
            p.z[a] = (z[a] >= 0) ? z[a] / 2 : (z[a] - 1) / 2; // floor division
        return p;
    }

    bool operator==(const DyadicCube& o) const { return k == o.k && z == o.z; }
};

inline double cube_diam(const DyadicCube& q) { return q.diam(); }
inline Point cube_center(const DyadicCube& q) { return q.center(); }

inline nlohmann::ordered_json cubes_to_json(const std::vector<DyadicCube>& cubes) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& q : cubes) {
        nlohmann::ordered_json j;
        j["k"] = q.k;
        j["z"] = q.z;
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::vector<DyadicCube> cubes_from_json(const nlohmann::ordered_json& arr) {
    std::vector<DyadicCube> out;
    for (const auto& j : arr)
        out.push_back(DyadicCube{j.at("k").get<int>(), j.at("z").get<std::vector<std::int64_t>>()});
    return out;
}

struct WhitneyResult {
    std::vector<DyadicCube> cubes;
    CellSet remainder;              // member cells no admissible cube can cover
    bool resolution_insufficient = false;
};

namespace detail {

/// n-dimensional inclusion/exclusion rectangle counts over the member mask.
class RangeCounter {
public:
    explicit RangeCounter(const CellSet& s) : grid_(s.grid()) {
        const GridSpec& g = grid_;
        dims_.resize(g.n);
        for (int a = 0; a < g.n; ++a) dims_[a] = g.size(a) + 1;
        std::int64_t total = 1;
        for (auto d : dims_) total *= d;
        acc_.assign(total, 0);
        // acc[p] = number of member cells with index < p componentwise (offset coords)
        std::vector<std::int64_t> p(g.n, 0);
        for (std::int64_t lin = 0; lin < total; ++lin) {
            std::int64_t rem = lin;
            for (int a = g.n - 1; a >= 0; --a) {
                p[a] = rem % dims_[a];
                rem /= dims_[a];
            }
            std::int64_t v = 0;
            bool nonzero = true;
            for (int a = 0; a < g.n; ++a)
                if (p[a] == 0) {
                    nonzero = false;
                    break;
                }
            if (nonzero) {
                CellIndex z(g.n);
                for (int a = 0; a < g.n; ++a) z[a] = grid_.lo[a] + p[a] - 1;
                v = s.contains(z) ? 1 : 0;
                // standard integral-image recurrence
                for (int bits = 1; bits < (1 << g.n); ++bits) {
                    std::vector<std::int64_t> q(p);
                    int sign = 0;
                    bool ok = true;
                    for (int a = 0; a < g.n; ++a)
                        if (bits & (1 << a)) {
                            if (--q[a] < 0) {
                                ok = false;
                                break;
                            }
                            ++sign;
                        }
                    if (!ok) continue;
                    std::int64_t qlin = 0;
                    for (int a = 0; a < g.n; ++a) qlin = qlin * dims_[a] + q[a];
                    v += (sign % 2 == 1 ? 1 : -1) * acc_[qlin];
                }
            }
            acc_[lin] = v;
        }
    }

    /// Member cells with index in [lo, hi) per axis (absolute coordinates).
    std::int64_t count(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi) const {
        const int n = grid_.n;
        std::int64_t total = 0;
        for (int bits = 0; bits < (1 << n); ++bits) {
            std::vector<std::int64_t> p(n);
            int sign = 0;
            for (int a = 0; a < n; ++a) {
                if (bits & (1 << a)) {
                    p[a] = lo[a] - grid_.lo[a];
                    ++sign;
                } else {
                    p[a] = hi[a] - grid_.lo[a];
                }
            }
            std::int64_t lin = 0;
            for (int a = 0; a < n; ++a) lin = lin * dims_[a] + p[a];
            total += (sign % 2 == 0 ? 1 : -1) * acc_[lin];
        }
        return total;
    }

private:
    GridSpec grid_;
    std::vector<std::int64_t> dims_;
    std::vector<std::int64_t> acc_;
};

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b, r = a % b;
    return (r != 0 && ((r < 0) != (b < 0))) ? q - 1 : q;
}

} // namespace detail

/// Whitney decomposition: the maximal dyadic cubes Q inside the cell union of s
/// with d(Q, complement) >= 2 diam(Q). Maximality gives d < 6 diam(Q), inside
/// the [2 diam, 8 diam] window. Member cells that cannot satisfy the distance
/// condition even at cell scale land in `remainder` and set the
/// resolution_insufficient flag.
inline WhitneyResult whitney(const CellSet& s) {
    if (s.empty()) throw config_error("whitney: empty set");
    const GridSpec& g = s.grid();
    if (!is_dyadic_power(g.h))
        throw config_error("whitney: cell width must be a (possibly negative) power of two");
    const int j = -exact_log2(g.h, "whitney: h"); // h = 2^-j

    detail::RangeCounter counts(s);
    DistanceOracle oracle(s);

    WhitneyResult res;
    res.remainder = CellSet(g);

    // Roots: the dyadic cubes at the coarsest level whose side covers the extent.
    double maxside = g.extent_box().max_side();
    int k0 = static_cast<int>(std::floor(-std::log2(maxside)));
    if (k0 > j) k0 = j;

    struct Frame {
        int k;
        std::vector<std::int64_t> z;
    };
    std::vector<Frame> stack;
    {
        const std::int64_t w = std::int64_t{1} << (j - k0); // cells per cube side
        std::vector<std::int64_t> zlo(g.n), zhi(g.n);
        for (int a = 0; a < g.n; ++a) {
            zlo[a] = detail::floor_div(g.lo[a], w);
            zhi[a] = detail::floor_div(g.hi[a] - 1, w);
        }
        std::vector<std::int64_t> z(zlo);
        while (true) {
            stack.push_back({k0, z});
            int a = g.n - 1;
            while (a >= 0) {
                if (++z[a] <= zhi[a]) break;
                z[a] = zlo[a];
                --a;
            }
            if (a < 0) break;
        }
        // keep deterministic order: roots were pushed in ascending z-order, and the
        // stack is LIFO, so reverse for ascending traversal
        std::reverse(stack.begin(), stack.end());
    }

    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        const std::int64_t w = std::int64_t{1} << (j - f.k);
        std::vector<std::int64_t> clo(g.n), chi(g.n), clo_clip(g.n), chi_clip(g.n);
        bool within_extent = true;
        bool empty_clip = false;
        for (int a = 0; a < g.n; ++a) {
            clo[a] = f.z[a] * w;
            chi[a] = (f.z[a] + 1) * w;
            clo_clip[a] = std::max(clo[a], g.lo[a]);
            chi_clip[a] = std::min(chi[a], g.hi[a]);
            if (clo[a] < g.lo[a] || chi[a] > g.hi[a]) within_extent = false;
            if (clo_clip[a] >= chi_clip[a]) empty_clip = true;
        }
        if (empty_clip) continue;
        const std::int64_t cnt = counts.count(clo_clip, chi_clip);
        if (cnt == 0) continue;

        std::int64_t vol = 1;
        for (int a = 0; a < g.n; ++a) vol *= chi_clip[a] - clo_clip[a];
        const bool contained = within_extent && cnt == vol;

        DyadicCube q{f.k, f.z};
        if (contained && oracle.dist2(q.box()) >= 4.0 * q.diam2()) {
            res.cubes.push_back(std::move(q));
            continue;
        }
        if (f.k == j) {
            if (contained) res.remainder.insert(CellIndex(clo.begin(), clo.end()));
            continue;
        }
        // push children in descending z-order so they pop in ascending order
        const int nch = 1 << g.n;
        for (int c = nch - 1; c >= 0; --c) {
            Frame ch;
            ch.k = f.k + 1;
            ch.z.resize(g.n);
            for (int a = 0; a < g.n; ++a) ch.z[a] = 2 * f.z[a] + ((c >> a) & 1);
            stack.push_back(std::move(ch));
        }
    }

    res.resolution_insufficient = !res.remainder.empty();
    return res;
}

/// Cells covered by a dyadic cube on grid g (cube side must be >= cell width).
inline std::vector<std::int64_t> cube_cells(const GridSpec& g, const DyadicCube& q) {
    const int j = -exact_log2(g.h, "cube_cells: h");
    if (q.k > j) throw config_error("cube_cells: cube finer than the grid");
    const std::int64_t w = std::int64_t{1} << (j - q.k);
    std::vector<std::int64_t> lo(g.n), hi(g.n);
    for (int a = 0; a < g.n; ++a) {
        lo[a] = std::max(q.z[a] * w, g.lo[a]);
        hi[a] = std::min((q.z[a] + 1) * w, g.hi[a]);
        if (lo[a] >= hi[a]) return {};
    }
    std::vector<std::int64_t> out;
    CellIndex z(lo.begin(), lo.end());
    while (true) {
        out.push_back(g.flatten(z));
        int a = g.n - 1;
        while (a >= 0) {
            if (++z[a] < hi[a]) break;
            z[a] = lo[a];
            --a;
        }
        if (a < 0) break;
    }
    return out;
}

inline CellSet cube_cellset(const GridSpec& g, const DyadicCube& q) {
    CellSet s(g);
    for (auto c : cube_cells(g, q)) s.insert(c);
    return s;
}

} // namespace mcz
