#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "mcz/common.hpp"
#include "mcz/errors.hpp"

namespace mcz {

using CellIndex = std::vector<std::int64_t>;

/// Uniform grid on R^n: cell z occupies prod_i [z_i*h, (z_i+1)*h), center (z+1/2)*h.
/// The extent box [lo, hi) (integer corners) truncates R^n; functions vanish outside.
struct GridSpec {
    int n = 1;
    double h = 1.0;
    std::vector<std::int64_t> lo; // integer corner, inclusive
    std::vector<std::int64_t> hi; // integer corner, exclusive

    GridSpec() = default;
    GridSpec(int n_, double h_, std::vector<std::int64_t> lo_, std::vector<std::int64_t> hi_)
        : n(n_), h(h_), lo(std::move(lo_)), hi(std::move(hi_)) {
        if (n < 1) throw config_error("GridSpec: dimension must be positive");
        if (!(h > 0.0)) throw config_error("GridSpec: cell width must be positive");
        if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
            throw config_error("GridSpec: corner dimension mismatch");
        for (int a = 0; a < n; ++a)
            if (hi[a] <= lo[a]) throw config_error("GridSpec: empty extent box");
    }

    /// Extent from a physical box; corners snapped outward to integer multiples of h.
    static GridSpec from_box(int n, double h, const Box& box) {
        std::vector<std::int64_t> lo(n), hi(n);
        for (int a = 0; a < n; ++a) {
            lo[a] = static_cast<std::int64_t>(std::floor(box.lo[a] / h + 1e-12));
            hi[a] = static_cast<std::int64_t>(std::ceil(box.hi[a] / h - 1e-12));
        }
        return GridSpec(n, h, std::move(lo), std::move(hi));
    }

    std::int64_t size(int axis) const { return hi[axis] - lo[axis]; }

    std::int64_t cell_count() const {
        std::int64_t c = 1;
        for (int a = 0; a < n; ++a) c *= size(a);
        return c;
    }

    double cell_measure() const { return std::pow(h, n); }

    /// Row-major linear index (axis 0 slowest).
    std::int64_t flatten(const CellIndex& z) const {
        std::int64_t idx = 0;
        for (int a = 0; a < n; ++a) idx = idx * size(a) + (z[a] - lo[a]);
        return idx;
    }

    CellIndex unflatten(std::int64_t idx) const {
        CellIndex z(n);
        for (int a = n - 1; a >= 0; --a) {
            z[a] = lo[a] + idx % size(a);
            idx /= size(a);
        }
        return z;
    }

    bool in_extent(const CellIndex& z) const {
        for (int a = 0; a < n; ++a)
            if (z[a] < lo[a] || z[a] >= hi[a]) return false;
        return true;
    }

    Point cell_center(const CellIndex& z) const {
        Point c(n);
        for (int a = 0; a < n; ++a) c[a] = (static_cast<double>(z[a]) + 0.5) * h;
        return c;
    }

    Box cell_box(const CellIndex& z) const {
        Box b;
        b.lo.resize(n);
        b.hi.resize(n);
        for (int a = 0; a < n; ++a) {
            b.lo[a] = static_cast<double>(z[a]) * h;
            b.hi[a] = static_cast<double>(z[a] + 1) * h;
        }
        return b;
    }

    Box extent_box() const {
        Box b;
        b.lo.resize(n);
        b.hi.resize(n);
        for (int a = 0; a < n; ++a) {
            b.lo[a] = static_cast<double>(lo[a]) * h;
            b.hi[a] = static_cast<double>(hi[a]) * h;
        }
        return b;
    }

    /// Cell containing point p (floor convention; cells are half-open).
    CellIndex cell_of(const Point& p) const {
        CellIndex z(n);
        for (int a = 0; a < n; ++a) z[a] = static_cast<std::int64_t>(std::floor(p[a] / h));
        return z;
    }

    bool operator==(const GridSpec& o) const { return n == o.n && h == o.h && lo == o.lo && hi == o.hi; }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

/// Finite set of grid cells; stands in for a measurable subset of R^n.
class CellSet {
public:
    CellSet() = default;

    explicit CellSet(GridSpec g) : grid_(std::move(g)), mask_(grid_.cell_count(), 0), count_(0) {}

    CellSet(GridSpec g, std::vector<std::uint8_t> mask) : grid_(std::move(g)), mask_(std::move(mask)) {
        if (static_cast<std::int64_t>(mask_.size()) != grid_.cell_count())
            throw config_error("CellSet: mask size mismatch");
        count_ = std::count(mask_.begin(), mask_.end(), std::uint8_t{1});
    }

    const GridSpec& grid() const { return grid_; }
    std::int64_t count() const { return count_; }
    bool empty() const { return count_ == 0; }

    bool contains(std::int64_t flat) const { return mask_[flat] != 0; }
    bool contains(const CellIndex& z) const { return grid_.in_extent(z) && mask_[grid_.flatten(z)] != 0; }

    void insert(std::int64_t flat) {
        if (!mask_[flat]) {
            mask_[flat] = 1;
            ++count_;
        }
    }
    void insert(const CellIndex& z) { insert(grid_.flatten(z)); }

    void erase(std::int64_t flat) {
        if (mask_[flat]) {
            mask_[flat] = 0;
            --count_;
        }
    }

    const std::vector<std::uint8_t>& mask() const { return mask_; }

    CellSet complement() const {
        std::vector<std::uint8_t> m(mask_.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = mask_[i] ? 0 : 1;
        return CellSet(grid_, std::move(m));
    }

    CellSet unite(const CellSet& o) const {
        require_same_grid(o);
        std::vector<std::uint8_t> m(mask_.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = (mask_[i] | o.mask_[i]);
        return CellSet(grid_, std::move(m));
    }

    CellSet intersect(const CellSet& o) const {
        require_same_grid(o);
        std::vector<std::uint8_t> m(mask_.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = (mask_[i] & o.mask_[i]);
        return CellSet(grid_, std::move(m));
    }

    CellSet subtract(const CellSet& o) const {
        require_same_grid(o);
        std::vector<std::uint8_t> m(mask_.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = (mask_[i] & (o.mask_[i] ? 0 : 1));
        return CellSet(grid_, std::move(m));
    }

    std::vector<std::int64_t> cells() const {
        std::vector<std::int64_t> out;
        out.reserve(static_cast<std::size_t>(count_));
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(mask_.size()); ++i)
            if (mask_[i]) out.push_back(i);
        return out;
    }

private:
    void require_same_grid(const CellSet& o) const {
        if (grid_ != o.grid_) throw config_error("CellSet: grid mismatch");
    }

    GridSpec grid_;
    std::vector<std::uint8_t> mask_;
    std::int64_t count_ = 0;
};

/// Compactly supported function sampled at cell centers, piecewise constant on cells.
class GridFunction {
public:
    GridFunction() = default;

    explicit GridFunction(GridSpec g) : grid_(std::move(g)), values_(grid_.cell_count(), 0.0) {}

    GridFunction(GridSpec g, std::vector<double> values) : grid_(std::move(g)), values_(std::move(values)) {
        if (static_cast<std::int64_t>(values_.size()) != grid_.cell_count())
            throw config_error("GridFunction: value array size mismatch");
        for (double v : values_)
            if (!std::isfinite(v)) throw config_error("GridFunction: values must be finite");
    }

    const GridSpec& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }

    double at(std::int64_t flat) const { return values_[flat]; }
    double at(const CellIndex& z) const { return grid_.in_extent(z) ? values_[grid_.flatten(z)] : 0.0; }

    /// Value at a point (0 outside the extent box).
    double operator()(const Point& p) const {
        CellIndex z = grid_.cell_of(p);
        return grid_.in_extent(z) ? values_[grid_.flatten(z)] : 0.0;
    }

private:
    GridSpec grid_;
    std::vector<double> values_;
};

inline double measure(const CellSet& s) { return static_cast<double>(s.count()) * s.grid().cell_measure(); }

inline CellSet superlevel_set(const GridFunction& f, double t) {
    if (!(t > 0.0)) throw config_error("superlevel_set: threshold must be positive");
    std::vector<std::uint8_t> m(f.values().size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::fabs(f.values()[i]) > t ? 1 : 0;
    return CellSet(f.grid(), std::move(m));
}

inline double l1_norm(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values()) s += std::fabs(v);
    return s * f.grid().cell_measure();
}

inline double linf_norm(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values()) s = std::max(s, std::fabs(v));
    return s;
}

inline double l2_norm_sq(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    return s * f.grid().cell_measure();
}

inline GridFunction restrict(const GridFunction& f, const CellSet& s) {
    if (f.grid() != s.grid()) throw config_error("restrict: grid mismatch");
    std::vector<double> v(f.values().size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
        if (s.contains(static_cast<std::int64_t>(i))) v[i] = f.values()[i];
    return GridFunction(f.grid(), std::move(v));
}

inline GridFunction scale(const GridFunction& f, double c) {
    std::vector<double> v(f.values());
    for (double& x : v) x *= c;
    return GridFunction(f.grid(), std::move(v));
}

inline GridFunction add(const GridFunction& a, const GridFunction& b) {
    if (a.grid() != b.grid()) throw config_error("add: grid mismatch");
    std::vector<double> v(a.values());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += b.values()[i];
    return GridFunction(a.grid(), std::move(v));
}

/// Indicator-of-box sample: value `height` on cells whose center lies in the open box.
inline GridFunction indicator(const GridSpec& g, const Box& box, double height = 1.0) {
    std::vector<double> v(g.cell_count(), 0.0);
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
        Point c = g.cell_center(g.unflatten(i));
        bool inside = true;
        for (int a = 0; a < g.n; ++a)
            if (!(c[a] > box.lo[a] && c[a] < box.hi[a])) {
                inside = false;
                break;
            }
        if (inside) v[i] = height;
    }
    return GridFunction(g, std::move(v));
}

/// Cells whose center lies in the open box.
inline CellSet cells_of_box(const GridSpec& g, const Box& box) {
    std::vector<std::uint8_t> m(g.cell_count(), 0);
    for (std::int64_t i = 0; i < g.cell_count(); ++i) {
        Point c = g.cell_center(g.unflatten(i));
        bool inside = true;
        for (int a = 0; a < g.n; ++a)
            if (!(c[a] > box.lo[a] && c[a] < box.hi[a])) {
                inside = false;
                break;
            }
        if (inside) m[i] = 1;
    }
    return CellSet(g, std::move(m));
}

/// Distance queries against the closed complement of a cell union.
///
/// The complement is everything outside the extent box plus every extent cell
/// not in the set, each taken as a closed box. Only complement cells that touch
/// a member cell can realize the minimum for queries inside the set, so those
/// "surface" cells are collected once up front.
class DistanceOracle {
public:
    explicit DistanceOracle(const CellSet& s) : set_(&s) {
        const GridSpec& g = s.grid();
        for (std::int64_t i = 0; i < g.cell_count(); ++i) {
            if (s.contains(i)) continue;
            CellIndex z = g.unflatten(i);
            if (touches_member(s, z)) surface_.push_back(g.cell_box(z));
        }
    }

    /// Squared Euclidean distance from closed box q to the closed complement.
    double dist2(const Box& q) const {
        const GridSpec& g = set_->grid();
        const Box ext = g.extent_box();

        // Gap from q to the complement of the extent box: straight out the nearest face.
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < g.n; ++a) {
            double m = std::min(q.lo[a] - ext.lo[a], ext.hi[a] - q.hi[a]);
            if (m <= 0.0) return 0.0;
            best = std::min(best, m * m);
        }

        // Zero if q touches any non-member cell.
        std::vector<std::int64_t> rlo(g.n), rhi(g.n);
        for (int a = 0; a < g.n; ++a) {
            rlo[a] = std::max<std::int64_t>(g.lo[a], static_cast<std::int64_t>(std::floor(q.lo[a] / g.h)) - 1);
            rhi[a] = std::min<std::int64_t>(g.hi[a] - 1, static_cast<std::int64_t>(std::floor(q.hi[a] / g.h)) + 1);
        }
        CellIndex z(rlo.begin(), rlo.end());
        while (true) {
            if (!set_->contains(z)) {
                Box cb = g.cell_box(z);
                if (box_gap2(q, cb) == 0.0) return 0.0;
            }
            int a = g.n - 1;
            while (a >= 0) {
                if (++z[a] <= rhi[a]) break;
                z[a] = rlo[a];
                --a;
            }
            if (a < 0) break;
        }

        for (const Box& cb : surface_) best = std::min(best, box_gap2(q, cb));
        return best;
    }

    double dist(const Box& q) const { return std::sqrt(dist2(q)); }

private:
    static bool touches_member(const CellSet& s, const CellIndex& z) {
        const GridSpec& g = s.grid();
        CellIndex nb(g.n);
        std::vector<int> d(g.n, -1);
        while (true) {
            bool self = true;
            for (int a = 0; a < g.n; ++a) {
                nb[a] = z[a] + d[a];
                if (d[a] != 0) self = false;
            }
            if (!self && s.contains(nb)) return true;
            int a = g.n - 1;
            while (a >= 0) {
                if (++d[a] <= 1) break;
                d[a] = -1;
                --a;
            }
            if (a < 0) return false;
        }
    }

    const CellSet* set_;
    std::vector<Box> surface_;
};

/// Euclidean distance from box q to the closed complement of the union of cells of s.
inline double distance_to_complement(const CellSet& s, const Box& q) {
    return DistanceOracle(s).dist(q);
}

} // namespace mcz
