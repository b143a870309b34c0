#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcz/apply.hpp"
#include "mcz/dyadic.hpp"
#include "mcz/errors.hpp"
#include "mcz/grid.hpp"
#include "mcz/maximal.hpp"
#include "mcz/measure.hpp"
#include "mcz/serialize.hpp"

namespace mcz {

// ---------------------------------------------------------------------------
// Good/bad splitting driven by the maximal function, with Whitney pieces of
// the bad part and surrogate point-mass measures at cube centers.
// ---------------------------------------------------------------------------

struct SlotSplit {
    CellSet G;                       // {Mf_i > t^(1/m)}
    GridFunction good;               // f_i off G
    GridFunction bad;                // f_i on G
    std::vector<DyadicCube> cubes;   // decreasing measure, ties in traversal order
    std::vector<double> weights;     // a_{i,j} = integral of bad over cube j
    std::vector<double> piece_l1;    // ||b_{i,j}||_1
    CellSet remainder;
    bool resolution_insufficient = false;
    double mass_bound_worst = 0.0;   // max_j ||b_{i,j}||_1 / ((17 sqrt n)^n t^(1/m) |Q_j|)
};

struct GoodBadSplit {
    double t = 0.0;
    int m = 0;
    std::vector<SlotSplit> slots;
    CellSet G_union;

    /// nu_i^N: point masses a_{i,j} at the centers of the first N cubes.
    AtomicMeasure surrogate(int i, int N) const {
        const auto& s = slots[i];
        std::vector<Atom> atoms;
        const int count = std::min<int>(N, static_cast<int>(s.cubes.size()));
        for (int j = 0; j < count; ++j) atoms.push_back(Atom{s.cubes[j].center(), s.weights[j]});
        return AtomicMeasure(std::move(atoms));
    }

    /// b_i^N: the bad part restricted to the first N cubes.
    GridFunction bad_truncated(int i, int N) const {
        const auto& s = slots[i];
        const GridSpec& g = s.bad.grid();
        std::vector<double> v(s.bad.values().size(), 0.0);
        const int count = std::min<int>(N, static_cast<int>(s.cubes.size()));
        for (int j = 0; j < count; ++j)
            for (auto c : cube_cells(g, s.cubes[j])) v[c] = s.bad.at(c);
        return GridFunction(g, std::move(v));
    }

    /// b_{i,j}: the bad part restricted to cube j.
    GridFunction piece(int i, int j) const {
        const auto& s = slots[i];
        const GridSpec& g = s.bad.grid();
        std::vector<double> v(s.bad.values().size(), 0.0);
        for (auto c : cube_cells(g, s.cubes[j])) v[c] = s.bad.at(c);
        return GridFunction(g, std::move(v));
    }
};

inline double mass_bound_factor(int n) { return std::pow(17.0 * std::sqrt(static_cast<double>(n)), n); }

inline GoodBadSplit split(const std::vector<GridFunction>& fs, double t,
                          const std::vector<GridFunction>* precomputed_maximal = nullptr) {
    if (fs.empty()) throw config_error("split: need at least one input");
    if (!(t > 0.0)) throw config_error("split: t must be positive");
    const GridSpec& g = fs.front().grid();
    for (const auto& f : fs)
        if (f.grid() != g) throw config_error("split: inputs must share one grid");
    if (precomputed_maximal && precomputed_maximal->size() != fs.size())
        throw config_error("split: precomputed maximal functions must match the inputs");

    GoodBadSplit out;
    out.t = t;
    out.m = static_cast<int>(fs.size());
    const double threshold = std::pow(t, 1.0 / out.m);
    out.G_union = CellSet(g);

    for (std::size_t fi = 0; fi < fs.size(); ++fi) {
        const auto& f = fs[fi];
        SlotSplit s;
        s.G = superlevel_set(precomputed_maximal ? (*precomputed_maximal)[fi] : maximal_function(f), threshold);
        s.bad = restrict(f, s.G);
        s.good = restrict(f, s.G.complement());
        s.remainder = CellSet(g);
        if (!s.G.empty()) {
            WhitneyResult w = whitney(s.G);
            s.cubes = std::move(w.cubes);
            s.remainder = std::move(w.remainder);
            s.resolution_insufficient = w.resolution_insufficient;
            std::stable_sort(s.cubes.begin(), s.cubes.end(),
                             [](const DyadicCube& a, const DyadicCube& b) { return a.k < b.k; });
            const double bound = mass_bound_factor(g.n) * threshold;
            for (const auto& q : s.cubes) {
                double integral = 0.0, absint = 0.0;
                for (auto c : cube_cells(g, q)) {
                    integral += s.bad.at(c);
                    absint += std::fabs(s.bad.at(c));
                }
                integral *= g.cell_measure();
                absint *= g.cell_measure();
                s.weights.push_back(integral);
                s.piece_l1.push_back(absint);
                const double qmeas = std::pow(q.side(), g.n);
                s.mass_bound_worst = std::max(s.mass_bound_worst, absint / (bound * qmeas));
            }
        }
        out.G_union = out.G_union.unite(s.G);
        out.slots.push_back(std::move(s));
    }
    return out;
}

/// All 2^m good/bad slot patterns, all-good first, in lexicographic order with
/// 'g' before 'b' (e.g. m=2: gg, gb, bg, bb).
inline std::vector<std::string> enumerate_splittings(int m) {
    if (m < 1) throw config_error("enumerate_splittings: m must be at least 1");
    std::vector<std::string> out;
    out.reserve(std::size_t{1} << m);
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
        std::string p(m, 'g');
        for (int i = 0; i < m; ++i)
            if (bits & (std::uint64_t{1} << (m - 1 - i))) p[i] = 'b';
        out.push_back(std::move(p));
    }
    return out;
}

inline Json to_json(const GoodBadSplit& s) {
    Json j;
    j["t"] = s.t;
    j["m"] = s.m;
    j["G_measure"] = measure(s.G_union);
    Json slots = Json::array();
    for (const auto& sl : s.slots) {
        Json o;
        o["G_measure"] = measure(sl.G);
        o["good_l1"] = l1_norm(sl.good);
        o["bad_l1"] = l1_norm(sl.bad);
        o["cubes"] = cubes_to_json(sl.cubes);
        o["weights"] = sl.weights;
        o["piece_l1"] = sl.piece_l1;
        o["remainder_cells"] = sl.remainder.count();
        o["resolution_insufficient"] = sl.resolution_insufficient;
        o["mass_bound_worst"] = sl.mass_bound_worst;
        slots.push_back(std::move(o));
    }
    j["slots"] = std::move(slots);
    return j;
}

// ---------------------------------------------------------------------------
// Disjointified ball systems with measure-targeted radii.
// ---------------------------------------------------------------------------

struct BallPiece {
    Point center;
    double radius = 0.0;
    double weight = 0.0;          // a_{i,j} driving the target measure
    double target_measure = 0.0;  // a_{i,j} t^(-1/m)
    CellSet cells;                // E_{i,j} (or E*_{i,j} in the doubled list)
    int sign = 1;                 // carried by callers that split signed measures
};

struct BallSlot {
    std::vector<BallPiece> pieces;   // E_{i,j}
    std::vector<BallPiece> doubled;  // E*_{i,j}: radius 2 r_{i,j}, disjointified
    CellSet E;
    CellSet Estar;
};

struct BallSystem {
    double t = 0.0;
    int m = 0;
    GridSpec grid;
    std::vector<BallSlot> slots;
    CellSet Estar_union;
};

namespace detail {

inline std::int64_t ball_fresh_count(const GridSpec& g, const CellSet& claimed, const Point& x, double r) {
    // cells whose center lies in the open ball and is not yet claimed
    std::vector<std::int64_t> lo(g.n), hi(g.n);
    for (int a = 0; a < g.n; ++a) {
        lo[a] = std::max<std::int64_t>(g.lo[a], static_cast<std::int64_t>(std::floor((x[a] - r) / g.h)) - 1);
        hi[a] = std::min<std::int64_t>(g.hi[a] - 1, static_cast<std::int64_t>(std::floor((x[a] + r) / g.h)) + 1);
        if (lo[a] > hi[a]) return 0;
    }
    std::int64_t cnt = 0;
    CellIndex z(lo.begin(), lo.end());
    const double r2 = r * r;
    while (true) {
        double d2 = 0.0;
        for (int a = 0; a < g.n; ++a) d2 += sq((static_cast<double>(z[a]) + 0.5) * g.h - x[a]);
        if (d2 < r2 && !claimed.contains(g.flatten(z))) ++cnt;
        int a = g.n - 1;
        while (a >= 0) {
            if (++z[a] <= hi[a]) break;
            z[a] = lo[a];
            --a;
        }
        if (a < 0) break;
    }
    return cnt;
}

inline void ball_claim(const GridSpec& g, CellSet& claimed, CellSet& piece, const Point& x, double r) {
    std::vector<std::int64_t> lo(g.n), hi(g.n);
    for (int a = 0; a < g.n; ++a) {
        lo[a] = std::max<std::int64_t>(g.lo[a], static_cast<std::int64_t>(std::floor((x[a] - r) / g.h)) - 1);
        hi[a] = std::min<std::int64_t>(g.hi[a] - 1, static_cast<std::int64_t>(std::floor((x[a] + r) / g.h)) + 1);
        if (lo[a] > hi[a]) return;
    }
    CellIndex z(lo.begin(), lo.end());
    const double r2 = r * r;
    while (true) {
        double d2 = 0.0;
        for (int a = 0; a < g.n; ++a) d2 += sq((static_cast<double>(z[a]) + 0.5) * g.h - x[a]);
        const std::int64_t flat = g.flatten(z);
        if (d2 < r2 && !claimed.contains(flat)) {
            claimed.insert(flat);
            piece.insert(flat);
        }
        int a = g.n - 1;
        while (a >= 0) {
            if (++z[a] <= hi[a]) break;
            z[a] = lo[a];
            --a;
        }
        if (a < 0) break;
    }
}

/// Monotone bisection: smallest radius whose fresh-cell count reaches `target_cells`,
/// refined until the bracket is below one cell of measure.
inline double solve_radius(const GridSpec& g, const CellSet& claimed, const Point& x, std::int64_t target_cells,
                           const std::string& who) {
    Box ext = g.extent_box();
    double rmax = 0.0;
    for (int a = 0; a < g.n; ++a) rmax += sq(std::max(std::fabs(x[a] - ext.lo[a]), std::fabs(ext.hi[a] - x[a])));
    rmax = std::sqrt(rmax) + g.h;
    if (ball_fresh_count(g, claimed, x, rmax) < target_cells)
        throw evaluator_error("build_ball_system: target measure exceeds available extent-box room for " + who);
    double lo = 0.0, hi = rmax;
    while (hi - lo > 1e-13 * rmax) {
        const double mid = 0.5 * (lo + hi);
        if (ball_fresh_count(g, claimed, x, mid) >= target_cells)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

} // namespace detail

/// The disjointified ball system: per slot, balls around the atoms in input
/// order, each radius chosen so the fresh cells measure a_{i,j} t^(-1/m);
/// doubled-radius analogues are disjointified the same way.
inline BallSystem build_ball_system(const std::vector<AtomicMeasure>& nus, double t, int m, const GridSpec& grid) {
    if (!(t > 0.0)) throw config_error("build_ball_system: t must be positive");
    if (m < 1 || nus.empty() || static_cast<int>(nus.size()) > m)
        throw config_error("build_ball_system: need between 1 and m measures");
    BallSystem sys;
    sys.t = t;
    sys.m = m;
    sys.grid = grid;
    sys.Estar_union = CellSet(grid);
    const double tpow = std::pow(t, -1.0 / m);
    const Box ext = grid.extent_box();

    for (std::size_t i = 0; i < nus.size(); ++i) {
        BallSlot slot;
        CellSet claimed(grid), claimed_star(grid);
        int j = 0;
        for (const auto& atom : nus[i].atoms()) {
            ++j;
            const std::string who = "atom (" + std::to_string(i + 1) + "," + std::to_string(j) + ")";
            if (!(atom.weight > 0.0))
                throw config_error("build_ball_system: nonpositive weight at " + who);
            if (!ext.contains(atom.x))
                throw config_error("build_ball_system: atom outside the extent box at " + who);
            const double target = atom.weight * tpow;
            const std::int64_t target_cells =
                static_cast<std::int64_t>(std::llround(target / grid.cell_measure()));
            BallPiece piece;
            piece.center = atom.x;
            piece.weight = atom.weight;
            piece.target_measure = target;
            piece.cells = CellSet(grid);
            // The fresh-cell count is a step function of r; report the midpoint of
            // the radius step that realizes the target.
            const std::int64_t want = std::max<std::int64_t>(target_cells, 1);
            const double r_inf = detail::solve_radius(grid, claimed, atom.x, want, who);
            double r_sup;
            try {
                r_sup = detail::solve_radius(grid, claimed, atom.x, want + 1, who);
            } catch (const evaluator_error&) {
                r_sup = r_inf + grid.h;
            }
            piece.radius = 0.5 * (r_inf + r_sup);
            detail::ball_claim(grid, claimed, piece.cells, atom.x, piece.radius);

            BallPiece dpiece;
            dpiece.center = atom.x;
            dpiece.radius = 2.0 * piece.radius;
            dpiece.weight = atom.weight;
            dpiece.target_measure = target;
            dpiece.cells = CellSet(grid);
            detail::ball_claim(grid, claimed_star, dpiece.cells, atom.x, dpiece.radius);

            slot.pieces.push_back(std::move(piece));
            slot.doubled.push_back(std::move(dpiece));
        }
        slot.E = claimed;
        slot.Estar = claimed_star;
        sys.Estar_union = sys.Estar_union.unite(claimed_star);
        sys.slots.push_back(std::move(slot));
    }
    return sys;
}

inline Json to_json(const BallSystem& sys) {
    Json j;
    j["t"] = sys.t;
    j["m"] = sys.m;
    j["Estar_measure"] = measure(sys.Estar_union);
    Json slots = Json::array();
    for (const auto& sl : sys.slots) {
        Json o;
        Json pieces = Json::array();
        for (const auto& p : sl.pieces) {
            Json pj;
            pj["center"] = p.center;
            pj["radius"] = p.radius;
            pj["weight"] = p.weight;
            pj["target_measure"] = p.target_measure;
            pj["measure"] = measure(p.cells);
            pieces.push_back(std::move(pj));
        }
        o["pieces"] = std::move(pieces);
        o["E_measure"] = measure(sl.E);
        o["Estar_measure"] = measure(sl.Estar);
        slots.push_back(std::move(o));
    }
    j["slots"] = std::move(slots);
    return j;
}

/// Indicator function t^(1/m) 1_{E_i} on the system's grid.
inline GridFunction scaled_indicator(const BallSystem& sys, int slot) {
    const GridSpec& g = sys.grid;
    const double height = std::pow(sys.t, 1.0 / sys.m);
    std::vector<double> v(g.cell_count(), 0.0);
    for (const auto& p : sys.slots[slot].pieces)
        for (auto c : p.cells.cells()) v[c] = height * p.sign;
    return GridFunction(g, std::move(v));
}

/// Arguments of the interpolating sequence sigma_k: the first k measure slots
/// replaced by t^(1/m) 1_{E_i}, the rest left as given.
struct SigmaArguments {
    std::vector<GridFunction> indicators;     // slots 1..k
    std::vector<AtomicMeasure> measures;      // slots k+1..l
    std::vector<GridFunction> functions;      // slots l+1..m

    std::vector<SlotArg> slots() const {
        std::vector<SlotArg> out;
        for (const auto& f : indicators) out.push_back(SlotArg::function(f));
        for (const auto& nu : measures) out.push_back(SlotArg::measure(nu));
        for (const auto& f : functions) out.push_back(SlotArg::function(f));
        return out;
    }
};

inline SigmaArguments sigma_inputs(const BallSystem& sys, const std::vector<AtomicMeasure>& nus,
                                   const std::vector<GridFunction>& fs, int k) {
    const int l = static_cast<int>(nus.size());
    if (k < 0 || k > l) throw config_error("sigma_inputs: k must lie in [0, l]");
    SigmaArguments out;
    for (int i = 0; i < k; ++i) out.indicators.push_back(scaled_indicator(sys, i));
    for (int i = k; i < l; ++i) out.measures.push_back(nus[i]);
    out.functions = fs;
    return out;
}

} // namespace mcz
