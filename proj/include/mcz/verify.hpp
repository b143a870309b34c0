#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcz/apply.hpp"
#include "mcz/decomposition.hpp"
#include "mcz/dyadic.hpp"
#include "mcz/errors.hpp"
#include "mcz/grid.hpp"
#include "mcz/kernel.hpp"
#include "mcz/maximal.hpp"
#include "mcz/measure.hpp"
#include "mcz/parallel.hpp"
#include "mcz/serialize.hpp"

namespace mcz {

// ---------------------------------------------------------------------------
// Inequality ledger
// ---------------------------------------------------------------------------

namespace anchor {
inline constexpr const char* g_inf = "||g_i||_inf <= t^(1/m)";
inline constexpr const char* G_bound = "|G| <= m ||M|| t^(-1/m)";
inline constexpr const char* e1_chebyshev = "|E_1| <= 4 t^(-2/m) int |T(g_1,...,g_m)|^(2/m)";
inline constexpr const char* e1_endpoint = "|E_1| <= B_1 t^(-1/m)";
inline constexpr const char* union_bound = "|{|T(f_1,...,f_m)| > t}| <= sum_s |E_s|";
inline constexpr const char* mass_bound = "||b_{i,j}||_1 <= (17 sqrt(n))^n t^(1/m) |Q_{i,j}|";
inline constexpr const char* cancellation_t1 = "(b_{i,j} dm - nu_{i,j})(Q_{i,j}) = 0";
inline constexpr const char* whitney_window = "2 diam(Q_{i,j}) <= d(Q_{i,j}, comp G_i) <= 8 diam(Q_{i,j})";
inline constexpr const char* sk_bound = "|S_k| <= (m+1) 2^(m+1) (17 sqrt(n))^(nl) * L";
inline constexpr const char* splitting_chain = "|E_s~| <= |G| + sum_k |S_k| + |S|";
inline constexpr const char* lemma1 = "sum prod |S_{i,j}| int sup int |K - K(c)| <= A_1 sum_i |Omega_i|";
inline constexpr const char* estar = "|E*| <= m 2^n t^(-1/m)";
inline constexpr const char* piece_measure = "|E_{i,j}| = a_{i,j} t^(-1/m)";
inline constexpr const char* slot_measure = "|E_i| = ||nu_i|| t^(-1/m)";
inline constexpr const char* doubling = "|E_i*| <= 2^n |E_i|";
inline constexpr const char* disjoint = "E_{i,j} have disjoint interiors";
inline constexpr const char* cancellation_t2 = "(nu_{k,j} - t^(1/m) 1_{E_{k,j}} dm)(E_k) = 0";
inline constexpr const char* p_bound = "|P| <= (m+1)^(2/m) ||T||^(2/m) t^(-1/m)";
inline constexpr const char* pk_bound = "|P_k| <= 2 (m+1) * L";
inline constexpr const char* sigma_chain = "|{|sigma_0| > t}| <= l |E*| + sum_k |P_k| + |P|";
} // namespace anchor

struct LedgerEntry {
    std::string name;
    std::string anchor;
    double lhs = 0.0;
    double rhs = 0.0;
    double tol = 0.0;
    bool asserted = true;
    bool pass = true;
};

class InequalityLedger {
public:
    /// pass iff lhs <= rhs * (1 + tol) (plus an absolute epsilon at zero).
    void add(std::string name, std::string anchor, double lhs, double rhs, double tol, bool asserted = true) {
        LedgerEntry e;
        e.name = std::move(name);
        e.anchor = std::move(anchor);
        e.lhs = lhs;
        e.rhs = rhs;
        e.tol = tol;
        e.asserted = asserted;
        e.pass = !asserted || lhs <= rhs * (1.0 + tol) + 1e-300;
        entries_.push_back(std::move(e));
    }

    void record(const std::string& name, double value) {
        for (auto& kv : constants_)
            if (kv.first == name) {
                kv.second = value;
                return;
            }
        constants_.emplace_back(name, value);
    }

    std::optional<double> constant(const std::string& name) const {
        for (const auto& kv : constants_)
            if (kv.first == name) return kv.second;
        return std::nullopt;
    }

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    std::vector<LedgerEntry>& entries() { return entries_; }

    bool all_pass() const {
        for (const auto& e : entries_)
            if (e.asserted && !e.pass) return false;
        return true;
    }

    Json& provenance() { return provenance_; }
    const Json& provenance() const { return provenance_; }
    Json& extra() { return extra_; }
    const Json& extra() const { return extra_; }

    Json to_json() const {
        Json j;
        Json arr = Json::array();
        for (const auto& e : entries_) {
            Json o;
            o["name"] = e.name;
            o["anchor"] = e.anchor;
            o["lhs"] = e.lhs;
            o["rhs"] = e.rhs;
            o["pass"] = e.pass;
            o["tol"] = e.tol;
            o["asserted"] = e.asserted;
            arr.push_back(std::move(o));
        }
        j["entries"] = std::move(arr);
        Json c;
        for (const auto& kv : constants_) c[kv.first] = kv.second;
        j["constants"] = std::move(c);
        j["provenance"] = provenance_;
        if (!extra_.is_null()) j["extra"] = extra_;
        return j;
    }

private:
    std::vector<LedgerEntry> entries_;
    std::vector<std::pair<std::string, double>> constants_;
    Json provenance_;
    Json extra_;
};

// ---------------------------------------------------------------------------
// Distribution function and weak quasinorms
// ---------------------------------------------------------------------------

inline std::vector<std::pair<double, double>> distribution_function(const GridFunction& f,
                                                                    const std::vector<double>& tgrid) {
    for (std::size_t i = 0; i + 1 < tgrid.size(); ++i)
        if (!(tgrid[i] < tgrid[i + 1])) throw config_error("distribution_function: t-grid must be strictly increasing");
    std::vector<std::pair<double, double>> out;
    out.reserve(tgrid.size());
    for (double t : tgrid) out.emplace_back(t, measure(superlevel_set(f, t)));
    return out;
}

inline std::string distribution_csv(const std::vector<std::pair<double, double>>& dist) {
    std::string out = "t,measure\n";
    for (const auto& [t, mu] : dist) out += to_csv_row({format_double(t), format_double(mu)});
    return out;
}

/// sup over the sampled thresholds of t * |{|F| > t}|^(1/p); p = 1/m gives the
/// weak-L^(1/m) quantity sup_t t |{|F| > t}|^m.
inline double weak_quasinorm(const GridFunction& f, double p, const std::vector<double>& tgrid) {
    if (!(p > 0.0)) throw config_error("weak_quasinorm: p must be positive");
    double best = 0.0;
    for (const auto& [t, mu] : distribution_function(f, tgrid)) best = std::max(best, t * std::pow(mu, 1.0 / p));
    return best;
}

/// Default threshold grid: log-uniform over the value range of |F|.
inline std::vector<double> make_log_tgrid(const GridFunction& f, int count = 64) {
    double lo = 0.0, hi = 0.0;
    for (double v : f.values()) {
        const double a = std::fabs(v);
        if (a > 0.0 && (lo == 0.0 || a < lo)) lo = a;
        hi = std::max(hi, a);
    }
    if (hi == 0.0) throw config_error("make_log_tgrid: the function vanishes identically");
    return log_spaced(lo, hi, count);
}

// ---------------------------------------------------------------------------
// Lemma-1 style geometric Hormander sum
// ---------------------------------------------------------------------------

/// One covering set S_{i,j} with its comparison point (cube center or
/// generating atom) and, for ball pieces, the covering radius.
struct ProbeSet {
    CellSet cells;
    Point center;
    double radius = 0.0;
    bool is_cube = false;
    Box bounds;  // cube box, or the covering ball's bounding box

    static ProbeSet from_cube(const GridSpec& g, const DyadicCube& q) {
        ProbeSet s;
        s.cells = cube_cellset(g, q);
        s.center = q.center();
        s.radius = 0.5 * q.diam();
        s.is_cube = true;
        s.bounds = q.box();
        return s;
    }

    static ProbeSet from_ball_piece(const BallPiece& p) {
        ProbeSet s;
        s.cells = p.cells;
        s.center = p.center;
        s.radius = p.radius;
        s.is_cube = false;
        s.bounds.lo.resize(p.center.size());
        s.bounds.hi.resize(p.center.size());
        for (std::size_t a = 0; a < p.center.size(); ++a) {
            s.bounds.lo[a] = p.center[a] - p.radius;
            s.bounds.hi[a] = p.center[a] + p.radius;
        }
        return s;
    }
};

struct SetCollection {
    std::vector<ProbeSet> sets;
    CellSet omega;  // union of the sets

    static SetCollection from_cubes(const GridSpec& g, const std::vector<DyadicCube>& cubes) {
        SetCollection c;
        c.omega = CellSet(g);
        for (const auto& q : cubes) {
            c.sets.push_back(ProbeSet::from_cube(g, q));
            c.omega = c.omega.unite(c.sets.back().cells);
        }
        return c;
    }

    static SetCollection from_ball_slot(const BallSlot& slot) {
        SetCollection c;
        c.omega = slot.E;
        for (const auto& p : slot.pieces) c.sets.push_back(ProbeSet::from_ball_piece(p));
        return c;
    }
};

struct Lemma1Config {
    double tuple_budget = 1e9;
    /// Midpoint stride, in cells, for the remaining-variable quadrature when
    /// l = m-1; 1 uses every cell.
    int rest_stride = 1;
};

struct Lemma1Result {
    double sum = 0.0;             // sum over tuples of prod |S| * int max-probe |K - K(c)|
    double ratio = 0.0;           // sum / sum_i |Omega_i|
    std::int64_t skipped_probes = 0;
};

namespace detail {

/// Probe lattice: corners, center, and face midpoints for cubes; center, axis
/// extremes and diagonal points for ball pieces, filtered to the piece's cells.
inline std::vector<Point> probe_lattice(const ProbeSet& s, const GridSpec& g) {
    std::vector<Point> probes;
    const int n = static_cast<int>(s.center.size());
    if (s.is_cube) {
        for (int bits = 0; bits < (1 << n); ++bits) {
            Point p(n);
            for (int a = 0; a < n; ++a) p[a] = (bits >> a & 1) ? s.bounds.hi[a] : s.bounds.lo[a];
            probes.push_back(std::move(p));
        }
        probes.push_back(s.center);
        for (int a = 0; a < n; ++a)
            for (double side : {s.bounds.lo[a], s.bounds.hi[a]}) {
                Point p = s.center;
                p[a] = side;
                probes.push_back(std::move(p));
            }
        return probes;
    }
    std::vector<Point> lattice;
    lattice.push_back(s.center);
    for (int a = 0; a < n; ++a)
        for (double dir : {-1.0, 1.0}) {
            Point p = s.center;
            p[a] += dir * s.radius;
            lattice.push_back(std::move(p));
        }
    const double diag = s.radius / std::sqrt(static_cast<double>(n));
    for (int bits = 0; bits < (1 << n) && n > 1; ++bits) {
        Point p = s.center;
        for (int a = 0; a < n; ++a) p[a] += ((bits >> a & 1) ? 1.0 : -1.0) * diag;
        lattice.push_back(std::move(p));
    }
    for (const auto& p : lattice) {
        // sup over the closure: accept boundary points by nudging toward the center
        Point q = p;
        for (int a = 0; a < n; ++a) q[a] += (s.center[a] - p[a]) * 1e-9;
        if (s.cells.contains(g.cell_of(p)) || s.cells.contains(g.cell_of(q))) probes.push_back(p);
    }
    if (probes.empty()) {
        // disjointification removed every lattice point: fall back to cell centers
        auto cs = s.cells.cells();
        if (!cs.empty()) {
            probes.push_back(g.cell_center(g.unflatten(cs.front())));
            probes.push_back(g.cell_center(g.unflatten(cs.back())));
            double best = std::numeric_limits<double>::infinity();
            std::int64_t nearest = cs.front();
            for (auto c : cs) {
                const double d = dist2_points(g.cell_center(g.unflatten(c)), s.center);
                if (d < best) {
                    best = d;
                    nearest = c;
                }
            }
            probes.push_back(g.cell_center(g.unflatten(nearest)));
        }
    }
    return probes;
}

} // namespace detail

/// The summed kernel-difference estimate: over tuples of one set per
/// collection, prod_i |S_{i,j_i}| times the outer-domain x-integral (and the
/// remaining-variable y-integral when l = m-1, n = 1) of the maximum over the
/// probe lattice of |K(x, probes, y_rest) - K(x, centers, y_rest)|. The probe
/// maximum sits inside the integrals, so the returned sum upper-bounds the
/// sup-outside form while the finite lattice lower-bounds the true supremum.
inline Lemma1Result lemma1_sum(const std::vector<SetCollection>& collections, const KernelSpec& kernel,
                               const CellSet& outer, const Lemma1Config& cfg = {}) {
    const int l = static_cast<int>(collections.size());
    const int m = kernel.m;
    const int n = kernel.n;
    if (l < 1) throw config_error("lemma1_sum: need at least one collection");
    if (!(l == m || (l == m - 1 && n == 1)))
        throw config_error("lemma1_sum: supported configurations are l = m, or l = m-1 with n = 1");
    const GridSpec& g = outer.grid();

    // flatten tuple space
    std::vector<std::size_t> sizes(l);
    double tuples = 1.0;
    for (int i = 0; i < l; ++i) {
        if (collections[i].sets.empty()) throw config_error("lemma1_sum: empty collection");
        sizes[i] = collections[i].sets.size();
        tuples *= static_cast<double>(sizes[i]);
    }
    std::vector<std::vector<Point>> probes(l);
    double probe_tuples = 1.0;
    std::vector<double> set_measures;  // per collection, per set
    for (int i = 0; i < l; ++i) {
        double worst = 1.0;
        for (const auto& s : collections[i].sets) {
            auto ps = detail::probe_lattice(s, g);
            if (ps.empty()) throw config_error("lemma1_sum: a set produced no probe points");
            worst = std::max(worst, static_cast<double>(ps.size()));
        }
        probe_tuples *= worst;
    }
    const std::int64_t outer_cells = outer.count();
    const double rest_cells =
        (l == m) ? 1.0 : static_cast<double>(g.cell_count()) / std::max(1, cfg.rest_stride);
    if (static_cast<double>(outer_cells) * tuples * probe_tuples * rest_cells > cfg.tuple_budget)
        throw budget_error("lemma1_sum: work exceeds the tuple budget");

    // precompute per-set probe lists; flatten the set tuples once
    std::vector<std::vector<std::vector<Point>>> probe_pts(l);
    for (int i = 0; i < l; ++i)
        for (const auto& s : collections[i].sets) probe_pts[i].push_back(detail::probe_lattice(s, g));

    std::int64_t tuple_count = 1;
    for (int i = 0; i < l; ++i) tuple_count *= static_cast<std::int64_t>(sizes[i]);
    std::vector<std::vector<std::size_t>> tuple_idx(tuple_count, std::vector<std::size_t>(l));
    std::vector<double> tuple_weight(tuple_count, 1.0);
    for (std::int64_t ti = 0; ti < tuple_count; ++ti) {
        std::int64_t rem = ti;
        for (int i = l - 1; i >= 0; --i) {
            tuple_idx[ti][i] = static_cast<std::size_t>(rem % sizes[i]);
            rem /= static_cast<std::int64_t>(sizes[i]);
        }
        for (int i = 0; i < l; ++i) tuple_weight[ti] *= measure(collections[i].sets[tuple_idx[ti][i]].cells);
    }

    // rest-variable sample points (y_{l+1..m}); a single empty sample when l = m
    const int stride = std::max(1, cfg.rest_stride);
    std::vector<Point> rest_pts;
    if (l == m) {
        rest_pts.push_back({});
    } else {
        for (std::int64_t c = stride / 2; c < g.cell_count(); c += stride)
            rest_pts.push_back(g.cell_center(g.unflatten(c)));
    }
    const auto outer_list = outer.cells();
    const double hn = g.cell_measure();
    const double rest_weight = (l == m) ? 1.0 : hn * stride;

    std::vector<double> per_x(outer_list.size(), 0.0);
    std::vector<std::int64_t> skipped(outer_list.size(), 0);
    std::vector<std::int64_t> evaluated(outer_list.size(), 0);

    parallel_for(static_cast<std::int64_t>(outer_list.size()), [&](std::int64_t xi) {
        const Point x = g.cell_center(g.unflatten(outer_list[xi]));
        std::vector<double> ybuf(static_cast<std::size_t>(m) * n);
        std::vector<std::size_t> pc(l);
        double acc = 0.0;
        std::int64_t skip = 0, evals = 0;
        for (std::int64_t ti = 0; ti < tuple_count; ++ti) {
            const auto& idx = tuple_idx[ti];
            std::int64_t probe_total = 1;
            for (int i = 0; i < l; ++i) probe_total *= static_cast<std::int64_t>(probe_pts[i][idx[i]].size());
            double integral = 0.0;
            for (const auto& rp : rest_pts) {
                for (int a = 0; a < n * (m - l); ++a) ybuf[l * n + a] = rp[a];
                for (int i = 0; i < l; ++i)
                    for (int a = 0; a < n; ++a) ybuf[i * n + a] = collections[i].sets[idx[i]].center[a];
                const double base = kernel(x.data(), ybuf.data());
                if (!std::isfinite(base)) {
                    ++skip;
                    continue;
                }
                double best = 0.0;
                for (std::int64_t pi = 0; pi < probe_total; ++pi) {
                    std::int64_t rem = pi;
                    for (int i = l - 1; i >= 0; --i) {
                        pc[i] = static_cast<std::size_t>(rem % probe_pts[i][idx[i]].size());
                        rem /= static_cast<std::int64_t>(probe_pts[i][idx[i]].size());
                    }
                    for (int i = 0; i < l; ++i) {
                        const Point& pp = probe_pts[i][idx[i]][pc[i]];
                        for (int a = 0; a < n; ++a) ybuf[i * n + a] = pp[a];
                    }
                    const double v = kernel(x.data(), ybuf.data());
                    if (!std::isfinite(v)) {
                        ++skip;
                        continue;
                    }
                    ++evals;
                    best = std::max(best, std::fabs(v - base));
                }
                integral += best * rest_weight;
            }
            acc += tuple_weight[ti] * integral;
        }
        per_x[xi] = acc * hn;
        skipped[xi] = skip;
        evaluated[xi] = evals;
    });

    Lemma1Result res;
    std::int64_t total_evals = 0;
    for (std::size_t i = 0; i < per_x.size(); ++i) {
        res.sum += per_x[i];
        res.skipped_probes += skipped[i];
        total_evals += evaluated[i];
    }
    if (total_evals == 0 && res.skipped_probes > 0)
        throw evaluator_error("lemma1_sum: every probe hit a kernel singularity");
    double omega_total = 0.0;
    for (const auto& c : collections) omega_total += measure(c.omega);
    res.ratio = omega_total > 0.0 ? res.sum / omega_total : 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Theorem-1 replay: good/bad splitting, surrogate measures, S_k and S terms
// ---------------------------------------------------------------------------

struct Theorem1Config {
    TruncationPolicy policy{};
    double tuple_budget = 1e9;
    std::vector<int> N_list{4, 16, 64};
    bool allow_unbounded_kernel = false;
    std::uint64_t seed = 20150621;
    int lemma_rest_stride = 4;  // remaining-variable quadrature stride in lemma1_sum
};

namespace detail {

inline std::string tkey(std::size_t ti) { return "t" + std::to_string(ti); }

inline double measure_over(const std::vector<double>& vals, const std::vector<std::int64_t>& flats,
                           const std::vector<std::uint8_t>* domain, double threshold, double cell_measure) {
    std::int64_t cnt = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (domain && !(*domain)[flats[i]]) continue;
        if (std::fabs(vals[i]) > threshold) ++cnt;
    }
    return static_cast<double>(cnt) * cell_measure;
}

inline void record_kernel_estimates(InequalityLedger& ledger, const KernelSpec& kernel, std::uint64_t seed) {
    SamplerConfig sc;
    sc.seed = seed;
    sc.samples = 64;
    try {
        ledger.record("kernel_CK_est", check_size(kernel, sc));
        auto rep = check_smoothness(kernel, sc);
        if (!rep.zero_kernel) ledger.record("kernel_delta_est", rep.delta());
    } catch (const evaluator_error&) {
        // estimates are informational; evaluation problems surface elsewhere
    }
    if (kernel.operator_norm) ledger.record("T_norm_metadata", *kernel.operator_norm);
}

} // namespace detail

inline InequalityLedger theorem1_ledger(const std::vector<GridFunction>& fs, const std::vector<double>& tgrid,
                                        const KernelSpec& kernel, const Theorem1Config& cfg = {}) {
    const int m = kernel.m;
    const int n = kernel.n;
    if (static_cast<int>(fs.size()) != m) throw config_error("theorem1_ledger: need one input per kernel slot");
    if (tgrid.empty()) throw config_error("theorem1_ledger: empty t-grid");
    for (std::size_t i = 0; i + 1 < tgrid.size(); ++i)
        if (!(tgrid[i] < tgrid[i + 1])) throw config_error("theorem1_ledger: t-grid must be strictly increasing");
    const GridSpec& g = fs.front().grid();
    if (g.n != n) throw config_error("theorem1_ledger: grid dimension must match the kernel");
    for (const auto& f : fs)
        if (f.grid() != g) throw config_error("theorem1_ledger: inputs must share one grid");
    if (!kernel.is_known_bounded && !cfg.allow_unbounded_kernel)
        throw config_error("theorem1_ledger: kernel has no boundedness metadata (set the override to proceed)");

    InequalityLedger ledger;
    Box ext = g.extent_box();
    ledger.provenance()["seed"] = cfg.seed;
    ledger.provenance()["h"] = g.h;
    ledger.provenance()["box"] = Json::array({ext.lo, ext.hi});
    ledger.provenance()["eps"] = cfg.policy.eps_cells;
    ledger.provenance()["N"] = cfg.N_list;
    ledger.provenance()["kernel"] = kernel.name();
    ledger.provenance()["m"] = m;

    detail::record_kernel_estimates(ledger, kernel, cfg.seed);

    // normalize to unit L^1 norms, recording the scales
    std::vector<GridFunction> fh;
    Json scales = Json::array();
    bool zero_input = false;
    for (const auto& f : fs) {
        const double norm = l1_norm(f);
        scales.push_back(norm);
        if (norm == 0.0)
            zero_input = true;
        else
            fh.push_back(scale(f, 1.0 / norm));
    }
    ledger.provenance()["input_l1_norms"] = std::move(scales);
    if (zero_input) {
        ledger.add("zero_input.union_bound", anchor::union_bound, 0.0, 0.0, 0.0);
        ledger.record("A2_emp_pow_1_over_m", 0.0);
        return ledger;
    }

    const auto targets = cell_center_targets(g);
    const double hn = g.cell_measure();

    // T(f_1,...,f_m) once; empirical weak constant over the t-grid
    auto absTf = GridFunction(g, [&] {
        auto vals = apply_functions(kernel, fh, targets, cfg.policy, cfg.tuple_budget).values;
        for (auto& v : vals) v = std::fabs(v);
        return vals;
    }());
    double a2pow = 0.0;
    for (double t : tgrid) a2pow = std::max(a2pow, std::pow(t, 1.0 / m) * measure(superlevel_set(absTf, t)));
    ledger.record("A2_emp_pow_1_over_m", a2pow);

    // maximal functions once; empirical weak (1,1) constant on the derived thresholds
    std::vector<GridFunction> Mf;
    for (const auto& f : fh) Mf.push_back(maximal_function(f));
    std::vector<double> sgrid;
    for (double t : tgrid) sgrid.push_back(std::pow(t, 1.0 / m));
    double mnorm = 0.0;
    for (const auto& mf : Mf)
        for (double s : sgrid) mnorm = std::max(mnorm, s * measure(superlevel_set(mf, s)));
    ledger.record("M_weak_emp", mnorm);

    const double b1 = kernel.operator_norm ? 4.0 * std::pow(*kernel.operator_norm, 2.0 / m)
                                           : std::numeric_limits<double>::quiet_NaN();
    if (kernel.operator_norm) ledger.record("B1", b1);

    const auto patterns = enumerate_splittings(m);
    double a1_fitted = 0.0;
    bool a1_seen = false;
    double a3_from_s = 0.0;
    Json s_weak = Json::object();

    for (std::size_t ti = 0; ti < tgrid.size(); ++ti) {
        const double t = tgrid[ti];
        const double tpow = std::pow(t, 1.0 / m);
        const std::string key = detail::tkey(ti);
        GoodBadSplit sp = split(fh, t, &Mf);

        // ||g_i||_inf <= t^(1/m), exact for cell-aligned data
        for (int i = 0; i < m; ++i)
            ledger.add(key + ".g_inf." + std::to_string(i + 1), anchor::g_inf, linf_norm(sp.slots[i].good), tpow,
                       1e-12);

        ledger.add(key + ".G_bound", anchor::G_bound, measure(sp.G_union), m * mnorm * std::pow(t, -1.0 / m), 1e-9);

        for (int i = 0; i < m; ++i) {
            const auto& sl = sp.slots[i];
            if (sl.cubes.empty()) continue;
            ledger.add(key + ".mass_bound." + std::to_string(i + 1), anchor::mass_bound, sl.mass_bound_worst, 1.0,
                       1e-12);
            // surrogate weights were defined as the piece integrals; re-check literally
            double worst_cancel = 0.0;
            for (std::size_t j = 0; j < sl.cubes.size(); ++j) {
                double integral = 0.0;
                for (auto c : cube_cells(g, sl.cubes[j])) integral += sl.bad.at(c);
                worst_cancel = std::max(worst_cancel, std::fabs(integral * hn - sl.weights[j]));
            }
            ledger.add(key + ".cancellation." + std::to_string(i + 1), anchor::cancellation_t1, worst_cancel, 0.0,
                       0.0);
            // the Whitney window, in exact squared form
            DistanceOracle oracle(sl.G);
            double worst_low = 0.0, worst_high = 0.0;
            for (const auto& q : sl.cubes) {
                const double d2 = oracle.dist2(q.box());
                worst_low = std::max(worst_low, 4.0 * q.diam2() / d2);
                worst_high = std::max(worst_high, d2 / (64.0 * q.diam2()));
            }
            ledger.add(key + ".whitney_low." + std::to_string(i + 1), anchor::whitney_window, worst_low, 1.0, 0.0);
            ledger.add(key + ".whitney_high." + std::to_string(i + 1), anchor::whitney_window, worst_high, 1.0, 0.0);
        }

        // all-good term: Chebyshev chain endpoint
        {
            std::vector<GridFunction> goods;
            for (const auto& sl : sp.slots) goods.push_back(sl.good);
            auto vals = apply_functions(kernel, goods, targets, cfg.policy, cfg.tuple_budget).values;
            const double thr = t / std::pow(2.0, m);
            std::int64_t cnt = 0;
            double cheb = 0.0;
            for (double v : vals) {
                if (std::fabs(v) > thr) ++cnt;
                cheb += std::pow(std::fabs(v), 2.0 / m);
            }
            const double e1 = static_cast<double>(cnt) * hn;
            ledger.add(key + ".e1_chebyshev", anchor::e1_chebyshev, e1,
                       4.0 * std::pow(t, -2.0 / m) * cheb * hn, 1e-9);
            if (kernel.operator_norm)
                ledger.add(key + ".e1_endpoint", anchor::e1_endpoint, e1, b1 * std::pow(t, -1.0 / m), 0.0);
        }

        // union bound over the full-b patterns
        {
            const double thr = t / std::pow(2.0, m);
            double sum_es = 0.0;
            for (const auto& pat : patterns) {
                std::vector<SlotArg> slots;
                for (int i = 0; i < m; ++i)
                    slots.push_back(SlotArg::function(pat[i] == 'b' ? sp.slots[i].bad : sp.slots[i].good));
                auto vals = apply_slots(kernel, slots, targets, cfg.policy, cfg.tuple_budget).values;
                std::int64_t cnt = 0;
                for (double v : vals)
                    if (std::fabs(v) > thr) ++cnt;
                sum_es += static_cast<double>(cnt) * hn;
            }
            ledger.add(key + ".union_bound", anchor::union_bound, measure(superlevel_set(absTf, t)),
                       sum_es + 2.0 * hn, 1e-9);
        }

        // mixed patterns with truncated bad parts and surrogate measures
        for (const auto& pat : patterns) {
            std::vector<int> bad_slots;
            for (int i = 0; i < m; ++i)
                if (pat[i] == 'b') bad_slots.push_back(i);
            const int l = static_cast<int>(bad_slots.size());
            if (l == 0) continue;
            bool have_cubes = true;
            for (int b : bad_slots)
                if (sp.slots[b].cubes.empty()) have_cubes = false;
            if (!have_cubes) continue;  // bad part vanishes: nothing to estimate

            for (int N : cfg.N_list) {
                const std::string pkey = key + "." + pat + ".N" + std::to_string(N);
                std::vector<AtomicMeasure> nuN(m);
                std::vector<GridFunction> bN(m);
                for (int b : bad_slots) {
                    nuN[b] = sp.surrogate(b, N);
                    bN[b] = sp.bad_truncated(b, N);
                }

                // valid targets exclude cells whose center is a surrogate atom
                std::vector<Point> vt;
                std::vector<std::int64_t> vt_flat;
                {
                    CellSet atom_cells(g);
                    for (int b : bad_slots)
                        for (const auto& a : nuN[b].atoms()) {
                            CellIndex z = g.cell_of(a.x);
                            if (g.in_extent(z) && dist2_points(g.cell_center(z), a.x) < 1e-24)
                                atom_cells.insert(z);
                        }
                    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
                        if (atom_cells.contains(c)) continue;
                        vt.push_back(g.cell_center(g.unflatten(c)));
                        vt_flat.push_back(c);
                    }
                }
                const auto& G_mask = sp.G_union.mask();
                std::vector<std::uint8_t> outside_G(G_mask.size());
                for (std::size_t i = 0; i < G_mask.size(); ++i) outside_G[i] = G_mask[i] ? 0 : 1;

                const double thr = t / ((l + 1) * std::pow(2.0, m));

                // E_s with b_i^N in the bad slots (functions only, full grid)
                double meas_es_trunc;
                {
                    std::vector<SlotArg> slots;
                    for (int i = 0; i < m; ++i)
                        slots.push_back(SlotArg::function(pat[i] == 'b' ? bN[i] : sp.slots[i].good));
                    auto vals = apply_slots(kernel, slots, targets, cfg.policy, cfg.tuple_budget).values;
                    std::int64_t cnt = 0;
                    for (double v : vals)
                        if (std::fabs(v) > t / std::pow(2.0, m)) ++cnt;
                    meas_es_trunc = static_cast<double>(cnt) * hn;
                }

                // lemma-1 sum for this pattern's cube collections over box \ G
                std::optional<Lemma1Result> lem;
                {
                    std::vector<SetCollection> colls;
                    for (int b : bad_slots) {
                        std::vector<DyadicCube> cubes(sp.slots[b].cubes.begin(),
                                                      sp.slots[b].cubes.begin() +
                                                          std::min<std::size_t>(N, sp.slots[b].cubes.size()));
                        colls.push_back(SetCollection::from_cubes(g, cubes));
                    }
                    try {
                        Lemma1Config lc;
                        lc.tuple_budget = cfg.tuple_budget;
                        lc.rest_stride = cfg.lemma_rest_stride;
                        lem = lemma1_sum(colls, kernel, sp.G_union.complement(), lc);
                        a1_fitted = std::max(a1_fitted, lem->ratio);
                        a1_seen = true;
                    } catch (const config_error&) {
                        lem.reset();  // unsupported l for this kernel arity
                    }
                }

                // S_k terms, one per bad slot, via slotwise telescoping
                double sum_sk = 0.0;
                for (int kpos = 0; kpos < l; ++kpos) {
                    std::vector<SlotArg> slotsA, slotsB;
                    for (int i = 0; i < m; ++i) {
                        if (pat[i] != 'b') {
                            slotsA.push_back(SlotArg::function(sp.slots[i].good));
                            slotsB.push_back(SlotArg::function(sp.slots[i].good));
                            continue;
                        }
                        const int pos = static_cast<int>(std::find(bad_slots.begin(), bad_slots.end(), i) -
                                                         bad_slots.begin());
                        if (pos < kpos) {
                            slotsA.push_back(SlotArg::measure(nuN[i]));
                            slotsB.push_back(SlotArg::measure(nuN[i]));
                        } else if (pos == kpos) {
                            slotsA.push_back(SlotArg::function(bN[i]));
                            slotsB.push_back(SlotArg::measure(nuN[i]));
                        } else {
                            slotsA.push_back(SlotArg::function(bN[i]));
                            slotsB.push_back(SlotArg::function(bN[i]));
                        }
                    }
                    auto va = apply_slots(kernel, slotsA, vt, cfg.policy, cfg.tuple_budget).values;
                    auto vb = apply_slots(kernel, slotsB, vt, cfg.policy, cfg.tuple_budget).values;
                    for (std::size_t i = 0; i < va.size(); ++i) va[i] -= vb[i];
                    const double meas_sk = detail::measure_over(va, vt_flat, &outside_G, thr, hn);
                    sum_sk += meas_sk;
                    if (lem) {
                        const double rhs = (m + 1) * std::pow(2.0, m + 1) *
                                           std::pow(mass_bound_factor(n), l) * 2.0 * lem->sum;
                        ledger.add(pkey + ".S" + std::to_string(kpos + 1), anchor::sk_bound, meas_sk, rhs, 0.0);
                    }
                }

                // S term: surrogate measures in the bad slots, goods elsewhere
                double meas_s;
                {
                    std::vector<SlotArg> slots;
                    for (int i = 0; i < m; ++i)
                        slots.push_back(pat[i] == 'b' ? SlotArg::measure(nuN[i])
                                                      : SlotArg::function(sp.slots[i].good));
                    auto vals = apply_slots(kernel, slots, vt, cfg.policy, cfg.tuple_budget).values;
                    meas_s = detail::measure_over(vals, vt_flat, nullptr, thr, hn);
                    double denom = 1.0;
                    for (int i = 0; i < m; ++i)
                        denom *= pat[i] == 'b' ? nuN[i].total_variation() : l1_norm(sp.slots[i].good);
                    const double ws = denom > 0.0
                                          ? std::pow(thr, 1.0 / m) * meas_s / std::pow(denom, 1.0 / m)
                                          : 0.0;
                    s_weak[pat]["N" + std::to_string(N)][detail::tkey(ti)] = ws;
                    a3_from_s = std::max(a3_from_s, ws);
                }

                ledger.add(pkey + ".splitting_chain", anchor::splitting_chain, meas_es_trunc,
                           measure(sp.G_union) + sum_sk + meas_s + 2.0 * hn, 1e-9);
            }
        }
    }

    if (a1_seen) ledger.record("A1_fitted", a1_fitted);
    ledger.record("A3_emp_from_S", a3_from_s);
    if (a1_seen) {
        const double b2 = m * m * mnorm +
                          a1_fitted * m * m * (m + 1) * std::pow(2.0, m + 1) *
                              std::pow(mass_bound_factor(n), m) * mnorm +
                          2.0 * std::pow(m + 1, 1.0 / m) * a3_from_s;
        ledger.record("B2", b2);
        if (kernel.operator_norm)
            ledger.record("A2_bound", std::pow(b1 + (std::pow(2.0, m) - 1.0) * b2, m));
    }
    ledger.extra()["S_weak"] = std::move(s_weak);
    return ledger;
}

// ---------------------------------------------------------------------------
// Theorem-2 replay: ball systems, telescoping sigma terms, P and P_k
// ---------------------------------------------------------------------------

struct Theorem2Config {
    TruncationPolicy policy{};
    double tuple_budget = 1e9;
    bool allow_unbounded_kernel = false;
    std::optional<GridSpec> grid;  // required when every slot is a measure
    std::uint64_t seed = 20150621;
};

inline InequalityLedger theorem2_ledger(const std::vector<AtomicMeasure>& nus, const std::vector<GridFunction>& fs,
                                        double t, const KernelSpec& kernel, const Theorem2Config& cfg = {}) {
    const int m = kernel.m;
    const int n = kernel.n;
    const int l = static_cast<int>(nus.size());
    if (l < 1 || l > m) throw config_error("theorem2_ledger: need between 1 and m measures");
    if (static_cast<int>(fs.size()) != m - l)
        throw config_error("theorem2_ledger: need m - l function slots");
    if (!(t > 0.0)) throw config_error("theorem2_ledger: t must be positive");
    if (!kernel.is_known_bounded && !cfg.allow_unbounded_kernel)
        throw config_error("theorem2_ledger: kernel has no boundedness metadata (set the override to proceed)");

    const GridSpec g = fs.empty() ? (cfg.grid ? *cfg.grid
                                              : throw config_error("theorem2_ledger: a grid is required when "
                                                                   "every slot is a measure"))
                                  : fs.front().grid();
    if (g.n != n) throw config_error("theorem2_ledger: grid dimension must match the kernel");
    for (const auto& f : fs)
        if (f.grid() != g) throw config_error("theorem2_ledger: functions must share one grid");

    const double tpow = std::pow(t, 1.0 / m);
    for (std::size_t i = 0; i < fs.size(); ++i)
        if (linf_norm(fs[i]) > tpow * (1.0 + 1e-12))
            throw config_error("theorem2_ledger: slot " + std::to_string(l + i + 1) +
                               " violates ||f||_inf <= t^(1/m)");

    InequalityLedger ledger;
    Box ext = g.extent_box();
    ledger.provenance()["seed"] = cfg.seed;
    ledger.provenance()["h"] = g.h;
    ledger.provenance()["box"] = Json::array({ext.lo, ext.hi});
    ledger.provenance()["eps"] = cfg.policy.eps_cells;
    Json atoms_per_slot = Json::array();
    for (const auto& nu : nus) atoms_per_slot.push_back(nu.size());
    ledger.provenance()["N"] = std::move(atoms_per_slot);
    ledger.provenance()["kernel"] = kernel.name();
    ledger.provenance()["m"] = m;
    ledger.provenance()["t"] = t;

    detail::record_kernel_estimates(ledger, kernel, cfg.seed);

    // normalize the measures to unit total variation, keeping atom signs
    std::vector<AtomicMeasure> nuhat, nuabs;
    Json scales = Json::array();
    for (const auto& nu : nus) {
        const double tv = nu.total_variation();
        scales.push_back(tv);
        if (tv == 0.0) {
            ledger.provenance()["nu_total_variations"] = std::move(scales);
            ledger.add("zero_measure.sigma_chain", anchor::sigma_chain, 0.0, 0.0, 0.0);
            ledger.record("A3_emp", 0.0);
            return ledger;
        }
        nuhat.push_back(nu.scaled(1.0 / tv));
        std::vector<Atom> abs_atoms;
        for (const auto& a : nuhat.back().atoms()) abs_atoms.push_back(Atom{a.x, std::fabs(a.weight)});
        nuabs.push_back(AtomicMeasure(std::move(abs_atoms)));
    }
    ledger.provenance()["nu_total_variations"] = std::move(scales);

    BallSystem sys = build_ball_system(nuabs, t, m, g);
    for (int i = 0; i < l; ++i)
        for (std::size_t j = 0; j < sys.slots[i].pieces.size(); ++j) {
            const double w = nuhat[i].atoms()[j].weight;
            sys.slots[i].pieces[j].sign = w < 0.0 ? -1 : 1;
        }

    const double hn = g.cell_measure();
    for (int i = 0; i < l; ++i) {
        const auto& sl = sys.slots[i];
        const std::string skey = "slot" + std::to_string(i + 1);
        double worst_rel = 0.0, worst_cancel = 0.0, piece_sum = 0.0, dbl_sum = 0.0;
        for (const auto& p : sl.pieces) {
            const double meas = measure(p.cells);
            worst_rel = std::max(worst_rel, std::fabs(meas - p.target_measure) / p.target_measure);
            worst_cancel = std::max(worst_cancel, std::fabs(p.weight - tpow * meas) / p.weight);
            piece_sum += meas;
        }
        for (const auto& p : sl.doubled) dbl_sum += measure(p.cells);
        ledger.add(skey + ".piece_measure", anchor::piece_measure, worst_rel, 1e-3, 0.0);
        ledger.add(skey + ".cancellation", anchor::cancellation_t2, worst_cancel, 1e-3, 0.0);
        ledger.add(skey + ".slot_measure", anchor::slot_measure,
                   std::fabs(measure(sl.E) - std::pow(t, -1.0 / m)) / std::pow(t, -1.0 / m),
                   1e-3 * static_cast<double>(sl.pieces.size()), 0.0);
        ledger.add(skey + ".disjoint", anchor::disjoint, piece_sum - measure(sl.E), 0.0, 0.0);
        ledger.add(skey + ".disjoint_doubled", anchor::disjoint, dbl_sum - measure(sl.Estar), 0.0, 0.0);
        const double rhs = std::pow(2.0, n) * measure(sl.E);
        const double tol = 0.02 + 4.0 * static_cast<double>(sl.pieces.size()) * hn / std::max(rhs, 1e-300);
        ledger.add(skey + ".doubling", anchor::doubling, measure(sl.Estar), rhs, tol);
    }
    ledger.add("estar", anchor::estar, measure(sys.Estar_union), m * std::pow(2.0, n) * std::pow(t, -1.0 / m),
               1e-9);

    // telescoping sigma evaluations on the singularity-free cell centers
    std::vector<Point> vt;
    std::vector<std::int64_t> vt_flat;
    {
        CellSet atom_cells(g);
        for (const auto& nu : nuhat)
            for (const auto& a : nu.atoms()) {
                CellIndex z = g.cell_of(a.x);
                if (g.in_extent(z) && dist2_points(g.cell_center(z), a.x) < 1e-24) atom_cells.insert(z);
            }
        for (std::int64_t c = 0; c < g.cell_count(); ++c) {
            if (atom_cells.contains(c)) continue;
            vt.push_back(g.cell_center(g.unflatten(c)));
            vt_flat.push_back(c);
        }
        ledger.provenance()["excluded_targets"] = atom_cells.count();
    }

    std::vector<std::vector<double>> sigma(l + 1);
    std::vector<SigmaArguments> args(l + 1);
    for (int k = 0; k <= l; ++k) {
        args[k] = sigma_inputs(sys, nuhat, fs, k);
        sigma[k] = apply_slots(kernel, args[k].slots(), vt, cfg.policy, cfg.tuple_budget).values;
    }

    double f_l1_prod = 1.0;
    for (const auto& f : fs) f_l1_prod *= l1_norm(f);
    const double thr = t / (l + 1);

    const double meas_p = detail::measure_over(sigma[l], vt_flat, nullptr, thr, hn);
    if (kernel.operator_norm) {
        const double rhs = std::pow(m + 1, 2.0 / m) * std::pow(*kernel.operator_norm, 2.0 / m) *
                           std::pow(t, -1.0 / m) * std::pow(f_l1_prod, 1.0 / m);
        ledger.add("p_bound", anchor::p_bound, meas_p, rhs, 0.0);
    }
    ledger.record("C_P", meas_p * std::pow(t, 1.0 / m) / std::max(std::pow(f_l1_prod, 1.0 / m), 1e-300));

    // shared lemma-1 sum over the ball pieces, outside the doubled union
    std::optional<Lemma1Result> lem;
    try {
        std::vector<SetCollection> colls;
        for (int i = 0; i < l; ++i) colls.push_back(SetCollection::from_ball_slot(sys.slots[i]));
        Lemma1Config lc;
        lc.tuple_budget = cfg.tuple_budget;
        lem = lemma1_sum(colls, kernel, sys.Estar_union.complement(), lc);
        ledger.record("A1_fitted", lem->ratio);
    } catch (const config_error&) {
        lem.reset();
    }

    const auto& estar_mask = sys.Estar_union.mask();
    std::vector<std::uint8_t> outside_estar(estar_mask.size());
    for (std::size_t i = 0; i < estar_mask.size(); ++i) outside_estar[i] = estar_mask[i] ? 0 : 1;

    double sum_pk = 0.0;
    for (int k = 1; k <= l; ++k) {
        std::vector<double> diff(sigma[k - 1]);
        for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= sigma[k][i];
        const double meas_pk = detail::measure_over(diff, vt_flat, &outside_estar, thr, hn);
        sum_pk += meas_pk;
        if (lem)
            ledger.add("p" + std::to_string(k) + "_bound", anchor::pk_bound, meas_pk,
                       2.0 * (m + 1) * 2.0 * lem->sum, 0.0);
        ledger.record("C_P" + std::to_string(k), meas_pk * std::pow(t, 1.0 / m));
    }

    const double meas_sigma0 = detail::measure_over(sigma[0], vt_flat, nullptr, t, hn);
    ledger.add("sigma_chain", anchor::sigma_chain, meas_sigma0,
               l * measure(sys.Estar_union) + sum_pk + meas_p + 2.0 * hn, 1e-9);
    ledger.record("A3_emp",
                  meas_sigma0 * std::pow(t, 1.0 / m) / std::max(std::pow(f_l1_prod, 1.0 / m), 1e-300));
    if (lem) {
        double a3_bound = m * m * std::pow(2.0, n) + 2.0 * m * m * (m + 1) * lem->ratio;
        if (kernel.operator_norm) a3_bound += std::pow(m + 1, 2.0 / m) * std::pow(*kernel.operator_norm, 2.0 / m);
        ledger.record("A3_bound_from_fits", a3_bound);
    }
    return ledger;
}

} // namespace mcz
