#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcz/errors.hpp"
#include "mcz/grid.hpp"
#include "mcz/kernel.hpp"
#include "mcz/measure.hpp"
#include "mcz/parallel.hpp"

namespace mcz {

/// Diagonal handling for quadrature near kernel singularities.
struct TruncationPolicy {
    double eps_cells = 2.0;  // exclusion radius in units of the cell width
    bool pv_pairing = true;  // exact per-cell antiderivatives for 1D tensor kernels
    bool report_tail = false;

    double epsilon(double h) const { return eps_cells * h; }

    void validate() const {
        if (!(eps_cells >= 0.5)) throw config_error("TruncationPolicy: eps must be at least h/2");
    }
};

/// One argument slot of the operator: either an atomic measure or a grid function.
struct SlotArg {
    const AtomicMeasure* atoms = nullptr;
    const GridFunction* func = nullptr;

    static SlotArg measure(const AtomicMeasure& nu) { return SlotArg{&nu, nullptr}; }
    static SlotArg function(const GridFunction& f) { return SlotArg{nullptr, &f}; }

    bool is_function() const { return func != nullptr; }
};

struct ApplyResult {
    std::vector<double> values;
    std::vector<double> tail_bounds;  // per target; zero when reporting is off
};

namespace detail {

struct SlotEntries {
    bool is_function = false;
    std::vector<double> coords;   // n per entry
    std::vector<double> weights;  // atom weight, or value * h^n
    std::size_t count = 0;
};

struct Run {  // maximal constant-value interval of a 1D grid function
    double lo, hi, value;
};

inline std::vector<Run> compress_runs(const GridFunction& f) {
    std::vector<Run> runs;
    const GridSpec& g = f.grid();
    const auto& v = f.values();
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(v.size());) {
        if (v[i] == 0.0) {
            ++i;
            continue;
        }
        std::int64_t j = i;
        while (j + 1 < static_cast<std::int64_t>(v.size()) && v[j + 1] == v[i]) ++j;
        runs.push_back(Run{static_cast<double>(g.lo[0] + i) * g.h, static_cast<double>(g.lo[0] + j + 1) * g.h, v[i]});
        i = j + 1;
    }
    return runs;
}

inline std::string point_str(const double* p, int n) {
    std::ostringstream os;
    os << "(";
    for (int a = 0; a < n; ++a) os << (a ? "," : "") << p[a];
    os << ")";
    return os.str();
}

} // namespace detail

/// Evaluate T at explicit targets with one argument per slot. Atom slots enter
/// the sum exactly; function slots by midpoint quadrature over cell centers
/// weighted h^n, skipping tuples whose function-slot points come within eps of
/// the target. For the 1D tensor-Hilbert family with pv_pairing the factors use
/// the exact per-cell antiderivative log|(x-a)/(x-b)| instead.
inline ApplyResult apply_slots(const KernelSpec& kernel, const std::vector<SlotArg>& slots,
                               const std::vector<Point>& targets, const TruncationPolicy& policy,
                               double tuple_budget = 1e9) {
    policy.validate();
    if (static_cast<int>(slots.size()) != kernel.m)
        throw config_error("apply_slots: slot count must equal the kernel's degree");
    if (!(tuple_budget > 0)) throw config_error("apply_slots: budget must be positive");

    const int n = kernel.n;
    const int m = kernel.m;
    const GridFunction* anyf = nullptr;
    for (const auto& s : slots) {
        if (!s.atoms && !s.func) throw config_error("apply_slots: empty slot");
        if (s.func) {
            if (s.func->grid().n != n) throw config_error("apply_slots: grid dimension mismatch");
            if (anyf && anyf->grid() != s.func->grid()) throw config_error("apply_slots: grid mismatch between slots");
            anyf = s.func;
        } else {
            for (const auto& a : s.atoms->atoms())
                if (static_cast<int>(a.x.size()) != n) throw config_error("apply_slots: atom dimension mismatch");
        }
    }
    for (const auto& t : targets)
        if (static_cast<int>(t.size()) != n) throw config_error("apply_slots: target dimension mismatch");

    const double h = anyf ? anyf->grid().h : 0.0;
    const double eps = anyf ? policy.epsilon(h) : 0.0;

    const bool tensor = kernel.family == KernelSpec::Family::tensor_hilbert && n == 1;

    // ---------------- exact tensor path ----------------
    if (tensor) {
        const double fac = kernel.include_pi ? 1.0 / M_PI : 1.0;
        std::vector<std::vector<detail::Run>> runs(m);
        double work_per_target = 0;
        for (int i = 0; i < m; ++i) {
            if (slots[i].is_function()) {
                runs[i] = detail::compress_runs(*slots[i].func);
                work_per_target += policy.pv_pairing ? runs[i].size() : slots[i].func->values().size();
            } else {
                work_per_target += slots[i].atoms->size();
            }
        }
        if (static_cast<double>(targets.size()) * std::max(1.0, work_per_target) > tuple_budget)
            throw budget_error("apply_slots: tensor-path work exceeds the tuple budget");

        ApplyResult res;
        res.values.assign(targets.size(), 0.0);
        res.tail_bounds.assign(targets.size(), 0.0);
        std::vector<std::string> errors(targets.size());
        parallel_for(static_cast<std::int64_t>(targets.size()), [&](std::int64_t ti) {
            const double x = targets[ti][0];
            double prod = 1.0;
            for (int i = 0; i < m && prod != 0.0; ++i) {
                double s = 0.0;
                if (!slots[i].is_function()) {
                    for (const auto& a : slots[i].atoms->atoms()) {
                        if (a.weight == 0.0) continue;
                        const double d = x - a.x[0];
                        if (d == 0.0) {
                            errors[ti] = "singular target x=" + std::to_string(x) + " hits an atom in slot " +
                                         std::to_string(i + 1);
                            return;
                        }
                        s += a.weight * fac / d;
                    }
                } else if (policy.pv_pairing) {
                    for (const auto& r : runs[i]) {
                        const double tol = 1e-9 * h;
                        if (std::fabs(x - r.lo) < tol || std::fabs(x - r.hi) < tol) {
                            errors[ti] = "singular target x=" + std::to_string(x) +
                                         " sits on a jump of the slot-" + std::to_string(i + 1) + " function";
                            return;
                        }
                        s += r.value * fac * std::log(std::fabs((x - r.lo) / (x - r.hi)));
                    }
                } else {
                    const GridFunction& f = *slots[i].func;
                    const GridSpec& g = f.grid();
                    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
                        const double v = f.at(c);
                        if (v == 0.0) continue;
                        const double yc = (static_cast<double>(g.lo[0] + c) + 0.5) * h;
                        if (std::fabs(x - yc) < eps) continue;
                        s += v * h * fac / (x - yc);
                    }
                }
                prod *= s;
            }
            res.values[ti] = prod;
        });
        for (std::size_t ti = 0; ti < targets.size(); ++ti)
            if (!errors[ti].empty()) throw evaluator_error("apply_slots: " + errors[ti]);
        return res;
    }

    // ---------------- generic midpoint path ----------------
    std::vector<detail::SlotEntries> entries(m);
    double tuples = 1.0;
    for (int i = 0; i < m; ++i) {
        auto& e = entries[i];
        if (slots[i].is_function()) {
            e.is_function = true;
            const GridFunction& f = *slots[i].func;
            const GridSpec& g = f.grid();
            const double cellw = g.cell_measure();
            for (std::int64_t c = 0; c < g.cell_count(); ++c) {
                if (f.at(c) == 0.0) continue;
                Point p = g.cell_center(g.unflatten(c));
                e.coords.insert(e.coords.end(), p.begin(), p.end());
                e.weights.push_back(f.at(c) * cellw);
            }
        } else {
            for (const auto& a : slots[i].atoms->atoms()) {
                e.coords.insert(e.coords.end(), a.x.begin(), a.x.end());
                e.weights.push_back(a.weight);
            }
        }
        e.count = e.weights.size();
        tuples *= static_cast<double>(std::max<std::size_t>(e.count, 1));
    }
    if (static_cast<double>(targets.size()) * tuples > tuple_budget) {
        std::ostringstream os;
        os << "apply_slots: " << static_cast<double>(targets.size()) * tuples
           << " quadrature tuples exceed the budget of " << tuple_budget
           << "; coarsen the grid, reduce targets, or raise --budget";
        throw budget_error(os.str());
    }

    const bool tail_on = policy.report_tail && kernel.size_constant.has_value();
    const double ck = kernel.size_constant.value_or(0.0);

    ApplyResult res;
    res.values.assign(targets.size(), 0.0);
    res.tail_bounds.assign(targets.size(), 0.0);
    std::vector<std::string> errors(targets.size());

    parallel_for(static_cast<std::int64_t>(targets.size()), [&](std::int64_t ti) {
        const Point& x = targets[ti];
        // per-slot active flags under the eps exclusion (function slots only)
        std::vector<std::vector<std::uint8_t>> active(m);
        for (int i = 0; i < m; ++i) {
            active[i].assign(entries[i].count, 1);
            if (!entries[i].is_function || !anyf) continue;
            for (std::size_t e = 0; e < entries[i].count; ++e) {
                double d2 = 0.0;
                for (int a = 0; a < n; ++a) d2 += sq(x[a] - entries[i].coords[e * n + a]);
                if (std::sqrt(d2) < eps) active[i][e] = 0;
            }
        }
        double acc = 0.0;
        double tail = 0.0;
        std::vector<double> ybuf(static_cast<std::size_t>(m) * n);
        std::vector<std::size_t> pick(m);

        auto descend = [&](auto&& self, int depth, double w, bool skipped) -> void {
            if (!errors[ti].empty()) return;
            if (depth == m) {
                if (w == 0.0) return;
                if (skipped) {
                    if (tail_on) {
                        double sep = separation_sum(n, m, x.data(), ybuf.data());
                        sep = std::max(sep, 0.5 * h);
                        tail += std::fabs(w) * ck / std::pow(sep, n * m);
                    }
                    return;
                }
                const double v = kernel(x.data(), ybuf.data());
                if (!std::isfinite(v)) {
                    std::ostringstream os;
                    os << "kernel non-finite at target " << detail::point_str(x.data(), n) << " with tuple";
                    for (int i = 0; i < m; ++i) os << " y" << (i + 1) << "=" << detail::point_str(&ybuf[i * n], n);
                    errors[ti] = os.str();
                    return;
                }
                acc += w * v;
                return;
            }
            const auto& e = entries[depth];
            for (std::size_t idx = 0; idx < e.count; ++idx) {
                const bool excl = !active[depth][idx];
                if (excl && !tail_on) continue;
                for (int a = 0; a < n; ++a) ybuf[depth * n + a] = e.coords[idx * n + a];
                self(self, depth + 1, w * e.weights[idx], skipped || excl);
            }
        };
        descend(descend, 0, 1.0, false);
        res.values[ti] = acc;
        res.tail_bounds[ti] = tail;
    });
    for (std::size_t ti = 0; ti < targets.size(); ++ti)
        if (!errors[ti].empty()) throw evaluator_error("apply_slots: " + errors[ti]);
    return res;
}

inline ApplyResult apply_functions(const KernelSpec& kernel, const std::vector<GridFunction>& fs,
                                   const std::vector<Point>& targets, const TruncationPolicy& policy,
                                   double tuple_budget = 1e9) {
    std::vector<SlotArg> slots;
    slots.reserve(fs.size());
    for (const auto& f : fs) slots.push_back(SlotArg::function(f));
    return apply_slots(kernel, slots, targets, policy, tuple_budget);
}

/// Exact finite sum over atom tuples; no quadrature error.
inline std::vector<double> apply_atoms(const KernelSpec& kernel, const std::vector<AtomicMeasure>& nus,
                                       const std::vector<Point>& targets, double tuple_budget = 1e9) {
    std::vector<SlotArg> slots;
    slots.reserve(nus.size());
    for (const auto& nu : nus) slots.push_back(SlotArg::measure(nu));
    TruncationPolicy policy; // no function slots: exclusion never applies
    return apply_slots(kernel, slots, targets, policy, tuple_budget).values;
}

/// Measures in the leading l slots, grid functions in the rest.
inline ApplyResult apply_mixed(const KernelSpec& kernel, const std::vector<AtomicMeasure>& nus,
                               const std::vector<GridFunction>& fs, const std::vector<Point>& targets,
                               const TruncationPolicy& policy, double tuple_budget = 1e9) {
    if (nus.empty()) throw config_error("apply_mixed: need at least one measure slot");
    std::vector<SlotArg> slots;
    for (const auto& nu : nus) slots.push_back(SlotArg::measure(nu));
    for (const auto& f : fs) slots.push_back(SlotArg::function(f));
    return apply_slots(kernel, slots, targets, policy, tuple_budget);
}

/// Cell centers of the grid as an evaluation target list.
inline std::vector<Point> cell_center_targets(const GridSpec& g) {
    std::vector<Point> out;
    out.reserve(static_cast<std::size_t>(g.cell_count()));
    for (std::int64_t c = 0; c < g.cell_count(); ++c) out.push_back(g.cell_center(g.unflatten(c)));
    return out;
}

/// Values sampled back onto the grid as a GridFunction (targets = cell centers).
inline GridFunction values_to_grid(const GridSpec& g, const std::vector<double>& values) {
    return GridFunction(g, values);
}

} // namespace mcz
