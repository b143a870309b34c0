// Weak-type behavior of a two-atom configuration: build the ball system,
// replay the ledger, and print the distribution of the operator output.

#include <cstdio>

#include "mcz/mcz.hpp"

int main() {
    using namespace mcz;
    GridSpec g(1, 1.0 / 64, {-64 * 64}, {64 * 64});
    auto kernel = make_homogeneous_model(1, 2, 1.0);

    Theorem2Config cfg;
    cfg.grid = g;
    cfg.allow_unbounded_kernel = true;
    auto nu = AtomicMeasure::dirac({0.0});
    auto ledger = theorem2_ledger({nu, nu}, {}, 4.0, kernel, cfg);

    for (const auto& e : ledger.entries())
        std::printf("%-28s %10.4g <= %10.4g  %s\n", e.name.c_str(), e.lhs, e.rhs, e.pass ? "pass" : "FAIL");
    std::printf("empirical A3: %.6f\n", ledger.constant("A3_emp").value_or(0.0));

    auto targets = cell_center_targets(g);
    auto vals = apply_atoms(kernel, {nu, nu}, targets);
    for (auto& v : vals) v = std::fabs(v);
    GridFunction out(g, vals);
    const double q = weak_quasinorm(out, 0.5, log_spaced(1.0 / 64, 64.0, 64));
    std::printf("weak-L^(1/2) quantity sup_t t |{|T|>t}|^2 = %.6f\n", q);
    return 0;
}
