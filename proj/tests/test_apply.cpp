#include <catch2/catch_amalgamated.hpp>

#include "mcz/apply.hpp"
#include "oracles.hpp"

using namespace mcz;

namespace {

GridSpec unit_grid(double h = 1.0 / 256, double half = 4.0) {
    const std::int64_t w = static_cast<std::int64_t>(half / h);
    return GridSpec(1, h, {-w}, {w});
}

double hilbert_indicator(double x) { return std::log(std::fabs(x / (x - 1.0))) / M_PI; }

} // namespace

TEST_CASE("tensor-Hilbert oracle on indicator inputs") {
    auto g = unit_grid();
    auto f = indicator(g, Box{{0.0}, {1.0}});
    auto k = make_tensor_hilbert(2);
    std::vector<Point> targets{{2.0}, {-1.5}, {3.25}};

    TruncationPolicy pv;
    auto exact = apply_functions(k, {f, f}, targets, pv);
    TruncationPolicy mid;
    mid.pv_pairing = false;
    auto quad = apply_functions(k, {f, f}, targets, mid);

    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double expect = std::pow(hilbert_indicator(targets[i][0]), 2);
        CHECK(exact.values[i] == Catch::Approx(expect).margin(1e-10));
        CHECK(quad.values[i] == Catch::Approx(expect).epsilon(0.02));
    }
}

TEST_CASE("zero inputs give zero everywhere, multilinearity is exact") {
    auto g = unit_grid(1.0 / 64, 2.0);
    auto f = indicator(g, Box{{0.0}, {1.0}});
    GridFunction zero(g);
    auto k = make_tensor_hilbert(2);
    std::vector<Point> targets{{1.5}, {-0.5}};
    TruncationPolicy pol;

    auto rz = apply_functions(k, {f, zero}, targets, pol);
    for (double v : rz.values) CHECK(v == 0.0);

    auto r1 = apply_functions(k, {f, f}, targets, pol);
    auto r2 = apply_functions(k, {scale(f, 2.0), f}, targets, pol);
    for (std::size_t i = 0; i < targets.size(); ++i) CHECK(r2.values[i] == 2.0 * r1.values[i]);

    // the same holds on the generic path
    auto hk = make_homogeneous_model(1, 2, 1.0);
    auto g1 = apply_functions(hk, {f, f}, targets, pol);
    auto g2 = apply_functions(hk, {scale(f, 2.0), f}, targets, pol);
    for (std::size_t i = 0; i < targets.size(); ++i) CHECK(g2.values[i] == 2.0 * g1.values[i]);
}

TEST_CASE("atomic sums are exact") {
    auto k = make_homogeneous_model(1, 2, 1.0);
    auto d0 = AtomicMeasure::dirac({0.0});

    CHECK(apply_atoms(k, {d0, d0}, {{1.0}})[0] == Catch::Approx(0.25));

    AtomicMeasure nu1({Atom{{0.0}, 1.0}, Atom{{1.0}, 1.0}});
    CHECK(apply_atoms(k, {nu1, d0}, {{3.0}})[0] == Catch::Approx(1.0 / 36 + 1.0 / 25));

    auto tripled = apply_atoms(k, {nu1.scaled(3.0), d0}, {{3.0}, {5.0}});
    auto base = apply_atoms(k, {nu1, d0}, {{3.0}, {5.0}});
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(tripled[i] == 3.0 * base[i]);
}

TEST_CASE("atomic evaluation reports singular tuples") {
    auto k = make_homogeneous_model(1, 2, 1.0);
    auto d0 = AtomicMeasure::dirac({0.0});
    CHECK_THROWS_AS(apply_atoms(k, {d0, d0}, {{0.0}}), evaluator_error);
    // zero-weight atoms at the target are harmless
    AtomicMeasure withzero({Atom{{0.0}, 1.0}, Atom{{2.0}, 0.0}});
    CHECK_NOTHROW(apply_atoms(k, {withzero, d0}, {{2.0}}));
}

TEST_CASE("mixed slots against the factored oracle") {
    auto g = unit_grid();
    auto f = indicator(g, Box{{0.0}, {1.0}});
    auto k = make_tensor_hilbert(2);
    auto d0 = AtomicMeasure::dirac({0.0});
    TruncationPolicy pol;

    auto r = apply_mixed(k, {d0}, {f}, {{2.0}}, pol);
    CHECK(r.values[0] == Catch::Approx(std::log(2.0) / (2 * M_PI * M_PI)).margin(1e-10));

    // l = m reduces to the atomic sum
    auto hk = make_homogeneous_model(1, 2, 1.0);
    auto rm = apply_mixed(hk, {d0, d0}, {}, {{1.0}}, pol);
    CHECK(rm.values[0] == apply_atoms(hk, {d0, d0}, {{1.0}})[0]);

    GridFunction zero(g);
    auto rz = apply_mixed(k, {d0}, {zero}, {{2.0}}, pol);
    CHECK(rz.values[0] == 0.0);
}

TEST_CASE("translation covariance of the built-in kernels") {
    auto g = unit_grid(1.0 / 128, 4.0);
    auto f = indicator(g, Box{{0.0}, {1.0}});
    auto fshift = indicator(g, Box{{1.0}, {2.0}});
    TruncationPolicy pol;
    for (auto k : {make_tensor_hilbert(2), make_homogeneous_model(1, 2, 1.0)}) {
        auto a = apply_functions(k, {f, f}, {{2.5}}, pol);
        auto b = apply_functions(k, {fshift, fshift}, {{3.5}}, pol);
        CHECK(a.values[0] == Catch::Approx(b.values[0]).epsilon(1e-12));
    }
    // exact for atoms
    auto hk = make_homogeneous_model(1, 2, 1.0);
    auto d0 = AtomicMeasure::dirac({0.0});
    auto d1 = AtomicMeasure::dirac({1.0});
    CHECK(apply_atoms(hk, {d0, d0}, {{2.0}})[0] == apply_atoms(hk, {d1, d1}, {{3.0}})[0]);
}

TEST_CASE("halving h changes the oracle value less than tail + 1e-3") {
    auto k = make_tensor_hilbert(2);
    std::vector<Point> targets{{2.0}};
    TruncationPolicy mid;
    mid.pv_pairing = false;
    mid.report_tail = true;

    auto coarse_grid = unit_grid(1.0 / 256, 4.0);
    auto fine_grid = unit_grid(1.0 / 512, 4.0);
    auto coarse = apply_functions(k, {indicator(coarse_grid, Box{{0.0}, {1.0}}),
                                      indicator(coarse_grid, Box{{0.0}, {1.0}})},
                                  targets, mid);
    TruncationPolicy fine_pol = mid; // eps scales with h automatically
    auto fine = apply_functions(k, {indicator(fine_grid, Box{{0.0}, {1.0}}),
                                    indicator(fine_grid, Box{{0.0}, {1.0}})},
                                targets, fine_pol);
    const double tail = coarse.tail_bounds[0] + fine.tail_bounds[0];
    CHECK(std::fabs(coarse.values[0] - fine.values[0]) < tail + 1e-3);

    // the exact path is h-independent for indicator inputs
    TruncationPolicy pv;
    auto e1 = apply_functions(k, {indicator(coarse_grid, Box{{0.0}, {1.0}}),
                                  indicator(coarse_grid, Box{{0.0}, {1.0}})},
                              targets, pv);
    auto e2 = apply_functions(k, {indicator(fine_grid, Box{{0.0}, {1.0}}),
                                  indicator(fine_grid, Box{{0.0}, {1.0}})},
                              targets, pv);
    CHECK(e1.values[0] == Catch::Approx(e2.values[0]).epsilon(1e-12));
}

TEST_CASE("sharp spikes converge to atoms") {
    const double h = 1.0 / 256;
    auto g = unit_grid(h, 4.0);
    auto k = make_homogeneous_model(1, 2, 1.0);

    // unit-mass spike on the cell containing 0.5
    GridFunction spike(g);
    auto z = g.cell_of({0.5 + h / 2});
    spike.mutable_values()[g.flatten(z)] = 1.0 / h;
    auto nu = AtomicMeasure::dirac(g.cell_center(z));

    TruncationPolicy pol;
    std::vector<Point> targets{{2.0}, {-1.5}};
    auto viaf = apply_functions(k, {spike, spike}, targets, pol);
    auto viaa = apply_atoms(k, {nu, nu}, targets);
    for (std::size_t i = 0; i < targets.size(); ++i)
        CHECK(viaf.values[i] == Catch::Approx(viaa[i]).epsilon(0.05));
}

TEST_CASE("the tuple budget rejects oversized runs up front") {
    auto g = unit_grid(1.0 / 256, 4.0);
    auto f = indicator(g, Box{{-2.0}, {2.0}});
    auto k = make_homogeneous_model(1, 2, 1.0);
    TruncationPolicy pol;
    CHECK_THROWS_AS(apply_functions(k, {f, f}, {{3.0}}, pol, /*budget=*/1000.0), budget_error);
}

TEST_CASE("grid mismatch and slot arity are rejected") {
    auto g = unit_grid(1.0 / 64, 2.0);
    auto g2 = unit_grid(1.0 / 32, 2.0);
    auto f = indicator(g, Box{{0.0}, {1.0}});
    auto f2 = indicator(g2, Box{{0.0}, {1.0}});
    auto k = make_tensor_hilbert(2);
    TruncationPolicy pol;
    CHECK_THROWS_AS(apply_functions(k, {f, f2}, {{2.0}}, pol), config_error);
    CHECK_THROWS_AS(apply_functions(k, {f}, {{2.0}}, pol), config_error);
    TruncationPolicy bad;
    bad.eps_cells = 0.25;
    CHECK_THROWS_AS(apply_functions(k, {f, f}, {{2.0}}, bad), config_error);
}

TEST_CASE("pv path reports jump-singular targets") {
    auto g = unit_grid(1.0 / 64, 2.0);
    auto f = indicator(g, Box{{0.0}, {1.0}});
    auto k = make_tensor_hilbert(1);
    TruncationPolicy pv;
    CHECK_THROWS_AS(apply_functions(k, {f}, {{0.0}}, pv), evaluator_error);
    CHECK_NOTHROW(apply_functions(k, {f}, {{0.5 + 1.0 / 128}}, pv));
}
