#include <catch2/catch_amalgamated.hpp>

#include "mcz/grid.hpp"
#include "mcz/kernel.hpp"
#include "mcz/serialize.hpp"
#include "oracles.hpp"

using namespace mcz;

TEST_CASE("measure of cell sets") {
    GridSpec g1(1, 0.25, {-8}, {8});
    CellSet empty(g1);
    CHECK(measure(empty) == 0.0);

    CellSet four(g1);
    for (std::int64_t z = 0; z < 4; ++z) four.insert(CellIndex{z});
    CHECK(measure(four) == 1.0);

    GridSpec g2(2, 0.5, {-4, -4}, {4, 4});
    CellSet one(g2);
    one.insert(CellIndex{0, 0});
    CHECK(measure(one) == 0.25);
}

TEST_CASE("measure is additive and modular") {
    GridSpec g(1, 0.125, {-16}, {16});
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        CellSet a(g), b(g);
        for (std::int64_t c = 0; c < g.cell_count(); ++c) {
            if (rng.u01() < 0.4) a.insert(c);
            if (rng.u01() < 0.4) b.insert(c);
        }
        CHECK(measure(a.unite(b)) + measure(a.intersect(b)) == Catch::Approx(measure(a) + measure(b)).margin(0));
        if (measure(a.intersect(b)) == 0.0)
            CHECK(measure(a.unite(b)) == measure(a) + measure(b));
    }
}

TEST_CASE("superlevel sets of an indicator") {
    GridSpec g(1, 0.1, {-20}, {20});
    auto f = indicator(g, Box{{0.0}, {1.0}});
    CHECK(superlevel_set(f, 0.5).count() == 10);
    CHECK(superlevel_set(f, 1.5).empty());
}

TEST_CASE("superlevel set matches the analytic level set of |x|^-2") {
    GridSpec g(1, 1.0 / 256, {-4 * 256}, {4 * 256});
    std::vector<double> v(g.cell_count());
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const double x = g.cell_center(g.unflatten(c))[0];
        v[c] = 1.0 / (x * x);
    }
    GridFunction f(g, std::move(v));
    // {|x|^-2 > 1} = {|x| < 1}
    auto s = superlevel_set(f, 1.0);
    CHECK(measure(s) == Catch::Approx(2.0).margin(2 * g.h));
    for (auto c : s.cells()) CHECK(std::fabs(g.cell_center(g.unflatten(c))[0]) < 1.0 + g.h);
}

TEST_CASE("superlevel sets are antitone in the threshold") {
    GridSpec g(1, 0.125, {-16}, {16});
    Rng rng(5);
    std::vector<double> v(g.cell_count());
    for (auto& x : v) x = rng.uniform(-2.0, 2.0);
    GridFunction f(g, std::move(v));
    auto tg = log_spaced(0.01, 3.0, 12);
    for (std::size_t i = 0; i + 1 < tg.size(); ++i) {
        auto hi = superlevel_set(f, tg[i + 1]);
        auto lo = superlevel_set(f, tg[i]);
        CHECK(hi.subtract(lo).count() == 0);
    }
}

TEST_CASE("norms of simple functions") {
    GridSpec g(1, 0.1, {-20}, {20});
    auto f = indicator(g, Box{{0.0}, {1.0}});
    CHECK(l1_norm(f) == Catch::Approx(1.0));
    CHECK(linf_norm(f) == 1.0);

    GridFunction zero(g);
    CHECK(l1_norm(zero) == 0.0);
    CHECK(linf_norm(zero) == 0.0);

    GridSpec g2(1, 0.05, {-40}, {40});
    auto two = indicator(g2, Box{{0.0}, {0.5}}, 2.0);
    CHECK(l1_norm(two) == Catch::Approx(1.0));
    CHECK(linf_norm(two) == 2.0);
}

TEST_CASE("restrict splits mass exactly") {
    GridSpec g(1, 0.125, {-16}, {16});
    Rng rng(7);
    std::vector<double> v(g.cell_count());
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    GridFunction f(g, std::move(v));

    CellSet full = CellSet(g).complement();
    CHECK(restrict(f, full).values() == f.values());
    CHECK(l1_norm(restrict(f, CellSet(g))) == 0.0);

    CellSet s(g);
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        if (rng.u01() < 0.5) s.insert(c);
    CHECK(l1_norm(restrict(f, s)) + l1_norm(restrict(f, s.complement())) == Catch::Approx(l1_norm(f)));
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        CHECK(restrict(f, s).at(c) + restrict(f, s.complement()).at(c) == f.at(c));

    auto half = indicator(g, Box{{0.0}, {1.0}});
    CHECK(l1_norm(restrict(half, cells_of_box(g, Box{{0.0}, {0.5}}))) == Catch::Approx(0.5));

    GridSpec other(1, 0.25, {-8}, {8});
    CHECK_THROWS_AS(restrict(f, CellSet(other)), config_error);
}

TEST_CASE("distance to the closed complement") {
    GridSpec g(1, 1.0 / 16, {-16}, {32});
    auto s = cells_of_box(g, Box{{0.0}, {1.0}});
    CHECK(distance_to_complement(s, Box{{3.0 / 8}, {0.5}}) == 0.375);
    // q outside the set
    CHECK(distance_to_complement(s, Box{{2.0}, {2.5}}) == 0.0);
    // whole extent: distance to the extent boundary
    CellSet all = CellSet(g).complement();
    CHECK(distance_to_complement(all, Box{{0.0}, {0.5}}) == 1.0);
}

TEST_CASE("distance agrees with the brute-force oracle exactly") {
    for (int n : {1, 2}) {
        GridSpec g = n == 1 ? GridSpec(1, 0.125, {-32}, {32}) : GridSpec(2, 0.125, {-16, -16}, {16, 16});
        Rng rng(42 + n);
        for (int trial = 0; trial < 12; ++trial) {
            CellSet s(g);
            for (int b = 0; b < 3; ++b) {
                Box box;
                box.lo.resize(n);
                box.hi.resize(n);
                for (int a = 0; a < n; ++a) {
                    const double lo = rng.uniform(-1.8, 1.0);
                    box.lo[a] = lo;
                    box.hi[a] = lo + rng.uniform(0.3, 1.0);
                }
                s = s.unite(cells_of_box(g, box));
            }
            if (s.empty()) continue;
            DistanceOracle oracle(s);
            for (int q = 0; q < 8; ++q) {
                Box qb;
                qb.lo.resize(n);
                qb.hi.resize(n);
                for (int a = 0; a < n; ++a) {
                    const double lo = rng.uniform(-1.9, 1.7);
                    qb.lo[a] = lo;
                    qb.hi[a] = lo + rng.uniform(0.05, 0.4);
                }
                CHECK(oracle.dist2(qb) == oracle::dist2_brute(s, qb));
            }
        }
    }
}

TEST_CASE("grid function serialization round-trips bit-exactly") {
    GridSpec g(2, 0.25, {-4, -2}, {3, 5});
    Rng rng(3);
    std::vector<double> v(g.cell_count());
    for (auto& x : v) x = rng.uniform(-1.0, 1.0) * std::exp2(rng.uniform(-30, 30));
    GridFunction f(g, std::move(v));

    auto fj = grid_function_from_json(to_json(f));
    CHECK(fj.grid() == f.grid());
    CHECK(fj.values() == f.values());
    // byte-identical re-serialization
    CHECK(to_json(fj).dump() == to_json(f).dump());

    auto ft = grid_function_from_text(to_text(f));
    CHECK(ft.grid() == f.grid());
    CHECK(ft.values() == f.values());
}

TEST_CASE("shortest-representation doubles round-trip") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const double x = rng.uniform(-1.0, 1.0) * std::exp2(rng.uniform(-300, 300));
        CHECK(parse_double(format_double(x)) == x);
    }
}
