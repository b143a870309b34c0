#include <catch2/catch_amalgamated.hpp>

#include "mcz/dyadic.hpp"
#include "mcz/kernel.hpp"
#include "mcz/serialize.hpp"

using namespace mcz;

TEST_CASE("cube geometry") {
    DyadicCube q{3, {3}};
    CHECK(cube_center(q) == Point{7.0 / 16});
    CHECK(cube_diam(q) == 0.125);

    DyadicCube q2{0, {0, 0}};
    CHECK(cube_center(q2) == Point({0.5, 0.5}));
    CHECK(cube_diam(q2) == Catch::Approx(std::sqrt(2.0)));

    DyadicCube child{1, {0, 1}};
    CHECK(cube_diam(child) == Catch::Approx(cube_diam(child.parent()) / 2));
}

TEST_CASE("cube json round trip") {
    std::vector<DyadicCube> cubes{{3, {3}}, {-2, {-1}}, {5, {17}}};
    auto back = cubes_from_json(cubes_to_json(cubes));
    REQUIRE(back.size() == cubes.size());
    for (std::size_t i = 0; i < cubes.size(); ++i) CHECK(back[i] == cubes[i]);
}

namespace {

/// Every emitted cube satisfies the window exactly (squared comparison), is
/// contained in the set, and is maximal: its parent is not contained or is too
/// close to the complement.
void check_whitney_properties(const CellSet& s, const WhitneyResult& w) {
    const GridSpec& g = s.grid();
    DistanceOracle oracle(s);
    double covered = measure(w.remainder);
    for (const auto& q : w.cubes) {
        const double d2 = oracle.dist2(q.box());
        CHECK(d2 >= 4.0 * q.diam2());
        CHECK(d2 <= 64.0 * q.diam2());
        for (auto c : cube_cells(g, q)) CHECK(s.contains(c));
        covered += std::pow(q.side(), g.n);

        DyadicCube p = q.parent();
        bool parent_contained = true;
        std::int64_t expected = 1;
        for (int a = 0; a < g.n; ++a) expected *= std::int64_t{1} << (-exact_log2(g.h, "h") - p.k);
        auto pcells = cube_cells(g, p);
        if (static_cast<std::int64_t>(pcells.size()) != expected) parent_contained = false;
        for (auto c : pcells)
            if (!s.contains(c)) parent_contained = false;
        const bool parent_ok = parent_contained && oracle.dist2(p.box()) >= 4.0 * p.diam2();
        CHECK_FALSE(parent_ok);
    }
    CHECK(covered == Catch::Approx(measure(s)).margin(1e-12));

    // emitted cubes and remainder cells partition the set
    CellSet seen = w.remainder;
    for (const auto& q : w.cubes)
        for (auto c : cube_cells(g, q)) {
            CHECK_FALSE(seen.contains(c));
            seen.insert(c);
        }
    CHECK(seen.count() == s.count());
}

} // namespace

TEST_CASE("whitney of the unit interval") {
    GridSpec g(1, 1.0 / 64, {-2 * 64}, {2 * 64});
    auto s = cells_of_box(g, Box{{0.0}, {1.0}});
    auto w = whitney(s);
    check_whitney_properties(s, w);

    // the interval [3/8, 1/2) appears: diam 1/8, dist 3/8, ratio 3
    bool found = false;
    for (const auto& q : w.cubes)
        if (q.k == 3 && q.z == std::vector<std::int64_t>{3}) found = true;
    CHECK(found);
}

TEST_CASE("whitney of a single cell is all remainder") {
    GridSpec g(1, 1.0 / 16, {-8}, {8});
    CellSet s(g);
    s.insert(CellIndex{0});
    auto w = whitney(s);
    CHECK(w.cubes.empty());
    CHECK(w.remainder.count() == 1);
    CHECK(w.resolution_insufficient);
}

TEST_CASE("whitney errors on an empty set") {
    GridSpec g(1, 1.0 / 16, {-8}, {8});
    CHECK_THROWS_AS(whitney(CellSet(g)), config_error);
}

TEST_CASE("whitney of two components is the union of the per-component runs") {
    GridSpec g(1, 1.0 / 64, {-64}, {4 * 64});
    auto a = cells_of_box(g, Box{{0.0}, {1.0}});
    auto b = cells_of_box(g, Box{{2.0}, {3.0}});
    auto w_union = whitney(a.unite(b));
    auto wa = whitney(a);
    auto wb = whitney(b);
    CHECK(w_union.cubes.size() == wa.cubes.size() + wb.cubes.size());
    CHECK(w_union.remainder.count() == wa.remainder.count() + wb.remainder.count());
    // every per-component cube appears in the union run
    auto contains_cube = [&](const DyadicCube& q) {
        for (const auto& u : w_union.cubes)
            if (u == q) return true;
        return false;
    };
    for (const auto& q : wa.cubes) CHECK(contains_cube(q));
    for (const auto& q : wb.cubes) CHECK(contains_cube(q));
}

TEST_CASE("whitney properties on randomized box unions") {
    Rng rng(2024);
    for (int n : {1, 2}) {
        GridSpec g = n == 1 ? GridSpec(1, 1.0 / 64, {-2 * 64}, {2 * 64})
                            : GridSpec(2, 1.0 / 64, {-96, -96}, {96, 96});
        for (int trial = 0; trial < 3; ++trial) {
            CellSet s(g);
            const int boxes = 1 + static_cast<int>(rng.u01() * 4.99);
            for (int b = 0; b < boxes; ++b) {
                Box box;
                box.lo.resize(n);
                box.hi.resize(n);
                for (int a = 0; a < n; ++a) {
                    const double lo = rng.uniform(-1.2, 0.6);
                    box.lo[a] = lo;
                    box.hi[a] = lo + rng.uniform(0.2, 0.8);
                }
                s = s.unite(cells_of_box(g, box));
            }
            if (s.empty()) continue;
            check_whitney_properties(s, whitney(s));
        }
    }
}

TEST_CASE("whitney requires a dyadic cell width") {
    GridSpec g(1, 0.3, {-8}, {8});
    CellSet s(g);
    s.insert(CellIndex{0});
    CHECK_THROWS_AS(whitney(s), config_error);
}
