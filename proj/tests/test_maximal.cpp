#include <catch2/catch_amalgamated.hpp>

#include "mcz/maximal.hpp"
#include "mcz/kernel.hpp"
#include "oracles.hpp"

using namespace mcz;

TEST_CASE("maximal function of an interval indicator matches the closed form") {
    GridSpec g(1, 1.0 / 256, {-4 * 256}, {4 * 256});
    auto f = indicator(g, Box{{0.0}, {1.0}});
    auto mf = maximal_function(f);
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const double x = g.cell_center(g.unflatten(c))[0];
        // one-cell tolerance: the closed form evaluated over [x-h, x+h] must bracket
        const double lo = std::min(oracle::maximal_indicator_closed(x - g.h),
                                   oracle::maximal_indicator_closed(x + g.h));
        const double hi = std::max(oracle::maximal_indicator_closed(x - g.h),
                                   oracle::maximal_indicator_closed(x + g.h));
        REQUIRE(mf.at(c) >= lo - 1e-12);
        REQUIRE(mf.at(c) <= hi + 1e-12);
    }
}

TEST_CASE("maximal function of zero is zero, and scaling is exact") {
    GridSpec g(1, 1.0 / 32, {-64}, {64});
    CHECK(linf_norm(maximal_function(GridFunction(g))) == 0.0);

    Rng rng(17);
    std::vector<double> v(g.cell_count());
    for (auto& x : v) x = rng.u01() < 0.5 ? rng.uniform(-2.0, 2.0) : 0.0;
    GridFunction f(g, v);
    auto m1 = maximal_function(f);
    auto m2 = maximal_function(scale(f, 2.0));
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(m2.values()[i] == 2.0 * m1.values()[i]);
}

TEST_CASE("maximal function dominates |f| and matches brute force in 1D") {
    GridSpec g(1, 0.125, {-24}, {24});
    Rng rng(23);
    for (int trial = 0; trial < 6; ++trial) {
        std::vector<double> v(g.cell_count());
        for (auto& x : v) x = rng.u01() < 0.4 ? rng.uniform(-3.0, 3.0) : 0.0;
        GridFunction f(g, v);
        auto mf = maximal_function(f);
        auto brute = oracle::maximal_1d_brute(f);
        for (std::size_t i = 0; i < v.size(); ++i) {
            CHECK(mf.values()[i] == Catch::Approx(brute[i]).epsilon(1e-12));
            CHECK(mf.values()[i] >= std::fabs(v[i]) - 1e-12);
        }
    }
}

TEST_CASE("maximal function is sublinear cellwise") {
    GridSpec g(1, 0.25, {-16}, {16});
    Rng rng(31);
    std::vector<double> a(g.cell_count()), b(g.cell_count());
    for (auto& x : a) x = rng.uniform(0.0, 1.0);
    for (auto& x : b) x = rng.uniform(0.0, 1.0);
    GridFunction fa(g, a), fb(g, b);
    auto msum = maximal_function(add(fa, fb));
    auto ma = maximal_function(fa);
    auto mb = maximal_function(fb);
    for (std::int64_t c = 0; c < g.cell_count(); ++c)
        CHECK(msum.at(c) <= ma.at(c) + mb.at(c) + 1e-12);
}

TEST_CASE("weak (1,1) bound for interval indicators") {
    GridSpec g(1, 1.0 / 256, {-4 * 256}, {4 * 256});
    for (double width : {0.25, 1.0, 2.5}) {
        auto f = indicator(g, Box{{0.0}, {width}});
        auto mf = maximal_function(f);
        auto tg = log_spaced(linf_norm(mf) / 256.0, linf_norm(mf), 64);
        for (double t : tg) CHECK(t * measure(superlevel_set(mf, t)) <= 3.0 * l1_norm(f));
        CHECK(weak11_constant(f, tg) <= 3.0);
    }
}

TEST_CASE("level set G from the closed form") {
    GridSpec g(1, 1.0 / 256, {-4 * 256}, {4 * 256});
    auto f = indicator(g, Box{{0.0}, {1.0}});

    CHECK(level_set_G(f, 4.0, 2).empty());

    // m=2, t=1/4: threshold 1/2, {Mf > 1/2} = (-1, 2)
    auto s = level_set_G(f, 0.25, 2);
    CHECK(measure(s) == Catch::Approx(3.0).margin(4 * g.h));
    for (auto c : s.cells()) {
        const double x = g.cell_center(g.unflatten(c))[0];
        CHECK(x > -1.0 - g.h);
        CHECK(x < 2.0 + g.h);
    }
    // m=1, t=1/2: same threshold and set
    auto s1 = level_set_G(f, 0.5, 1);
    CHECK(s1.count() == s.count());
}

TEST_CASE("maximal function in 2D against brute force over dyadic squares") {
    GridSpec g(2, 0.25, {-10, -10}, {10, 10});
    Rng rng(37);
    std::vector<double> v(g.cell_count());
    for (auto& x : v) x = rng.u01() < 0.3 ? rng.uniform(0.0, 2.0) : 0.0;
    GridFunction f(g, v);
    auto mf = maximal_function(f);

    const std::int64_t rows = g.size(0), cols = g.size(1);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t x = 0; x < cols; ++x) {
            double best = 0.0;
            for (std::int64_t s = 1; s <= std::min(rows, cols); s *= 2)
                for (std::int64_t pr = std::max<std::int64_t>(0, r - s + 1);
                     pr <= std::min(r, rows - s); ++pr)
                    for (std::int64_t px = std::max<std::int64_t>(0, x - s + 1);
                         px <= std::min(x, cols - s); ++px) {
                        double sum = 0.0;
                        for (std::int64_t rr = pr; rr < pr + s; ++rr)
                            for (std::int64_t xx = px; xx < px + s; ++xx)
                                sum += std::fabs(v[rr * cols + xx]);
                        best = std::max(best, sum / static_cast<double>(s * s));
                    }
            REQUIRE(mf.values()[r * cols + x] == Catch::Approx(best).epsilon(1e-12));
        }
}
