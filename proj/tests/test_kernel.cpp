#include <catch2/catch_amalgamated.hpp>

#include "mcz/kernel.hpp"

using namespace mcz;

namespace {
double eval(const KernelSpec& k, std::vector<double> x, std::vector<double> ys) {
    return k(x.data(), ys.data());
}
} // namespace

TEST_CASE("homogeneous model arithmetic") {
    auto k = make_homogeneous_model(1, 2, 1.0);
    CHECK(eval(k, {1.0}, {0.0, 0.0}) == Catch::Approx(0.25));
    CHECK(eval(k, {1.0}, {0.0, 0.5}) == eval(k, {1.0}, {0.5, 0.0}));

    auto k1 = make_homogeneous_model(1, 1, 1.0);
    CHECK(eval(k1, {3.0}, {1.0}) == Catch::Approx(0.5));
    CHECK(eval(k1, {-1.0}, {1.0}) == Catch::Approx(0.5));
}

TEST_CASE("tensor-Hilbert kernel arithmetic") {
    auto k1 = make_tensor_hilbert(1);
    CHECK(eval(k1, {2.0}, {1.0}) == Catch::Approx(1.0 / M_PI));

    auto k2 = make_tensor_hilbert(2);
    CHECK(eval(k2, {2.0}, {0.0, 1.0}) == Catch::Approx(1.0 / (M_PI * M_PI * 2.0)));
    // antisymmetry in each slot: reflecting y_1 about x flips the sign
    const double a = eval(k2, {0.5}, {0.2, 1.5});
    const double b = eval(k2, {0.5}, {0.8, 1.5});
    CHECK(a == Catch::Approx(-b));
}

TEST_CASE("multilinear riesz kernel") {
    auto k = make_multilinear_riesz(1, 2, 1);
    CHECK(eval(k, {1.0}, {0.0, 0.0}) == Catch::Approx(1.0 / std::pow(std::sqrt(2.0), 3)));
    // odd under reflecting the stacked difference vector
    CHECK(eval(k, {0.0}, {1.0, 2.0}) == Catch::Approx(-eval(k, {0.0}, {-1.0, -2.0})));
    CHECK_THROWS_AS(make_multilinear_riesz(1, 2, 3), config_error);

    // size product bounded by (sqrt m)^(nm) over random samples
    Rng rng(8);
    const int nm = 2;
    for (int s = 0; s < 200; ++s) {
        std::vector<double> x{rng.uniform(-2, 2)};
        std::vector<double> ys{x[0] + rng.uniform(0.05, 2.0) * (rng.u01() < 0.5 ? -1 : 1),
                               x[0] + rng.uniform(0.05, 2.0) * (rng.u01() < 0.5 ? -1 : 1)};
        const double sep = std::fabs(x[0] - ys[0]) + std::fabs(x[0] - ys[1]);
        CHECK(std::fabs(eval(k, x, ys)) * std::pow(sep, nm) <= std::pow(std::sqrt(2.0), nm) + 1e-9);
    }
}

TEST_CASE("check_size saturates exactly on the homogeneous model") {
    SamplerConfig cfg;
    cfg.samples = 64;
    for (auto [n, m] : {std::pair{1, 1}, {1, 2}, {2, 2}}) {
        auto k = make_homogeneous_model(n, m, 1.0);
        CHECK(check_size(k, cfg) == Catch::Approx(1.0).epsilon(1e-12));
        auto k3 = make_homogeneous_model(n, m, 3.0);
        CHECK(check_size(k3, cfg) == Catch::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("check_size scales linearly with the kernel") {
    SamplerConfig cfg;
    cfg.samples = 64;
    auto k = make_tensor_hilbert(2);
    auto doubled = k;
    auto base_eval = k.eval;
    doubled.eval = [base_eval](const double* x, const double* ys) { return 2.0 * base_eval(x, ys); };
    CHECK(check_size(doubled, cfg) == Catch::Approx(2.0 * check_size(k, cfg)).epsilon(1e-12));
    CHECK(std::isfinite(check_size(k, cfg)));
}

TEST_CASE("check_size flags non-finite evaluators with the sample point") {
    KernelSpec k = make_homogeneous_model(1, 1, 1.0);
    k.eval = [](const double*, const double*) { return std::numeric_limits<double>::infinity(); };
    SamplerConfig cfg;
    cfg.samples = 4;
    CHECK_THROWS_AS(check_size(k, cfg), evaluator_error);
}

TEST_CASE("smoothness exponents of the built-in kernels") {
    SamplerConfig cfg;
    cfg.samples = 192;
    for (auto k : {make_homogeneous_model(1, 2, 1.0), make_tensor_hilbert(2), make_multilinear_riesz(1, 2, 1),
                   make_homogeneous_model(2, 2, 1.0)}) {
        auto rep = check_smoothness(k, cfg);
        REQUIRE_FALSE(rep.zero_kernel);
        CHECK(rep.x_fit.delta == Catch::Approx(1.0).margin(0.05));
        for (const auto& yf : rep.y_fits) CHECK(yf.delta == Catch::Approx(1.0).margin(0.05));
        // both displacement variants agree
        for (const auto& yf : rep.y_fits) CHECK(std::fabs(yf.delta - rep.x_fit.delta) < 0.05);
        CHECK(rep.constant() > 0.0);
    }
}

TEST_CASE("smoothness of the zero kernel reports the flag") {
    KernelSpec k = make_homogeneous_model(1, 1, 1.0);
    k.eval = [](const double*, const double*) { return 0.0; };
    SamplerConfig cfg;
    cfg.samples = 16;
    auto rep = check_smoothness(k, cfg);
    CHECK(rep.zero_kernel);
}

TEST_CASE("smoothness rejects degenerate scale counts") {
    SamplerConfig cfg;
    cfg.scales = 2;
    CHECK_THROWS_AS(check_smoothness(make_tensor_hilbert(1), cfg), config_error);
}

TEST_CASE("samplers are deterministic given the seed") {
    SamplerConfig cfg;
    cfg.samples = 32;
    auto k = make_tensor_hilbert(2);
    CHECK(check_size(k, cfg) == check_size(k, cfg));
    auto r1 = check_smoothness(k, cfg);
    auto r2 = check_smoothness(k, cfg);
    CHECK(r1.x_fit.delta == r2.x_fit.delta);
    CHECK(r1.constant() == r2.constant());
}
