#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcz/common.hpp"
#include "mcz/errors.hpp"

namespace mcz {

/// Reproducible uniforms: raw mt19937_64 words mapped by hand so streams are
/// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double u01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

    /// Uniform direction on the unit sphere in R^d (rejection from the cube).
    std::vector<double> direction(int d) {
        std::vector<double> v(d);
        while (true) {
            double r2 = 0.0;
            for (auto& x : v) {
                x = uniform(-1.0, 1.0);
                r2 += x * x;
            }
            if (r2 > 1e-12 && r2 <= 1.0) {
                const double inv = 1.0 / std::sqrt(r2);
                for (auto& x : v) x *= inv;
                return v;
            }
        }
    }

private:
    std::mt19937_64 eng_;
};

/// Evaluation contract for an m-linear singular kernel K(x, y_1, ..., y_m) on
/// R^n, together with its declared constants and boundedness metadata.
struct KernelSpec {
    enum class Family { generic, homogeneous, tensor_hilbert, riesz };

    int n = 1;
    int m = 1;
    /// x has n entries; ys has m*n entries (y_1 ... y_m concatenated).
    std::function<double(const double* x, const double* ys)> eval;

    std::optional<double> size_constant;    // C_K, when declared
    std::optional<double> holder_exponent;  // delta in (0,1], when declared
    std::optional<double> operator_norm;    // ||T||_{(L^2)^m -> L^{2/m}}, cited or estimated
    std::string boundedness_note;
    bool is_known_bounded = false;

    Family family = Family::generic;
    double scale = 1.0;          // c for the homogeneous model
    bool include_pi = true;      // tensor factors 1/(pi (x - y)) vs 1/(x - y)
    int riesz_direction = 1;     // 1-based index into the stacked difference vector

    double operator()(const double* x, const double* ys) const { return eval(x, ys); }

    std::string name() const {
        switch (family) {
            case Family::homogeneous: return "homogeneous";
            case Family::tensor_hilbert: return "tensor-hilbert";
            case Family::riesz: return "riesz";
            default: return "generic";
        }
    }
};

inline double separation_sum(int n, int m, const double* x, const double* ys) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) {
        double d2 = 0.0;
        for (int a = 0; a < n; ++a) d2 += sq(x[a] - ys[i * n + a]);
        s += std::sqrt(d2);
    }
    return s;
}

/// K(x, y) = c / (sum_i |x - y_i|)^(nm). Saturates the size condition with
/// C_K = c; positive, so not an L^2-bounded operator kernel.
inline KernelSpec make_homogeneous_model(int n, int m, double c) {
    if (!(c > 0.0)) throw config_error("make_homogeneous_model: c must be positive");
    KernelSpec k;
    k.n = n;
    k.m = m;
    k.family = KernelSpec::Family::homogeneous;
    k.scale = c;
    k.size_constant = c;
    k.holder_exponent = 1.0;
    k.is_known_bounded = false;
    k.boundedness_note = "positive kernel; no (L^2)^m -> L^{2/m} bound";
    const int nm = n * m;
    k.eval = [n, m, c, nm](const double* x, const double* ys) {
        const double s = separation_sum(n, m, x, ys);
        return c / std::pow(s, nm);
    };
    return k;
}

/// K(x, y) = prod_i 1/(pi (x - y_i)) on R^1: the operator is the product of
/// Hilbert transforms, with closed-form action on indicators. Generalized
/// Holder plus ||Hf||_2 = ||f||_2 give operator norm 1.
inline KernelSpec make_tensor_hilbert(int m, bool include_pi = true) {
    if (m < 1) throw config_error("make_tensor_hilbert: m must be at least 1");
    KernelSpec k;
    k.n = 1;
    k.m = m;
    k.family = KernelSpec::Family::tensor_hilbert;
    k.include_pi = include_pi;
    k.holder_exponent = 1.0;
    k.is_known_bounded = true;
    k.operator_norm = include_pi ? 1.0 : std::pow(M_PI, m);
    k.boundedness_note = "product of Hilbert transforms; generalized Holder and Plancherel";
    const double factor = include_pi ? 1.0 / M_PI : 1.0;
    k.eval = [m, factor](const double* x, const double* ys) {
        double v = 1.0;
        for (int i = 0; i < m; ++i) v *= factor / (x[0] - ys[i]);
        return v;
    };
    return k;
}

/// K(x, y) = u_j / |u|^(nm+1) with u = (x-y_1, ..., x-y_m) stacked in R^(nm).
inline KernelSpec make_multilinear_riesz(int n, int m, int direction) {
    if (direction < 1 || direction > n * m)
        throw config_error("make_multilinear_riesz: direction must be in [1, n*m]");
    KernelSpec k;
    k.n = n;
    k.m = m;
    k.family = KernelSpec::Family::riesz;
    k.riesz_direction = direction;
    k.holder_exponent = 1.0;
    k.is_known_bounded = true;
    k.boundedness_note = "multilinear Riesz transform; bounded by the standard theory (cited)";
    const int nm = n * m;
    k.eval = [n, m, nm, direction](const double* x, const double* ys) {
        double r2 = 0.0;
        double uj = 0.0;
        for (int i = 0; i < m; ++i)
            for (int a = 0; a < n; ++a) {
                const double d = x[a] - ys[i * n + a];
                r2 += d * d;
                if (i * n + a == direction - 1) uj = d;
            }
        return uj / std::pow(std::sqrt(r2), nm + 1);
    };
    return k;
}

struct SamplerConfig {
    std::uint64_t seed = 20150621;
    int samples = 256;
    int scales = 6;           // displacement scales per sample in the smoothness fit
    double log2_scale_min = -20.0;
    double log2_scale_max = 20.0;
};

namespace detail {

struct SampleTuple {
    std::vector<double> x;
    std::vector<double> ys;
};

inline SampleTuple admissible_tuple(const KernelSpec& k, Rng& rng, double log2_lo, double log2_hi) {
    SampleTuple t;
    const double scale = std::exp2(rng.uniform(log2_lo, log2_hi));
    t.x.resize(k.n);
    for (auto& v : t.x) v = scale * rng.uniform(-1.0, 1.0);
    t.ys.resize(k.n * k.m);
    for (int i = 0; i < k.m; ++i) {
        auto dir = rng.direction(k.n);
        const double r = scale * rng.uniform(0.1, 1.0);
        for (int a = 0; a < k.n; ++a) t.ys[i * k.n + a] = t.x[a] + r * dir[a];
    }
    return t;
}

inline std::string describe_tuple(const SampleTuple& t) {
    std::ostringstream os;
    os << "x=(";
    for (std::size_t i = 0; i < t.x.size(); ++i) os << (i ? "," : "") << t.x[i];
    os << ") y=(";
    for (std::size_t i = 0; i < t.ys.size(); ++i) os << (i ? "," : "") << t.ys[i];
    os << ")";
    return os.str();
}

} // namespace detail

/// Estimate C_K: the sampled supremum of |K| (sum_i |x-y_i|)^(nm) over
/// admissible tuples drawn log-uniformly across scales.
inline double check_size(const KernelSpec& k, const SamplerConfig& cfg) {
    if (cfg.samples < 1) throw config_error("check_size: need at least one sample");
    Rng rng(cfg.seed);
    double sup = 0.0;
    for (int s = 0; s < cfg.samples; ++s) {
        auto t = detail::admissible_tuple(k, rng, cfg.log2_scale_min, cfg.log2_scale_max);
        const double v = k(t.x.data(), t.ys.data());
        if (!std::isfinite(v))
            throw evaluator_error("check_size: evaluator non-finite at " + detail::describe_tuple(t));
        const double sep = separation_sum(k.n, k.m, t.x.data(), t.ys.data());
        sup = std::max(sup, std::fabs(v) * std::pow(sep, k.n * k.m));
    }
    return sup;
}

struct SmoothnessFit {
    double delta = 0.0;     // fitted Holder exponent
    double constant = 0.0;  // sup of ratio * sep^(nm+delta) / rho^delta
};

struct SmoothnessReport {
    SmoothnessFit x_fit;
    std::vector<SmoothnessFit> y_fits;  // one per slot
    bool zero_kernel = false;           // all sampled differences vanished

    double delta() const {
        std::vector<double> d{x_fit.delta};
        for (const auto& f : y_fits) d.push_back(f.delta);
        std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
        return d[d.size() / 2];
    }
    double constant() const {
        double c = x_fit.constant;
        for (const auto& f : y_fits) c = std::max(c, f.constant);
        return c;
    }
};

namespace detail {

/// Median of per-sample least-squares slopes of log(diff) against log(rho),
/// displacing either x (slot = -1) or y_slot. Displacements stay inside the
/// half-max-separation region by construction: rho = 2^-q * (max_i |x-y_i|)/2.
inline std::optional<SmoothnessFit> fit_variant(const KernelSpec& k, const SamplerConfig& cfg, int slot,
                                                std::uint64_t seed_salt) {
    if (cfg.scales < 3) throw config_error("check_smoothness: need at least 3 displacement scales");
    Rng rng(cfg.seed + seed_salt);
    std::vector<double> slopes;
    double constant = 0.0;
    for (int s = 0; s < cfg.samples; ++s) {
        auto t = admissible_tuple(k, rng, -4.0, 4.0);
        const double base = k(t.x.data(), t.ys.data());
        if (!std::isfinite(base))
            throw evaluator_error("check_smoothness: evaluator non-finite at " + describe_tuple(t));
        double maxsep = 0.0;
        for (int i = 0; i < k.m; ++i) {
            double d2 = 0.0;
            for (int a = 0; a < k.n; ++a) d2 += sq(t.x[a] - t.ys[i * k.n + a]);
            maxsep = std::max(maxsep, std::sqrt(d2));
        }
        auto dir = rng.direction(k.n);
        const double sep = separation_sum(k.n, k.m, t.x.data(), t.ys.data());

        std::vector<double> lx, ly;
        for (int q = 3; q < 3 + cfg.scales; ++q) {
            const double rho = std::ldexp(maxsep / 2.0, -q);
            auto xs = t.x;
            auto ys = t.ys;
            if (slot < 0)
                for (int a = 0; a < k.n; ++a) xs[a] += rho * dir[a];
            else
                for (int a = 0; a < k.n; ++a) ys[slot * k.n + a] += rho * dir[a];
            const double v = k(xs.data(), ys.data());
            if (!std::isfinite(v)) continue;
            const double diff = std::fabs(v - base);
            if (diff <= 0.0) continue;
            lx.push_back(std::log(rho));
            ly.push_back(std::log(diff));
        }
        if (lx.size() < 3) continue;
        // least squares slope & intercept
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= lx.size();
        my /= ly.size();
        double sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < lx.size(); ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        const double slope = sxy / sxx;
        slopes.push_back(slope);
        for (std::size_t i = 0; i < lx.size(); ++i) {
            const double diff = std::exp(ly[i]);
            const double rho = std::exp(lx[i]);
            constant = std::max(constant, diff * std::pow(sep, k.n * k.m + slope) / std::pow(rho, slope));
        }
    }
    if (slopes.empty()) return std::nullopt; // nothing moved: flat (zero) kernel
    std::nth_element(slopes.begin(), slopes.begin() + slopes.size() / 2, slopes.end());
    return SmoothnessFit{slopes[slopes.size() / 2], constant};
}

} // namespace detail

/// Fit the Holder exponent of both smoothness variants (x displacement and
/// each y_j displacement) from finite differences at dyadic scales.
inline SmoothnessReport check_smoothness(const KernelSpec& k, const SamplerConfig& cfg) {
    if (cfg.samples < 1) throw config_error("check_smoothness: need at least one sample");
    SmoothnessReport rep;
    auto xf = detail::fit_variant(k, cfg, -1, 0);
    bool any = xf.has_value();
    rep.x_fit = xf.value_or(SmoothnessFit{});
    for (int j = 0; j < k.m; ++j) {
        auto yf = detail::fit_variant(k, cfg, j, 1000 + j);
        any = any || yf.has_value();
        rep.y_fits.push_back(yf.value_or(SmoothnessFit{}));
    }
    rep.zero_kernel = !any;
    return rep;
}

} // namespace mcz
