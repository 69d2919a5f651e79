#pragma once

// Independent oracles and hand-rolled random generators shared by the test binaries.

#include "sds/geometry.hpp"
#include "sds/spectral.hpp"
#include "sds/evolution.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/spherical_harmonic.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using sds::cplx;

// Plain bisection to the last representable bit.
inline double bisect(const std::function<double(double)>& f, double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 2000; ++i) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const double fm = f(m);
        if (fm == 0.0) return m;
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

struct Roots {
    double r_h, r_c, r_bar;
};

inline Roots cubic_roots(double lambda, double m) {
    auto p = [&](double r) { return lambda / 3.0 * r * r * r - r + 2.0 * m; };
    const double s = 1.0 / std::sqrt(lambda);
    // p is positive at 0 and at 2s, negative at s; the third root lies below -s.
    return {bisect(p, 0.0, s), bisect(p, s, 2.0 * s), bisect(p, -2.0 * s, -s)};
}

inline double delta(double lambda, double m, double r) { return lambda / 3.0 * r * r - 1.0 + 2.0 * m / r; }

// int_{a}^{b} ds / (s^2 Delta(s)) by adaptive Gauss-Kronrod in rho = 1/s.
inline double radial_first_integral(double lambda, double m, double a, double b) {
    auto f = [&](double rho) {
        const double s = 1.0 / rho;
        return 1.0 / (s * s * delta(lambda, m, s)) * s * s;
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 1.0 / b, 1.0 / a, 15, 1e-14);
}

// Double-loop synthesis with Boost spherical harmonics.
inline cplx synthesize(const sds::CylinderField& f, double t, double theta, double phi) {
    const sds::Band& b = f.band();
    cplx s = 0.0;
    for (int k = -b.max_k; k <= b.max_k; ++k)
        for (int l = 0; l <= b.max_ell; ++l)
            for (int m = -l; m <= l; ++m) {
                const cplx c = f.at(k, l, m);
                if (c == cplx(0.0)) continue;
                const double w = 2.0 * std::numbers::pi * k / b.period;
                s += c * std::exp(cplx(0.0, w * t)) * boost::math::spherical_harmonic(l, m, theta, phi) /
                     std::sqrt(b.period);
            }
    return s;
}

// (1/r^2)(r^2 Delta u')' expanded as Delta u'' + (2 Delta / r + Delta') u'.
inline cplx box_expanded(double lambda, double m, double omega, int ell, double r, cplx u, cplx du, cplx ddu) {
    const double d = delta(lambda, m, r);
    const double dp = 2.0 * lambda / 3.0 * r - 2.0 * m / (r * r);
    return -(d * ddu + (2.0 * d / r + dp) * du) - omega * omega / d * u - ell * (ell + 1.0) / (r * r) * u;
}

}  // namespace oracle

namespace gen {

using sds::cplx;

// Subextremal (lambda, m): lambda log-uniform in [0.1, 10], 3 m sqrt(lambda) uniform in [0.05, 0.95].
inline std::pair<double, double> subextremal(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ul(std::log(0.1), std::log(10.0)), ux(0.05, 0.95);
    const double lambda = std::exp(ul(rng));
    const double m = ux(rng) / (3.0 * std::sqrt(lambda));
    return {lambda, m};
}

inline cplx gaussian_c(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return {n(rng), n(rng)};
}

// n random distinct-or-not modes of the band with Gaussian amplitudes.
inline sds::FieldState sparse_state(std::mt19937_64& rng, const sds::Band& b, double r, int n) {
    sds::FieldState fs(r, b, false);
    std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
    for (int j = 0; j < n; ++j) {
        const std::size_t i = pick(rng);
        fs.u[i] = gaussian_c(rng);
        fs.du[i] = gaussian_c(rng);
    }
    return fs;
}

inline sds::ModeIndex mode(std::mt19937_64& rng, const sds::Band& b) {
    std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
    return b.mode(pick(rng));
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
    return std::exp(u(rng));
}

}  // namespace gen
