#include "sds/geometry.hpp"

#include "sds/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdint>
#include <sstream>

namespace sds {

namespace {

template <class F>
double bracketed_root(F f, double lo, double hi) {
    std::uintmax_t iters = 200;
    boost::math::tools::eps_tolerance<double> tol(52);
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, tol, iters);
    return 0.5 * (a + b);
}

}  // namespace

SdSGeometry build_geometry(double lambda, double mass) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidArgument("geometry", "cosmological constant must be positive and finite");
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw InvalidArgument("geometry", "mass must be positive and finite");
    const double inv_sqrt = 1.0 / std::sqrt(lambda);
    // A relative margin keeps the rounded extremal value 1/(3 sqrt(lambda)) on the rejected side.
    if (!(3.0 * mass < inv_sqrt * (1.0 - 1e-12))) {
        std::ostringstream os;
        os << "3m = " << 3.0 * mass << " >= 1/sqrt(lambda) = " << inv_sqrt;
        throw NonSubextremal("geometry", os.str());
    }

    SdSGeometry g;
    g.lambda = lambda;
    g.mass = mass;
    auto p = [&](double r) { return g.cubic(r); };
    // p(0) = 2m > 0, p(3m) < 0, p(1/sqrt L) < 0, p(2/sqrt L) > 0, p(-1/sqrt L) > 0, p(-2/sqrt L) < 0.
    g.r_h = bracketed_root(p, 0.0, 3.0 * mass);
    g.r_c = bracketed_root(p, inv_sqrt, 2.0 * inv_sqrt);
    g.r_bar = bracketed_root(p, -2.0 * inv_sqrt, -inv_sqrt);

    g.kappa_c = surface_gravity(g);
    auto [ah, ac] = kruskal_exponents(g);
    g.alpha_h = ah;
    g.alpha_bar_c = ac;
    return g;
}

void require_expanding(const SdSGeometry& g, double r, const char* module) {
    if (!(r > g.r_c) || !std::isfinite(r)) {
        std::ostringstream os;
        os << "radius " << r << " is not in the expanding region r > r_c = " << g.r_c;
        throw OutsideExpandingRegion(module, os.str());
    }
}

RadialCoefficients radial_coefficients(const SdSGeometry& g, double r) {
    require_expanding(g, r, "geometry");
    const double d = g.delta(r);
    return {r, d, 1.0 / std::sqrt(d), g.delta_prime(r)};
}

double surface_gravity(const SdSGeometry& g) {
    return 0.5 * (g.lambda / 3.0) * (g.r_c - g.r_h) * (g.r_c + std::abs(g.r_bar)) / g.r_c;
}

double surface_gravity_at(const SdSGeometry& g, double root) {
    return 0.5 * std::abs(g.delta_prime(root));
}

std::pair<double, double> kruskal_exponents(const SdSGeometry& g) {
    const double kc = surface_gravity_at(g, g.r_c);
    const double kh = surface_gravity_at(g, g.r_h);
    const double kb = surface_gravity_at(g, g.r_bar);
    return {kc / kh, kc / kb};
}

double alpha_h_root_formula(const SdSGeometry& g) {
    const double rb = std::abs(g.r_bar);
    return (g.r_h / g.r_c) * (g.r_c + rb) / (g.r_h + rb);
}

double KruskalChart::omega_sq(double r) const {
    const double rb = std::abs(g_.r_bar);
    return g_.lambda / 3.0 / (g_.kappa_c * g_.kappa_c * r) *
           std::pow(r - g_.r_h, 1.0 + g_.alpha_h) * std::pow(r + rb, 1.0 + g_.alpha_bar_c);
}

double KruskalChart::uv_of_r(double r) const {
    if (!(r >= g_.r_c)) require_expanding(g_, r, "geometry");
    const double rb = std::abs(g_.r_bar);
    return (r - g_.r_c) / (std::pow(r - g_.r_h, g_.alpha_h) * std::pow(r + rb, g_.alpha_bar_c));
}

double KruskalChart::r_of_uv(double uv) const {
    if (!(uv >= 0.0 && uv < 1.0))
        throw OutsideExpandingRegion("geometry", "uv must lie in [0, 1) on the expanding region");
    if (uv == 0.0) return g_.r_c;
    double hi = 2.0 * g_.r_c;
    while (uv_of_r(hi) < uv) {
        hi *= 2.0;
        if (!std::isfinite(hi)) throw OutsideExpandingRegion("geometry", "uv too close to 1");
    }
    return bracketed_root([&](double r) { return uv_of_r(r) - uv; }, g_.r_c, hi);
}

std::pair<double, double> KruskalChart::map(double r, double t) const {
    require_expanding(g_, r, "geometry");
    const double uv = uv_of_r(r);
    const double s = std::exp(-g_.kappa_c * t);
    const double root = std::sqrt(uv);
    return {root * s, root / s};
}

}  // namespace sds
