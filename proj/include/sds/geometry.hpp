#pragma once

#include <utility>

namespace sds {

// Schwarzschild-de Sitter background on the expanding region r > r_c.
struct SdSGeometry {
    double lambda = 0;
    double mass = 0;
    double r_h = 0;
    double r_c = 0;
    double r_bar = 0;
    double kappa_c = 0;
    double alpha_h = 0;
    double alpha_bar_c = 0;

    // Delta(r) = (lambda/3) r^2 - 1 + 2m/r, the inverse square of the lapse.
    double delta(double r) const { return lambda / 3.0 * r * r - 1.0 + 2.0 * mass / r; }
    double delta_prime(double r) const { return 2.0 * lambda / 3.0 * r - 2.0 * mass / (r * r); }
    double delta_second(double r) const { return 2.0 * lambda / 3.0 + 4.0 * mass / (r * r * r); }
    double cubic(double r) const { return lambda / 3.0 * r * r * r - r + 2.0 * mass; }
};

struct RadialCoefficients {
    double r;
    double delta;
    double lapse;
    double delta_prime;
};

SdSGeometry build_geometry(double lambda, double mass);

// Throws OutsideExpandingRegion for r <= r_c.
void require_expanding(const SdSGeometry& g, double r, const char* module);

RadialCoefficients radial_coefficients(const SdSGeometry& g, double r);

// Closed form (1/2)(lambda/3)(r_c - r_h)(r_c + |r_bar|)/r_c.
double surface_gravity(const SdSGeometry& g);

// (1/2)|Delta'(root)| at any of the three roots.
double surface_gravity_at(const SdSGeometry& g, double root);

std::pair<double, double> kruskal_exponents(const SdSGeometry& g);

// alpha_h as the explicit root quotient (r_h/r_c)(r_c+|r_bar|)/(r_h+|r_bar|).
double alpha_h_root_formula(const SdSGeometry& g);

class KruskalChart {
public:
    explicit KruskalChart(const SdSGeometry& g) : g_(g) {}

    const SdSGeometry& geometry() const { return g_; }

    double omega_sq(double r) const;
    double uv_of_r(double r) const;
    // Inverse of uv_of_r on (r_c, inf); uv must lie in [0, 1).
    double r_of_uv(double uv) const;
    // (u, v) with uv = uv_of_r(r) and log|u/v| = -2 kappa_c t.
    std::pair<double, double> map(double r, double t) const;

private:
    SdSGeometry g_;
};

}  // namespace sds
