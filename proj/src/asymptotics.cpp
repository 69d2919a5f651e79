#include "sds/asymptotics.hpp"

#include "sds/errors.hpp"

#include <cmath>

namespace sds {

double psi2_factor(double omega, int ell, double lambda) {
    return -1.5 / lambda * conformal_laplacian_multiplier(omega, ell, lambda);
}

AsymptoticSolution build_asymptotic(const CylinderField& psi0, const CylinderField& psi3,
                                    const SdSGeometry& g) {
    require_same_band(psi0, psi3, "asymptotics");
    AsymptoticSolution a{psi0, psi0, psi3, std::nullopt, g};
    const Band& b = psi0.band();
    for (std::size_t i = 0; i < psi0.size(); ++i) {
        const ModeIndex m = b.mode(i);
        a.psi2[i] = psi2_factor(b.omega(m.k), m.ell, g.lambda) * psi0[i];
    }
    return a;
}

ModeValue evaluate_asymptotic(const AsymptoticSolution& a, std::size_t i, double r) {
    require_expanding(a.geometry, r, "asymptotics");
    const double r2 = r * r, r3 = r2 * r;
    const cplx a0 = a.psi0[i], a2 = a.psi2[i], a3 = a.psi3[i];
    return {a0 + a2 / r2 + a3 / r3, -2.0 * a2 / r3 - 3.0 * a3 / (r3 * r)};
}

ModeValue evaluate_asymptotic(const AsymptoticSolution& a, const ModeIndex& m, double r) {
    return evaluate_asymptotic(a, a.psi0.band().index(m.k, m.ell, m.em), r);
}

cplx box_mode(const SdSGeometry& g, double omega, int ell, double r, cplx u, cplx du, cplx ddu) {
    const double d = g.delta(r);
    const double p = r * r * d;
    const double pp = 2.0 * r * d + r * r * g.delta_prime(r);
    const double L = ell * (ell + 1.0);
    return -omega * omega * u / d - (p * ddu + pp * du) / (r * r) - L * u / (r * r);
}

cplx box_of_monomial(int n, double omega, int ell, double r, const SdSGeometry& g, cplx a) {
    require_expanding(g, r, "asymptotics");
    // (r^2 Delta (r^-n)')'/r^2 = (lambda/3) n(n-3) r^-n - n(n-1) r^{-n-2} + 2 m n^2 r^{-n-3}.
    const double L = ell * (ell + 1.0);
    const double rn = std::pow(r, -n);
    const double rad = g.lambda / 3.0 * n * (n - 3.0) * rn - n * (n - 1.0) * rn / (r * r) +
                       2.0 * g.mass * n * n * rn / (r * r * r);
    return a * (-omega * omega * rn / g.delta(r) - rad - L * rn / (r * r));
}

cplx box_asymptotic_mode(const SdSGeometry& g, double omega, int ell, cplx a0, cplx a2, cplx a3,
                         double r) {
    require_expanding(g, r, "asymptotics");
    const double lam = g.lambda, m = g.mass, w2 = omega * omega, L = ell * (ell + 1.0);
    const double ir = 1.0 / r, ir2 = ir * ir, ir3 = ir2 * ir, ir4 = ir2 * ir2, ir5 = ir4 * ir,
                 ir6 = ir3 * ir3;
    const double d = g.delta(r);
    // 1/Delta = (3/lam) r^-2 (1 + x/(1-x)) with x = (3/lam) r^-2 - (6m/lam) r^-3.
    const double x = 3.0 / lam * ir2 - 6.0 * m / lam * ir3;
    const double tail = 3.0 / lam * ir2 * (x / (1.0 - x));
    // The r^-2 order, which vanishes when a2 is the recurrence value.
    const cplx order2 = (2.0 * lam / 3.0 * a2 - (3.0 / lam * w2 + L) * a0) * ir2;
    const cplx from0 = -w2 * a0 * tail;
    const cplx from2 = -w2 * a2 * ir2 / d + a2 * (2.0 * ir4 - 8.0 * m * ir5) - L * a2 * ir4;
    const cplx from3 = -w2 * a3 * ir3 / d + a3 * (6.0 * ir5 - 18.0 * m * ir6) - L * a3 * ir5;
    return order2 + from0 + from2 + from3;
}

Residual residual(const AsymptoticSolution& a, double r) {
    require_expanding(a.geometry, r, "asymptotics");
    Residual res;
    const Band& b = a.psi0.band();
    res.modes.resize(a.psi0.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.psi0.size(); ++i) {
        const ModeIndex m = b.mode(i);
        res.modes[i] =
            box_asymptotic_mode(a.geometry, b.omega(m.k), m.ell, a.psi0[i], a.psi2[i], a.psi3[i], r);
        sum += std::norm(res.modes[i]);
    }
    // Measure r^2 phi^{-1} times weight r^2 phi gives r^4 sum |F|^2.
    res.weighted_norm = r * r * std::sqrt(sum);
    return res;
}

}  // namespace sds
