#pragma once

#include "sds/geometry.hpp"
#include "sds/spectral.hpp"

#include <optional>
#include <vector>

namespace sds {

// psi_asymp = psi0 + psi2/r^2 + psi3/r^3.
struct AsymptoticSolution {
    CylinderField psi0;
    CylinderField psi2;
    CylinderField psi3;
    std::optional<CylinderField> psi31;
    SdSGeometry geometry;
};

struct ModeValue {
    cplx u;
    cplx du;
};

AsymptoticSolution build_asymptotic(const CylinderField& psi0, const CylinderField& psi3,
                                    const SdSGeometry& g);

// Per-mode psi2 coefficient relative to psi0: (3/(2 lambda)) ((3/lambda) w^2 + l(l+1)).
double psi2_factor(double omega, int ell, double lambda);

ModeValue evaluate_asymptotic(const AsymptoticSolution& a, std::size_t mode, double r);
ModeValue evaluate_asymptotic(const AsymptoticSolution& a, const ModeIndex& mode, double r);

// Mode coefficient of box_g applied to exp(i w t) Y_lm times a radial profile with
// value u and derivatives du, ddu at r.
cplx box_mode(const SdSGeometry& g, double omega, int ell, double r, cplx u, cplx du, cplx ddu);

// box_g of a * r^{-n} in the (w, ell) mode.
cplx box_of_monomial(int n, double omega, int ell, double r, const SdSGeometry& g, cplx a = 1.0);

// box_g of a0 + a2/r^2 + a3/r^3 in the (w, ell) mode; exact.
cplx box_asymptotic_mode(const SdSGeometry& g, double omega, int ell, cplx a0, cplx a2, cplx a3,
                         double r);

struct Residual {
    std::vector<cplx> modes;
    double weighted_norm = 0.0;
};

// Exact box_g psi_asymp per mode and || r phi^{1/2} box psi_asymp ||_{L^2(Sigma_r)}.
Residual residual(const AsymptoticSolution& a, double r);

}  // namespace sds
