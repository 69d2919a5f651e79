#pragma once

#include "sds/evolution.hpp"
#include "sds/geometry.hpp"

#include <string>
#include <vector>

#include <json.hpp>

namespace sds {

enum class MultiplierKind { DR, M };
enum class CommutatorKind { None, Xs, Xw, YXs };

const char* to_string(MultiplierKind k);
const char* to_string(CommutatorKind k);

// Optional equation context: when the state solves box psi = F, the source
// supplies F per mode so that commuted fields use the inhomogeneous ODE.
struct EquationContext {
    const SdSGeometry* geometry = nullptr;
    FieldSource source;
};

// Flux of J^X[w] through Sigma_r in mode space,
// (1/2) sum [ r^2 Delta |w'|^2 + (r^2 w^2/Delta + l(l+1)) |w|^2 ], times r^2 Delta for M.
double flux(const FieldState& fs, const EquationContext& ctx, MultiplierKind mult,
            CommutatorKind comm = CommutatorKind::None);
double flux(const FieldState& fs, const SdSGeometry& g, MultiplierKind mult,
            CommutatorKind comm = CommutatorKind::None);

// Bulk term with d(flux)/dr = -bulk along homogeneous solutions.
// DR: sum [ ((2L/3) r^3 - r + m) |u'|^2 + (r - 3m) phi^4 w^2 |u|^2 ]
// M:  -sum [ 2 r^3 w^2 + l(l+1) ((2L/3) r^3 - r + m) ] |u|^2
double bulk_current(const FieldState& fs, const SdSGeometry& g, MultiplierKind mult);

// Max relative defect between a finite-difference d/dr of the flux and -bulk,
// sampled along a homogeneous solution on [r1, r2].
double divergence_identity_check(const SdSGeometry& g, double omega, int ell, cplx u0, cplx du0,
                                 double r1, double r2, MultiplierKind mult, const IntegratorConfig& cfg,
                                 int samples = 8);

struct CommutedBoxDefect {
    double defect = 0;           // |LHS - RHS| / scale
    double middle_coefficient = 0;  // (f^2/r^2) d_r^2 (r^2 Delta / f)
};

// Two sides of the commutation identity for X = f d_r on a homogeneous mode at r.
CommutedBoxDefect commuted_box_check(const SdSGeometry& g, CommutatorKind f_choice, double omega, int ell,
                                     cplx u, cplx du, double r);

struct LedgerRow {
    double r;
    MultiplierKind mult;
    CommutatorKind comm;
    double flux;
    double bulk;
};

struct MonotonicityReport {
    std::vector<LedgerRow> ledger;
    bool dr_nonincreasing = true;
    bool m_nondecreasing = true;
    double xs_ratio = 0;   // max over r of flux(DR,Xs)(r) / flux(DR,Xs)(r0)
    double xw_ratio = 0;   // same for r^-4 flux(DR,Xw)
    double yxs_ratio = 0;  // same for flux(DR,YXs)
    bool higher_order_bounded = true;
    nlohmann::json verdict_json() const;
};

// Homogeneous trajectory sampled at increasing radii. slack is the relative tolerance
// used for the monotonicity comparisons; bound is the constant for the higher-order ratios.
MonotonicityReport monotonicity_report(const std::vector<FieldState>& traj, const SdSGeometry& g,
                                       double slack, double bound = 1e6);

std::string ledger_csv(const std::vector<LedgerRow>& rows);

// sup_grid |psi|^2 r^3 divided by the L^2(Sigma_r) norms of psi, T psi, Omega psi,
// Omega T psi, Omega Omega psi.
double sobolev_ratio(const FieldState& fs, const SdSGeometry& g);

}  // namespace sds
