#pragma once

#include "sds/asymptotics.hpp"
#include "sds/evolution.hpp"

#include <vector>

#include <json.hpp>

namespace sds {

struct ScatteringData {
    CylinderField psi0;
    CylinderField psi3;
};

struct ScatteringResult {
    // Limit R -> infinity of psi_R at r0, by polynomial extrapolation in 1/R over the schedule.
    FieldState field_at_r0;
    // psi_R at r0 for each R of the schedule.
    std::vector<FieldState> per_radius;
    std::vector<double> schedule;
    std::vector<double> cauchy_gaps;
    double rate_fit = 0;
};

// For each R: zero remainder data on Sigma_R, source -box psi_asymp, integrated down to r0.
ScatteringResult solve_backward(const ScatteringData& data, const SdSGeometry& g, double r0,
                                const std::vector<double>& schedule, const IntegratorConfig& cfg);

// Homogeneous forward evolution sampled at each radius; initial.r must equal radii.front().
std::vector<FieldState> forward_solve(const FieldState& initial, const SdSGeometry& g,
                                      const std::vector<double>& radii, const IntegratorConfig& cfg);

struct ExtractionOptions {
    // Extra basis elements rho^4, rho^5, ... absorbing the truncated tail of the expansion.
    int nuisance_terms = 3;
    bool use_derivative = true;
    double max_condition = 1e13;
};

struct ExtractionResult {
    CylinderField psi0, psi2, psi3;
    // L^2 over modes of the fitted r^-1 and r^-3 log r coefficients.
    double spurious_inv_r = 0;
    double spurious_log = 0;
    std::vector<double> fit_radii;
    double condition = 0;
};

ExtractionResult extract_asymptotics(const std::vector<FieldState>& traj, const std::vector<double>& fit_radii,
                                     const SdSGeometry& g, const ExtractionOptions& opt = {});

std::vector<double> geometric_radii(double lo, double hi, int n);

struct RoundTripReport {
    double psi0_error = 0;  // relative H^1 error
    double psi3_error = 0;
    ScatteringResult backward;
    ExtractionResult extraction;
    nlohmann::json to_json() const;
};

struct RoundTripOptions {
    std::vector<double> schedule_fractions{0.125, 0.25, 0.5, 1.0};
    double fit_lo_factor = 300.0;   // times r_c
    double fit_hi_factor = 1.0e4;   // times r_c
    int fit_count = 12;
    ExtractionOptions extraction;
};

RoundTripReport round_trip(const ScatteringData& data, const SdSGeometry& g, double r0, double r_max,
                           const IntegratorConfig& cfg, const RoundTripOptions& opt = {});

struct DecayReport {
    std::vector<double> radii;
    std::vector<double> sup_defect;     // sup over the grid of |psi - psi_asymp|
    std::vector<double> remainder_l2;   // ||psi - psi_asymp||_{L^2(Sigma_r)}
    double sup_slope = 0;
    double l2_slope = 0;
};

// Builds the scattering solution, evolves it to each radius and measures the remainder.
DecayReport pointwise_decay_check(const ScatteringData& data, const SdSGeometry& g, const std::vector<double>& radii,
                                  double r0, const std::vector<double>& schedule, const IntegratorConfig& cfg);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// sqrt(flux(M)) of a - b: the M-norm gap used for the Cauchy sequence.
double m_norm_gap(const FieldState& a, const FieldState& b, const SdSGeometry& g);

// (1/sqrt 2) * integral over [r1, r2] of the weighted residual norm: an upper bound for the
// M-norm gap between the R = r1 and R = r2 solutions.
double residual_tail_bound(const AsymptoticSolution& a, double r1, double r2);

}  // namespace sds
