#pragma once

#include "sds/geometry.hpp"
#include "sds/spectral.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sds {

struct ModeState {
    ModeIndex mode;
    double r = 0;
    cplx u;
    cplx du;
};

// Snapshot of psi and d_r psi on Sigma_r, one entry per mode of the band.
struct FieldState {
    double r = 0;
    Band band;
    bool real_flag = false;
    std::vector<cplx> u;
    std::vector<cplx> du;

    FieldState() = default;
    FieldState(double r_, const Band& b, bool real = false)
        : r(r_), band(b), real_flag(real), u(b.size()), du(b.size()) {}
    std::size_t size() const { return u.size(); }
    ModeState state(std::size_t i) const { return {band.mode(i), r, u[i], du[i]}; }
};

enum class Variable { radius, inverse_radius };

struct IntegratorConfig {
    double rel_tol = 1e-12;
    double abs_tol = 1e-20;
    Variable variable = Variable::inverse_radius;
    double switch_radius = 0.0;  // 0 means 2 r_c
    long max_steps = 200000;
    int threads = 1;
};

void validate(const IntegratorConfig& cfg);

// Mode coefficient of box_g psi as a function of r; the remainder equation uses
// source = -box_g psi_asymp.
using ModeSource = std::function<cplx(double r)>;
using FieldSource = std::function<cplx(std::size_t mode, double r)>;

struct Derivs {
    cplx du;
    cplx ddu;
};

// First-order system of (r^2 Delta u')' = -(r^2/Delta) w^2 u - l(l+1) u - r^2 source.
Derivs ode_rhs(const SdSGeometry& g, double omega, int ell, double r, cplx u, cplx du, cplx source);

// u''' along a homogeneous solution, from the r-derivative of the equation.
cplx third_derivative(const SdSGeometry& g, double omega, int ell, double r, cplx u, cplx du);

struct EvolveStats {
    long steps = 0;
    long rejected = 0;
    long evaluations = 0;
};

ModeState evolve(const SdSGeometry& g, double omega, const ModeState& s, double r_target,
                 const ModeSource& source, const IntegratorConfig& cfg, EvolveStats* stats = nullptr);
ModeState evolve(const SdSGeometry& g, const Band& band, const ModeState& s, double r_target,
                 const ModeSource& source, const IntegratorConfig& cfg, EvolveStats* stats = nullptr);

// Every mode evolved independently; for reality-flagged states only one mode of each
// conjugate pair is integrated and its partner is filled by conjugation.
FieldState evolve_field(const SdSGeometry& g, const FieldState& fs, double r_target,
                        const FieldSource& source, const IntegratorConfig& cfg);

// Deterministic static partition of [0, n) over worker threads.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// CSV columns k, ell, em, r, re_u, im_u, re_du, im_du.
std::string field_state_csv(const std::vector<FieldState>& states);
FieldState field_state_from_csv(const std::string& text, const Band& band, bool real_flag);

FieldState zero_state(double r, const Band& band, bool real_flag);

// Method-of-lines finite differences on a t x theta x phi grid; the independent
// oracle for the spectral reduction. Arrays are ordered [it][ith][iph].
struct GridSpec {
    int nt = 64;
    int ntheta = 17;
    int nphi = 8;
    double period = 2.0 * 3.14159265358979323846;
    double dr = 0.0;  // 0 selects a CFL-safe step
};

struct GridField {
    GridSpec spec;
    double r = 0;
    std::vector<double> psi;
    std::vector<double> dpsi;
    std::vector<double> ts() const;
    std::vector<double> thetas() const;
    std::vector<double> phis() const;
};

GridField grid_oracle(const SdSGeometry& g, const GridField& initial, double r_target);

}  // namespace sds
