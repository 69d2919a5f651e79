#pragma once

#include "sds/evolution.hpp"
#include "sds/geometry.hpp"
#include "sds/spectral.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sds {

enum class ClassTag { G1, G2 };
const char* to_string(ClassTag c);

// Conformal metric -(1/A) drho^2 + (1/Bt) dt^2 + (1/Bs) gamma, so the inverse metric has
// g^{rho rho} = -A, g^{tt} = Bt and g^{ij} = Bs gamma^{ij}; g^{rho i} = 0 for every built-in model.
// Mode ODE of box~ psi + (2A/rho) d_rho psi = G:
//   -A u'' + (2A/rho - C) u' - (Bt w^2 + Bs l(l+1)) u = G,
// with C = g^{mn} Gamma^rho_{mn} = A'/2 - A Bt'/(2 Bt) - A Bs'/Bs.
class MetricModel {
public:
    virtual ~MetricModel() = default;

    double lambda() const { return lambda_; }
    ClassTag class_tag() const { return tag_; }
    virtual std::string kind() const = 0;

    virtual double A(double rho) const = 0;
    virtual double dA(double rho) const = 0;
    virtual double Bt(double rho) const = 0;
    virtual double dBt(double rho) const = 0;
    virtual double Bs(double rho) const = 0;
    virtual double dBs(double rho) const = 0;

    double g_rhorho(double rho) const { return -A(rho); }
    double christoffel_rho(double rho) const;
    // Taylor coefficients at rho = 0, orders 0..3.
    const std::array<double, 4>& taylor_A() const { return tA_; }
    const std::array<double, 4>& taylor_Bt() const { return tBt_; }
    const std::array<double, 4>& taylor_Bs() const { return tBs_; }
    // Constant term of the contracted Christoffel symbol, from the Taylor data.
    double drift() const;
    // Largest first-order Taylor coefficient (with the drift), used for class detection.
    double first_order_norm() const;

    // Geometry when the model is Schwarzschild-de Sitter in rho = 1/r.
    virtual std::optional<SdSGeometry> sds_geometry() const { return std::nullopt; }
    virtual nlohmann::json to_json() const = 0;

protected:
    void finish(ClassTag declared, bool check_declared);
    double lambda_ = 0;
    ClassTag tag_ = ClassTag::G2;
    std::array<double, 4> tA_{}, tBt_{}, tBs_{};
};

using ModelPtr = std::shared_ptr<const MetricModel>;

ClassTag detect_class(const MetricModel& m, double tol = 1e-12);

ModelPtr sds_in_rho(const SdSGeometry& g);
ModelPtr synthetic_g1(double lambda, double epsilon = 0.1);
// Polynomial coefficient arrays in rho for A, Bt and Bs.
ModelPtr polynomial_model(double lambda, const std::vector<double>& a, const std::vector<double>& bt,
                          const std::vector<double>& bs, ClassTag declared);
ModelPtr model_from_json(const nlohmann::json& j);

// psi_asymp = psi0 + rho^2 psi2 + rho^3 log(rho) psi31 + rho^3 psi3.
struct ConformalAsymptoticSolution {
    CylinderField psi0, psi2, psi3, psi31;
    ModelPtr model;
};

ConformalAsymptoticSolution build_asymptotic_conformal(const CylinderField& psi0, const CylinderField& psi3,
                                                       const ModelPtr& model);

struct ConformalModeValue {
    cplx u;
    cplx du;  // d/drho
};
ConformalModeValue evaluate_conformal(const ConformalAsymptoticSolution& a, std::size_t mode, double rho);

// Mode value of the conformal operator applied to a radial profile.
cplx conformal_operator(const MetricModel& m, double omega, int ell, double rho, cplx u, cplx du, cplx ddu);

// Per-mode conformal operator of psi_asymp at rho, exact.
std::vector<cplx> conformal_residual(const ConformalAsymptoticSolution& a, double rho);
// L^2(S^1 x S^2) norm of the residual (Parseval over modes).
double conformal_residual_norm(const ConformalAsymptoticSolution& a, double rho);

struct ResidualOrderReport {
    std::vector<double> rhos;
    std::vector<double> norms;
    double power_slope = 0;     // R ~ rho^s (c0 + c1 rho) per mode, shared s
    double power_misfit = 0;    // rms relative misfit of that fit
    double log_slope = 0;       // R ~ rho^s (c0 + c1 rho + (c2 + c3 rho) log rho)
    double log_misfit = 0;
    bool log_detected = false;
};

ResidualOrderReport conformal_residual_order(const ConformalAsymptoticSolution& a, const std::vector<double>& rhos);

struct ConformalState {
    double rho = 0;
    Band band;
    bool real_flag = false;
    std::vector<cplx> u;
    std::vector<cplx> du;  // d/drho
    ConformalState() = default;
    ConformalState(double rho_, const Band& b, bool real = false)
        : rho(rho_), band(b), real_flag(real), u(b.size()), du(b.size()) {}
    std::size_t size() const { return u.size(); }
};

// Integrates the mode ODE of the model from s.rho to rho_target with source G per mode.
ConformalState conformal_evolve(const MetricModel& m, const ConformalState& s, double rho_target,
                                const FieldSource& source, const IntegratorConfig& cfg);

// 1/2 rho^-4 sum S A [A |u'|^2 + (Bt w^2 + Bs l(l+1)) |u|^2], S = (A Bt Bs^2)^(-1/2).
double weighted_flux(const MetricModel& m, const ConformalState& s);

ConformalState to_conformal(const FieldState& fs);
FieldState from_conformal(const ConformalState& cs);

struct WeightedBackwardReport {
    ConformalState field_at_rho0;
    std::vector<ConformalState> per_cutoff;
    std::vector<double> cutoffs;      // rho_R values, decreasing
    std::vector<double> gaps;         // sqrt of weighted flux of successive differences
    bool gaps_decreasing = true;
    double rate_fit = 0;              // log-log slope of gaps against R = 1/rho_R
    std::optional<double> sds_discrepancy;  // relative mismatch with the r-coordinate pipeline
    nlohmann::json to_json() const;
};

// Backward construction in rho: zero remainder at each rho_R, source minus the residual of
// psi_asymp, integrated up to rho0; limits by polynomial extrapolation in rho_R.
WeightedBackwardReport weighted_backward_check(const ModelPtr& model, const CylinderField& psi0,
                                               const CylinderField& psi3, double rho0,
                                               const std::vector<double>& cutoffs, const IntegratorConfig& cfg);

}  // namespace sds
