#include "sds/conformal.hpp"

#include "sds/dop853.hpp"
#include "sds/errors.hpp"
#include "sds/scattering.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace sds {

namespace {

constexpr const char* kModule = "conformal";

std::array<double, 4> taylor_of(const std::vector<double>& p) {
    std::array<double, 4> t{};
    for (std::size_t i = 0; i < 4 && i < p.size(); ++i) t[i] = p[i];
    return t;
}

std::array<double, 4> reciprocal_series(const std::array<double, 4>& p) {
    std::array<double, 4> q{};
    q[0] = 1.0 / p[0];
    for (int n = 1; n < 4; ++n) {
        double s = 0.0;
        for (int k = 1; k <= n; ++k) s += p[k] * q[n - k];
        q[n] = -s / p[0];
    }
    return q;
}

double poly(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
}

double dpoly(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 1;) v = v * x + i * c[i];
    return v;
}

class SdSModel final : public MetricModel {
public:
    explicit SdSModel(const SdSGeometry& g) : g_(g) {
        lambda_ = g.lambda;
        tA_ = {g.lambda / 3.0, 0.0, -1.0, 2.0 * g.mass};
        tBt_ = reciprocal_series(tA_);
        tBs_ = {1.0, 0.0, 0.0, 0.0};
        finish(ClassTag::G2, true);
    }
    std::string kind() const override { return "sds"; }
    double A(double r) const override { return g_.lambda / 3.0 - r * r + 2.0 * g_.mass * r * r * r; }
    double dA(double r) const override { return -2.0 * r + 6.0 * g_.mass * r * r; }
    double Bt(double r) const override { return 1.0 / A(r); }
    double dBt(double r) const override { return -dA(r) / (A(r) * A(r)); }
    double Bs(double) const override { return 1.0; }
    double dBs(double) const override { return 0.0; }
    std::optional<SdSGeometry> sds_geometry() const override { return g_; }
    nlohmann::json to_json() const override {
        return {{"kind", "sds"}, {"lambda", g_.lambda}, {"mass", g_.mass}, {"class_tag", "G2"}};
    }

private:
    SdSGeometry g_;
};

class SyntheticG1 final : public MetricModel {
public:
    SyntheticG1(double lambda, double eps) : eps_(eps) {
        lambda_ = lambda;
        tA_ = {lambda / 3.0, 0.0, 0.0, 0.0};
        for (int n = 0; n < 4; ++n) {
            tBs_[n] = std::pow(-eps, n);
            tBt_[n] = 3.0 / lambda * tBs_[n];
        }
        finish(ClassTag::G1, false);
    }
    std::string kind() const override { return "synthetic_g1"; }
    double A(double) const override { return lambda_ / 3.0; }
    double dA(double) const override { return 0.0; }
    double Bt(double r) const override { return 3.0 / lambda_ / (1.0 + eps_ * r); }
    double dBt(double r) const override { return -3.0 / lambda_ * eps_ / std::pow(1.0 + eps_ * r, 2); }
    double Bs(double r) const override { return 1.0 / (1.0 + eps_ * r); }
    double dBs(double r) const override { return -eps_ / std::pow(1.0 + eps_ * r, 2); }
    nlohmann::json to_json() const override {
        return {{"kind", "synthetic_g1"}, {"lambda", lambda_}, {"epsilon", eps_}, {"class_tag", to_string(tag_)}};
    }

private:
    double eps_;
};

class PolynomialModel final : public MetricModel {
public:
    PolynomialModel(double lambda, std::vector<double> a, std::vector<double> bt, std::vector<double> bs,
                    ClassTag declared)
        : a_(std::move(a)), bt_(std::move(bt)), bs_(std::move(bs)) {
        if (a_.empty() || bt_.empty() || bs_.empty())
            throw InvalidArgument(kModule, "polynomial model needs non-empty A, Bt, Bs");
        lambda_ = lambda;
        tA_ = taylor_of(a_);
        tBt_ = taylor_of(bt_);
        tBs_ = taylor_of(bs_);
        finish(declared, true);
    }
    std::string kind() const override { return "polynomial"; }
    double A(double r) const override { return poly(a_, r); }
    double dA(double r) const override { return dpoly(a_, r); }
    double Bt(double r) const override { return poly(bt_, r); }
    double dBt(double r) const override { return dpoly(bt_, r); }
    double Bs(double r) const override { return poly(bs_, r); }
    double dBs(double r) const override { return dpoly(bs_, r); }
    nlohmann::json to_json() const override {
        return {{"kind", "polynomial"}, {"lambda", lambda_}, {"A", a_}, {"Bt", bt_}, {"Bs", bs_},
                {"class_tag", to_string(tag_)}};
    }

private:
    std::vector<double> a_, bt_, bs_;
};

struct ModeCoefficients {
    double w2;
    double L;
};

ModeCoefficients mode_of(const Band& b, std::size_t i) {
    const ModeIndex m = b.mode(i);
    const double w = b.omega(m.k);
    return {w * w, m.ell * (m.ell + 1.0)};
}

cplx residual_mode(const ConformalAsymptoticSolution& a, std::size_t i, double rho) {
    const MetricModel& m = *a.model;
    const ModeCoefficients mc = mode_of(a.psi0.band(), i);
    const cplx p0 = a.psi0[i], p2 = a.psi2[i], p3 = a.psi3[i], p31 = a.psi31[i];
    const double lr = std::log(rho);
    const double A = m.A(rho);
    const double C = m.christoffel_rho(rho);
    const double q = m.Bt(rho) * mc.w2 + m.Bs(rho) * mc.L;
    const cplx u = p0 + rho * rho * (p2 + rho * (p3 + lr * p31));
    const cplx du = rho * (2.0 * p2 + rho * (3.0 * p3 + p31 * (3.0 * lr + 1.0)));
    // -A u'' + 2 A u'/rho collapses to A (2 psi2 - 3 psi31 rho).
    return A * (2.0 * p2 - 3.0 * rho * p31) - C * du - q * u;
}

void check_rho(double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidArgument(kModule, "rho must be positive and finite");
}

}  // namespace

const char* to_string(ClassTag c) { return c == ClassTag::G1 ? "G1" : "G2"; }

double MetricModel::christoffel_rho(double rho) const {
    const double a = A(rho);
    return 0.5 * dA(rho) - 0.5 * a * dBt(rho) / Bt(rho) - a * dBs(rho) / Bs(rho);
}

double MetricModel::drift() const {
    return 0.5 * tA_[1] - 0.5 * tA_[0] * tBt_[1] / tBt_[0] - tA_[0] * tBs_[1] / tBs_[0];
}

double MetricModel::first_order_norm() const {
    return std::max({std::abs(tA_[1]), std::abs(tBt_[1]), std::abs(tBs_[1]), std::abs(drift())});
}

void MetricModel::finish(ClassTag declared, bool check_declared) {
    if (!(lambda_ > 0.0)) throw InvalidArgument(kModule, "lambda must be positive");
    if (std::abs(tA_[0] - lambda_ / 3.0) > 1e-12 * lambda_)
        throw InvalidArgument(kModule, "g^{rho rho}(0) must equal -lambda/3");
    if (!(tBt_[0] > 0.0) || !(tBs_[0] > 0.0))
        throw InvalidArgument(kModule, "boundary metric must be positive definite");
    tag_ = detect_class(*this);
    if (check_declared && tag_ != declared) {
        std::ostringstream os;
        os << "declared class " << to_string(declared) << " but Taylor data give " << to_string(tag_);
        throw InvalidArgument(kModule, os.str());
    }
}

ClassTag detect_class(const MetricModel& m, double tol) {
    return m.first_order_norm() <= tol ? ClassTag::G2 : ClassTag::G1;
}

ModelPtr sds_in_rho(const SdSGeometry& g) { return std::make_shared<SdSModel>(g); }

ModelPtr synthetic_g1(double lambda, double epsilon) {
    if (!std::isfinite(epsilon)) throw InvalidArgument(kModule, "epsilon must be finite");
    return std::make_shared<SyntheticG1>(lambda, epsilon);
}

ModelPtr polynomial_model(double lambda, const std::vector<double>& a, const std::vector<double>& bt,
                          const std::vector<double>& bs, ClassTag declared) {
    return std::make_shared<PolynomialModel>(lambda, a, bt, bs, declared);
}

ModelPtr model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw InvalidArgument(kModule, "model description needs a string 'kind'");
    const std::string kind = j["kind"];
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number())
            throw InvalidArgument(kModule, std::string("model field '") + key + "' must be a number");
        return j[key].get<double>();
    };
    if (kind == "sds") return sds_in_rho(build_geometry(num("lambda"), num("mass")));
    if (kind == "synthetic_g1") return synthetic_g1(num("lambda"), j.contains("epsilon") ? num("epsilon") : 0.1);
    if (kind == "polynomial") {
        auto arr = [&](const char* key) {
            if (!j.contains(key) || !j[key].is_array())
                throw InvalidArgument(kModule, std::string("model field '") + key + "' must be an array");
            std::vector<double> v;
            for (const auto& x : j[key]) {
                if (!x.is_number()) throw InvalidArgument(kModule, std::string("non-numeric entry in ") + key);
                v.push_back(x.get<double>());
            }
            return v;
        };
        if (!j.contains("class_tag") || !j["class_tag"].is_string())
            throw InvalidArgument(kModule, "polynomial model needs class_tag");
        const std::string t = j["class_tag"];
        if (t != "G1" && t != "G2") throw InvalidArgument(kModule, "class_tag must be G1 or G2");
        return polynomial_model(num("lambda"), arr("A"), arr("Bt"), arr("Bs"), t == "G1" ? ClassTag::G1 : ClassTag::G2);
    }
    throw InvalidArgument(kModule, "unknown model kind '" + kind + "'");
}

ConformalAsymptoticSolution build_asymptotic_conformal(const CylinderField& psi0, const CylinderField& psi3,
                                                       const ModelPtr& model) {
    if (!model) throw InvalidArgument(kModule, "null model");
    require_same_band(psi0, psi3, kModule);
    const auto& tA = model->taylor_A();
    const auto& tBt = model->taylor_Bt();
    const auto& tBs = model->taylor_Bs();
    const double a0 = tA[0], a1 = tA[1], c0 = model->drift();
    if (std::abs(a0) < 1e-14) throw SingularMatch(kModule, "order rho^0 relation for psi2 degenerates");

    const bool real = psi0.real_flag() && psi3.real_flag();
    ConformalAsymptoticSolution s{psi0, CylinderField(psi0.band(), real), psi3, CylinderField(psi0.band(), real),
                                  model};
    for (std::size_t i = 0; i < psi0.size(); ++i) {
        const ModeCoefficients mc = mode_of(psi0.band(), i);
        const double q0 = tBt[0] * mc.w2 + tBs[0] * mc.L;
        const double q1 = tBt[1] * mc.w2 + tBs[1] * mc.L;
        s.psi2[i] = q0 * psi0[i] / (2.0 * a0);
        s.psi31[i] = (2.0 * (a1 - c0) * s.psi2[i] - q1 * psi0[i]) / (3.0 * a0);
    }
    if (model->class_tag() == ClassTag::G2) s.psi31 = CylinderField(psi0.band(), real);
    return s;
}

ConformalModeValue evaluate_conformal(const ConformalAsymptoticSolution& a, std::size_t i, double rho) {
    check_rho(rho);
    const double lr = std::log(rho);
    const cplx p0 = a.psi0[i], p2 = a.psi2[i], p3 = a.psi3[i], p31 = a.psi31[i];
    return {p0 + rho * rho * (p2 + rho * (p3 + lr * p31)),
            rho * (2.0 * p2 + rho * (3.0 * p3 + p31 * (3.0 * lr + 1.0)))};
}

cplx conformal_operator(const MetricModel& m, double omega, int ell, double rho, cplx u, cplx du, cplx ddu) {
    check_rho(rho);
    const double A = m.A(rho);
    const double q = m.Bt(rho) * omega * omega + m.Bs(rho) * ell * (ell + 1.0);
    return -A * ddu + (2.0 * A / rho - m.christoffel_rho(rho)) * du - q * u;
}

std::vector<cplx> conformal_residual(const ConformalAsymptoticSolution& a, double rho) {
    check_rho(rho);
    std::vector<cplx> out(a.psi0.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = residual_mode(a, i, rho);
    return out;
}

double conformal_residual_norm(const ConformalAsymptoticSolution& a, double rho) {
    double s = 0.0;
    for (const auto& v : conformal_residual(a, rho)) s += std::norm(v);
    return std::sqrt(s);
}

ResidualOrderReport conformal_residual_order(const ConformalAsymptoticSolution& a, const std::vector<double>& rhos) {
    if (rhos.size() < 4) throw InvalidArgument(kModule, "residual order fit needs at least 4 samples");
    for (std::size_t j = 0; j < rhos.size(); ++j) {
        check_rho(rhos[j]);
        if (j > 0 && !(rhos[j] > rhos[j - 1])) throw InvalidArgument(kModule, "rho samples must increase");
    }
    if (rhos.back() > 0.1) throw InvalidArgument(kModule, "rho samples must not exceed 0.1");

    ResidualOrderReport rep;
    rep.rhos = rhos;
    for (double r : rhos) rep.norms.push_back(conformal_residual_norm(a, r));
    bool any = false;
    for (double n : rep.norms) any = any || n > 0.0;
    if (!any) return rep;
    for (double n : rep.norms)
        if (!(n > 0.0)) throw InvalidArgument(kModule, "residual vanishes at some but not all samples");

    // Variable projection on the per-mode residual values: R_i(rho) = rho^s sum_k c_ik phi_k(rho)
    // with a shared exponent s; rows weighted by 1/|R_i| so the misfit is relative.
    std::vector<std::vector<cplx>> vals;
    for (double r : rhos) vals.push_back(conformal_residual(a, r));
    const std::size_t n = rhos.size(), nm = vals.front().size();
    auto misfit = [&](double s, bool with_log) {
        const int nb = with_log ? 4 : 2;
        double ss = 0.0;
        std::size_t rows = 0;
        Eigen::MatrixXd M(n, nb), Y(n, 2);
        for (std::size_t i = 0; i < nm; ++i) {
            bool skip = false;
            for (std::size_t j = 0; j < n; ++j) skip = skip || std::abs(vals[j][i]) == 0.0;
            if (skip) continue;
            for (std::size_t j = 0; j < n; ++j) {
                const double rho = rhos[j], lr = std::log(rho);
                const double w = std::pow(rho, s) / std::abs(vals[j][i]);
                M(j, 0) = w;
                M(j, 1) = w * rho;
                if (with_log) {
                    M(j, 2) = w * lr;
                    M(j, 3) = w * rho * lr;
                }
                Y(j, 0) = vals[j][i].real() / std::abs(vals[j][i]);
                Y(j, 1) = vals[j][i].imag() / std::abs(vals[j][i]);
            }
            const Eigen::MatrixXd c = M.colPivHouseholderQr().solve(Y);
            ss += (M * c - Y).squaredNorm();
            rows += n;
        }
        return rows ? std::sqrt(ss / rows) : 0.0;
    };
    const double guess = loglog_slope(rhos, rep.norms);
    const auto naive = boost::math::tools::brent_find_minima([&](double s) { return misfit(s, false); },
                                                             guess - 1.0, guess + 1.0, 50);
    const auto logfit = boost::math::tools::brent_find_minima([&](double s) { return misfit(s, true); },
                                                              guess - 1.0, guess + 1.0, 50);
    rep.power_slope = naive.first;
    rep.power_misfit = naive.second;
    rep.log_slope = logfit.first;
    rep.log_misfit = logfit.second;
    rep.log_detected = rep.power_misfit > 1e-8 && rep.power_misfit > 50.0 * rep.log_misfit;
    return rep;
}

ConformalState conformal_evolve(const MetricModel& m, const ConformalState& s, double rho_target,
                                const FieldSource& source, const IntegratorConfig& cfg) {
    validate(cfg);
    check_rho(s.rho);
    check_rho(rho_target);
    ConformalState out(rho_target, s.band, s.real_flag);
    CylinderField probe(s.band, s.real_flag);
    Dop853Options opt;
    opt.rel_tol = cfg.rel_tol;
    opt.abs_tol = cfg.abs_tol;
    opt.max_steps = cfg.max_steps;
    std::vector<std::string> failure(s.size());

    parallel_for(s.size(), cfg.threads, [&](std::size_t i) {
        if (s.real_flag && !probe.canonical(i)) return;
        const ModeCoefficients mc = mode_of(s.band, i);
        auto rhs = [&](double rho, const std::array<double, 4>& y, std::array<double, 4>& dy) {
            const double A = m.A(rho);
            const double C = m.christoffel_rho(rho);
            const double q = m.Bt(rho) * mc.w2 + m.Bs(rho) * mc.L;
            const cplx u{y[0], y[1]}, v{y[2], y[3]};
            const cplx G = source ? source(i, rho) : cplx(0.0);
            const cplx a = ((2.0 * A / rho - C) * v - q * u - G) / A;
            dy = {v.real(), v.imag(), a.real(), a.imag()};
        };
        try {
            const auto y = dop853<4>(rhs, s.rho, {s.u[i].real(), s.u[i].imag(), s.du[i].real(), s.du[i].imag()},
                                     rho_target, opt);
            out.u[i] = {y[0], y[1]};
            out.du[i] = {y[2], y[3]};
        } catch (const Error& e) {
            failure[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (failure[i].empty()) continue;
        const ModeIndex md = s.band.mode(i);
        std::ostringstream os;
        os << "mode (k=" << md.k << ", ell=" << md.ell << ", em=" << md.em << "): " << failure[i];
        throw StepSizeUnderflow(kModule, os.str());
    }
    if (s.real_flag)
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (probe.canonical(i)) continue;
            const std::size_t j = probe.partner(i);
            const double sign = (s.band.mode(i).em % 2 == 0) ? 1.0 : -1.0;
            out.u[i] = sign * std::conj(out.u[j]);
            out.du[i] = sign * std::conj(out.du[j]);
        }
    return out;
}

double weighted_flux(const MetricModel& m, const ConformalState& s) {
    check_rho(s.rho);
    const double rho = s.rho;
    const double A = m.A(rho), Bt = m.Bt(rho), Bs = m.Bs(rho);
    const double S = 1.0 / std::sqrt(A * Bt * Bs * Bs);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const ModeCoefficients mc = mode_of(s.band, i);
        sum += A * std::norm(s.du[i]) + (Bt * mc.w2 + Bs * mc.L) * std::norm(s.u[i]);
    }
    return 0.5 * S * A * sum / std::pow(rho, 4);
}

ConformalState to_conformal(const FieldState& fs) {
    ConformalState cs(1.0 / fs.r, fs.band, fs.real_flag);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        cs.u[i] = fs.u[i];
        cs.du[i] = -fs.r * fs.r * fs.du[i];
    }
    return cs;
}

FieldState from_conformal(const ConformalState& cs) {
    FieldState fs(1.0 / cs.rho, cs.band, cs.real_flag);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        fs.u[i] = cs.u[i];
        fs.du[i] = -cs.rho * cs.rho * cs.du[i];
    }
    return fs;
}

nlohmann::json WeightedBackwardReport::to_json() const {
    nlohmann::json j;
    j["rho0"] = field_at_rho0.rho;
    j["cutoffs"] = cutoffs;
    j["gaps"] = gaps;
    j["gaps_decreasing"] = gaps_decreasing;
    j["rate_fit"] = rate_fit;
    if (sds_discrepancy) j["sds_discrepancy"] = *sds_discrepancy;
    return j;
}

WeightedBackwardReport weighted_backward_check(const ModelPtr& model, const CylinderField& psi0,
                                               const CylinderField& psi3, double rho0,
                                               const std::vector<double>& cutoffs, const IntegratorConfig& cfg) {
    check_rho(rho0);
    if (cutoffs.empty()) throw InvalidArgument(kModule, "empty cutoff list");
    for (std::size_t j = 0; j < cutoffs.size(); ++j) {
        check_rho(cutoffs[j]);
        if (!(cutoffs[j] < rho0)) throw InvalidArgument(kModule, "cutoffs must lie below rho0");
        if (j > 0 && !(cutoffs[j] < cutoffs[j - 1])) throw InvalidArgument(kModule, "cutoffs must decrease");
    }
    const ConformalAsymptoticSolution a = build_asymptotic_conformal(psi0, psi3, model);
    const Band& band = psi0.band();
    const bool real = psi0.real_flag() && psi3.real_flag();
    const FieldSource src = [&](std::size_t i, double rho) { return -residual_mode(a, i, rho); };

    ConformalState asymp0(rho0, band, real);
    for (std::size_t i = 0; i < band.size(); ++i) {
        const ConformalModeValue v = evaluate_conformal(a, i, rho0);
        asymp0.u[i] = v.u;
        asymp0.du[i] = v.du;
    }

    WeightedBackwardReport rep;
    rep.cutoffs = cutoffs;
    for (double rc : cutoffs) {
        const ConformalState rem = conformal_evolve(*model, ConformalState(rc, band, real), rho0, src, cfg);
        ConformalState full = asymp0;
        for (std::size_t i = 0; i < full.size(); ++i) {
            full.u[i] += rem.u[i];
            full.du[i] += rem.du[i];
        }
        rep.per_cutoff.push_back(std::move(full));
    }

    rep.field_at_rho0 = rep.per_cutoff.back();
    const std::size_t n = cutoffs.size();
    if (n > 1) {
        // Neville at rho_R = 0.
        for (std::size_t i = 0; i < band.size(); ++i) {
            std::vector<cplx> yu(n), yd(n);
            for (std::size_t j = 0; j < n; ++j) {
                yu[j] = rep.per_cutoff[j].u[i];
                yd[j] = rep.per_cutoff[j].du[i];
            }
            for (std::size_t level = 1; level < n; ++level)
                for (std::size_t j = 0; j + level < n; ++j) {
                    const double xa = cutoffs[j], xb = cutoffs[j + level];
                    yu[j] = (xb * yu[j] - xa * yu[j + 1]) / (xb - xa);
                    yd[j] = (xb * yd[j] - xa * yd[j + 1]) / (xb - xa);
                }
            rep.field_at_rho0.u[i] = yu[0];
            rep.field_at_rho0.du[i] = yd[0];
        }
    }

    const double scale = std::sqrt(std::max(0.0, weighted_flux(*model, rep.field_at_rho0)));
    const double floor = 1e-13 * (1.0 + scale);
    std::vector<double> rs, gs;
    for (std::size_t j = 1; j < n; ++j) {
        ConformalState d(rho0, band, real);
        for (std::size_t i = 0; i < band.size(); ++i) {
            d.u[i] = rep.per_cutoff[j].u[i] - rep.per_cutoff[j - 1].u[i];
            d.du[i] = rep.per_cutoff[j].du[i] - rep.per_cutoff[j - 1].du[i];
        }
        const double gap = std::sqrt(std::max(0.0, weighted_flux(*model, d)));
        rep.gaps.push_back(gap);
        if (gap > floor) {
            rs.push_back(1.0 / cutoffs[j - 1]);
            gs.push_back(gap);
        }
        if (j >= 2 && gap > floor && gap >= rep.gaps[j - 2]) rep.gaps_decreasing = false;
    }
    if (!rep.gaps_decreasing) throw NonConvergent(kModule, "weighted remainder gaps do not decrease");
    rep.rate_fit = gs.size() >= 2 ? loglog_slope(rs, gs) : 0.0;

    if (const auto g = model->sds_geometry()) {
        std::vector<double> schedule;
        for (auto it = cutoffs.begin(); it != cutoffs.end(); ++it) schedule.push_back(1.0 / *it);
        const ScatteringResult sc = solve_backward({psi0, psi3}, *g, 1.0 / rho0, schedule, cfg);
        const ConformalState other = to_conformal(sc.field_at_r0);
        double diff = 0.0, ref = 1.0;
        for (std::size_t i = 0; i < band.size(); ++i) {
            diff = std::max({diff, std::abs(other.u[i] - rep.field_at_rho0.u[i]),
                             std::abs(other.du[i] - rep.field_at_rho0.du[i])});
            ref = std::max({ref, std::abs(other.u[i]), std::abs(other.du[i])});
        }
        rep.sds_discrepancy = diff / ref;
    }
    return rep;
}

}  // namespace sds
