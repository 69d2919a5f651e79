#include "sds/scattering.hpp"

#include "sds/energy.hpp"
#include "sds/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sds {

namespace {

constexpr const char* kModule = "scattering";

// Value at x = 0 of the interpolating polynomial through (x_i, y_i).
cplx neville_at_zero(const std::vector<double>& x, std::vector<cplx> y) {
    const std::size_t n = x.size();
    for (std::size_t level = 1; level < n; ++level)
        for (std::size_t i = 0; i + level < n; ++i) {
            const double xa = x[i], xb = x[i + level];
            y[i] = (xb * y[i] - xa * y[i + 1]) / (xb - xa);
        }
    return y[0];
}

bool is_real(const ScatteringData& d) { return d.psi0.real_flag() && d.psi3.real_flag(); }

FieldState asymptotic_state(const AsymptoticSolution& a, double r, bool real_flag) {
    FieldState fs(r, a.psi0.band(), real_flag);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const ModeValue v = evaluate_asymptotic(a, i, r);
        fs.u[i] = v.u;
        fs.du[i] = v.du;
    }
    return fs;
}

double relative_h1(const CylinderField& exact, const CylinderField& got) {
    const double diff = sobolev_norm(got - exact, 1);
    const double ref = sobolev_norm(exact, 1);
    return ref > 0.0 ? diff / ref : diff;
}

}  // namespace

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw InvalidArgument(kModule, "slope fit needs at least two matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double m_norm_gap(const FieldState& a, const FieldState& b, const SdSGeometry& g) {
    if (!(a.band == b.band)) throw BandMismatch(kModule, "gap between states on different bands");
    FieldState d(a.r, a.band, a.real_flag && b.real_flag);
    for (std::size_t i = 0; i < d.size(); ++i) {
        d.u[i] = a.u[i] - b.u[i];
        d.du[i] = a.du[i] - b.du[i];
    }
    return std::sqrt(std::max(0.0, flux(d, g, MultiplierKind::M)));
}

double residual_tail_bound(const AsymptoticSolution& a, double r1, double r2) {
    // Integrate in rho = 1/r; the weighted norm decays like r^-2 so the integrand is smooth.
    auto f = [&](double rho) {
        const double r = 1.0 / rho;
        return residual(a, r).weighted_norm * r * r;
    };
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 1.0 / r2, 1.0 / r1, 8, 1e-12);
    return v / std::sqrt(2.0);
}

std::vector<double> geometric_radii(double lo, double hi, int n) {
    if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw InvalidArgument(kModule, "geometric radii need 0 < lo < hi, n >= 2");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    out.back() = hi;
    return out;
}

ScatteringResult solve_backward(const ScatteringData& data, const SdSGeometry& g, double r0,
                                const std::vector<double>& schedule, const IntegratorConfig& cfg) {
    require_same_band(data.psi0, data.psi3, kModule);
    require_expanding(g, r0, kModule);
    if (schedule.empty()) throw InvalidArgument(kModule, "empty cutoff schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] > r0)) throw InvalidArgument(kModule, "cutoff radii must exceed r0");
        if (i > 0 && !(schedule[i] > schedule[i - 1]))
            throw InvalidArgument(kModule, "cutoff schedule must be strictly increasing");
    }
    if (!data.psi0.finite() || !data.psi3.finite()) throw InvalidArgument(kModule, "non-finite scattering data");

    const AsymptoticSolution a = build_asymptotic(data.psi0, data.psi3, g);
    const Band& band = data.psi0.band();
    const bool real = is_real(data);
    std::vector<double> omegas(band.size());
    std::vector<int> ells(band.size());
    for (std::size_t i = 0; i < band.size(); ++i) {
        const ModeIndex m = band.mode(i);
        omegas[i] = band.omega(m.k);
        ells[i] = m.ell;
    }
    const FieldSource src = [&](std::size_t i, double r) {
        return -box_asymptotic_mode(g, omegas[i], ells[i], a.psi0[i], a.psi2[i], a.psi3[i], r);
    };

    ScatteringResult res;
    res.schedule = schedule;
    const FieldState asymp0 = asymptotic_state(a, r0, real);
    for (double R : schedule) {
        const FieldState rem = evolve_field(g, zero_state(R, band, real), r0, src, cfg);
        FieldState full = asymp0;
        for (std::size_t i = 0; i < full.size(); ++i) {
            full.u[i] += rem.u[i];
            full.du[i] += rem.du[i];
        }
        res.per_radius.push_back(std::move(full));
    }

    res.field_at_r0 = res.per_radius.back();
    if (schedule.size() > 1) {
        std::vector<double> x(schedule.size());
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = 1.0 / schedule[j];
        std::vector<cplx> yu(x.size()), ydu(x.size());
        for (std::size_t i = 0; i < band.size(); ++i) {
            for (std::size_t j = 0; j < x.size(); ++j) {
                yu[j] = res.per_radius[j].u[i];
                ydu[j] = res.per_radius[j].du[i];
            }
            res.field_at_r0.u[i] = neville_at_zero(x, yu);
            res.field_at_r0.du[i] = neville_at_zero(x, ydu);
        }
    }

    double scale = std::sqrt(std::max(0.0, flux(res.field_at_r0, g, MultiplierKind::M)));
    const double floor = 1e-13 * (1.0 + scale);
    std::vector<double> rs, gaps;
    for (std::size_t j = 1; j < res.per_radius.size(); ++j) {
        const double gap = m_norm_gap(res.per_radius[j], res.per_radius[j - 1], g);
        res.cauchy_gaps.push_back(gap);
        if (gap > floor) {
            rs.push_back(schedule[j - 1]);
            gaps.push_back(gap);
        }
        if (j >= 2 && gap > floor && gap >= res.cauchy_gaps[j - 2])
            throw NonConvergent(kModule, "Cauchy gaps do not decrease along the cutoff schedule");
    }
    res.rate_fit = gaps.size() >= 2 ? loglog_slope(rs, gaps) : 0.0;
    return res;
}

std::vector<FieldState> forward_solve(const FieldState& initial, const SdSGeometry& g,
                                      const std::vector<double>& radii, const IntegratorConfig& cfg) {
    if (radii.empty()) throw InvalidArgument(kModule, "no sample radii");
    if (std::abs(radii.front() - initial.r) > 1e-12 * initial.r)
        throw InvalidArgument(kModule, "first sample radius must equal the initial radius");
    std::vector<FieldState> out{initial};
    for (std::size_t j = 1; j < radii.size(); ++j) {
        if (!(radii[j] > radii[j - 1])) throw InvalidArgument(kModule, "sample radii must increase");
        out.push_back(evolve_field(g, out.back(), radii[j], {}, cfg));
    }
    return out;
}

ExtractionResult extract_asymptotics(const std::vector<FieldState>& traj, const std::vector<double>& fit_radii,
                                     const SdSGeometry& g, const ExtractionOptions& opt) {
    if (traj.empty()) throw InvalidArgument(kModule, "empty trajectory");
    if (opt.nuisance_terms < 0) throw InvalidArgument(kModule, "nuisance_terms must be non-negative");
    const int ncol = 5 + opt.nuisance_terms;
    const int per = opt.use_derivative ? 2 : 1;
    if (static_cast<int>(fit_radii.size()) * per < ncol + 1)
        throw InvalidArgument(kModule, "too few fit radii for the basis");
    if (fit_radii.back() < 100.0 * g.r_c) throw InvalidArgument(kModule, "fit radii must reach 100 r_c");

    std::vector<const FieldState*> rows;
    for (double r : fit_radii) {
        const FieldState* hit = nullptr;
        for (const auto& s : traj)
            if (std::abs(s.r - r) <= 1e-12 * r) hit = &s;
        if (!hit) throw InvalidArgument(kModule, "fit radius not among the sampled radii");
        if (!(hit->band == traj.front().band)) throw BandMismatch(kModule, "trajectory mixes bands");
        rows.push_back(hit);
    }
    const Band band = traj.front().band;
    const bool real = std::all_of(rows.begin(), rows.end(), [](const FieldState* s) { return s->real_flag; });
    const std::size_t nm = band.size();
    const int nrow = static_cast<int>(rows.size()) * per;

    // Columns: 1, rho, rho^2, rho^3, rho^3 log rho, rho^4, rho^5, ...
    Eigen::MatrixXd A(nrow, ncol);
    Eigen::MatrixXd B(nrow, 2 * nm);
    for (std::size_t j = 0; j < rows.size(); ++j) {
        const double rho = 1.0 / rows[j]->r, lr = std::log(rho);
        const int rv = static_cast<int>(j) * per;
        A(rv, 0) = 1.0;
        A(rv, 1) = rho;
        A(rv, 2) = rho * rho;
        A(rv, 3) = rho * rho * rho;
        A(rv, 4) = rho * rho * rho * lr;
        for (int q = 0; q < opt.nuisance_terms; ++q) A(rv, 5 + q) = std::pow(rho, 4 + q);
        for (std::size_t i = 0; i < nm; ++i) {
            B(rv, 2 * i) = rows[j]->u[i].real();
            B(rv, 2 * i + 1) = rows[j]->u[i].imag();
        }
        if (per == 2) {
            const int rd = rv + 1;
            A(rd, 0) = 0.0;
            A(rd, 1) = 1.0;
            A(rd, 2) = 2.0 * rho;
            A(rd, 3) = 3.0 * rho * rho;
            A(rd, 4) = rho * rho * (3.0 * lr + 1.0);
            for (int q = 0; q < opt.nuisance_terms; ++q) A(rd, 5 + q) = (4.0 + q) * std::pow(rho, 3 + q);
            const double r2 = rows[j]->r * rows[j]->r;
            for (std::size_t i = 0; i < nm; ++i) {
                const cplx v = -r2 * rows[j]->du[i];
                B(rd, 2 * i) = v.real();
                B(rd, 2 * i + 1) = v.imag();
            }
        }
    }
    Eigen::VectorXd scale(ncol);
    for (int c = 0; c < ncol; ++c) {
        scale(c) = A.col(c).norm();
        if (scale(c) == 0.0) throw IllConditionedFit(kModule, "empty basis column");
        A.col(c) /= scale(c);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    if (!(cond <= opt.max_condition)) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "fit design condition number %.3g exceeds %.3g", cond, opt.max_condition);
        throw IllConditionedFit(kModule, buf);
    }
    // Fitting the values minus their outermost sample keeps an O(1) constant out of the
    // rounding of the small coefficients; constant data then fit exactly.
    const Eigen::RowVectorXd shift = B.row(nrow - per);
    for (int rrow = 0; rrow < nrow; rrow += per) B.row(rrow) -= shift;
    Eigen::MatrixXd X = svd.solve(B);
    for (int c = 0; c < ncol; ++c) X.row(c) /= scale(c);
    X.row(0) += shift;

    ExtractionResult res;
    res.fit_radii = fit_radii;
    res.condition = cond;
    res.psi0 = CylinderField(band, real);
    res.psi2 = CylinderField(band, real);
    res.psi3 = CylinderField(band, real);
    double s1 = 0.0, slog = 0.0;
    for (std::size_t i = 0; i < nm; ++i) {
        auto coef = [&](int c) { return cplx(X(c, 2 * i), X(c, 2 * i + 1)); };
        res.psi0[i] = coef(0);
        res.psi2[i] = coef(2);
        res.psi3[i] = coef(3);
        s1 += std::norm(coef(1));
        slog += std::norm(coef(4));
    }
    res.spurious_inv_r = std::sqrt(s1);
    res.spurious_log = std::sqrt(slog);
    return res;
}

RoundTripReport round_trip(const ScatteringData& data, const SdSGeometry& g, double r0, double r_max,
                           const IntegratorConfig& cfg, const RoundTripOptions& opt) {
    std::vector<double> schedule;
    for (double f : opt.schedule_fractions) schedule.push_back(f * r_max);
    RoundTripReport rep;
    rep.backward = solve_backward(data, g, r0, schedule, cfg);
    const std::vector<double> fit = geometric_radii(opt.fit_lo_factor * g.r_c, opt.fit_hi_factor * g.r_c, opt.fit_count);
    std::vector<double> radii{r0};
    for (double r : fit)
        if (r > r0) radii.push_back(r);
    const std::vector<FieldState> traj = forward_solve(rep.backward.field_at_r0, g, radii, cfg);
    rep.extraction = extract_asymptotics(traj, fit, g, opt.extraction);
    rep.psi0_error = relative_h1(data.psi0, rep.extraction.psi0);
    rep.psi3_error = relative_h1(data.psi3, rep.extraction.psi3);
    return rep;
}

nlohmann::json RoundTripReport::to_json() const {
    nlohmann::json j;
    j["psi0_error_h1"] = psi0_error;
    j["psi3_error_h1"] = psi3_error;
    j["schedule"] = backward.schedule;
    j["cauchy_gaps"] = backward.cauchy_gaps;
    j["rate_fit"] = backward.rate_fit;
    j["fit_radii"] = extraction.fit_radii;
    j["fit_condition"] = extraction.condition;
    j["spurious_inv_r"] = extraction.spurious_inv_r;
    j["spurious_log"] = extraction.spurious_log;
    j["psi0"] = sds::to_json(extraction.psi0);
    j["psi3"] = sds::to_json(extraction.psi3);
    return j;
}

DecayReport pointwise_decay_check(const ScatteringData& data, const SdSGeometry& g, const std::vector<double>& radii,
                                  double r0, const std::vector<double>& schedule, const IntegratorConfig& cfg) {
    if (radii.size() < 2) throw InvalidArgument(kModule, "decay check needs at least two radii");
    const ScatteringResult back = solve_backward(data, g, r0, schedule, cfg);
    const AsymptoticSolution a = build_asymptotic(data.psi0, data.psi3, g);
    std::vector<double> samples{r0};
    for (double r : radii) samples.push_back(r);
    const std::vector<FieldState> traj = forward_solve(back.field_at_r0, g, samples, cfg);
    const Band& band = data.psi0.band();
    const SphereGrid grid = default_grid(band, 2);

    DecayReport rep;
    rep.radii = radii;
    for (std::size_t j = 1; j < traj.size(); ++j) {
        const double r = traj[j].r;
        std::vector<cplx> rem(band.size());
        double l2 = 0.0;
        for (std::size_t i = 0; i < band.size(); ++i) {
            rem[i] = traj[j].u[i] - evaluate_asymptotic(a, i, r).u;
            l2 += std::norm(rem[i]);
        }
        const std::vector<cplx> vals = synthesize_grid(band, rem, grid.ts, grid.thetas, grid.phis);
        double sup = 0.0;
        for (const auto& v : vals) sup = std::max(sup, std::abs(v));
        rep.sup_defect.push_back(sup);
        rep.remainder_l2.push_back(std::sqrt(l2 * r * r * std::sqrt(g.delta(r))));
    }
    rep.sup_slope = loglog_slope(rep.radii, rep.sup_defect);
    rep.l2_slope = loglog_slope(rep.radii, rep.remainder_l2);
    return rep;
}

}  // namespace sds
