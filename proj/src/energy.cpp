#include "sds/energy.hpp"

#include "sds/asymptotics.hpp"
#include "sds/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace sds {

const char* to_string(MultiplierKind k) { return k == MultiplierKind::DR ? "DR" : "M"; }

const char* to_string(CommutatorKind k) {
    switch (k) {
        case CommutatorKind::None: return "None";
        case CommutatorKind::Xs: return "Xs";
        case CommutatorKind::Xw: return "Xw";
        case CommutatorKind::YXs: return "YXs";
    }
    return "?";
}

namespace {

struct Commuted {
    cplx w;
    cplx dw;
};

Commuted commuted(const SdSGeometry& g, CommutatorKind comm, double omega, int ell, double r, cplx u, cplx du,
                  cplx source) {
    if (comm == CommutatorKind::None) return {u, du};
    const double d = g.delta(r), dp = g.delta_prime(r);
    const cplx ddu = ode_rhs(g, omega, ell, r, u, du, source).ddu;
    switch (comm) {
        case CommutatorKind::Xs: {
            const double f = r * d, fp = d + r * dp;
            return {f * du, fp * du + f * ddu};
        }
        case CommutatorKind::Xw: {
            const double f = r * r * d, fp = 2.0 * r * d + r * r * dp;
            return {f * du, fp * du + f * ddu};
        }
        case CommutatorKind::YXs: {
            if (source != cplx(0.0))
                throw InvalidArgument("energy", "Y X_s flux needs a homogeneous state");
            const double dpp = g.delta_second(r);
            const cplx dddu = third_derivative(g, omega, ell, r, u, du);
            const cplx h = (d + r * dp) * du + r * d * ddu;
            const cplx hp = (2.0 * dp + r * dpp) * du + 2.0 * (d + r * dp) * ddu + r * d * dddu;
            const double sq = std::sqrt(d);
            const double gy = r * sq, gyp = sq + r * dp / (2.0 * sq);
            return {gy * h, gyp * h + gy * hp};
        }
        default: break;
    }
    return {u, du};
}

}  // namespace

double flux(const FieldState& fs, const EquationContext& ctx, MultiplierKind mult, CommutatorKind comm) {
    if (!ctx.geometry) {
        if (comm != CommutatorKind::None)
            throw MissingSecondDerivative("energy", "commuted flux needs the equation to supply u''");
        throw InvalidArgument("energy", "flux needs a geometry");
    }
    const SdSGeometry& g = *ctx.geometry;
    const double r = fs.r;
    require_expanding(g, r, "energy");
    const double d = g.delta(r);
    const double A = r * r * d;
    double sum = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (fs.u[i] == cplx(0.0) && fs.du[i] == cplx(0.0)) continue;
        const ModeIndex m = fs.band.mode(i);
        const double omega = fs.band.omega(m.k);
        const double B = r * r * omega * omega / d + m.ell * (m.ell + 1.0);
        const cplx src = ctx.source ? ctx.source(i, r) : cplx(0.0);
        const Commuted c = commuted(g, comm, omega, m.ell, r, fs.u[i], fs.du[i], src);
        sum += A * std::norm(c.dw) + B * std::norm(c.w);
    }
    const double e = 0.5 * sum;
    return mult == MultiplierKind::M ? A * e : e;
}

double flux(const FieldState& fs, const SdSGeometry& g, MultiplierKind mult, CommutatorKind comm) {
    EquationContext ctx;
    ctx.geometry = &g;
    return flux(fs, ctx, mult, comm);
}

namespace {

double bulk_dr_density(const SdSGeometry& g, double r, double omega, cplx w, cplx dw) {
    const double d = g.delta(r);
    const double half_ap = 2.0 * g.lambda / 3.0 * r * r * r - r + g.mass;
    return half_ap * std::norm(dw) + (r - 3.0 * g.mass) * omega * omega / (d * d) * std::norm(w);
}

}  // namespace

double bulk_current(const FieldState& fs, const SdSGeometry& g, MultiplierKind mult) {
    const double r = fs.r;
    require_expanding(g, r, "energy");
    const double half_ap = 2.0 * g.lambda / 3.0 * r * r * r - r + g.mass;
    double sum = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const ModeIndex m = fs.band.mode(i);
        const double omega = fs.band.omega(m.k);
        if (mult == MultiplierKind::DR) {
            sum += bulk_dr_density(g, r, omega, fs.u[i], fs.du[i]);
        } else {
            const double L = m.ell * (m.ell + 1.0);
            sum -= (2.0 * r * r * r * omega * omega + L * half_ap) * std::norm(fs.u[i]);
        }
    }
    return sum;
}

double divergence_identity_check(const SdSGeometry& g, double omega, int ell, cplx u0, cplx du0, double r1,
                                 double r2, MultiplierKind mult, const IntegratorConfig& cfg, int samples) {
    if (!(r2 > r1)) throw InvalidArgument("energy", "divergence check needs r2 > r1");
    ModeState base{{0, ell, 0}, r1, u0, du0};
    auto energy_at = [&](const ModeState& s) {
        const double d = g.delta(s.r);
        const double A = s.r * s.r * d;
        const double B = s.r * s.r * omega * omega / d + ell * (ell + 1.0);
        const double e = 0.5 * (A * std::norm(s.du) + B * std::norm(s.u));
        return mult == MultiplierKind::M ? A * e : e;
    };
    auto bulk_at = [&](const ModeState& s) {
        const double r = s.r;
        const double half_ap = 2.0 * g.lambda / 3.0 * r * r * r - r + g.mass;
        if (mult == MultiplierKind::DR) return bulk_dr_density(g, r, omega, s.u, s.du);
        return -(2.0 * r * r * r * omega * omega + ell * (ell + 1.0) * half_ap) * std::norm(s.u);
    };

    static constexpr double w6[] = {-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0};
    double worst = 0.0;
    const double lo = r1 * 1.05, hi = r2 / 1.05;
    for (int j = 0; j < samples; ++j) {
        const double r = samples == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(j) / (samples - 1));
        const ModeState center = evolve(g, omega, base, r, {}, cfg);
        const double h = 0.01 * r;
        double deriv = 0.0, escale = 0.0;
        for (int q = -3; q <= 3; ++q) {
            if (q == 0) continue;
            const ModeState s = evolve(g, omega, center, r + q * h, {}, cfg);
            const double e = energy_at(s);
            deriv += w6[q + 3] * e;
            escale = std::max(escale, std::abs(e));
        }
        deriv /= 60.0 * h;
        const double b = bulk_at(center);
        const double scale = std::max({std::abs(b), std::abs(deriv), escale / r});
        if (scale == 0.0) continue;
        worst = std::max(worst, std::abs(deriv + b) / scale);
    }
    return worst;
}

namespace {

struct FChoice {
    double f, fp, fpp;
};

FChoice f_of(const SdSGeometry& g, CommutatorKind c, double r) {
    const double d = g.delta(r), dp = g.delta_prime(r), dpp = g.delta_second(r);
    switch (c) {
        case CommutatorKind::Xs: return {r * d, d + r * dp, 2.0 * dp + r * dpp};
        case CommutatorKind::Xw: return {r * r * d, 2.0 * r * d + r * r * dp, 2.0 * d + 4.0 * r * dp + r * r * dpp};
        case CommutatorKind::YXs: {
            const double s = std::sqrt(d);
            return {r * s, s + r * dp / (2.0 * s), dp / s + r * dpp / (2.0 * s) - r * dp * dp / (4.0 * d * s)};
        }
        default: break;
    }
    throw InvalidArgument("energy", "commutator choice must be Xs, Xw or Y");
}

}  // namespace

CommutedBoxDefect commuted_box_check(const SdSGeometry& g, CommutatorKind f_choice, double omega, int ell,
                                     cplx u, cplx du, double r) {
    require_expanding(g, r, "energy");
    const FChoice F = f_of(g, f_choice, r);
    const double d = g.delta(r), dp = g.delta_prime(r), dpp = g.delta_second(r);
    const double P = r * r * d, Pp = 2.0 * r * d + r * r * dp, Ppp = 2.0 * d + 4.0 * r * dp + r * r * dpp;
    const cplx ddu = ode_rhs(g, omega, ell, r, u, du, 0.0).ddu;
    const cplx dddu = third_derivative(g, omega, ell, r, u, du);

    const cplx w = F.f * du;
    const cplx dw = F.fp * du + F.f * ddu;
    const cplx ddw = F.fpp * du + 2.0 * F.fp * ddu + F.f * dddu;
    const cplx lhs = box_mode(g, omega, ell, r, w, dw, ddw);

    const double f = F.f, f2 = f * f;
    const double c1 = Pp / f2 - 2.0 * P * F.fp / (f2 * f);                                  // (P/f^2)'
    const double c2 = Ppp / f - 2.0 * Pp * F.fp / f2 + P * (2.0 * F.fp * F.fp / (f2 * f) - F.fpp / f2);  // (P/f)''
    const double m = g.mass;
    const cplx t1 = f2 / (r * r) * c1 * dw;
    const cplx t2 = f2 / (r * r) * c2 * du;
    const cplx t3 = 2.0 * f / (d * d) * (1.0 / r - 3.0 * m / (r * r)) * (-omega * omega) * u;
    const cplx rhs = t1 + t2 + t3;

    const double scale = std::max({std::abs(lhs), std::abs(t1), std::abs(t3),
                                   std::abs(F.f * dddu) * P / (r * r), 1e-300});
    CommutedBoxDefect out;
    out.defect = std::abs(lhs - rhs) / scale;
    // Relative to the size of the separate contributions to (P/f)''.
    const double c2_scale = std::max({std::abs(Ppp / f), std::abs(2.0 * Pp * F.fp / f2),
                                      std::abs(P * F.fpp / f2), 1e-300});
    out.middle_coefficient = std::abs(c2) / c2_scale;
    return out;
}

nlohmann::json MonotonicityReport::verdict_json() const {
    return {{"dr_nonincreasing", dr_nonincreasing},
            {"m_nondecreasing", m_nondecreasing},
            {"higher_order_bounded", higher_order_bounded},
            {"xs_ratio", xs_ratio},
            {"xw_ratio", xw_ratio},
            {"yxs_ratio", yxs_ratio}};
}

MonotonicityReport monotonicity_report(const std::vector<FieldState>& traj, const SdSGeometry& g, double slack,
                                       double bound) {
    MonotonicityReport rep;
    double dr_prev = 0, m_prev = 0, xs0 = 0, xw0 = 0, y0 = 0;
    for (std::size_t j = 0; j < traj.size(); ++j) {
        const FieldState& fs = traj[j];
        const double r = fs.r;
        if (j > 0 && !(r > traj[j - 1].r)) throw InvalidArgument("energy", "trajectory radii must increase");
        const double e_dr = flux(fs, g, MultiplierKind::DR);
        const double e_m = flux(fs, g, MultiplierKind::M);
        const double e_xs = flux(fs, g, MultiplierKind::DR, CommutatorKind::Xs);
        const double e_xw = flux(fs, g, MultiplierKind::DR, CommutatorKind::Xw);
        const double e_y = flux(fs, g, MultiplierKind::DR, CommutatorKind::YXs);
        const double b_dr = bulk_current(fs, g, MultiplierKind::DR);
        const double b_m = bulk_current(fs, g, MultiplierKind::M);
        rep.ledger.push_back({r, MultiplierKind::DR, CommutatorKind::None, e_dr, b_dr});
        rep.ledger.push_back({r, MultiplierKind::M, CommutatorKind::None, e_m, b_m});
        auto commuted_bulk = [&](CommutatorKind c) {
            double s = 0.0;
            for (std::size_t i = 0; i < fs.size(); ++i) {
                const ModeIndex m = fs.band.mode(i);
                const double om = fs.band.omega(m.k);
                const Commuted cw = commuted(g, c, om, m.ell, r, fs.u[i], fs.du[i], 0.0);
                s += bulk_dr_density(g, r, om, cw.w, cw.dw);
            }
            return s;
        };
        rep.ledger.push_back({r, MultiplierKind::DR, CommutatorKind::Xs, e_xs, commuted_bulk(CommutatorKind::Xs)});
        rep.ledger.push_back({r, MultiplierKind::DR, CommutatorKind::Xw, e_xw, commuted_bulk(CommutatorKind::Xw)});
        rep.ledger.push_back({r, MultiplierKind::DR, CommutatorKind::YXs, e_y, commuted_bulk(CommutatorKind::YXs)});

        const double xw = e_xw / (r * r * r * r);
        if (j == 0) {
            xs0 = e_xs;
            xw0 = xw;
            y0 = e_y;
        } else {
            if (e_dr > dr_prev * (1.0 + slack) + 1e-300) rep.dr_nonincreasing = false;
            if (e_m < m_prev * (1.0 - slack)) rep.m_nondecreasing = false;
        }
        auto ratio = [](double v, double v0) { return v0 > 0.0 ? v / v0 : (v > 0.0 ? INFINITY : 0.0); };
        rep.xs_ratio = std::max(rep.xs_ratio, ratio(e_xs, xs0));
        rep.xw_ratio = std::max(rep.xw_ratio, ratio(xw, xw0));
        rep.yxs_ratio = std::max(rep.yxs_ratio, ratio(e_y, y0));
        dr_prev = e_dr;
        m_prev = e_m;
    }
    rep.higher_order_bounded = rep.xs_ratio <= bound && rep.xw_ratio <= bound && rep.yxs_ratio <= bound;
    return rep;
}

std::string ledger_csv(const std::vector<LedgerRow>& rows) {
    std::string out = "r,multiplier,commutator,flux,bulk\n";
    char buf[256];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%s,%s,%.17g,%.17g\n", row.r, to_string(row.mult), to_string(row.comm),
                      row.flux, row.bulk);
        out += buf;
    }
    return out;
}

double sobolev_ratio(const FieldState& fs, const SdSGeometry& g) {
    const double r = fs.r;
    require_expanding(g, r, "energy");
    double denom = 0.0;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const ModeIndex m = fs.band.mode(i);
        const double w2 = std::pow(fs.band.omega(m.k), 2);
        const double L = m.ell * (m.ell + 1.0);
        denom += (1.0 + w2 + L + L * w2 + L * L) * std::norm(fs.u[i]);
    }
    if (denom == 0.0) return 0.0;
    denom *= r * r * std::sqrt(g.delta(r));
    const SphereGrid grid = default_grid(fs.band, 2);
    const std::vector<cplx> vals = synthesize_grid(fs.band, fs.u, grid.ts, grid.thetas, grid.phis);
    double sup = 0.0;
    for (const auto& v : vals) sup = std::max(sup, std::norm(v));
    return sup * r * r * r / denom;
}

}  // namespace sds
