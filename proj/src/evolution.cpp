#include "sds/evolution.hpp"

#include "sds/dop853.hpp"
#include "sds/errors.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <sstream>
#include <thread>

namespace sds {

namespace {

using State = std::array<double, 4>;

inline cplx cu(const State& y) { return {y[0], y[1]}; }
inline cplx cv(const State& y) { return {y[2], y[3]}; }

struct RadialSystem {
    const SdSGeometry& g;
    double w2;
    double L;
    const ModeSource& src;

    void operator()(double r, const State& y, State& dy) const {
        const cplx f = src ? src(r) : cplx(0.0);
        const Derivs d = ode_rhs_impl(r, cu(y), cv(y), f);
        dy = {d.du.real(), d.du.imag(), d.ddu.real(), d.ddu.imag()};
    }
    Derivs ode_rhs_impl(double r, cplx u, cplx du, cplx f) const {
        const double dl = g.delta(r);
        const double p = r * r * dl;
        const double pp = 2.0 * r * dl + r * r * g.delta_prime(r);
        const cplx ddu = (-pp * du - (r * r / dl) * w2 * u - L * u - r * r * f) / p;
        return {du, ddu};
    }
};

// rho = 1/r, v = du/drho = -r^2 du/dr, D(rho) = rho^2 Delta:
// D u'' + (D' - 2D/rho) u' = -(w^2/D + L) u - F/rho^2.
struct InverseSystem {
    const SdSGeometry& g;
    double w2;
    double L;
    const ModeSource& src;

    void operator()(double rho, const State& y, State& dy) const {
        const double lam3 = g.lambda / 3.0, m = g.mass;
        const double D = lam3 - rho * rho + 2.0 * m * rho * rho * rho;
        const double Dp = -2.0 * rho + 6.0 * m * rho * rho;
        const cplx f = src ? src(1.0 / rho) : cplx(0.0);
        const cplx u = cu(y), v = cv(y);
        const cplx upp = (-(Dp - 2.0 * D / rho) * v - (w2 / D + L) * u - f / (rho * rho)) / D;
        dy = {v.real(), v.imag(), upp.real(), upp.imag()};
    }
};

Dop853Options options(const IntegratorConfig& cfg) {
    Dop853Options o;
    o.rel_tol = cfg.rel_tol;
    o.abs_tol = cfg.abs_tol;
    o.max_steps = cfg.max_steps;
    return o;
}

void accumulate(EvolveStats* s, const Dop853Stats& d) {
    if (!s) return;
    s->steps += d.accepted;
    s->rejected += d.rejected;
    s->evaluations += d.evaluations;
}

}  // namespace

void validate(const IntegratorConfig& cfg) {
    if (!(cfg.rel_tol > 0.0 && cfg.rel_tol <= 1e-2) || !(cfg.abs_tol > 0.0 && cfg.abs_tol <= 1e-2))
        throw InvalidArgument("mode_evolution", "tolerances must lie in (0, 1e-2]");
    if (cfg.max_steps <= 0) throw InvalidArgument("mode_evolution", "max_steps must be positive");
}

Derivs ode_rhs(const SdSGeometry& g, double omega, int ell, double r, cplx u, cplx du, cplx source) {
    require_expanding(g, r, "mode_evolution");
    ModeSource none;
    RadialSystem sys{g, omega * omega, ell * (ell + 1.0), none};
    return sys.ode_rhs_impl(r, u, du, source);
}

cplx third_derivative(const SdSGeometry& g, double omega, int ell, double r, cplx u, cplx du) {
    // P u''' + 2 P' u'' + P'' u' = -Q' u - Q u', P = r^2 Delta, Q = r^2 w^2/Delta + L.
    const double d = g.delta(r), dp = g.delta_prime(r), dpp = g.delta_second(r);
    const double w2 = omega * omega, L = ell * (ell + 1.0);
    const double p = r * r * d;
    const double pp = 2.0 * r * d + r * r * dp;
    const double ppp = 2.0 * d + 4.0 * r * dp + r * r * dpp;
    const double q = r * r * w2 / d + L;
    const double qp = w2 * (2.0 * r * d - r * r * dp) / (d * d);
    const cplx ddu = ode_rhs(g, omega, ell, r, u, du, 0.0).ddu;
    return (-2.0 * pp * ddu - ppp * du - qp * u - q * du) / p;
}

ModeState evolve(const SdSGeometry& g, double omega, const ModeState& s, double r_target,
                 const ModeSource& source, const IntegratorConfig& cfg, EvolveStats* stats) {
    validate(cfg);
    require_expanding(g, s.r, "mode_evolution");
    require_expanding(g, r_target, "mode_evolution");
    const double w2 = omega * omega;
    const double L = s.mode.ell * (s.mode.ell + 1.0);
    const double rs = cfg.switch_radius > 0.0 ? cfg.switch_radius : 2.0 * g.r_c;
    const bool use_rho = cfg.variable == Variable::inverse_radius;
    const Dop853Options opt = options(cfg);

    ModeState out = s;
    double r = s.r;
    cplx u = s.u, du = s.du;

    auto radial_leg = [&](double r_end) {
        RadialSystem sys{g, w2, L, source};
        Dop853Stats st;
        State y = dop853<4>(sys, r, State{u.real(), u.imag(), du.real(), du.imag()}, r_end, opt, &st);
        accumulate(stats, st);
        u = cu(y);
        du = cv(y);
        r = r_end;
    };
    auto inverse_leg = [&](double r_end) {
        InverseSystem sys{g, w2, L, source};
        const cplx v = -r * r * du;
        Dop853Stats st;
        State y = dop853<4>(sys, 1.0 / r, State{u.real(), u.imag(), v.real(), v.imag()}, 1.0 / r_end,
                            opt, &st);
        accumulate(stats, st);
        u = cu(y);
        du = -cv(y) / (r_end * r_end);
        r = r_end;
    };

    if (!use_rho) {
        radial_leg(r_target);
    } else if (r_target >= r) {
        if (r < rs) radial_leg(std::min(rs, r_target));
        if (r < r_target) inverse_leg(r_target);
    } else {
        if (r > rs) inverse_leg(std::max(rs, r_target));
        if (r > r_target) radial_leg(r_target);
    }
    out.r = r_target;
    out.u = u;
    out.du = du;
    return out;
}

ModeState evolve(const SdSGeometry& g, const Band& band, const ModeState& s, double r_target,
                 const ModeSource& source, const IntegratorConfig& cfg, EvolveStats* stats) {
    return evolve(g, band.omega(s.mode.k), s, r_target, source, cfg, stats);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t nt = static_cast<std::size_t>(std::max(1, threads));
    if (nt == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (std::size_t t = 0; t < nt; ++t) {
        const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

FieldState evolve_field(const SdSGeometry& g, const FieldState& fs, double r_target,
                        const FieldSource& source, const IntegratorConfig& cfg) {
    validate(cfg);
    FieldState out(r_target, fs.band, fs.real_flag);
    CylinderField probe(fs.band, fs.real_flag);
    std::vector<std::optional<std::string>> failure(fs.size());
    std::vector<int> failure_kind(fs.size(), 0);

    parallel_for(fs.size(), cfg.threads, [&](std::size_t i) {
        if (fs.real_flag && !probe.canonical(i)) return;
        const ModeState s = fs.state(i);
        try {
            ModeSource src;
            if (source) src = [&source, i](double r) { return source(i, r); };
            const ModeState e = evolve(g, fs.band, s, r_target, src, cfg);
            out.u[i] = e.u;
            out.du[i] = e.du;
        } catch (const StepSizeUnderflow& e) {
            failure[i] = e.what();
            failure_kind[i] = 1;
        } catch (const Error& e) {
            failure[i] = e.what();
            failure_kind[i] = 2;
        }
    });
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (!failure[i]) continue;
        const ModeIndex m = fs.band.mode(i);
        std::ostringstream os;
        os << "mode (k=" << m.k << ", ell=" << m.ell << ", em=" << m.em << "): " << *failure[i];
        if (failure_kind[i] == 1) throw StepSizeUnderflow("mode_evolution", os.str());
        throw OutsideExpandingRegion("mode_evolution", os.str());
    }
    if (fs.real_flag) {
        for (std::size_t i = 0; i < fs.size(); ++i) {
            if (probe.canonical(i)) continue;
            const std::size_t j = probe.partner(i);
            const double sign = (fs.band.mode(i).em % 2 == 0) ? 1.0 : -1.0;
            out.u[i] = sign * std::conj(out.u[j]);
            out.du[i] = sign * std::conj(out.du[j]);
        }
    }
    return out;
}

FieldState zero_state(double r, const Band& band, bool real_flag) { return FieldState(r, band, real_flag); }

std::string field_state_csv(const std::vector<FieldState>& states) {
    std::string out = "k,ell,em,r,re_u,im_u,re_du,im_du\n";
    char buf[256];
    for (const auto& fs : states)
        for (std::size_t i = 0; i < fs.size(); ++i) {
            const ModeIndex m = fs.band.mode(i);
            std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", m.k, m.ell, m.em,
                          fs.r, fs.u[i].real(), fs.u[i].imag(), fs.du[i].real(), fs.du[i].imag());
            out += buf;
        }
    return out;
}

FieldState field_state_from_csv(const std::string& text, const Band& band, bool real_flag) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    FieldState fs(0.0, band, real_flag);
    bool have_r = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int k, ell, em;
        double r, a, b, c, d;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf,%lf,%lf,%lf", &k, &ell, &em, &r, &a, &b, &c, &d) != 8)
            throw InvalidArgument("mode_evolution", "malformed field-state row: " + line);
        if (!band.contains(k, ell, em)) throw BandMismatch("mode_evolution", "row outside band: " + line);
        if (have_r && r != fs.r) throw InvalidArgument("mode_evolution", "field-state rows must share r");
        fs.r = r;
        have_r = true;
        const std::size_t i = band.index(k, ell, em);
        fs.u[i] = {a, b};
        fs.du[i] = {c, d};
    }
    if (!have_r) throw InvalidArgument("mode_evolution", "empty field-state csv");
    return fs;
}

}  // namespace sds
