#include "support.hpp"

#include "sds/errors.hpp"
#include "sds/evolution.hpp"

#include <doctest.h>

#include <algorithm>

using namespace sds;

namespace {

const SdSGeometry G = build_geometry(3.0, 0.1);

ModeState mode_state(int k, int ell, int em, double r, cplx u, cplx du) { return {{k, ell, em}, r, u, du}; }

double max_abs_diff(const FieldState& a, const FieldState& b) {
    double e = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        e = std::max({e, std::abs(a.u[i] - b.u[i]), std::abs(a.du[i] - b.du[i])});
    return e;
}

}  // namespace

TEST_SUITE("mode_evolution") {

TEST_CASE("ode_rhs examples") {
    const Derivs z = ode_rhs(G, 0.0, 0, 2.0, 1.0, 0.0, 0.0);
    CHECK(z.du == cplx(0.0));
    CHECK(z.ddu == cplx(0.0));
    // Homogeneous mode: the expanded operator of (u, du, ddu) vanishes.
    for (double r : {1.5, 2.0, 7.0})
        for (int ell : {0, 1, 4}) {
            const cplx u(1.0, -0.5), du(0.3, 0.2);
            const Derivs d = ode_rhs(G, 1.0, ell, r, u, du, 0.0);
            const cplx o = oracle::box_expanded(G.lambda, G.mass, 1.0, ell, r, u, du, d.ddu);
            CHECK(std::abs(o) <= 1e-13 * (1.0 + std::abs(d.ddu)));
        }
    // With a source F the expanded operator returns F.
    const cplx f(0.7, 0.1);
    const Derivs s = ode_rhs(G, 2.0, 3, 3.0, 1.0, 0.5, f);
    CHECK(std::abs(oracle::box_expanded(G.lambda, G.mass, 2.0, 3, 3.0, 1.0, 0.5, s.ddu) - f) < 1e-13);
    CHECK_THROWS_AS(ode_rhs(G, 0.0, 0, 0.5 * G.r_c, 1.0, 0.0, 0.0), OutsideExpandingRegion);
}

TEST_CASE("third derivative against finite differences") {
    IntegratorConfig cfg;
    const ModeState s = mode_state(1, 2, 0, 3.0, 1.0, 0.2);
    const double h = 1e-3;
    auto dd = [&](double r) {
        const ModeState e = evolve(G, 1.0, s, r, {}, cfg);
        return ode_rhs(G, 1.0, 2, r, e.u, e.du, 0.0).ddu;
    };
    const cplx fd = (dd(3.0 + h) - dd(3.0 - h)) / (2 * h);
    CHECK(std::abs(third_derivative(G, 1.0, 2, 3.0, 1.0, 0.2) - fd) < 1e-6);
}

TEST_CASE("constant mode is preserved") {
    const ModeState s = mode_state(0, 0, 0, 1.5 * G.r_c, 1.0, 0.0);
    for (Variable v : {Variable::radius, Variable::inverse_radius}) {
        IntegratorConfig cfg;
        cfg.variable = v;
        const ModeState e = evolve(G, 0.0, s, 200 * G.r_c, {}, cfg);
        CHECK(std::abs(e.u - 1.0) < 1e-14);
        CHECK(std::abs(e.du) < 1e-14);
    }
}

TEST_CASE("radial mode against quadrature") {
    // u' = c / (r^2 Delta) for w = l = 0, so u(r) = u0 + c * int ds/(s^2 Delta).
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const auto [lambda, m] = gen::subextremal(rng);
        const SdSGeometry g = build_geometry(lambda, m);
        const double r0 = gen::log_uniform(rng, 1.1 * g.r_c, 3 * g.r_c);
        const double r1 = r0 * gen::log_uniform(rng, 2.0, 100.0);
        const double c = 1.0;
        const ModeState s = mode_state(0, 0, 0, r0, 1.0, c / (r0 * r0 * g.delta(r0)));
        const ModeState e = evolve(g, 0.0, s, r1, {}, IntegratorConfig{});
        const double expect = 1.0 + c * oracle::radial_first_integral(lambda, m, r0, r1);
        CHECK(std::abs(e.u.real() - expect) <= 1e-9 * std::abs(expect));
        CHECK(std::abs(e.du.real() - c / (r1 * r1 * g.delta(r1))) <= 1e-9 * std::abs(e.du.real()));
    }
}

TEST_CASE("both variables agree") {
    IntegratorConfig a, b;
    b.variable = Variable::radius;
    const ModeState s = mode_state(3, 4, 1, 1.5 * G.r_c, cplx(1, 2), cplx(-1, 0.5));
    const ModeState ea = evolve(G, 3.0, s, 30 * G.r_c, {}, a);
    const ModeState eb = evolve(G, 3.0, s, 30 * G.r_c, {}, b);
    CHECK(std::abs(ea.u - eb.u) <= 1e-9 * std::abs(ea.u));
}

TEST_CASE("invalid configurations") {
    IntegratorConfig cfg;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(validate(cfg), InvalidArgument);
    cfg = {};
    cfg.abs_tol = 0.5;
    CHECK_THROWS_AS(validate(cfg), InvalidArgument);
    cfg = {};
    cfg.max_steps = 0;
    CHECK_THROWS_AS(validate(cfg), InvalidArgument);
    cfg = {};
    const ModeState s = mode_state(0, 0, 0, 2.0, 1.0, 0.0);
    CHECK_THROWS_AS(evolve(G, 0.0, s, 0.9 * G.r_c, {}, cfg), OutsideExpandingRegion);
    cfg.max_steps = 3;
    const ModeState hard = mode_state(8, 8, 0, 1.01 * G.r_c, 1.0, 1.0);
    CHECK_THROWS_AS(evolve(G, 8.0, hard, 100.0, {}, cfg), StepSizeUnderflow);
}

TEST_CASE("field evolution, reality and thread determinism") {
    Band b;
    b.max_k = 3;
    b.max_ell = 3;
    const CylinderField c = random_field(b, 5, 1.0, true);
    FieldState fs(2.0, b, true);
    fs.u = c.coeffs();
    IntegratorConfig one, four;
    four.threads = 4;
    const FieldState a = evolve_field(G, fs, 9.0, {}, one);
    const FieldState d = evolve_field(G, fs, 9.0, {}, four);
    CHECK(max_abs_diff(a, d) == 0.0);
    CylinderField out(b, true);
    out.coeffs() = a.u;
    CHECK(out.reality_defect() < 1e-14);
    // Single-mode evolution agrees with the field routine.
    const std::size_t i = b.index(2, 1, -1);
    const ModeState e = evolve(G, b, fs.state(i), 9.0, {}, one);
    CHECK(e.u == a.u[i]);

    const FieldState zero = evolve_field(G, zero_state(2.0, b, true), 50.0, {}, one);
    CHECK(max_abs_diff(zero, zero_state(50.0, b, true)) == 0.0);
}

TEST_CASE("csv round trip") {
    Band b;
    b.max_k = 2;
    b.max_ell = 2;
    std::mt19937_64 rng(3);
    const FieldState fs = gen::sparse_state(rng, b, 3.25, 10);
    const std::string text = field_state_csv({fs});
    const FieldState back = field_state_from_csv(text, b, false);
    CHECK(back.r == fs.r);
    CHECK(max_abs_diff(back, fs) == 0.0);
    CHECK_THROWS_AS(field_state_from_csv("k,ell,em,r,re_u,im_u,re_du,im_du\n", b, false), InvalidArgument);
    CHECK_THROWS_AS(field_state_from_csv("h\n9,0,0,1,0,0,0,0\n", b, false), BandMismatch);
    CHECK_THROWS_AS(field_state_from_csv("h\n0,0,0,1,x\n", b, false), InvalidArgument);
}

TEST_CASE("property: linearity") {
    std::mt19937_64 rng(30);
    IntegratorConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const ModeIndex m = gen::mode(rng, Band{});
        const double w = Band{}.omega(m.k);
        const double r0 = gen::log_uniform(rng, 1.1 * G.r_c, 4 * G.r_c), r1 = r0 * gen::log_uniform(rng, 1.5, 50);
        const cplx u1 = gen::gaussian_c(rng), v1 = gen::gaussian_c(rng), u2 = gen::gaussian_c(rng),
                   v2 = gen::gaussian_c(rng), a = gen::gaussian_c(rng), c = gen::gaussian_c(rng);
        const ModeState e1 = evolve(G, w, {m, r0, u1, v1}, r1, {}, cfg);
        const ModeState e2 = evolve(G, w, {m, r0, u2, v2}, r1, {}, cfg);
        const ModeState es = evolve(G, w, {m, r0, a * u1 + c * u2, a * v1 + c * v2}, r1, {}, cfg);
        const cplx expect = a * e1.u + c * e2.u;
        const double scale = std::abs(a) * std::abs(e1.u) + std::abs(c) * std::abs(e2.u);
        CHECK(std::abs(es.u - expect) <= 10 * cfg.rel_tol * 100 * scale + 1e-14);
    }
}

TEST_CASE("property: reversibility") {
    std::mt19937_64 rng(31);
    IntegratorConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const ModeIndex m = gen::mode(rng, Band{});
        const double w = Band{}.omega(m.k);
        const double r0 = gen::log_uniform(rng, 1.2 * G.r_c, 4 * G.r_c), r1 = r0 * gen::log_uniform(rng, 1.5, 50);
        const ModeState s{m, r0, gen::gaussian_c(rng), gen::gaussian_c(rng)};
        const ModeState there = evolve(G, w, s, r1, {}, cfg);
        const ModeState back = evolve(G, w, there, r0, {}, cfg);
        CHECK(std::abs(back.u - s.u) <= 1e3 * cfg.rel_tol * (std::abs(s.u) + std::abs(s.du)));
    }
}

TEST_CASE("property: Wronskian is conserved") {
    std::mt19937_64 rng(32);
    IntegratorConfig cfg;
    for (int trial = 0; trial < 20; ++trial) {
        const ModeIndex m = gen::mode(rng, Band{});
        const double w = Band{}.omega(m.k);
        const double r0 = gen::log_uniform(rng, 1.2 * G.r_c, 4 * G.r_c), r1 = r0 * gen::log_uniform(rng, 1.5, 50);
        auto W = [&](const ModeState& a, const ModeState& b) {
            return a.r * a.r * G.delta(a.r) * (a.u * b.du - a.du * b.u);
        };
        const ModeState a{m, r0, 1.0, 0.0}, b{m, r0, 0.0, 1.0};
        const cplx w0 = W(a, b);
        const cplx w1 = W(evolve(G, w, a, r1, {}, cfg), evolve(G, w, b, r1, {}, cfg));
        CHECK(std::abs(w1 - w0) <= 1e-7 * std::abs(w0));
    }
}

TEST_CASE("property: error shrinks with tolerance") {
    const ModeState s = mode_state(4, 3, 0, 1.5 * G.r_c, 1.0, 0.0);
    IntegratorConfig ref;
    ref.rel_tol = 1e-14;
    ref.abs_tol = 1e-17;
    const cplx exact = evolve(G, 4.0, s, 40.0, {}, ref).u;
    double prev = 1e300;
    for (double tol : {1e-6, 1e-8, 1e-10}) {
        IntegratorConfig cfg;
        cfg.rel_tol = tol;
        cfg.abs_tol = tol * 1e-3;
        const double err = std::abs(evolve(G, 4.0, s, 40.0, {}, cfg).u - exact);
        CHECK(err <= 100 * tol * std::abs(exact));
        CHECK(err <= prev);
        prev = err;
    }
}

TEST_CASE("grid oracle") {
    GridField f;
    f.spec.nt = 8;
    f.spec.ntheta = 4;
    f.spec.nphi = 4;
    f.r = 2.0;
    const std::size_t n = 8 * 4 * 4;
    f.psi.assign(n, 3.0);
    f.dpsi.assign(n, 0.0);
    const GridField c = grid_oracle(G, f, 3.0);
    for (double v : c.psi) CHECK(std::abs(v - 3.0) < 1e-12);

    // The (k=1, l=0) cos t mode on a coarse grid; the refinement study lives in the acceptance run.
    GridField s;
    s.spec.nt = 32;
    s.spec.ntheta = 8;
    s.spec.nphi = 4;
    s.r = 2.0;
    const std::size_t ns = 32 * 8 * 4;
    s.psi.assign(ns, 0.0);
    s.dpsi.assign(ns, 0.0);
    const auto ts = s.ts();
    for (int it = 0; it < 32; ++it)
        for (std::size_t j = 0; j < 32; ++j) s.psi[it * 32 + j] = std::cos(ts[it]);
    const GridField out = grid_oracle(G, s, 3.0);
    const ModeState e = evolve(G, 1.0, mode_state(1, 0, 0, 2.0, 1.0, 0.0), 3.0, {}, IntegratorConfig{});
    double err = 0;
    for (int it = 0; it < 32; ++it)
        for (std::size_t j = 0; j < 32; ++j)
            err = std::max(err, std::abs(out.psi[it * 32 + j] - (e.u * std::exp(cplx(0, ts[it]))).real()));
    CHECK(err < 1e-3);

    f.psi.pop_back();
    CHECK_THROWS_AS(grid_oracle(G, f, 3.0), InvalidArgument);
}

}
