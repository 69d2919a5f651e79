#include "support.hpp"

#include "sds/energy.hpp"
#include "sds/errors.hpp"

#include <doctest.h>

#include <algorithm>

using namespace sds;

namespace {

const SdSGeometry G = build_geometry(3.0, 0.1);

// Radial mode with r^2 Delta u' = c.
FieldState radial_state(double r, double c) {
    FieldState fs(r, Band{}, true);
    const std::size_t i = fs.band.index(0, 0, 0);
    fs.u[i] = 1.0;
    fs.du[i] = c / (r * r * G.delta(r));
    return fs;
}

FieldState random_state(std::mt19937_64& rng, double r, int n) { return gen::sparse_state(rng, Band{}, r, n); }

}  // namespace

TEST_SUITE("energy") {

TEST_CASE("flux examples") {
    const FieldState zero(2.0, Band{}, true);
    CHECK(flux(zero, G, MultiplierKind::DR) == 0.0);
    CHECK(flux(zero, G, MultiplierKind::M) == 0.0);
    CHECK(bulk_current(zero, G, MultiplierKind::M) == 0.0);
    const FieldState rad = radial_state(2.0, 1.0);
    CHECK(flux(rad, G, MultiplierKind::DR) == doctest::Approx(1.0 / (2.0 * 4.0 * 3.1)).epsilon(1e-14));
    CHECK(std::abs(flux(rad, G, MultiplierKind::DR) - 0.040323) < 5e-7);
    CHECK(flux(rad, G, MultiplierKind::M) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(bulk_current(rad, G, MultiplierKind::M) == 0.0);
    CHECK_THROWS_AS(flux(rad, EquationContext{}, MultiplierKind::DR, CommutatorKind::Xs), MissingSecondDerivative);
}

TEST_CASE("single (k=1, l=0) mode has negative M bulk") {
    FieldState fs(5.0, Band{}, false);
    fs.u[fs.band.index(1, 0, 0)] = 1.0;
    CHECK(bulk_current(fs, G, MultiplierKind::M) < 0.0);
    CHECK(bulk_current(fs, G, MultiplierKind::M) == doctest::Approx(-2.0 * 125.0).epsilon(1e-14));
}

TEST_CASE("property: bulk signs and the M/DR flux relation") {
    std::mt19937_64 rng(40);
    for (int trial = 0; trial < 1000; ++trial) {
        const double r = gen::log_uniform(rng, 1.2 * G.r_c, 1e3);
        const FieldState fs = random_state(rng, r, 20);
        CHECK(bulk_current(fs, G, MultiplierKind::M) <= 0.0);
        CHECK(bulk_current(fs, G, MultiplierKind::DR) >= 0.0);
        const double dr = flux(fs, G, MultiplierKind::DR), m = flux(fs, G, MultiplierKind::M);
        CHECK(std::abs(m - r * r * G.delta(r) * dr) <= 1e-14 * m);
    }
}

TEST_CASE("bulk is minus the radial derivative of the flux") {
    // Finite differences of the flux of an evolved multi-mode state, independent of the per-mode harness.
    std::mt19937_64 rng(41);
    IntegratorConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
        const double r = gen::log_uniform(rng, 2.0, 30.0);
        const FieldState fs = random_state(rng, r, 8);
        const double h = 1e-3 * r;
        for (MultiplierKind k : {MultiplierKind::DR, MultiplierKind::M}) {
            auto F = [&](double q) { return flux(evolve_field(G, fs, r + q * h, {}, cfg), G, k); };
            const double d = (F(-2) - 8 * F(-1) + 8 * F(1) - F(2)) / (12 * h);
            const double b = bulk_current(fs, G, k);
            CHECK(std::abs(d + b) <= 1e-6 * std::abs(b));
        }
    }
}

TEST_CASE("divergence identity harness") {
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    CHECK(divergence_identity_check(G, 0.0, 0, 1.0, 0.3, 2.0, 20.0, MultiplierKind::M, cfg) < 1e-10);
    CHECK(divergence_identity_check(G, 1.0, 2, 1.0, 0.0, 2.0, 20.0, MultiplierKind::M, cfg) < 1e-5);
    CHECK(divergence_identity_check(G, 1.0, 2, 1.0, 0.0, 2.0, 20.0, MultiplierKind::DR, cfg) < 1e-5);
    CHECK_THROWS_AS(divergence_identity_check(G, 1.0, 2, 1.0, 0.0, 3.0, 2.0, MultiplierKind::DR, cfg),
                    InvalidArgument);
}

TEST_CASE("commutation identity") {
    const CommutedBoxDefect c = commuted_box_check(G, CommutatorKind::Xs, 0.0, 0, 1.0, 0.0, 3.0);
    CHECK(c.defect == 0.0);
    for (int j = 0; j < 20; ++j) {
        const double r = 1.2 * G.r_c * std::pow(100.0, j / 19.0);
        CHECK(commuted_box_check(G, CommutatorKind::Xs, 2.0, 3, 1.0, 0.5, r).middle_coefficient < 1e-12);
    }
    std::mt19937_64 rng(42);
    for (CommutatorKind f : {CommutatorKind::Xs, CommutatorKind::Xw, CommutatorKind::YXs})
        for (double r : {3.0, 10.0, 30.0}) {
            const ModeIndex m = gen::mode(rng, Band{});
            const CommutedBoxDefect d = commuted_box_check(G, f, Band{}.omega(m.k), m.ell, gen::gaussian_c(rng),
                                                           gen::gaussian_c(rng), r);
            CHECK(d.defect < 1e-8);
        }
    CHECK_THROWS_AS(commuted_box_check(G, CommutatorKind::None, 1.0, 1, 1.0, 0.0, 3.0), InvalidArgument);
}

TEST_CASE("monotonicity report") {
    IntegratorConfig cfg;
    const std::vector<double> radii = {1.5 * G.r_c, 3.0, 10.0, 50.0, 100.0 * G.r_c};
    auto trajectory = [&](const FieldState& fs0) {
        std::vector<FieldState> t{fs0};
        for (std::size_t j = 1; j < radii.size(); ++j) t.push_back(evolve_field(G, t.back(), radii[j], {}, cfg));
        return t;
    };
    const auto rad = trajectory(radial_state(radii[0], 1.0));
    const MonotonicityReport rr = monotonicity_report(rad, G, 10 * cfg.rel_tol);
    CHECK(rr.dr_nonincreasing);
    CHECK(rr.m_nondecreasing);
    for (const auto& row : rr.ledger)
        if (row.mult == MultiplierKind::M && row.comm == CommutatorKind::None)
            CHECK(row.flux == doctest::Approx(0.5).epsilon(1e-9));
    for (std::size_t j = 1; j < rad.size(); ++j)
        CHECK(flux(rad[j], G, MultiplierKind::DR) < flux(rad[j - 1], G, MultiplierKind::DR));

    const MonotonicityReport z = monotonicity_report(trajectory(FieldState(radii[0], Band{}, true)), G, 1e-11);
    CHECK(z.dr_nonincreasing);
    CHECK(z.m_nondecreasing);
    CHECK(z.higher_order_bounded);

    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 5; ++trial) {
        const MonotonicityReport r = monotonicity_report(trajectory(random_state(rng, radii[0], 50)), G,
                                                         10 * cfg.rel_tol);
        CHECK(r.dr_nonincreasing);
        CHECK(r.m_nondecreasing);
        CHECK(r.higher_order_bounded);
    }
    const std::string csv = ledger_csv(rr.ledger);
    CHECK(csv.rfind("r,multiplier,commutator,flux,bulk\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * static_cast<long>(radii.size()));
    std::vector<FieldState> bad{rad[1], rad[0]};
    CHECK_THROWS_AS(monotonicity_report(bad, G, 1e-11), InvalidArgument);
}

TEST_CASE("property: r^3 u' converges along doubling radii") {
    // No r^-1 term: r^3 u' tends to -2 psi2.
    std::mt19937_64 rng(44);
    IntegratorConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        const ModeIndex m = gen::mode(rng, Band{});
        const double w = Band{}.omega(m.k);
        ModeState s{m, 1.5 * G.r_c, gen::gaussian_c(rng), gen::gaussian_c(rng)};
        std::vector<cplx> c;
        for (int j = 0; j <= 24; ++j) {
            s = evolve(G, w, s, 1e2 * std::pow(2.0, j), {}, cfg);
            c.push_back(s.r * s.r * s.r * s.du);
        }
        const double scale = std::abs(c.back()) + std::abs(s.u);
        CHECK(std::abs(c[24] - c[23]) <= 1e-6 * scale);
        CHECK(std::abs(c[24] - c[23]) < std::abs(c[4] - c[3]) + 1e-12 * scale);
    }
}

TEST_CASE("sobolev ratio") {
    CHECK(sobolev_ratio(FieldState(2.0, Band{}, true), G) == 0.0);
    FieldState c(2.0, Band{}, true);
    c.u[c.band.index(0, 0, 0)] = 1.0;
    const double cr = sobolev_ratio(c, G);
    CHECK(std::isfinite(cr));
    CHECK(cr > 0.0);

    // Cauchy-Schwarz over modes gives the explicit bound
    // sum_{k,l} (2l+1) / (4 pi L w_{kl}) * r / sqrt(Delta), w the Sobolev weight.
    Band b;
    b.max_k = 3;
    b.max_ell = 3;
    double S = 0.0;
    for (int k = -b.max_k; k <= b.max_k; ++k)
        for (int l = 0; l <= b.max_ell; ++l) {
            const double w2 = b.omega(k) * b.omega(k), L = l * (l + 1.0);
            S += (2 * l + 1) / (4 * std::numbers::pi * b.period * (1 + w2 + L + L * w2 + L * L));
        }
    std::mt19937_64 rng(45);
    for (double r : {2.0, 10.0, 50.0})
        for (int trial = 0; trial < 20; ++trial) {
            FieldState fs(r, b, true);
            fs.u = random_field(b, rng(), 0.5, true).coeffs();
            CHECK(sobolev_ratio(fs, G) <= S * r / std::sqrt(G.delta(r)) * (1 + 1e-12));
        }
}

}
