#include "support.hpp"

#include "sds/asymptotics.hpp"
#include "sds/conformal.hpp"
#include "sds/energy.hpp"
#include "sds/errors.hpp"

#include <doctest.h>

using namespace sds;

namespace {

const SdSGeometry G = build_geometry(3.0, 0.1);

std::vector<double> rho_samples(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return v;
}

double max_norm(const CylinderField& f) {
    double m = 0;
    for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
    return m;
}

}  // namespace

TEST_SUITE("conformal") {

TEST_CASE("SdS in rho: Taylor data and class") {
    const ModelPtr m = sds_in_rho(G);
    const std::array<double, 4> a{1.0, 0.0, -1.0, 0.2}, bt{1.0, 0.0, 1.0, -0.2}, bs{1.0, 0.0, 0.0, 0.0};
    for (int n = 0; n < 4; ++n) {
        CHECK(m->taylor_A()[n] == doctest::Approx(a[n]).epsilon(1e-15));
        CHECK(m->taylor_Bt()[n] == doctest::Approx(bt[n]).epsilon(1e-15));
        CHECK(m->taylor_Bs()[n] == doctest::Approx(bs[n]).epsilon(1e-15));
    }
    CHECK(m->class_tag() == ClassTag::G2);
    CHECK(m->drift() == 0.0);
    CHECK(m->g_rhorho(0.3) == doctest::Approx(-(1.0 - 0.09 + 0.2 * 0.027)));
    CHECK(std::string(to_string(m->class_tag())) == "G2");
    // Contracted Christoffel symbol against its defining combination.
    const double r = 0.4;
    CHECK(m->christoffel_rho(r) ==
          doctest::Approx(0.5 * m->dA(r) - 0.5 * m->A(r) * m->dBt(r) / m->Bt(r)).epsilon(1e-14));
    CHECK(synthetic_g1(3.0, 0.1)->class_tag() == ClassTag::G1);
}

TEST_CASE("models from json and declared classes") {
    const ModelPtr s = model_from_json(sds_in_rho(G)->to_json());
    CHECK(s->kind() == "sds");
    CHECK(s->sds_geometry()->r_c == doctest::Approx(G.r_c).epsilon(1e-15));
    const ModelPtr g1 = model_from_json({{"kind", "synthetic_g1"}, {"lambda", 3.0}, {"epsilon", 0.2}});
    CHECK(g1->class_tag() == ClassTag::G1);
    CHECK(g1->Bs(1.0) == doctest::Approx(1.0 / 1.2));
    const ModelPtr p = model_from_json(
        {{"kind", "polynomial"}, {"lambda", 3.0}, {"A", {1.0, 0.0, 0.5}}, {"Bt", {1.0}}, {"Bs", {1.0, 0.0, -0.3}},
         {"class_tag", "G2"}});
    CHECK(p->class_tag() == ClassTag::G2);
    CHECK(model_from_json(p->to_json())->A(0.5) == doctest::Approx(1.125));
    CHECK_THROWS_AS(polynomial_model(3.0, {1.0, 0.2}, {1.0}, {1.0}, ClassTag::G2), InvalidArgument);
    CHECK(polynomial_model(3.0, {1.0, 0.2}, {1.0}, {1.0}, ClassTag::G1)->class_tag() == ClassTag::G1);
    CHECK_THROWS_AS(polynomial_model(3.0, {2.0}, {1.0}, {1.0}, ClassTag::G2), InvalidArgument);
    CHECK_THROWS_AS(polynomial_model(3.0, {1.0}, {-1.0}, {1.0}, ClassTag::G2), InvalidArgument);
    CHECK_THROWS_AS(model_from_json({{"kind", "kerr"}}), InvalidArgument);
    CHECK_THROWS_AS(model_from_json({{"kind", "sds"}, {"lambda", "3"}}), InvalidArgument);
    CHECK_THROWS_AS(model_from_json({{"kind", "sds"}, {"lambda", 3.0}, {"mass", 1.0}}), NonSubextremal);
    CHECK_THROWS_AS(model_from_json({{"kind", "polynomial"}, {"lambda", 3.0}, {"A", {1.0}}, {"Bt", {1.0}},
                                     {"Bs", {1.0}}}),
                    InvalidArgument);
    // Zero amplitude keeps the declared structure but loses the first-order terms.
    CHECK(synthetic_g1(3.0, 0.0)->class_tag() == ClassTag::G2);
}

TEST_CASE("SdS coefficients agree with the inverse-radius construction") {
    Band b;
    const CylinderField p0 = random_field(b, 1, 1.5, true), p3 = random_field(b, 2, 1.5, true);
    const ConformalAsymptoticSolution c = build_asymptotic_conformal(p0, p3, sds_in_rho(G));
    const AsymptoticSolution a = build_asymptotic(p0, p3, G);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(c.psi2[i] - a.psi2[i]) <= 1e-12 * (1 + std::abs(a.psi2[i])));
    CHECK(max_norm(c.psi31) == 0.0);

    std::mt19937_64 rng(50);
    for (int t = 0; t < 10; ++t) {
        const auto [lambda, m] = gen::subextremal(rng);
        const ConformalAsymptoticSolution s = build_asymptotic_conformal(p0, p3, sds_in_rho(build_geometry(lambda, m)));
        CHECK(max_norm(s.psi31) == 0.0);
    }
    // rho-derivative of the evaluation against the r expansion.
    const std::size_t i = b.index(2, 3, 1);
    const double r = 20.0;
    const ConformalModeValue v = evaluate_conformal(c, i, 1.0 / r);
    const ModeValue w = evaluate_asymptotic(a, i, r);
    CHECK(std::abs(v.u - w.u) <= 1e-14 * std::abs(w.u));
    CHECK(std::abs(v.du - (-r * r * w.du)) <= 1e-12 * (std::abs(w.du) * r * r + 1e-300));
}

TEST_CASE("psi31 is linear in the G1 amplitude") {
    Band b;
    const CylinderField p0 = random_field(b, 3, 1.5, true), z(b, true);
    const CylinderField s1 = build_asymptotic_conformal(p0, z, synthetic_g1(3.0, 0.05)).psi31;
    const CylinderField s2 = build_asymptotic_conformal(p0, z, synthetic_g1(3.0, 0.1)).psi31;
    CHECK(max_norm(s1) > 0.0);
    const double n1 = sobolev_norm(s1, 0), n2 = sobolev_norm(s2, 0);
    CHECK(std::abs(n2 / n1 - 2.0) < 0.1);
    CHECK(sobolev_norm(s2 - 2.0 * s1, 0) < 0.05 * n2);
}

TEST_CASE("constant data has zero residual") {
    Band b;
    CylinderField c(b, true);
    c.at(0, 0, 0) = 1.5;
    for (const ModelPtr& m : {sds_in_rho(G), synthetic_g1(3.0, 0.1)}) {
        const ConformalAsymptoticSolution a = build_asymptotic_conformal(c, CylinderField(b, true), m);
        CHECK(max_norm(a.psi2) == 0.0);
        CHECK(max_norm(a.psi31) == 0.0);
        CHECK(conformal_residual_norm(a, 0.05) == 0.0);
        const ResidualOrderReport r = conformal_residual_order(a, rho_samples(1e-3, 0.1, 6));
        CHECK_FALSE(r.log_detected);
    }
}

TEST_CASE("residual against the operator applied to the expansion") {
    // Direct second derivative of psi_asymp fed through the conformal mode operator.
    Band b;
    const CylinderField p0 = random_field(b, 5, 1.5, true), p3 = random_field(b, 6, 1.5, true);
    for (const ModelPtr& m : {sds_in_rho(G), synthetic_g1(3.0, 0.1)}) {
        const ConformalAsymptoticSolution a = build_asymptotic_conformal(p0, p3, m);
        const double rho = 0.07;
        const std::vector<cplx> res = conformal_residual(a, rho);
        for (std::size_t i = 0; i < b.size(); i += 37) {
            const ModeIndex mi = b.mode(i);
            const double lr = std::log(rho);
            const cplx u = a.psi0[i] + rho * rho * a.psi2[i] + std::pow(rho, 3) * (lr * a.psi31[i] + a.psi3[i]);
            const cplx du = 2.0 * rho * a.psi2[i] + rho * rho * ((3 * lr + 1) * a.psi31[i] + 3.0 * a.psi3[i]);
            const cplx ddu = 2.0 * a.psi2[i] + rho * ((6 * lr + 5) * a.psi31[i] + 6.0 * a.psi3[i]);
            const cplx o = conformal_operator(*m, b.omega(mi.k), mi.ell, rho, u, du, ddu);
            const double scale = (1 + b.omega(mi.k) * b.omega(mi.k) + mi.ell * (mi.ell + 1.0)) *
                                 (std::abs(a.psi0[i]) + std::abs(a.psi2[i]));
            CHECK(std::abs(res[i] - o) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("residual orders and logarithm detection") {
    Band b;
    const CylinderField p0 = random_field(b, 1, 1.5, true), p3 = random_field(b, 2, 1.5, true), z(b, true);
    const auto rhos = rho_samples(1e-4, 0.1, 16);
    const ResidualOrderReport s0 = conformal_residual_order(build_asymptotic_conformal(p0, z, sds_in_rho(G)), rhos);
    CHECK(std::abs(s0.power_slope - 2.0) < 0.05);
    CHECK_FALSE(s0.log_detected);
    const ResidualOrderReport s3 = conformal_residual_order(build_asymptotic_conformal(z, p3, sds_in_rho(G)), rhos);
    CHECK(std::abs(s3.power_slope - 3.0) < 0.05);
    CHECK_FALSE(s3.log_detected);
    const ResidualOrderReport g1 =
        conformal_residual_order(build_asymptotic_conformal(p0, z, synthetic_g1(3.0, 0.1)), rhos);
    CHECK(g1.log_detected);
    CHECK(std::abs(g1.log_slope - 2.0) < 0.05);
    CHECK_THROWS_AS(conformal_residual_order(build_asymptotic_conformal(p0, z, sds_in_rho(G)), {0.1, 0.2, 0.3, 0.4}),
                    InvalidArgument);
    CHECK_THROWS_AS(conformal_residual_order(build_asymptotic_conformal(p0, z, sds_in_rho(G)), {0.01, 0.02}),
                    InvalidArgument);
}

TEST_CASE("SdS conformal evolution matches the inverse-radius evolution") {
    Band b;
    b.max_k = 4;
    b.max_ell = 4;
    FieldState fs(1.5 * G.r_c, b, true);
    fs.u = random_field(b, 7, 1.0, true).coeffs();
    fs.du = random_field(b, 8, 1.0, true).coeffs();
    IntegratorConfig cfg;
    const FieldState r_side = evolve_field(G, fs, 300.0, {}, cfg);
    const ModelPtr m = sds_in_rho(G);
    const ConformalState c = conformal_evolve(*m, to_conformal(fs), 1.0 / 300.0, {}, cfg);
    const FieldState back = from_conformal(c);
    CHECK(back.r == doctest::Approx(300.0).epsilon(1e-15));
    double scale = 0, diff = 0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        scale = std::max(scale, std::abs(r_side.u[i]));
        diff = std::max(diff, std::abs(back.u[i] - r_side.u[i]));
    }
    CHECK(diff <= 1e-9 * scale);
    // The weighted flux is the M-flux.
    CHECK(weighted_flux(*m, c) == doctest::Approx(flux(r_side, G, MultiplierKind::M)).epsilon(1e-8));
    const FieldState round = from_conformal(to_conformal(fs));
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(std::abs(round.du[i] - fs.du[i]) <= 1e-15 * (1 + std::abs(fs.du[i])));
}

TEST_CASE("weighted backward construction") {
    Band b;
    const CylinderField p0 = random_field(b, 1, 1.5, true), p3 = random_field(b, 2, 1.5, true);
    std::vector<double> cut;
    for (double f : {8.0, 4.0, 2.0, 1.0}) cut.push_back(f / (200 * G.r_c));
    const double rho0 = 1.0 / (1.5 * G.r_c);
    const WeightedBackwardReport s = weighted_backward_check(sds_in_rho(G), p0, p3, rho0, cut, IntegratorConfig{});
    REQUIRE(s.sds_discrepancy.has_value());
    CHECK(*s.sds_discrepancy < 1e-7);
    CHECK(s.gaps_decreasing);
    CHECK(s.to_json().contains("sds_discrepancy"));

    const WeightedBackwardReport g1 =
        weighted_backward_check(synthetic_g1(3.0, 0.1), p0, p3, 0.5, cut, IntegratorConfig{});
    CHECK(g1.gaps_decreasing);
    CHECK_FALSE(g1.sds_discrepancy.has_value());
    CHECK(g1.gaps.size() == 3);
    CHECK_THROWS_AS(weighted_backward_check(sds_in_rho(G), p0, p3, rho0, {1e-3, 2e-3}, IntegratorConfig{}),
                    InvalidArgument);
}

}
