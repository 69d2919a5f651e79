#include "sds/spectral.hpp"

#include "sds/errors.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace sds {

std::size_t Band::size() const {
    const std::size_t per_k = static_cast<std::size_t>(max_ell + 1) * (max_ell + 1);
    return static_cast<std::size_t>(2 * max_k + 1) * per_k;
}

std::size_t Band::index(int k, int ell, int em) const {
    const std::size_t per_k = static_cast<std::size_t>(max_ell + 1) * (max_ell + 1);
    return static_cast<std::size_t>(k + max_k) * per_k + static_cast<std::size_t>(ell * ell + ell + em);
}

ModeIndex Band::mode(std::size_t i) const {
    const std::size_t per_k = static_cast<std::size_t>(max_ell + 1) * (max_ell + 1);
    ModeIndex m;
    m.k = static_cast<int>(i / per_k) - max_k;
    const int rest = static_cast<int>(i % per_k);
    m.ell = static_cast<int>(std::sqrt(static_cast<double>(rest)));
    while (m.ell * m.ell > rest) --m.ell;
    while ((m.ell + 1) * (m.ell + 1) <= rest) ++m.ell;
    m.em = rest - m.ell * m.ell - m.ell;
    return m;
}

bool Band::contains(int k, int ell, int em) const {
    return std::abs(k) <= max_k && ell >= 0 && ell <= max_ell && std::abs(em) <= ell;
}

double Band::omega(int k) const { return 2.0 * std::numbers::pi * k / period; }

CylinderField::CylinderField(const Band& band, bool real_flag)
    : band_(band), real_(real_flag), c_(band.size(), cplx(0.0, 0.0)) {
    if (!(band.period > 0.0) || band.max_k < 0 || band.max_ell < 0)
        throw InvalidArgument("cylinder_spectral", "band needs period > 0 and nonnegative limits");
}

std::size_t CylinderField::partner(std::size_t i) const {
    const ModeIndex m = band_.mode(i);
    return band_.index(-m.k, m.ell, -m.em);
}

bool CylinderField::canonical(std::size_t i) const {
    const ModeIndex m = band_.mode(i);
    return m.k > 0 || (m.k == 0 && m.em >= 0);
}

double CylinderField::reality_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < c_.size(); ++i) {
        const ModeIndex m = band_.mode(i);
        const double sign = (m.em % 2 == 0) ? 1.0 : -1.0;
        worst = std::max(worst, std::abs(c_[partner(i)] - sign * std::conj(c_[i])));
    }
    return worst;
}

bool CylinderField::finite() const {
    for (const auto& c : c_)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
    return true;
}

CylinderField& CylinderField::operator+=(const CylinderField& o) {
    require_same_band(*this, o, "cylinder_spectral");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    real_ = real_ && o.real_;
    return *this;
}

CylinderField& CylinderField::operator-=(const CylinderField& o) {
    require_same_band(*this, o, "cylinder_spectral");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    real_ = real_ && o.real_;
    return *this;
}

CylinderField& CylinderField::operator*=(cplx a) {
    for (auto& c : c_) c *= a;
    if (a.imag() != 0.0) real_ = false;
    return *this;
}

CylinderField operator+(CylinderField a, const CylinderField& b) { return a += b; }
CylinderField operator-(CylinderField a, const CylinderField& b) { return a -= b; }
CylinderField operator*(cplx a, CylinderField f) { return f *= a; }

void require_same_band(const CylinderField& a, const CylinderField& b, const char* module) {
    if (!(a.band() == b.band()))
        throw BandMismatch(module, "fields have different period or truncation");
}

cplx spherical_harmonic(int ell, int em, double theta, double phi) {
    const int am = std::abs(em);
    const double p = std::sph_legendre(static_cast<unsigned>(ell), static_cast<unsigned>(am), theta);
    cplx y = p * std::exp(cplx(0.0, am * phi));
    if (em < 0) y = ((am % 2 == 0) ? 1.0 : -1.0) * std::conj(y);
    return y;
}

cplx evaluate_complex(const CylinderField& f, double t, double theta, double phi) {
    const Band& b = f.band();
    const double norm = 1.0 / std::sqrt(b.period);
    cplx sum = 0.0;
    for (int ell = 0; ell <= b.max_ell; ++ell)
        for (int em = -ell; em <= ell; ++em) {
            const cplx y = spherical_harmonic(ell, em, theta, phi);
            cplx acc = 0.0;
            for (int k = -b.max_k; k <= b.max_k; ++k)
                acc += f.at(k, ell, em) * std::exp(cplx(0.0, b.omega(k) * t));
            sum += acc * y;
        }
    return sum * norm;
}

double evaluate(const CylinderField& f, double t, double theta, double phi) {
    return evaluate_complex(f, t, theta, phi).real();
}

std::vector<cplx> synthesize_grid(const Band& band, const std::vector<cplx>& coeffs,
                                  const std::vector<double>& ts, const std::vector<double>& thetas,
                                  const std::vector<double>& phis) {
    const std::size_t nt = ts.size(), nth = thetas.size(), nph = phis.size();
    const std::size_t nlm = static_cast<std::size_t>(band.max_ell + 1) * (band.max_ell + 1);
    // Fold the t sum first: g[it][lm] = sum_k c(k,lm) e^{i w t}/sqrt(L).
    std::vector<cplx> g(nt * nlm, 0.0);
    const double norm = 1.0 / std::sqrt(band.period);
    for (std::size_t it = 0; it < nt; ++it)
        for (int k = -band.max_k; k <= band.max_k; ++k) {
            const cplx e = std::exp(cplx(0.0, band.omega(k) * ts[it])) * norm;
            const std::size_t base = band.index(k, 0, 0);
            for (std::size_t lm = 0; lm < nlm; ++lm) g[it * nlm + lm] += coeffs[base + lm] * e;
        }
    std::vector<cplx> ytab(nth * nph * nlm);
    for (std::size_t a = 0; a < nth; ++a)
        for (std::size_t b = 0; b < nph; ++b)
            for (int ell = 0; ell <= band.max_ell; ++ell)
                for (int em = -ell; em <= ell; ++em)
                    ytab[(a * nph + b) * nlm + ell * ell + ell + em] =
                        spherical_harmonic(ell, em, thetas[a], phis[b]);
    std::vector<cplx> out(nt * nth * nph);
    for (std::size_t it = 0; it < nt; ++it)
        for (std::size_t p = 0; p < nth * nph; ++p) {
            cplx s = 0.0;
            for (std::size_t lm = 0; lm < nlm; ++lm) s += g[it * nlm + lm] * ytab[p * nlm + lm];
            out[it * nth * nph + p] = s;
        }
    return out;
}

SphereGrid default_grid(const Band& band, int oversample) {
    SphereGrid g;
    const int nt = oversample * (2 * band.max_k + 1) + 1;
    const int nth = oversample * (band.max_ell + 1) + 1;
    const int nph = oversample * (2 * band.max_ell + 1) + 1;
    for (int i = 0; i < nt; ++i) g.ts.push_back(band.period * i / nt);
    for (int i = 0; i < nth; ++i) g.thetas.push_back(std::numbers::pi * (i + 0.5) / nth);
    for (int i = 0; i < nph; ++i) g.phis.push_back(2.0 * std::numbers::pi * i / nph);
    return g;
}

double sobolev_symbol(double omega, int ell) { return 1.0 + omega * omega + ell * (ell + 1.0); }

double sobolev_norm(const CylinderField& f, int s) {
    const Band& b = f.band();
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const ModeIndex m = b.mode(i);
        sum += std::pow(sobolev_symbol(b.omega(m.k), m.ell), s) * std::norm(f[i]);
    }
    return std::sqrt(sum);
}

double conformal_laplacian_multiplier(double omega, int ell, double lambda) {
    return -(3.0 / lambda * omega * omega + ell * (ell + 1.0));
}

CylinderField conformal_laplacian(const CylinderField& f, double lambda) {
    CylinderField out = f;
    const Band& b = f.band();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const ModeIndex m = b.mode(i);
        out[i] = conformal_laplacian_multiplier(b.omega(m.k), m.ell, lambda) * f[i];
    }
    return out;
}

cplx inner(const CylinderField& a, const CylinderField& b) {
    require_same_band(a, b, "cylinder_spectral");
    cplx s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

nlohmann::json to_json(const CylinderField& f) {
    nlohmann::json j;
    j["period"] = f.band().period;
    j["max_k"] = f.band().max_k;
    j["max_ell"] = f.band().max_ell;
    j["real_flag"] = f.real_flag();
    auto arr = nlohmann::json::array();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == cplx(0.0, 0.0)) continue;
        const ModeIndex m = f.band().mode(i);
        arr.push_back({m.k, m.ell, m.em, f[i].real(), f[i].imag()});
    }
    j["coeffs"] = arr;
    return j;
}

CylinderField field_from_json(const nlohmann::json& j) {
    Band b;
    try {
        b.period = j.at("period").get<double>();
        b.max_k = j.at("max_k").get<int>();
        b.max_ell = j.at("max_ell").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("cylinder_spectral", std::string("field json: ") + e.what());
    }
    CylinderField f(b, j.value("real_flag", false));
    try {
        for (const auto& row : j.value("coeffs", nlohmann::json::array())) {
            if (!row.is_array() || row.size() != 5)
                throw InvalidArgument("cylinder_spectral", "coefficient rows must be [k, ell, em, re, im]");
            const int k = row[0].get<int>(), ell = row[1].get<int>(), em = row[2].get<int>();
            if (!b.contains(k, ell, em))
                throw BandMismatch("cylinder_spectral", "coefficient outside the declared band");
            f.at(k, ell, em) = cplx(row[3].get<double>(), row[4].get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("cylinder_spectral", std::string("field json: ") + e.what());
    }
    if (f.real_flag() && f.reality_defect() > 1e-12 * (1.0 + sobolev_norm(f, 0)))
        throw InvalidArgument("cylinder_spectral", "real_flag set but coefficients violate the reality condition");
    if (!f.finite()) throw InvalidArgument("cylinder_spectral", "non-finite coefficient");
    return f;
}

CylinderField random_field(const Band& band, std::uint64_t seed, double decay, bool real) {
    CylinderField f(band, real);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const ModeIndex m = band.mode(i);
        const double amp = std::pow(sobolev_symbol(band.omega(m.k), m.ell), -decay);
        const double re = u(rng), im = u(rng);
        f[i] = amp * cplx(re, im);
    }
    if (real) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (!f.canonical(i)) continue;
            const ModeIndex m = band.mode(i);
            const std::size_t j = f.partner(i);
            if (j == i) {
                f[i] = cplx(f[i].real(), 0.0);
            } else {
                f[j] = ((m.em % 2 == 0) ? 1.0 : -1.0) * std::conj(f[i]);
            }
        }
    }
    return f;
}

}  // namespace sds
