#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace sds {

using cplx = std::complex<double>;

struct ModeIndex {
    int k = 0;
    int ell = 0;
    int em = 0;
    friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

// Truncation of S^1_L x S^2: Fourier indices |k| <= max_k, degrees ell <= max_ell.
struct Band {
    double period = 2.0 * 3.14159265358979323846;
    int max_k = 8;
    int max_ell = 8;

    std::size_t size() const;
    std::size_t index(int k, int ell, int em) const;
    ModeIndex mode(std::size_t i) const;
    bool contains(int k, int ell, int em) const;
    double omega(int k) const;
    friend bool operator==(const Band&, const Band&) = default;
};

// Coefficients in the orthonormal basis exp(i w t)/sqrt(L) Y_lm(theta, phi), w = 2 pi k / L.
class CylinderField {
public:
    CylinderField() = default;
    explicit CylinderField(const Band& band, bool real_flag = false);

    const Band& band() const { return band_; }
    bool real_flag() const { return real_; }
    void set_real_flag(bool r) { real_ = r; }
    std::size_t size() const { return c_.size(); }

    cplx& operator[](std::size_t i) { return c_[i]; }
    const cplx& operator[](std::size_t i) const { return c_[i]; }
    cplx& at(int k, int ell, int em) { return c_[band_.index(k, ell, em)]; }
    const cplx& at(int k, int ell, int em) const { return c_[band_.index(k, ell, em)]; }
    const std::vector<cplx>& coeffs() const { return c_; }
    std::vector<cplx>& coeffs() { return c_; }

    // Index of the mode paired with i by the reality constraint.
    std::size_t partner(std::size_t i) const;
    // True if i is the representative of its conjugate pair (k > 0, or k = 0 and em >= 0).
    bool canonical(std::size_t i) const;
    // Largest violation of coeff(-k,l,-m) = (-1)^m conj(coeff(k,l,m)).
    double reality_defect() const;
    bool finite() const;

    CylinderField& operator+=(const CylinderField& o);
    CylinderField& operator-=(const CylinderField& o);
    CylinderField& operator*=(cplx a);

private:
    Band band_;
    bool real_ = false;
    std::vector<cplx> c_;
};

CylinderField operator+(CylinderField a, const CylinderField& b);
CylinderField operator-(CylinderField a, const CylinderField& b);
CylinderField operator*(cplx a, CylinderField f);

void require_same_band(const CylinderField& a, const CylinderField& b, const char* module);

// Fully normalized complex spherical harmonic with Condon-Shortley phase.
cplx spherical_harmonic(int ell, int em, double theta, double phi);

cplx evaluate_complex(const CylinderField& f, double t, double theta, double phi);
// Real part of the synthesis; for reality-flagged fields the imaginary part vanishes.
double evaluate(const CylinderField& f, double t, double theta, double phi);

// Synthesis of a set of mode values on a tensor grid, ordered [it][ith][iph].
std::vector<cplx> synthesize_grid(const Band& band, const std::vector<cplx>& coeffs,
                                  const std::vector<double>& ts, const std::vector<double>& thetas,
                                  const std::vector<double>& phis);

// Default uniform grid in t and phi with cell-centred theta, sized from the band.
struct SphereGrid {
    std::vector<double> ts, thetas, phis;
};
SphereGrid default_grid(const Band& band, int oversample = 2);

double sobolev_norm(const CylinderField& f, int s);
// Weighted H^s symbol used by the round-trip report, with omega and ell(ell+1).
double sobolev_symbol(double omega, int ell);

// Multiplier of the Laplace-Beltrami operator of (lambda/3) dt^2 + gamma.
double conformal_laplacian_multiplier(double omega, int ell, double lambda);
CylinderField conformal_laplacian(const CylinderField& f, double lambda);

cplx inner(const CylinderField& a, const CylinderField& b);

nlohmann::json to_json(const CylinderField& f);
CylinderField field_from_json(const nlohmann::json& j);

// Random band-limited field with amplitude decaying like (1 + w^2 + l(l+1))^(-decay).
CylinderField random_field(const Band& band, std::uint64_t seed, double decay, bool real);

}  // namespace sds
