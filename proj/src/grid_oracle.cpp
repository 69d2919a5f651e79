#include "sds/errors.hpp"
#include "sds/evolution.hpp"

#include <cmath>
#include <numbers>

namespace sds {

std::vector<double> GridField::ts() const {
    std::vector<double> v(spec.nt);
    for (int i = 0; i < spec.nt; ++i) v[i] = spec.period * i / spec.nt;
    return v;
}

std::vector<double> GridField::thetas() const {
    std::vector<double> v(spec.ntheta);
    for (int i = 0; i < spec.ntheta; ++i) v[i] = std::numbers::pi * (i + 0.5) / spec.ntheta;
    return v;
}

std::vector<double> GridField::phis() const {
    std::vector<double> v(spec.nphi);
    for (int i = 0; i < spec.nphi; ++i) v[i] = 2.0 * std::numbers::pi * i / spec.nphi;
    return v;
}

namespace {

// psi_rr = [ -(r^2 Delta)' psi_r + (r^2/Delta) psi_tt + Lap_S2 psi ] / (r^2 Delta).
// Finite-volume theta stencil: the face flux at either pole carries sin(0) = 0.
class Stencil {
public:
    Stencil(const GridSpec& s) : s_(s) {
        dt_ = s.period / s.nt;
        dth_ = std::numbers::pi / s.ntheta;
        dph_ = 2.0 * std::numbers::pi / s.nphi;
        for (int j = 0; j < s.ntheta; ++j) {
            sc_.push_back(std::sin((j + 0.5) * dth_));
            sm_.push_back(std::sin(j * dth_));
            sp_.push_back(std::sin((j + 1.0) * dth_));
        }
    }

    std::size_t at(int it, int j, int k) const {
        return (static_cast<std::size_t>(it) * s_.ntheta + j) * s_.nphi + k;
    }

    void accel(const SdSGeometry& g, double r, const std::vector<double>& psi, const std::vector<double>& dpsi,
               std::vector<double>& out) const {
        const double d = g.delta(r);
        const double p = r * r * d;
        const double pp = 2.0 * r * d + r * r * g.delta_prime(r);
        const double ct = r * r / d / (dt_ * dt_);
        for (int it = 0; it < s_.nt; ++it) {
            const int tp = (it + 1) % s_.nt, tm = (it + s_.nt - 1) % s_.nt;
            for (int j = 0; j < s_.ntheta; ++j)
                for (int k = 0; k < s_.nphi; ++k) {
                    const int kp = (k + 1) % s_.nphi, km = (k + s_.nphi - 1) % s_.nphi;
                    const std::size_t c = at(it, j, k);
                    const double v = psi[c];
                    const double tt = psi[at(tp, j, k)] - 2.0 * v + psi[at(tm, j, k)];
                    double th = 0.0;
                    if (j + 1 < s_.ntheta) th += sp_[j] * (psi[at(it, j + 1, k)] - v);
                    if (j > 0) th -= sm_[j] * (v - psi[at(it, j - 1, k)]);
                    th /= sc_[j] * dth_ * dth_;
                    const double ph =
                        (psi[at(it, j, kp)] - 2.0 * v + psi[at(it, j, km)]) / (sc_[j] * sc_[j] * dph_ * dph_);
                    out[c] = (-pp * dpsi[c] + ct * tt + th + ph) / p;
                }
        }
    }

    double dt() const { return dt_; }
    double min_sin() const { return sc_.front(); }
    double dph() const { return dph_; }
    double dth() const { return dth_; }

private:
    GridSpec s_;
    double dt_, dth_, dph_;
    std::vector<double> sc_, sm_, sp_;
};

}  // namespace

GridField grid_oracle(const SdSGeometry& g, const GridField& initial, double r_target) {
    const GridSpec& s = initial.spec;
    if (s.nt < 4 || s.ntheta < 2 || s.nphi < 2)
        throw InvalidArgument("mode_evolution", "grid oracle needs at least 4x2x2 points");
    const std::size_t n = static_cast<std::size_t>(s.nt) * s.ntheta * s.nphi;
    if (initial.psi.size() != n || initial.dpsi.size() != n)
        throw InvalidArgument("mode_evolution", "grid data size does not match the grid spec");
    require_expanding(g, initial.r, "mode_evolution");
    require_expanding(g, r_target, "mode_evolution");

    Stencil st(s);
    const double span = r_target - initial.r;
    // Largest characteristic frequency bounds the explicit RK4 step.
    const double rmin = std::min(initial.r, r_target);
    const double dmin = g.delta(rmin);
    const double pmin = rmin * rmin * dmin;
    const double lam_t = 2.0 / (dmin * st.dt());
    const double lam_s = std::sqrt(4.0 / (st.dth() * st.dth() * st.min_sin()) +
                                   4.0 / (st.min_sin() * st.min_sin() * st.dph() * st.dph())) /
                         std::sqrt(pmin);
    const double cfl = 2.0 / std::max(lam_t, lam_s);
    double dr = s.dr > 0.0 ? s.dr : std::min(1e-3, 0.5 * cfl);
    if (dr > 0.9 * 2.8 / std::max(lam_t, lam_s))
        throw InvalidArgument("mode_evolution", "grid oracle step violates the RK4 stability bound");
    const long nsteps = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / dr)));
    const double h = span / nsteps;

    GridField f = initial;
    std::vector<double> k1a(n), k2a(n), k3a(n), k4a(n), pt(n), vt(n);
    for (long step = 0; step < nsteps; ++step) {
        const double r = initial.r + step * h;
        const auto& p0 = f.psi;
        const auto& v0 = f.dpsi;
        st.accel(g, r, p0, v0, k1a);
        for (std::size_t i = 0; i < n; ++i) {
            pt[i] = p0[i] + 0.5 * h * v0[i];
            vt[i] = v0[i] + 0.5 * h * k1a[i];
        }
        std::vector<double> v2 = vt;
        st.accel(g, r + 0.5 * h, pt, vt, k2a);
        for (std::size_t i = 0; i < n; ++i) {
            pt[i] = p0[i] + 0.5 * h * v2[i];
            vt[i] = v0[i] + 0.5 * h * k2a[i];
        }
        std::vector<double> v3 = vt;
        st.accel(g, r + 0.5 * h, pt, vt, k3a);
        for (std::size_t i = 0; i < n; ++i) {
            pt[i] = p0[i] + h * v3[i];
            vt[i] = v0[i] + h * k3a[i];
        }
        std::vector<double> v4 = vt;
        st.accel(g, r + h, pt, vt, k4a);
        for (std::size_t i = 0; i < n; ++i) {
            f.psi[i] = p0[i] + h / 6.0 * (v0[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            f.dpsi[i] = v0[i] + h / 6.0 * (k1a[i] + 2.0 * k2a[i] + 2.0 * k3a[i] + k4a[i]);
        }
    }
    f.r = r_target;
    return f;
}

}  // namespace sds
