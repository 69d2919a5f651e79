#pragma once

// Explicit Runge-Kutta 8(5,3) of Dormand and Prince with Hairer's step control.
// State is a fixed-size real array; integration stops exactly at x_end.

#include "sds/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace sds {

struct Dop853Options {
    double rel_tol = 1e-12;
    double abs_tol = 1e-14;
    double h_init = 0.0;  // 0 selects a starting step automatically
    double h_max = 0.0;   // 0 means unbounded
    long max_steps = 200000;
};

struct Dop853Stats {
    long accepted = 0;
    long rejected = 0;
    long evaluations = 0;
};

namespace dop853_detail {
constexpr double c2 = 0.526001519587677318785587544488e-01;
constexpr double c3 = 0.789002279381515978178381316732e-01;
constexpr double c4 = 0.118350341907227396726757197510e+00;
constexpr double c5 = 0.281649658092772603273242802490e+00;
constexpr double c6 = 0.333333333333333333333333333333e+00;
constexpr double c7 = 0.25e+00;
constexpr double c8 = 0.307692307692307692307692307692e+00;
constexpr double c9 = 0.651282051282051282051282051282e+00;
constexpr double c10 = 0.6e+00;
constexpr double c11 = 0.857142857142857142857142857142e+00;

constexpr double a21 = 5.26001519587677318785587544488e-2;
constexpr double a31 = 1.97250569845378994544595329183e-2;
constexpr double a32 = 5.91751709536136983633785987549e-2;
constexpr double a41 = 2.95875854768068491816892993775e-2;
constexpr double a43 = 8.87627564304205475450678981324e-2;
constexpr double a51 = 2.41365134159266685502369798665e-1;
constexpr double a53 = -8.84549479328286085344864962717e-1;
constexpr double a54 = 9.24834003261792003115737966543e-1;
constexpr double a61 = 3.7037037037037037037037037037e-2;
constexpr double a64 = 1.70828608729473871279604482173e-1;
constexpr double a65 = 1.25467687566822425016691814123e-1;
constexpr double a71 = 3.7109375e-2;
constexpr double a74 = 1.70252211019544039314978060272e-1;
constexpr double a75 = 6.02165389804559606850219397283e-2;
constexpr double a76 = -1.7578125e-2;
constexpr double a81 = 3.70920001185047927108779319836e-2;
constexpr double a84 = 1.70383925712239993810214054705e-1;
constexpr double a85 = 1.07262030446373284651809199168e-1;
constexpr double a86 = -1.53194377486244017527936158236e-2;
constexpr double a87 = 8.27378916381402288758473766002e-3;
constexpr double a91 = 6.24110958716075717114429577812e-1;
constexpr double a94 = -3.36089262944694129406857109825e0;
constexpr double a95 = -8.68219346841726006818189891453e-1;
constexpr double a96 = 2.75920996994467083049415600797e1;
constexpr double a97 = 2.01540675504778934086186788979e1;
constexpr double a98 = -4.34898841810699588477366255144e1;
constexpr double a101 = 4.77662536438264365890433908527e-1;
constexpr double a104 = -2.48811461997166764192642586468e0;
constexpr double a105 = -5.90290826836842996371446475743e-1;
constexpr double a106 = 2.12300514481811942347288949897e1;
constexpr double a107 = 1.52792336328824235832596922938e1;
constexpr double a108 = -3.32882109689848629194453265587e1;
constexpr double a109 = -2.03312017085086261358222928593e-2;
constexpr double a111 = -9.3714243008598732571704021658e-1;
constexpr double a114 = 5.18637242884406370830023853209e0;
constexpr double a115 = 1.09143734899672957818500254654e0;
constexpr double a116 = -8.14978701074692612513997267357e0;
constexpr double a117 = -1.85200656599969598641566180701e1;
constexpr double a118 = 2.27394870993505042818970056734e1;
constexpr double a119 = 2.49360555267965238987089396762e0;
constexpr double a1110 = -3.0467644718982195003823669022e0;
constexpr double a121 = 2.27331014751653820792359768449e0;
constexpr double a124 = -1.05344954667372501984066689879e1;
constexpr double a125 = -2.00087205822486249909675718444e0;
constexpr double a126 = -1.79589318631187989172765950534e1;
constexpr double a127 = 2.79488845294199600508499808837e1;
constexpr double a128 = -2.85899827713502369474065508674e0;
constexpr double a129 = -8.87285693353062954433549289258e0;
constexpr double a1210 = 1.23605671757943030647266201528e1;
constexpr double a1211 = 6.43392746015763530355970484046e-1;

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

constexpr double bhh1 = 0.244094488188976377952755905512e+00;
constexpr double bhh2 = 0.733846688281611857341361741547e+00;
constexpr double bhh3 = 0.220588235294117647058823529412e-01;

constexpr double er1 = 0.1312004499419488073250102996e-01;
constexpr double er6 = -0.1225156446376204440720569753e+01;
constexpr double er7 = -0.4957589496572501915214079952e+00;
constexpr double er8 = 0.1664377182454986536961530415e+01;
constexpr double er9 = -0.3503288487499736816886487290e+00;
constexpr double er10 = 0.3341791187130174790297318841e+00;
constexpr double er11 = 0.8192320648511571246570742613e-01;
constexpr double er12 = -0.2235530786388629525884427845e-01;
}  // namespace dop853_detail

// f(x, y, dydx). Returns y(x_end). Throws StepSizeUnderflow when the step collapses.
template <std::size_t N, class F>
std::array<double, N> dop853(F&& f, double x, std::array<double, N> y, double x_end,
                             const Dop853Options& opt, Dop853Stats* stats = nullptr) {
    using namespace dop853_detail;
    using Vec = std::array<double, N>;
    Dop853Stats local;
    Dop853Stats& st = stats ? *stats : local;
    if (x == x_end) return y;

    const double dir = x_end > x ? 1.0 : -1.0;
    const double span = std::abs(x_end - x);
    const double h_max = opt.h_max > 0.0 ? opt.h_max : span;
    const double eps = std::numeric_limits<double>::epsilon();

    auto scale = [&](double a, double b) { return opt.abs_tol + opt.rel_tol * std::max(std::abs(a), std::abs(b)); };

    Vec k1, k2, k3, k4, k5, k6, k7, k8, k9, k10, yt, y1;
    f(x, y, k1);
    ++st.evaluations;

    double h = opt.h_init;
    if (h <= 0.0) {
        // Hairer's starting-step heuristic for order 8.
        double dnf = 0.0, dny = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk = scale(y[i], y[i]);
            dnf += (k1[i] / sk) * (k1[i] / sk);
            dny += (y[i] / sk) * (y[i] / sk);
        }
        h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h = std::min(h, h_max);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + dir * h * k1[i];
        f(x + dir * h, yt, k2);
        ++st.evaluations;
        double der2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sk = scale(y[i], y[i]);
            const double d = (k2[i] - k1[i]) / sk;
            der2 += d * d;
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                         : std::pow(0.01 / der12, 1.0 / 8.0);
        h = std::min({100.0 * std::abs(h), h1, h_max});
    }
    h = std::min(h, span);

    bool last_rejected = false;
    while (true) {
        if (st.accepted + st.rejected >= opt.max_steps)
            throw StepSizeUnderflow("mode_evolution", "maximum number of integration steps exceeded");
        if (h < 10.0 * eps * std::max(std::abs(x), 1.0))
            throw StepSizeUnderflow("mode_evolution", "step size underflow");

        const double remaining = std::abs(x_end - x);
        bool final_step = false;
        if (h >= remaining * (1.0 - 1e-12)) {
            h = remaining;
            final_step = true;
        }
        const double hs = dir * h;

        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
        f(x + c2 * hs, yt, k2);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
        f(x + c3 * hs, yt, k3);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a43 * k3[i]);
        f(x + c4 * hs, yt, k4);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a51 * k1[i] + a53 * k3[i] + a54 * k4[i]);
        f(x + c5 * hs, yt, k5);
        for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a61 * k1[i] + a64 * k4[i] + a65 * k5[i]);
        f(x + c6 * hs, yt, k6);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a71 * k1[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        f(x + c7 * hs, yt, k7);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a81 * k1[i] + a84 * k4[i] + a85 * k5[i] + a86 * k6[i] + a87 * k7[i]);
        f(x + c8 * hs, yt, k8);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a91 * k1[i] + a94 * k4[i] + a95 * k5[i] + a96 * k6[i] + a97 * k7[i] +
                                 a98 * k8[i]);
        f(x + c9 * hs, yt, k9);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a101 * k1[i] + a104 * k4[i] + a105 * k5[i] + a106 * k6[i] +
                                 a107 * k7[i] + a108 * k8[i] + a109 * k9[i]);
        f(x + c10 * hs, yt, k10);
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a111 * k1[i] + a114 * k4[i] + a115 * k5[i] + a116 * k6[i] +
                                 a117 * k7[i] + a118 * k8[i] + a119 * k9[i] + a1110 * k10[i]);
        f(x + c11 * hs, yt, k2);  // stage 11
        const double xph = final_step ? x_end : x + hs;
        for (std::size_t i = 0; i < N; ++i)
            yt[i] = y[i] + hs * (a121 * k1[i] + a124 * k4[i] + a125 * k5[i] + a126 * k6[i] +
                                 a127 * k7[i] + a128 * k8[i] + a129 * k9[i] + a1210 * k10[i] +
                                 a1211 * k2[i]);
        f(xph, yt, k3);  // stage 12
        st.evaluations += 11;

        double err = 0.0, err2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            k4[i] = b1 * k1[i] + b6 * k6[i] + b7 * k7[i] + b8 * k8[i] + b9 * k9[i] + b10 * k10[i] +
                    b11 * k2[i] + b12 * k3[i];
            y1[i] = y[i] + hs * k4[i];
            const double sk = scale(y[i], y1[i]);
            const double e3 = k4[i] - bhh1 * k1[i] - bhh2 * k9[i] - bhh3 * k3[i];
            const double e5 = er1 * k1[i] + er6 * k6[i] + er7 * k7[i] + er8 * k8[i] + er9 * k9[i] +
                              er10 * k10[i] + er11 * k2[i] + er12 * k3[i];
            err2 += (e3 / sk) * (e3 / sk);
            err += (e5 / sk) * (e5 / sk);
        }
        double deno = err + 0.01 * err2;
        if (deno <= 0.0) deno = 1.0;
        err = h * err * std::sqrt(1.0 / (static_cast<double>(N) * deno));
        if (!std::isfinite(err))
            throw StepSizeUnderflow("mode_evolution", "non-finite error estimate");

        const double fac11 = std::pow(err, 1.0 / 8.0);
        const double fac = std::max(1.0 / 6.0, std::min(1.0 / 0.333, fac11 / 0.9));
        if (err <= 1.0) {
            ++st.accepted;
            y = y1;
            if (final_step) return y;
            x += hs;
            f(x, y, k1);
            ++st.evaluations;
            double hnew = h / fac;
            hnew = std::min(hnew, h_max);
            if (last_rejected) hnew = std::min(hnew, h);
            last_rejected = false;
            h = hnew;
        } else {
            ++st.rejected;
            h = h / std::min(1.0 / 0.333, fac11 / 0.9);
            last_rejected = true;
        }
    }
}

}  // namespace sds
