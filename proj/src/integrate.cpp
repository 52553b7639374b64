// Adaptive 8(5,3) Dormand-Prince stepper after Hairer's DOP853, plus the
// state / variational / jet propagation drivers.

#include "spomap/integrate.hpp"

#include <cmath>
#include <vector>

namespace spomap {

namespace {

// DOP853 tableau (Hairer, Norsett & Wanner, Solving ODEs I, 2nd ed.).
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

constexpr double b1 = 5.42937341165687622380535766363e-2;
constexpr double b6 = 4.45031289275240888144113950566e0;
constexpr double b7 = 1.89151789931450038304281599044e0;
constexpr double b8 = -5.8012039600105847814672114227e0;
constexpr double b9 = 3.1116436695781989440891606237e-1;
constexpr double b10 = -1.52160949662516078556178806805e-1;
constexpr double b11 = 2.01365400804030348374776537501e-1;
constexpr double b12 = 4.47106157277725905176885569043e-2;

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

constexpr double uround = 2.3e-16;
constexpr double safe = 0.9;
constexpr double fac1 = 1.0 / 3.0;  // lower bound on step change
constexpr double fac2 = 6.0;        // upper bound on step change

class Dop853 {
public:
    Dop853(const OdeRhs& rhs, std::span<double> y, const IntegratorConfig& cfg)
        : rhs_(rhs), y_(y), cfg_(cfg), n_(y.size()) {
        for (auto* k : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &k8_, &k9_, &k10_, &yt_, &ys_})
            k->assign(n_, 0.0);
    }

    void run(double t0, double t1) {
        if (t0 == t1) return;
        t_ = t0;
        const double posneg = t1 > t0 ? 1.0 : -1.0;
        const double hmax = std::abs(t1 - t0);
        rhs_(t_, y_.data(), k1_.data());
        double h = cfg_.initial_step != 0.0 ? posneg * std::abs(cfg_.initial_step)
                                            : initial_step(hmax, posneg);
        const double expo1 = 1.0 / 8.0;
        const double facc1 = 1.0 / fac1, facc2 = 1.0 / fac2;
        bool reject = false, last = false;
        long nstep = 0;

        while (true) {
            if (++nstep > cfg_.max_steps)
                throw IntegrationError("integration exceeded max_steps", t_);
            if (0.1 * std::abs(h) <= std::abs(t_) * uround)
                throw IntegrationError("integration step size underflow (non-finite state or "
                                       "unreachable tolerance)", t_);
            if ((t_ + 1.01 * h - t1) * posneg > 0.0) {
                h = t1 - t_;
                last = true;
            }

            const double err = step(h);

            if (!std::isfinite(err)) {
                // right-hand side blew up inside the attempted step
                h *= 0.25;
                reject = true;
                last = false;
                continue;
            }

            const double fac11 = std::pow(err, expo1);
            const double fac = std::max(facc2, std::min(facc1, fac11 / safe));
            double hnew = h / fac;

            if (err <= 1.0) {
                // accept: y <- y5, FSAL-style refresh of k1 at the new point
                std::copy(ys_.begin(), ys_.end(), y_.begin());
                t_ += h;
                bool finite = true;
                for (double v : y_) finite = finite && std::isfinite(v);
                if (!finite) throw IntegrationError("state became non-finite", t_ - h);
                if (last) return;
                rhs_(t_, y_.data(), k1_.data());
                if (std::abs(hnew) > hmax) hnew = posneg * hmax;
                if (reject) hnew = posneg * std::min(std::abs(hnew), std::abs(h));
                reject = false;
            } else {
                hnew = h / std::min(facc1, fac11 / safe);
                reject = true;
                last = false;
            }
            h = hnew;
        }
    }

private:
    // One trial step of size h; the candidate new state lands in ys_ and the
    // return value is the scaled error estimate.
    double step(double h) {
        const size_t n = n_;
        auto& w = y_;
        for (size_t i = 0; i < n; ++i) yt_[i] = w[i] + h * a21 * k1_[i];
        rhs_(t_ + c2 * h, yt_.data(), k2_.data());
        for (size_t i = 0; i < n; ++i) yt_[i] = w[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        rhs_(t_ + c3 * h, yt_.data(), k3_.data());
        for (size_t i = 0; i < n; ++i) yt_[i] = w[i] + h * (a41 * k1_[i] + a43 * k3_[i]);
        rhs_(t_ + c4 * h, yt_.data(), k4_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a51 * k1_[i] + a53 * k3_[i] + a54 * k4_[i]);
        rhs_(t_ + c5 * h, yt_.data(), k5_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a61 * k1_[i] + a64 * k4_[i] + a65 * k5_[i]);
        rhs_(t_ + c6 * h, yt_.data(), k6_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a71 * k1_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
        rhs_(t_ + c7 * h, yt_.data(), k7_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a81 * k1_[i] + a84 * k4_[i] + a85 * k5_[i] + a86 * k6_[i] +
                                 a87 * k7_[i]);
        rhs_(t_ + c8 * h, yt_.data(), k8_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a91 * k1_[i] + a94 * k4_[i] + a95 * k5_[i] + a96 * k6_[i] +
                                 a97 * k7_[i] + a98 * k8_[i]);
        rhs_(t_ + c9 * h, yt_.data(), k9_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a101 * k1_[i] + a104 * k4_[i] + a105 * k5_[i] + a106 * k6_[i] +
                                 a107 * k7_[i] + a108 * k8_[i] + a109 * k9_[i]);
        rhs_(t_ + c10 * h, yt_.data(), k10_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a111 * k1_[i] + a114 * k4_[i] + a115 * k5_[i] + a116 * k6_[i] +
                                 a117 * k7_[i] + a118 * k8_[i] + a119 * k9_[i] + a1110 * k10_[i]);
        rhs_(t_ + c11 * h, yt_.data(), k2_.data());
        for (size_t i = 0; i < n; ++i)
            yt_[i] = w[i] + h * (a121 * k1_[i] + a124 * k4_[i] + a125 * k5_[i] + a126 * k6_[i] +
                                 a127 * k7_[i] + a128 * k8_[i] + a129 * k9_[i] + a1210 * k10_[i] +
                                 a1211 * k2_[i]);
        rhs_(t_ + h, yt_.data(), k3_.data());
        double err5 = 0.0, err3 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            k4_[i] = b1 * k1_[i] + b6 * k6_[i] + b7 * k7_[i] + b8 * k8_[i] + b9 * k9_[i] +
                     b10 * k10_[i] + b11 * k2_[i] + b12 * k3_[i];
            ys_[i] = w[i] + h * k4_[i];
            const double sk = 1.0 / (cfg_.abs_tol +
                                     cfg_.rel_tol * std::max(std::abs(w[i]), std::abs(ys_[i])));
            double sqr = (k4_[i] - bhh1 * k1_[i] - bhh2 * k9_[i] - bhh3 * k3_[i]) * sk;
            err3 += sqr * sqr;
            sqr = (er1 * k1_[i] + er6 * k6_[i] + er7 * k7_[i] + er8 * k8_[i] + er9 * k9_[i] +
                   er10 * k10_[i] + er11 * k2_[i] + er12 * k3_[i]) * sk;
            err5 += sqr * sqr;
        }
        double deno = err5 + 0.01 * err3;
        if (deno <= 0.0) deno = 1.0;
        return std::abs(h) * err5 * std::sqrt(1.0 / (double(n_) * deno));
    }

    // Hairer's automatic initial step selection.
    double initial_step(double hmax, double posneg) {
        double dnf = 0.0, dny = 0.0;
        for (size_t i = 0; i < n_; ++i) {
            const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
            dnf += (k1_[i] / sk) * (k1_[i] / sk);
            dny += (y_[i] / sk) * (y_[i] / sk);
        }
        double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
        h = std::min(h, hmax);
        for (size_t i = 0; i < n_; ++i) yt_[i] = y_[i] + posneg * h * k1_[i];
        rhs_(t_ + posneg * h, yt_.data(), k2_.data());
        double der2 = 0.0;
        for (size_t i = 0; i < n_; ++i) {
            const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
            der2 += ((k2_[i] - k1_[i]) / sk) * ((k2_[i] - k1_[i]) / sk);
        }
        der2 = std::sqrt(der2) / h;
        const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
        const double h1 = der12 <= 1e-15 ? std::max(1e-6, std::abs(h) * 1e-3)
                                         : std::pow(0.01 / der12, 1.0 / 8.0);
        h = std::min(std::min(100.0 * std::abs(h), h1), hmax);
        return posneg * h;
    }

    const OdeRhs& rhs_;
    std::span<double> y_;
    const IntegratorConfig& cfg_;
    size_t n_;
    double t_ = 0.0;
    std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, k8_, k9_, k10_, yt_, ys_;
};

}  // namespace

void integrate_dop853(const OdeRhs& rhs, std::span<double> y, double t0, double t1,
                      const IntegratorConfig& cfg) {
    cfg.validate();
    Dop853 stepper(rhs, y, cfg);
    stepper.run(t0, t1);
}

Vec4 flow(const SystemModel& sys, double eps, const Vec4& x0, double theta_p0, double t,
          const IntegratorConfig& cfg) {
    std::array<double, 5> y{x0[0], x0[1], x0[2], x0[3], theta_p0};
    const double omega = sys.omega_p();
    auto rhs = [&](double, const double* s, double* ds) {
        const Vec4 f = sys.rhs(Vec4(s[0], s[1], s[2], s[3]), s[4], eps);
        ds[0] = f[0];
        ds[1] = f[1];
        ds[2] = f[2];
        ds[3] = f[3];
        ds[4] = omega;
    };
    integrate_dop853(rhs, y, 0.0, t, cfg);
    return Vec4(y[0], y[1], y[2], y[3]);
}

std::pair<Vec4, Mat4> flow_with_variational(const SystemModel& sys, double eps, const Vec4& x0,
                                            double theta_p0, double t, const IntegratorConfig& cfg) {
    // state, theta_p, then the 4x4 variational matrix column-major
    std::array<double, 21> y{};
    for (int i = 0; i < 4; ++i) y[size_t(i)] = x0[i];
    y[4] = theta_p0;
    for (int j = 0; j < 4; ++j) y[size_t(5 + 5 * j)] = 1.0;
    const double omega = sys.omega_p();
    Mat4 a;
    Vec4 dfdtheta;
    auto rhs = [&](double, const double* s, double* ds) {
        const Vec4 x(s[0], s[1], s[2], s[3]);
        const Vec4 f = sys.rhs(x, s[4], eps);
        sys.rhs_jacobian(x, s[4], eps, a, dfdtheta);
        for (int i = 0; i < 4; ++i) ds[size_t(i)] = f[i];
        ds[4] = omega;
        for (int j = 0; j < 4; ++j) {
            const Eigen::Map<const Vec4> col(s + 5 + 4 * j);
            Eigen::Map<Vec4> dcol(ds + 5 + 4 * j);
            dcol = a * col;
        }
    };
    integrate_dop853(rhs, y, 0.0, t, cfg);
    Mat4 phi;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i) phi(i, j) = y[size_t(5 + 4 * j + i)];
    return {Vec4(y[0], y[1], y[2], y[3]), phi};
}

SeriesVec jet_flow(const SystemModel& sys, double eps, const SeriesVec& v0, double theta_p0,
                   double t, const IntegratorConfig& cfg) {
    v0.check_uniform();
    const int deg = v0.degree();
    const int m = deg + 1;
    std::vector<double> y(size_t(4 * m) + 1);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < m; ++i) y[size_t(c * m + i)] = v0[c][i];
    y[size_t(4 * m)] = theta_p0;

    const double omega = sys.omega_p();
    SeriesVec vin(deg), vout(deg);
    SeriesWorkspace ws;
    auto rhs = [&](double, const double* s, double* ds) {
        for (int c = 0; c < 4; ++c)
            for (int i = 0; i < m; ++i) vin[c][i] = s[c * m + i];
        sys.rhs_jet(vin, s[4 * m], eps, vout, ws);
        for (int c = 0; c < 4; ++c)
            for (int i = 0; i < m; ++i) ds[c * m + i] = vout[c][i];
        ds[4 * m] = omega;
    };
    integrate_dop853(rhs, y, 0.0, t, cfg);

    SeriesVec out(deg);
    for (int c = 0; c < 4; ++c)
        for (int i = 0; i < m; ++i) out[c][i] = y[size_t(c * m + i)];
    return out;
}

}  // namespace spomap
