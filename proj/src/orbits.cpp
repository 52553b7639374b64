// Seed generation: x-axis symmetric periodic orbits with a prescribed
// rotating-frame period, and the pendulum libration amplitude solve.

#include "spomap/orbits.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace spomap {

namespace {

struct Crossing {
    double t;
    Vec4 state;
};

// y = 0 crossing of the eps = 0 orbit through x0 nearest to t_hint: a scan
// over a window bracketing sign changes (widened on failure), then Newton on
// y(t).  Only short endpoint-chained flows are used.
Crossing crossing_near(const SystemModel& sys, const Vec4& x0, double t_hint,
                       const IntegratorConfig& cfg) {
    // the window is deliberately tight so that shooting iterations keep
    // tracking the same crossing of the same family
    const double window = 0.12 * t_hint;
    const int nscan = 400;
    double t_prev = t_hint - window;
    Vec4 s_prev = flow(sys, 0.0, x0, 0.0, t_prev, cfg);
    double best_t = -1.0;
    double best_dist = 1e300;
    for (int i = 1; i <= nscan; ++i) {
        const double t = t_hint - window + 2.0 * window * double(i) / double(nscan);
        const Vec4 s = flow(sys, 0.0, s_prev, 0.0, t - t_prev, cfg);
        if (s_prev[1] == 0.0 || (s_prev[1] < 0.0) != (s[1] < 0.0)) {
            const double tc = t_prev + (t - t_prev) * s_prev[1] / (s_prev[1] - s[1]);
            if (std::abs(tc - t_hint) < best_dist) {
                best_dist = std::abs(tc - t_hint);
                best_t = tc;
            }
        }
        t_prev = t;
        s_prev = s;
    }
    if (best_t < 0.0) {
        std::ostringstream os;
        os << "no y = 0 crossing found near t = " << t_hint;
        throw NumericalError(os.str());
    }
    Crossing c{best_t, flow(sys, 0.0, x0, 0.0, best_t, cfg)};
    for (int it = 0; it < 12; ++it) {
        const double ydot = sys.rhs(c.state, 0.0, 0.0)[1];
        require(ydot != 0.0, ErrorKind::numerical, "degenerate y = 0 crossing");
        const double dt = -c.state[1] / ydot;
        c.t += dt;
        c.state = flow(sys, 0.0, c.state, 0.0, dt, cfg);
        if (std::abs(c.state[1]) < 1e-13) break;
    }
    return c;
}

}  // namespace

double symmetric_orbit_period(const SystemModel& sys, const Vec4& x0, double t_half_hint,
                              const IntegratorConfig& cfg) {
    return 2.0 * crossing_near(sys, x0, t_half_hint, cfg).t;
}

Vec4 find_symmetric_orbit(const SystemModel& sys, double period, const SymmetricOrbitGuess& guess,
                          const IntegratorConfig& cfg, double period_rel_tol) {
    require(period > 0.0, ErrorKind::argument, "orbit period must be > 0");

    // Event-free shooting at fixed x: Newton in (py, t_half) on the
    // perpendicular-crossing conditions (y, px)(t_half) = 0.  A symmetric
    // orbit has exactly this structure, with period 2 t_half.
    struct Member {
        double py;
        double t_half;
    };
    auto family_member = [&](double x, Member m) -> Member {
        for (int it = 0; it < 40; ++it) {
            const Vec4 x0(x, 0.0, 0.0, m.py);
            auto [s, phi] = flow_with_variational(sys, 0.0, x0, 0.0, m.t_half, cfg);
            if (std::max(std::abs(s[1]), std::abs(s[2])) < 1e-12) return m;
            const Vec4 f = sys.rhs(s, 0.0, 0.0);
            Eigen::Matrix2d jac;
            jac << phi(1, 3), f[1],
                   phi(2, 3), f[2];
            const Eigen::Vector2d d = jac.partialPivLu().solve(Eigen::Vector2d(-s[1], -s[2]));
            // keep steps inside the tracking basin near close encounters
            m.py += std::clamp(d[0], -5e-3, 5e-3);
            m.t_half += std::clamp(d[1], -0.2, 0.2);
        }
        throw ConvergenceError("symmetric-orbit shooting: (py, t) Newton stalled");
    };

    // secant on x against the member period 2 t_half
    Member m{guess.py, 0.5 * period};
    auto measure = [&](double x) {
        m = family_member(x, m);
        return 2.0 * m.t_half;
    };

    double xa = guess.x, Ta = measure(xa);
    double xb = guess.x + std::max(1e-5 * std::abs(guess.x), 1e-7), Tb = measure(xb);
    bool hit = std::abs(Tb - period) < period_rel_tol * period;
    for (int it = 0; it < 80 && !hit; ++it) {
        require(Tb != Ta, ErrorKind::numerical, "symmetric-orbit search: period is stationary");
        double step = -(Tb - period) * (xb - xa) / (Tb - Ta);
        step = std::clamp(step, -5e-3, 5e-3);  // stay on the tracked branch
        xa = xb;
        Ta = Tb;
        xb = xb + step;
        Tb = measure(xb);
        hit = std::abs(Tb - period) < period_rel_tol * period;
    }
    if (!hit) throw ConvergenceError("symmetric-orbit search: period secant did not converge");
    Vec4 x0(xb, 0.0, 0.0, m.py);

    // polish at exactly the requested period: 2x2 Newton on (y, px)(period/2)
    for (int it = 0; it < 8; ++it) {
        auto [s, phi] = flow_with_variational(sys, 0.0, x0, 0.0, 0.5 * period, cfg);
        const double err = std::max(std::abs(s[1]), std::abs(s[2]));
        if (err < 1e-12) break;
        Eigen::Matrix2d jac;
        jac << phi(1, 0), phi(1, 3),
               phi(2, 0), phi(2, 3);
        const Eigen::Vector2d rhs(-s[1], -s[2]);
        const Eigen::Vector2d d = jac.partialPivLu().solve(rhs);
        x0[0] += d[0];
        x0[3] += d[1];
    }
    return x0;
}

SymmetricOrbitGuess kepler_apoapsis_guess(double mu, double a, double e) {
    const double r = a * (1.0 + e);
    const double v = std::sqrt((1.0 - mu) * (2.0 / r - 1.0 / a));
    return {r - mu, v};
}

double pendulum_amplitude_for_period(double T) {
    require(T > 2.0 * M_PI, ErrorKind::argument,
            "pendulum libration periods start above 2*pi");
    const double target = T / 4.0;
    double lo = 0.0, hi = 1.0 - 1e-15;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (std::comp_ellint_1(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 2.0 * std::asin(0.5 * (lo + hi));
}

}  // namespace spomap
