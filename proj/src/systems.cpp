#include "spomap/systems.hpp"

#include <cmath>

namespace spomap {

namespace {

// Scratch slot indices for the jet right-hand sides.
enum { T1, T2, T3, DY3, R1SQ, R2SQ, R3SQ, R1M3, R2M3, R3M3, ACC, ACC2, A1, A2, SINA, COSA };

// Gravity part shared by the three-body and four-body models:
//   W(x, y) = -(1-mu)/r1 - mu/r2,  r1 about m1 at (-mu, 0), r2 about m2.
// The plain and series paths mirror each other operation for operation, so
// the order-0 jet coefficients reproduce the plain right-hand side bitwise.
struct PrimaryPair {
    double mu;

    double potential(double x, double y) const {
        const double d1 = x + mu, d2 = x - (1.0 - mu);
        const double r1sq = d1 * d1 + y * y, r2sq = d2 * d2 + y * y;
        return -(1.0 - mu) / std::sqrt(r1sq) - mu / std::sqrt(r2sq);
    }

    double hamiltonian0(const Vec4& s) const {
        const double x = s[0], y = s[1], px = s[2], py = s[3];
        return 0.5 * (px * px + py * py) + px * y - py * x + potential(x, y);
    }

    Vec4 rhs0(const Vec4& s) const {
        const double x = s[0], y = s[1], px = s[2], py = s[3];
        const double t1 = x + mu, t2 = x - (1.0 - mu);
        const double r1sq = t1 * t1 + y * y, r2sq = t2 * t2 + y * y;
        const double r1m3 = std::pow(r1sq, -1.5), r2m3 = std::pow(r2sq, -1.5);
        const double a1 = (1.0 - mu) * t1, a2 = mu * t2;
        return Vec4(px + y, py - x, py - a1 * r1m3 - a2 * r2m3,
                    -px - y * ((1.0 - mu) * r1m3 + mu * r2m3));
    }

    // Hessian of the gravity potential -(1-mu)/r1 - mu/r2
    void hess(double x, double y, double& wxx, double& wxy, double& wyy) const {
        const double d1 = x + mu, d2 = x - (1.0 - mu);
        const double r1sq = d1 * d1 + y * y, r2sq = d2 * d2 + y * y;
        const double r1m3 = std::pow(r1sq, -1.5), r2m3 = std::pow(r2sq, -1.5);
        const double r1m5 = r1m3 / r1sq, r2m5 = r2m3 / r2sq;
        wxx = (1.0 - mu) * (r1m3 - 3.0 * d1 * d1 * r1m5) + mu * (r2m3 - 3.0 * d2 * d2 * r2m5);
        wyy = (1.0 - mu) * (r1m3 - 3.0 * y * y * r1m5) + mu * (r2m3 - 3.0 * y * y * r2m5);
        wxy = -3.0 * y * ((1.0 - mu) * d1 * r1m5 + mu * d2 * r2m5);
    }

    void rhs0_jet(const SeriesVec& v, SeriesVec& out, SeriesWorkspace& ws) const {
        const int d = v.degree();
        const auto& x = v[0];
        const auto& y = v[1];
        const auto& px = v[2];
        const auto& py = v[3];

        auto& t1 = ws.scratch(T1, d);
        auto& t2 = ws.scratch(T2, d);
        auto& r1sq = ws.scratch(R1SQ, d);
        auto& r2sq = ws.scratch(R2SQ, d);
        auto& r1m3 = ws.scratch(R1M3, d);
        auto& r2m3 = ws.scratch(R2M3, d);
        auto& acc = ws.scratch(ACC, d);
        auto& acc2 = ws.scratch(ACC2, d);
        auto& a1 = ws.scratch(A1, d);
        auto& a2 = ws.scratch(A2, d);

        t1 = x + mu;
        t2 = x - (1.0 - mu);
        mul_into(t1, t1, r1sq);
        mul_into(y, y, acc);
        add_into(r1sq, acc, r1sq);
        mul_into(t2, t2, r2sq);
        add_into(r2sq, acc, r2sq);
        pow_into(r1sq, -1.5, r1m3);
        pow_into(r2sq, -1.5, r2m3);

        add_into(px, y, out[0]);
        sub_into(py, x, out[1]);
        a1 = (1.0 - mu) * t1;
        a2 = mu * t2;
        mul_into(a1, r1m3, acc);
        mul_into(a2, r2m3, acc2);
        out[2] = py - acc - acc2;
        acc = (1.0 - mu) * r1m3 + mu * r2m3;
        mul_into(y, acc, acc2);
        out[3] = -px - acc2;
    }
};

class Pcr3bp : public SystemModel {
public:
    explicit Pcr3bp(double mu) : pair_{mu} {
        require(mu > 0.0 && mu < 0.5, ErrorKind::argument, "pcr3bp: mu must lie in (0, 1/2)");
    }

    std::string name() const override { return "pcr3bp"; }
    double omega_p() const override { return 0.0; }

    double hamiltonian(const Vec4& s, double, double) const override {
        return pair_.hamiltonian0(s);
    }

    Vec4 rhs(const Vec4& s, double, double) const override { return pair_.rhs0(s); }

    void rhs_jacobian(const Vec4& s, double, double, Mat4& a, Vec4& dfdtheta) const override {
        double wxx, wxy, wyy;
        pair_.hess(s[0], s[1], wxx, wxy, wyy);
        a << 0, 1, 1, 0,
            -1, 0, 0, 1,
            -wxx, -wxy, 0, 1,
            -wxy, -wyy, -1, 0;
        dfdtheta.setZero();
    }

    void rhs_jet(const SeriesVec& v, double, double, SeriesVec& out, SeriesWorkspace& ws) const override {
        pair_.rhs0_jet(v, out, ws);
    }

    std::map<std::string, double> params() const override { return {{"mu", pair_.mu}}; }

private:
    PrimaryPair pair_;
};

class Ccr4bp : public SystemModel {
public:
    Ccr4bp(double mu, double r13, double omega3) : pair_{mu}, r13_(r13), omega3_(omega3) {
        require(mu > 0.0 && mu < 0.5, ErrorKind::argument, "ccr4bp: mu must lie in (0, 1/2)");
        require(r13 > 0.0, ErrorKind::argument, "ccr4bp: r13 must be > 0");
        require(omega3 != 1.0, ErrorKind::argument, "ccr4bp: omega3 = 1 leaves no perturbation frequency");
    }

    std::string name() const override { return "ccr4bp"; }
    double omega_p() const override { return omega3_ - 1.0; }

    double hamiltonian(const Vec4& s, double theta, double eps) const override {
        const double x = s[0], y = s[1];
        double h = pair_.hamiltonian0(s);
        if (eps != 0.0) {
            const double ct = std::cos(theta), st = std::sin(theta);
            const double dx = x - (-pair_.mu + r13_ * ct), dy = y - r13_ * st;
            h += eps * (-1.0 / std::sqrt(dx * dx + dy * dy) + (x * ct + y * st) / (r13_ * r13_));
        }
        return h;
    }

    Vec4 rhs(const Vec4& s, double theta, double eps) const override {
        const double x = s[0], y = s[1];
        Vec4 f = pair_.rhs0(s);
        if (eps != 0.0) {
            const double ct = std::cos(theta), st = std::sin(theta);
            const double dx = x - (-pair_.mu + r13_ * ct), dy = y - r13_ * st;
            const double r3sq = dx * dx + dy * dy;
            const double r3m3 = std::pow(r3sq, -1.5);
            const double ir13sq = 1.0 / (r13_ * r13_);
            f[2] -= eps * (dx * r3m3);
            f[2] -= eps * ct * ir13sq;
            f[3] -= eps * (dy * r3m3);
            f[3] -= eps * st * ir13sq;
        }
        return f;
    }

    void rhs_jacobian(const Vec4& s, double theta, double eps, Mat4& a, Vec4& dfdtheta) const override {
        double wxx, wxy, wyy;
        pair_.hess(s[0], s[1], wxx, wxy, wyy);
        dfdtheta.setZero();
        if (eps != 0.0) {
            const double ct = std::cos(theta), st = std::sin(theta);
            const double dx = s[0] - (-pair_.mu + r13_ * ct), dy = s[1] - r13_ * st;
            const double r3sq = dx * dx + dy * dy;
            const double r3m3 = std::pow(r3sq, -1.5), r3m5 = r3m3 / r3sq;
            wxx += eps * (r3m3 - 3.0 * dx * dx * r3m5);
            wyy += eps * (r3m3 - 3.0 * dy * dy * r3m5);
            wxy += eps * (-3.0 * dx * dy * r3m5);
            // theta derivative of the third-body pull
            const double ddx = r13_ * st, ddy = -r13_ * ct;  // d(dx)/dtheta, d(dy)/dtheta
            const double sdot = dx * ddx + dy * ddy;
            const double ir13sq = 1.0 / (r13_ * r13_);
            dfdtheta[2] = -eps * (ddx * r3m3 - 3.0 * dx * sdot * r3m5) + eps * st * ir13sq;
            dfdtheta[3] = -eps * (ddy * r3m3 - 3.0 * dy * sdot * r3m5) - eps * ct * ir13sq;
        }
        a << 0, 1, 1, 0,
            -1, 0, 0, 1,
            -wxx, -wxy, 0, 1,
            -wxy, -wyy, -1, 0;
    }

    void rhs_jet(const SeriesVec& v, double theta, double eps, SeriesVec& out,
                 SeriesWorkspace& ws) const override {
        pair_.rhs0_jet(v, out, ws);
        if (eps != 0.0) {
            const int d = v.degree();
            const double ct = std::cos(theta), st = std::sin(theta);
            auto& acc = ws.scratch(ACC, d);
            auto& dx = ws.scratch(T3, d);
            auto& dy = ws.scratch(DY3, d);
            auto& r3sq = ws.scratch(R3SQ, d);
            auto& r3m3 = ws.scratch(R3M3, d);
            dx = v[0] - (-pair_.mu + r13_ * ct);
            dy = v[1] - r13_ * st;
            mul_into(dx, dx, r3sq);
            mul_into(dy, dy, acc);
            add_into(r3sq, acc, r3sq);
            pow_into(r3sq, -1.5, r3m3);
            const double ir13sq = 1.0 / (r13_ * r13_);
            mul_into(dx, r3m3, acc);
            out[2] = out[2] - eps * acc;
            out[2][0] -= eps * ct * ir13sq;
            mul_into(dy, r3m3, acc);
            out[3] = out[3] - eps * acc;
            out[3][0] -= eps * st * ir13sq;
        }
    }

    std::map<std::string, double> params() const override {
        return {{"mu", pair_.mu}, {"r13", r13_}, {"omega3", omega3_}};
    }

private:
    PrimaryPair pair_;
    double r13_;
    double omega3_;
};

// H = px^2/2 + cos x + py^2/2 - cos y + eps cos(y - theta): a planar saddle
// at (x, px) = 0 crossed with a libration family in (y, py).
class ForcedPendulum : public SystemModel {
public:
    explicit ForcedPendulum(double omega_p) : omega_p_(omega_p) {
        require(omega_p != 0.0, ErrorKind::argument, "forced pendulum: omega_p must be nonzero");
    }

    std::string name() const override { return "forced_pendulum"; }
    double omega_p() const override { return omega_p_; }

    double hamiltonian(const Vec4& s, double theta, double eps) const override {
        const double x = s[0], y = s[1], px = s[2], py = s[3];
        double h = 0.5 * px * px + std::cos(x) + 0.5 * py * py - std::cos(y);
        if (eps != 0.0) h += eps * std::cos(y - theta);
        return h;
    }

    Vec4 rhs(const Vec4& s, double theta, double eps) const override {
        const double x = s[0], y = s[1], px = s[2], py = s[3];
        Vec4 f(px, py, std::sin(x), -std::sin(y));
        if (eps != 0.0) f[3] += eps * std::sin(y - theta);
        return f;
    }

    void rhs_jacobian(const Vec4& s, double theta, double eps, Mat4& a, Vec4& dfdtheta) const override {
        const double x = s[0], y = s[1];
        double f4y = -std::cos(y);
        dfdtheta.setZero();
        if (eps != 0.0) {
            f4y += eps * std::cos(y - theta);
            dfdtheta[3] = -eps * std::cos(y - theta);
        }
        a << 0, 0, 1, 0,
            0, 0, 0, 1,
            std::cos(x), 0, 0, 0,
            0, f4y, 0, 0;
    }

    void rhs_jet(const SeriesVec& v, double theta, double eps, SeriesVec& out,
                 SeriesWorkspace& ws) const override {
        const int d = v.degree();
        auto& sa = ws.scratch(SINA, d);
        auto& ca = ws.scratch(COSA, d);
        out[0] = v[2];
        out[1] = v[3];
        sin_cos_into(v[0], sa, ca);
        out[2] = sa;
        sin_cos_into(v[1], sa, ca);
        out[3] = -sa;
        if (eps != 0.0) {
            auto& w = ws.scratch(T1, d);
            w = v[1] - theta;
            sin_cos_into(w, sa, ca);
            out[3] = out[3] + eps * sa;
        }
    }

    std::map<std::string, double> params() const override { return {{"omega_p", omega_p_}}; }

private:
    double omega_p_;
};

}  // namespace

std::shared_ptr<const SystemModel> make_pcr3bp(double mu) {
    return std::make_shared<Pcr3bp>(mu);
}

std::shared_ptr<const SystemModel> make_ccr4bp(double mu, double r13, double omega3) {
    return std::make_shared<Ccr4bp>(mu, r13, omega3);
}

double kepler_omega3(double mu, double eps_ref, double r13) {
    require(r13 > 0.0, ErrorKind::argument, "kepler_omega3: r13 must be > 0");
    return std::sqrt((1.0 - mu + eps_ref) / (r13 * r13 * r13));
}

std::shared_ptr<const SystemModel> make_forced_pendulum(double omega_p) {
    return std::make_shared<ForcedPendulum>(omega_p);
}

}  // namespace spomap
