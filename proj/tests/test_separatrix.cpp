#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spomap/orbits.hpp"
#include "spomap/separatrix.hpp"

using namespace spomap;

namespace {

constexpr double kOmegaP = 2.5133;

// Converged hyperbolic pendulum SPO with its diagonalized frame.
struct HyperbolicCase {
    std::shared_ptr<const SystemModel> sys;
    PeriodicOrbitSolution sol;
    DiagonalFloquet diag;
    std::shared_ptr<StroboscopicMap> map;
};

const HyperbolicCase& hyperbolic_case() {
    static const HyperbolicCase c = [] {
        HyperbolicCase h;
        h.sys = make_forced_pendulum(kOmegaP);
        const double tp = 2.0 * M_PI / kOmegaP;
        const double amp = pendulum_amplitude_for_period(3.0 * tp);
        const Vec4 x0(0.0, 0.0, 0.0, 2.0 * std::sin(0.5 * amp));
        StroboscopicMap map0(h.sys, 0.0, M_PI);
        auto seed = initialize_unperturbed(map0, x0, {1, 3});
        ContinuationOptions opts;
        opts.solver.tol = 1e-11;
        h.sol = continue_family(strobe_family(h.sys, M_PI), seed, 2e-3, 8, opts).back();
        h.diag = diagonalize_floquet(h.sol);
        h.map = std::make_shared<StroboscopicMap>(h.sys, h.sol.eps, M_PI);
        return h;
    }();
    return c;
}

const PeriodicOrbitSolution& elliptic_solution() {
    static const PeriodicOrbitSolution sol = [] {
        auto sys = make_forced_pendulum(kOmegaP);
        const double tp = 2.0 * M_PI / kOmegaP;
        const double amp = pendulum_amplitude_for_period(3.0 * tp);
        const Vec4 x0(0.0, 0.0, 0.0, 2.0 * std::sin(0.5 * amp));
        StroboscopicMap map0(sys, 0.0, 0.0);
        auto seed = initialize_unperturbed(map0, x0, {1, 3});
        ContinuationOptions opts;
        opts.solver.tol = 1e-11;
        return continue_family(strobe_family(sys, 0.0), seed, 2e-3, 8, opts).back();
    }();
    return sol;
}

// Explicit nonlinear map with a fixed point at the origin and diagonal linear
// part diag(0.5, 2, 0.1, 10); quadratic coupling feeds x1^2, x2^2 forward.
class QuadMap final : public SymplecticMap {
public:
    Vec4 apply(const Vec4& x) const override {
        return Vec4(0.5 * x[0] + x[1] * x[1], 2.0 * x[1] + x[0] * x[0], 0.1 * x[2],
                    10.0 * x[3] + x[0] * x[0]);
    }
    std::pair<Vec4, Mat4> apply_with_jacobian(const Vec4& x) const override {
        Mat4 m = Mat4::Zero();
        m(0, 0) = 0.5;
        m(0, 1) = 2.0 * x[1];
        m(1, 1) = 2.0;
        m(1, 0) = 2.0 * x[0];
        m(2, 2) = 0.1;
        m(3, 3) = 10.0;
        m(3, 0) = 2.0 * x[0];
        return {apply(x), m};
    }
    SeriesVec apply_jet(const SeriesVec& v) const override {
        SeriesVec out(v.degree());
        RSeries sq1, sq2;
        mul_into(v[0], v[0], sq1);
        mul_into(v[1], v[1], sq2);
        out[0] = 0.5 * v[0] + sq2;
        out[1] = 2.0 * v[1] + sq1;
        out[2] = 0.1 * v[2];
        out[3] = 10.0 * v[3] + sq1;
        return out;
    }
};

// Linear map with an exact polynomial (degree-1) invariant manifold.
class DiagMap final : public SymplecticMap {
public:
    Vec4 apply(const Vec4& x) const override {
        return Vec4(0.5 * x[0], 2.0 * x[1], 0.1 * x[2], 10.0 * x[3]);
    }
    std::pair<Vec4, Mat4> apply_with_jacobian(const Vec4& x) const override {
        Mat4 m = Mat4::Zero();
        m(0, 0) = 0.5;
        m(1, 1) = 2.0;
        m(2, 2) = 0.1;
        m(3, 3) = 10.0;
        return {apply(x), m};
    }
    SeriesVec apply_jet(const SeriesVec& v) const override {
        SeriesVec out(v.degree());
        out[0] = 0.5 * v[0];
        out[1] = 2.0 * v[1];
        out[2] = 0.1 * v[2];
        out[3] = 10.0 * v[3];
        return out;
    }
};

PeriodicOrbitSolution origin_solution() {
    PeriodicOrbitSolution sol;
    sol.label = {1, 1};
    sol.X.assign(1, Vec4::Zero());
    sol.P.assign(1, Mat4c::Identity());
    sol.floq.lambda1 = 0.5;
    sol.floq.lambda2 = 2.0;
    sol.floq.T = 0.0;
    sol.floq.lambda_s = {0.1};
    sol.floq.lambda_u = {10.0};
    return sol;
}

}  // namespace

TEST_CASE("order error vanishes on an exact linear manifold") {
    DiagMap map;
    auto sol = origin_solution();
    const auto diag = diagonalize_floquet(sol);
    SeparatrixOptions opts;
    opts.d_max = 6;
    opts.alpha = 1.0;
    const auto sep = parameterize(map, sol, diag, Branch::weak_stable, opts);
    for (int d = 2; d <= 6; ++d)
        for (size_t k = 0; k < 1; ++k)
            CHECK(sep.W[k][size_t(d)].cwiseAbs().maxCoeff() == 0.0);
    const auto e = order_error(map, sep, 6);
    CHECK(e[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("q = 1 recursion reproduces the hand-solved diagonal example") {
    QuadMap map;
    auto sol = origin_solution();
    const auto diag = diagonalize_floquet(sol);
    SeparatrixOptions opts;
    opts.d_max = 3;
    opts.alpha = 1.0;

    // weak-stable branch along e1, lambda = 1/2: the order-2 invariance
    // equation for the x2 component reads 2 c + 1 = c/4, so c = -4/7
    const auto sep = parameterize(map, sol, diag, Branch::weak_stable, opts);
    CHECK(sep.lambda == doctest::Approx(0.5));
    CHECK(sep.W[0][1][0] == doctest::Approx(1.0));
    CHECK(sep.W[0][2][1] == doctest::Approx(-4.0 / 7.0).epsilon(1e-12));
    // x4 component: 10 c + 1 = c/4 -> c = -4/39
    CHECK(sep.W[0][2][3] == doctest::Approx(-4.0 / 39.0).epsilon(1e-12));
    // x1, x3 components stay zero at order 2
    CHECK(std::abs(sep.W[0][2][0]) < 1e-14);
    CHECK(std::abs(sep.W[0][2][2]) < 1e-14);

    // the invariance equation holds along the curve to high order
    for (double s : {0.01, 0.05, 0.1}) {
        const Vec4 lhs = map.apply(sep.eval(0, s));
        const Vec4 rhs = sep.eval(0, 0.5 * s);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 5.0 * std::pow(s, 4.0));
    }
}

TEST_CASE("explicit-map jet composition matches hand-computed series") {
    QuadMap map;
    SeriesVec v(3);
    // v = (1 + s, 2 - s^2, s, 3)
    v[0][0] = 1.0;
    v[0][1] = 1.0;
    v[1][0] = 2.0;
    v[1][2] = -1.0;
    v[2][1] = 1.0;
    v[3][0] = 3.0;
    const SeriesVec img = map.apply_jet(v);
    // x1' = 0.5(1+s) + (2-s^2)^2 = 4.5 + 0.5 s - 4 s^2 + 0 s^3
    CHECK(img[0][0] == doctest::Approx(4.5));
    CHECK(img[0][1] == doctest::Approx(0.5));
    CHECK(img[0][2] == doctest::Approx(-4.0));
    CHECK(img[0][3] == doctest::Approx(0.0));
    // x2' = 2(2 - s^2) + (1+s)^2 = 5 + 2 s - s^2
    CHECK(img[1][0] == doctest::Approx(5.0));
    CHECK(img[1][1] == doctest::Approx(2.0));
    CHECK(img[1][2] == doctest::Approx(-1.0));
    // x4' = 30 + (1+s)^2
    CHECK(img[3][0] == doctest::Approx(31.0));
    CHECK(img[3][1] == doctest::Approx(2.0));
    CHECK(img[3][2] == doctest::Approx(1.0));
}

TEST_CASE("degree-2 order error matches a divided-difference estimate") {
    const auto& c = hyperbolic_case();
    SeparatrixOptions opts;
    opts.d_max = 1;
    opts.alpha = 1.0;
    auto sep = parameterize(*c.map, c.sol, c.diag, Branch::weak_stable, opts);
    // pad to degree 1 only; order_error at d = 2 sees a degree-1 polynomial
    const auto e2 = order_error(*c.map, sep, 2);

    const double h = 1e-3;
    for (size_t k = 0; k < sep.q(); ++k) {
        const Vec4 fp = c.map->apply(sep.eval(k, h));
        const Vec4 f0 = c.map->apply(sep.eval(k, 0.0));
        const Vec4 fm = c.map->apply(sep.eval(k, -h));
        const Vec4 second = (fp - 2.0 * f0 + fm) / (2.0 * h * h);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(e2[k][i] - second[i]) < 1e-4 * std::max(1.0, std::abs(second[i])));
    }
}

TEST_CASE("solve_order: zero error gives zero correction; resonance guard trips") {
    const auto& c = hyperbolic_case();
    const std::vector<Vec4> zero(3, Vec4::Zero());
    const auto corr = solve_order(zero, c.diag, c.diag.diag[0].real(), 5);
    for (const auto& w : corr.W_d) CHECK(w.cwiseAbs().maxCoeff() == 0.0);

    // a fabricated diagonal with lambda_s = lambda^3 is resonant at d = 3
    DiagonalFloquet diag = c.diag;
    const double lam = c.diag.diag[0].real();
    diag.diag[2] = std::pow(lam, 3.0);
    CHECK_THROWS_AS(solve_order(zero, diag, lam, 3), Error);
}

TEST_CASE("pendulum separatrices: tangency, exactness, domains, covariance") {
    const auto& c = hyperbolic_case();
    SeparatrixOptions opts;
    opts.d_max = 20;

    for (Branch branch : {Branch::weak_stable, Branch::weak_unstable}) {
        auto sep = parameterize(*c.map, c.sol, c.diag, branch, opts);
        const int col = branch == Branch::weak_stable
                            ? (std::abs(c.diag.diag[0]) < 1.0 ? 0 : 1)
                            : (std::abs(c.diag.diag[0]) > 1.0 ? 0 : 1);

        // W_1 parallel to the Floquet column
        for (size_t k = 0; k < sep.q(); ++k) {
            const Vec4 dir = c.diag.P[k].col(col).real().normalized();
            const Vec4 w1 = sep.W[k][1].normalized();
            CHECK(std::min((w1 - dir).norm(), (w1 + dir).norm()) < 1e-12);
        }

        // order-by-order exactness: re-running the error at every completed
        // order stays at roundoff
        double w_scale = 0.0;
        for (size_t k = 0; k < sep.q(); ++k)
            for (const auto& w : sep.W[k]) w_scale = std::max(w_scale, w.cwiseAbs().maxCoeff());
        for (int d : {2, 7, 14, 20}) {
            const auto e = order_error(*c.map, sep, d);
            for (const auto& v : e) CHECK(v.cwiseAbs().maxCoeff() < 1e-11 * w_scale);
        }

        // fundamental domains with bisection sharpness
        const auto D = fundamental_domain(*c.map, sep, 1e-6);
        for (size_t k = 0; k < sep.q(); ++k) {
            CHECK(D[k] > 0.01);
            CHECK(invariance_residual(*c.map, sep, k, 0.95 * D[k]) < 1e-6);
        }
        bool some_breach = false;
        for (size_t k = 0; k < sep.q(); ++k)
            some_breach = some_breach ||
                          invariance_residual(*c.map, sep, k, 1.05 * D[k]) >= 1e-6 ||
                          invariance_residual(*c.map, sep, k, -1.05 * D[k]) >= 1e-6;
        CHECK(some_breach);

        // a degree-1 truncation has a strictly smaller domain
        SeparatrixOptions lin;
        lin.d_max = 1;
        lin.alpha = sep.alpha;
        auto sep1 = parameterize(*c.map, c.sol, c.diag, branch, lin);
        const auto D1 = fundamental_domain(*c.map, sep1, 1e-6);
        for (size_t k = 0; k < sep.q(); ++k) CHECK(D1[k] < D[k]);
    }

    // reparameterization covariance: alpha-scaled coefficients obey
    // W_d(alpha) = alpha^d W_d(1)
    SeparatrixOptions unit;
    unit.d_max = 8;
    unit.alpha = 1.0;
    SeparatrixOptions scaled;
    scaled.d_max = 8;
    scaled.alpha = 0.37;
    const auto w1 = parameterize(*c.map, c.sol, c.diag, Branch::weak_stable, unit);
    const auto wa = parameterize(*c.map, c.sol, c.diag, Branch::weak_stable, scaled);
    for (size_t k = 0; k < w1.q(); ++k)
        for (int d = 1; d <= 8; ++d) {
            const Vec4 expect = std::pow(0.37, double(d)) * w1.W[k][size_t(d)];
            CHECK((wa.W[k][size_t(d)] - expect).cwiseAbs().maxCoeff() <
                  1e-10 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
        }
}

TEST_CASE("auto scale keeps high-order coefficients in range") {
    const auto& c = hyperbolic_case();
    SeparatrixOptions opts;
    opts.d_max = 20;
    opts.alpha = 0.0;  // auto
    const auto sep = parameterize(*c.map, c.sol, c.diag, Branch::weak_unstable, opts);
    double m = 0.0;
    for (size_t k = 0; k < sep.q(); ++k) m = std::max(m, sep.W[k][20].cwiseAbs().maxCoeff());
    CHECK(m < 1e3);
    CHECK(m > 1e-12);
}

TEST_CASE("elliptic center pair is rejected") {
    const auto& sol = elliptic_solution();
    const auto diag = diagonalize_floquet(sol);
    auto sys = make_forced_pendulum(kOmegaP);
    StroboscopicMap map(sys, sol.eps, 0.0);
    CHECK_THROWS_AS(parameterize(map, sol, diag, Branch::weak_stable, {}), Error);
}

TEST_CASE("exact invariant manifold hits the bisection ceiling") {
    DiagMap map;
    auto sol = origin_solution();
    const auto diag = diagonalize_floquet(sol);
    SeparatrixOptions opts;
    opts.d_max = 4;
    opts.alpha = 1.0;
    auto sep = parameterize(map, sol, diag, Branch::weak_stable, opts);
    const auto D = fundamental_domain(map, sep, 1e-6);
    CHECK(D[0] == 10.0);
}

TEST_CASE("inconsistent tolerance is reported at s = 0") {
    const auto& c = hyperbolic_case();
    SeparatrixOptions opts;
    opts.d_max = 4;
    auto sep = parameterize(*c.map, c.sol, c.diag, Branch::weak_stable, opts);
    // the converged solution's own residual (~1e-11) exceeds this tolerance
    CHECK_THROWS_AS(fundamental_domain(*c.map, sep, 1e-14), Error);
}

TEST_CASE("curve sampling") {
    const auto& c = hyperbolic_case();
    SeparatrixOptions opts;
    opts.d_max = 12;
    auto sep = parameterize(*c.map, c.sol, c.diag, Branch::weak_unstable, opts);
    CHECK_THROWS_AS(sample_curves(sep, 7), Error);  // domains not yet computed
    fundamental_domain(*c.map, sep, 1e-6);

    const auto single = sample_curves(sep, 1);
    REQUIRE(single.size() == 3);
    for (size_t k = 0; k < 3; ++k) {
        CHECK(single[k].s == 0.0);
        CHECK((single[k].point - c.sol.X[k]).cwiseAbs().maxCoeff() < 1e-14);
    }

    const auto many = sample_curves(sep, 41);
    CHECK(many.size() == 3 * 41);
    for (const auto& s : many)
        CHECK(invariance_residual(*c.map, sep, s.k, s.s) < 1e-6);
}
