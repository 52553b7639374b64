#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "spomap/orbits.hpp"
#include "spomap/spo.hpp"

using namespace spomap;

namespace {

constexpr double kOmegaP = 2.5133;

std::shared_ptr<const SystemModel> pendulum() { return make_forced_pendulum(kOmegaP); }

// y = 0 crossing of the libration resonant with the forcing: a symmetric
// phase, so the orbit persists under the perturbation.
Vec4 pendulum_seed(int p, int q) {
    const double tp = 2.0 * M_PI / kOmegaP;
    const double amp = pendulum_amplitude_for_period(tp * double(q) / double(p));
    return Vec4(0.0, 0.0, 0.0, 2.0 * std::sin(0.5 * amp));
}

PeriodicOrbitSolution pendulum_seed_solution(double theta0 = 0.0) {
    StroboscopicMap map0(pendulum(), 0.0, theta0);
    return initialize_unperturbed(map0, pendulum_seed(1, 3), {1, 3});
}

// Linear symplectic test map x -> Mx + c.
class AffineMap final : public SymplecticMap {
public:
    AffineMap(Mat4 m, Vec4 c) : m_(m), c_(c) {}
    Vec4 apply(const Vec4& x) const override { return m_ * x + c_; }
    std::pair<Vec4, Mat4> apply_with_jacobian(const Vec4& x) const override {
        return {m_ * x + c_, m_};
    }
    SeriesVec apply_jet(const SeriesVec& v) const override {
        SeriesVec out(v.degree());
        for (int i = 0; i < 4; ++i)
            for (int d = 0; d <= v.degree(); ++d) {
                double acc = i == 0 ? 0.0 : out[i][d];
                acc = 0.0;
                for (int j = 0; j < 4; ++j) acc += m_(i, j) * v[j][d];
                if (d == 0) acc += c_[i];
                out[i][d] = acc;
            }
        return out;
    }

private:
    Mat4 m_;
    Vec4 c_;
};

Mat4 dense_monodromy(const SymplecticMap& map, const std::vector<Vec4>& X) {
    Mat4 m = Mat4::Identity();
    for (const auto& x : X) m = map.apply_with_jacobian(x).second * m;
    return m;
}

double angle_between(const Vec4& a, const Eigen::Vector4cd& b) {
    // real direction vs possibly complex eigenvector (phase-aligned)
    const Eigen::Vector4cd an = a.cast<cplx>().normalized();
    const Eigen::Vector4cd bn = b.normalized();
    const double c = std::abs(an.dot(bn));
    return std::acos(std::min(1.0, c));
}

}  // namespace

TEST_CASE("seed walks the orbit and checks invariance") {
    auto sys = pendulum();
    StroboscopicMap map0(sys, 0.0, 0.0);
    const Vec4 x0 = pendulum_seed(1, 3);
    const auto seed = seed_unperturbed(map0, x0, {1, 3});
    CHECK(seed.X.size() == 3);
    CHECK(seed.residual < 1e-8);
    CHECK((seed.X[0] - x0).norm() == 0.0);
    // tangents are the flow vectors
    for (size_t k = 0; k < 3; ++k) {
        const Vec4 f = sys->rhs(seed.X[k], 0.0, 0.0);
        CHECK((seed.tangents[k] - f).norm() == 0.0);
    }

    // q = 1: an equilibrium of the flow is a fixed point of the map
    const auto fixed = seed_unperturbed(map0, Vec4::Zero(), {1, 1});
    CHECK(fixed.X.size() == 1);
    CHECK(fixed.residual < 1e-12);

    // off-resonance seed fails loudly
    Vec4 bad = x0;
    bad[3] *= 1.05;
    CHECK_THROWS_AS(seed_unperturbed(map0, bad, {1, 3}), Error);
}

TEST_CASE("hyperbolic bundle matches a dense monodromy eigendecomposition") {
    auto sys = pendulum();
    StroboscopicMap map0(sys, 0.0, 0.0);
    const auto seed = seed_unperturbed(map0, pendulum_seed(1, 3), {1, 3});
    std::vector<Mat4> DF(3);
    for (size_t k = 0; k < 3; ++k) DF[k] = map0.apply_with_jacobian(seed.X[k]).second;

    const auto bundle = init_hyperbolic_bundle(DF, seed.tangents);
    REQUIRE(bundle.has_value());

    const Mat4 mono = dense_monodromy(map0, seed.X);
    Eigen::EigenSolver<Mat4> es(mono);
    int iu = 0, is = 0;
    for (int i = 1; i < 4; ++i) {
        if (es.eigenvalues()[i].real() > es.eigenvalues()[iu].real()) iu = i;
        if (std::abs(es.eigenvalues()[i]) < std::abs(es.eigenvalues()[is])) is = i;
    }
    CHECK(angle_between(bundle->v_u[0], es.eigenvectors().col(iu)) < 1e-8);
    CHECK(angle_between(bundle->v_s[0], es.eigenvectors().col(is)) < 1e-8);

    // symplectic determinant: the products are mutually inverse
    double ps = 1.0, pu = 1.0;
    for (size_t k = 0; k < 3; ++k) {
        ps *= bundle->lambda_s[k];
        pu *= bundle->lambda_u[k];
    }
    CHECK(std::abs(ps * pu - 1.0) < 1e-8);
    // the transverse saddle of this system has rate exactly 1
    CHECK(pu == doctest::Approx(std::exp(3.0 * map0.mapping_time())).epsilon(1e-9));
}

TEST_CASE("negative transverse multiplier raises the doubling signal") {
    // orientation-reversing symplectic block: eigenvalues -2, -1/2 and a
    // rotation pair; the 2q monodromy is positive
    Mat4 m = Mat4::Zero();
    const double th = 0.7;
    m(0, 0) = std::cos(th);
    m(0, 2) = std::sin(th);
    m(2, 0) = -std::sin(th);
    m(2, 2) = std::cos(th);
    m(1, 1) = -2.0;
    m(3, 3) = -0.5;

    std::vector<Mat4> DF(3, m);
    std::vector<Vec4> tangents(3, Vec4(1.0, 0.0, 0.0, 0.0));
    CHECK_FALSE(init_hyperbolic_bundle(DF, tangents).has_value());

    std::vector<Mat4> DF2(6, m);
    std::vector<Vec4> tangents2(6, Vec4(1.0, 0.0, 0.0, 0.0));
    const auto bundle = init_hyperbolic_bundle(DF2, tangents2);
    REQUIRE(bundle.has_value());
    for (size_t k = 0; k < 6; ++k) {
        CHECK(bundle->lambda_u[k] == doctest::Approx(2.0));
        CHECK(bundle->lambda_s[k] == doctest::Approx(0.5));
        CHECK(std::abs(std::abs(bundle->v_u[k][1]) - 1.0) < 1e-10);
        CHECK(std::abs(std::abs(bundle->v_s[k][3]) - 1.0) < 1e-10);
    }
}

TEST_CASE("center bundle: B(k) = 1, area identity, full bundle residual") {
    auto sys = pendulum();
    StroboscopicMap map0(sys, 0.0, 0.0);
    const auto seed = seed_unperturbed(map0, pendulum_seed(1, 3), {1, 3});
    std::vector<Mat4> DF(3);
    for (size_t k = 0; k < 3; ++k) DF[k] = map0.apply_with_jacobian(seed.X[k]).second;
    auto bundle = init_hyperbolic_bundle(DF, seed.tangents);
    REQUIRE(bundle.has_value());
    {
        std::vector<Vec4c> vs(3), vu(3);
        for (size_t k = 0; k < 3; ++k) {
            vs[k] = bundle->v_s[k].cast<cplx>();
            vu[k] = bundle->v_u[k].cast<cplx>();
        }
        rescale_constant(vs, vu, bundle->lambda_s, bundle->lambda_u);
        for (size_t k = 0; k < 3; ++k) {
            bundle->v_s[k] = vs[k].real();
            bundle->v_u[k] = vu[k].real();
        }
    }
    const auto center = init_center_bundle(DF, seed.tangents, *bundle);

    Mat4 J = Mat4::Zero();
    J(0, 2) = J(1, 3) = 1.0;
    J(2, 0) = J(3, 1) = -1.0;
    for (size_t k = 0; k < 3; ++k) {
        CHECK(std::abs(center.work.B[k] - 1.0) < 1e-9);
        const double area = seed.tangents[k].transpose() * J * center.work.v_c[k];
        CHECK(std::abs(area - 1.0) < 1e-9);
    }

    // assembled frame satisfies the bundle equation to 1e-9
    const auto sol = pendulum_seed_solution();
    CHECK(sol.norm_E_red < 1e-9);
    CHECK(sol.norm_E < 1e-9);
    CHECK(sol.floq.lambda1 == cplx(1.0));
    CHECK(sol.floq.lambda2 == cplx(1.0));
}

TEST_CASE("residuals: exact affine solution and hand-built two-point instance") {
    // F(x) = Mx + c with a known 2-cycle
    Mat4 m = Mat4::Zero();
    m(0, 0) = 2.0;
    m(2, 2) = 0.5;
    m(1, 1) = 3.0;
    m(3, 3) = 1.0 / 3.0;
    const Vec4 c(0.1, -0.2, 0.3, 0.05);
    AffineMap map(m, c);

    PeriodicOrbitSolution sol;
    sol.label = {1, 2};
    sol.X.resize(2);
    sol.X[0] = Vec4(1.0, 0.0, 0.0, 0.0);
    sol.X[1] = map.apply(sol.X[0]);
    sol.P.assign(2, Mat4c::Identity());
    sol.floq.lambda1 = 2.0;
    sol.floq.lambda2 = 3.0;
    sol.floq.T = 0.0;
    sol.floq.lambda_s = {0.5, 0.5};
    sol.floq.lambda_u = {1.0 / 3.0, 1.0 / 3.0};

    const auto res = compute_residual(map, sol);
    // E(0) = 0 by construction; E(1) = M x1 + c - x0 by hand
    CHECK(res.E[0].cwiseAbs().maxCoeff() < 1e-15);
    const Vec4 expected = m * sol.X[1] + c - sol.X[0];
    CHECK((res.E[1] - expected).cwiseAbs().maxCoeff() < 1e-15);
    // E_red(k) = M - Lambda(k), entrywise
    for (size_t k = 0; k < 2; ++k) {
        const Mat4c d = m.cast<cplx>() - sol.floq.matrix(k);
        CHECK(std::abs((res.E_red[k] - d).cwiseAbs().maxCoeff()) < 1e-15);
    }
}

TEST_CASE("x-step: zero residual means zero correction") {
    auto sol = pendulum_seed_solution();
    StroboscopicMap map0(pendulum(), 0.0, 0.0);
    std::vector<Vec4> E(3, Vec4::Zero());
    std::vector<Mat4c> pinv(3);
    for (size_t k = 0; k < 3; ++k) pinv[k] = sol.P[k].partialPivLu().inverse();
    const auto Xold = sol.X;
    x_step(sol, {&E, &pinv}, {});
    for (size_t k = 0; k < 3; ++k) CHECK((sol.X[k] - Xold[k]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("x-step solves the decoupled sequence equations (dense check)") {
    // q = 2, identity frame, diagonal multipliers: each component is a 2x2
    // cyclic system solvable by hand
    PeriodicOrbitSolution sol;
    sol.label = {1, 2};
    sol.X.assign(2, Vec4::Zero());
    sol.P.assign(2, Mat4c::Identity());
    sol.floq.lambda1 = 2.0;
    sol.floq.lambda2 = 0.5;
    sol.floq.T = 0.0;
    sol.floq.lambda_s = {0.5, 0.5};
    sol.floq.lambda_u = {2.0, 2.0};

    std::vector<Vec4> E{Vec4(0.1, -0.3, 0.2, 0.05), Vec4(-0.2, 0.4, -0.1, 0.15)};
    std::vector<Mat4c> pinv(2, Mat4c::Identity());
    x_step(sol, {&E, &pinv}, {});

    // each component i: lambda_i xi(k) - xi(k+1) = -E_i(k)
    const double lam[4] = {2.0, 0.5, 0.5, 2.0};
    for (int i = 0; i < 4; ++i) {
        Eigen::Matrix2d A;
        A << lam[i], -1.0, -1.0, lam[i];
        const Eigen::Vector2d rhs(-E[0][i], -E[1][i]);
        const Eigen::Vector2d xi = A.colPivHouseholderQr().solve(rhs);
        CHECK(sol.X[0][i] == doctest::Approx(xi[0]).epsilon(1e-12));
        CHECK(sol.X[1][i] == doctest::Approx(xi[1]).epsilon(1e-12));
    }
}

TEST_CASE("p-step: zero reduced residual is a fixed point") {
    auto sol = pendulum_seed_solution();
    std::vector<Mat4c> E_red(3, Mat4c::Zero());
    const auto step = p_step(sol, E_red, {});
    CHECK(step.delta_S == cplx(0.0));
    CHECK(step.lambda1_c == sol.floq.lambda1);
    CHECK(step.lambda2_c == sol.floq.lambda2);
    CHECK(step.T_c == sol.floq.T);
    for (size_t k = 0; k < 3; ++k) {
        CHECK((step.P_c[k] - sol.P[k]).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(step.lambda_s_c[k] == sol.floq.lambda_s[k]);
        CHECK(step.lambda_u_c[k] == sol.floq.lambda_u[k]);
    }
}

TEST_CASE("p-step takes Delta S as the E_CL average") {
    PeriodicOrbitSolution sol;
    sol.label = {1, 3};
    sol.X.assign(3, Vec4::Zero());
    sol.P.assign(3, Mat4c::Identity());
    sol.floq.lambda1 = cplx(1.01, 0.0);
    sol.floq.lambda2 = cplx(0.99, 0.0);
    sol.floq.T = cplx(0.4, 0.0);
    sol.floq.lambda_s = {0.3, 0.35, 0.28};
    sol.floq.lambda_u = {3.0, 3.3, 3.6};

    std::mt19937 rng(57);
    std::uniform_real_distribution<double> val(-1e-3, 1e-3);
    std::vector<Mat4c> E_red(3);
    cplx mean(0.0);
    for (auto& e : E_red) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) e(i, j) = cplx(val(rng), val(rng));
        mean += e(1, 0);
    }
    mean /= 3.0;
    const auto step = p_step(sol, E_red, {});
    CHECK(std::abs(step.delta_S - mean) < 1e-15);

    // in flow-map mode the center deltas are pinned to zero
    SolverOptions fm;
    fm.mode = SolveMode::flow_map;
    PeriodicOrbitSolution ones = sol;
    ones.floq.lambda1 = ones.floq.lambda2 = cplx(1.0);
    const auto step2 = p_step(ones, E_red, fm);
    CHECK(step2.delta_S == cplx(0.0));
    CHECK(step2.lambda1_c == cplx(1.0));
    CHECK(step2.lambda2_c == cplx(1.0));
}

TEST_CASE("schur normalization cases") {
    PeriodicOrbitSolution sol;
    sol.label = {1, 2};
    sol.X.assign(2, Vec4::Zero());
    sol.P.assign(2, Mat4c::Identity());
    sol.floq.lambda_s = {0.5, 0.5};
    sol.floq.lambda_u = {2.0, 2.0};

    // Delta S = 0: untouched
    {
        PStepResult st;
        st.P_c.assign(2, 2.0 * Mat4c::Identity());
        st.lambda1_c = cplx(1.1);
        st.lambda2_c = cplx(0.9);
        st.T_c = cplx(0.3);
        st.delta_S = cplx(0.0);
        st.lambda_s_c = {0.5, 0.5};
        st.lambda_u_c = {2.0, 2.0};
        auto s = sol;
        schur_normalize(s, st);
        CHECK(s.floq.lambda1 == cplx(1.1));
        CHECK(s.floq.T == cplx(0.3));
        CHECK((s.P[0] - st.P_c[0]).cwiseAbs().maxCoeff() == 0.0);
    }
    // swap block [[0,1],[1,0]]: eigenvalues +-1, unitary transform
    {
        PStepResult st;
        st.P_c.assign(2, Mat4c::Identity());
        st.lambda1_c = cplx(0.0);
        st.T_c = cplx(1.0);
        st.delta_S = cplx(1.0);
        st.lambda2_c = cplx(0.0);
        st.lambda_s_c = {0.5, 0.5};
        st.lambda_u_c = {2.0, 2.0};
        auto s = sol;
        schur_normalize(s, st);
        const double a = std::abs(s.floq.lambda1 - cplx(1.0));
        const double b = std::abs(s.floq.lambda1 + cplx(1.0));
        CHECK(std::min(a, b) < 1e-14);
        CHECK(std::abs(s.floq.lambda1 + s.floq.lambda2) < 1e-14);
        // P = V must be unitary
        const Mat4c v = s.P[0];
        CHECK((v.adjoint() * v - Mat4c::Identity()).cwiseAbs().maxCoeff() < 1e-14);
        // sparsity of the materialized multiplier matrix is exact
        const Mat4c lam = s.floq.matrix(0);
        CHECK(lam(1, 0) == cplx(0.0));
        CHECK(lam(2, 0) == cplx(0.0));
        CHECK(lam(0, 2) == cplx(0.0));
    }
    // real block with complex-conjugate eigenvalues goes genuinely complex
    {
        PStepResult st;
        st.P_c.assign(2, Mat4c::Identity());
        st.lambda1_c = cplx(1.0);
        st.T_c = cplx(-0.02);
        st.delta_S = cplx(0.02);
        st.lambda2_c = cplx(1.0);
        st.lambda_s_c = {0.5, 0.5};
        st.lambda_u_c = {2.0, 2.0};
        auto s = sol;
        schur_normalize(s, st);
        CHECK(std::abs(s.floq.lambda1.imag()) > 1e-3);
        // the pair is conjugate and its product matches the block determinant
        CHECK(std::abs(s.floq.lambda2 - std::conj(s.floq.lambda1)) < 1e-12);
        const cplx det = cplx(1.0) * cplx(1.0) - cplx(-0.02) * cplx(0.02);
        CHECK(std::abs(s.floq.lambda1 * s.floq.lambda2 - det) < 1e-12);
    }
}

TEST_CASE("quasi-Newton: exact input returns without corrections") {
    auto sol = pendulum_seed_solution();
    StroboscopicMap map0(pendulum(), 0.0, 0.0);
    SolverOptions opts;
    opts.tol = 1e-7;
    const auto Xold = sol.X;
    const auto out = quasi_newton_solve(map0, sol, opts);
    CHECK(out.history.size() == 1);
    for (size_t k = 0; k < 3; ++k) CHECK((out.X[k] - Xold[k]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("continuation: quadratic convergence and monodromy consistency") {
    auto sys = pendulum();
    auto sol = pendulum_seed_solution(M_PI);  // hyperbolic branch
    ContinuationOptions opts;
    opts.solver.tol = 1e-11;
    const auto sols = continue_family(strobe_family(sys, M_PI), sol, 2e-3, 8, opts);
    REQUIRE(sols.size() == 8);

    // quadratic contraction on the recorded history of a later step
    const auto& hist = sols[4].history;
    REQUIRE(hist.size() >= 3);
    // the floor sits near the 1e-12 integration tolerance
    for (size_t i = 0; i + 1 < hist.size(); ++i) {
        if (hist[i + 1].first > 1e-11)
            CHECK(hist[i + 1].first <= 10.0 * hist[i].first * hist[i].first);
        if (hist[i + 1].second > 1e-11)
            CHECK(hist[i + 1].second <= 10.0 * hist[i].second * hist[i].second);
    }

    // monodromy eigenvalues match {l1^q, l2^q, prod ls, prod lu}
    const auto& last = sols.back();
    StroboscopicMap map(sys, last.eps, M_PI);
    const Mat4 mono = dense_monodromy(map, last.X);
    Eigen::EigenSolver<Mat4> es(mono);
    double ps = 1.0, pu = 1.0;
    for (size_t k = 0; k < last.q(); ++k) {
        ps *= last.floq.lambda_s[k];
        pu *= last.floq.lambda_u[k];
    }
    std::vector<cplx> expected{std::pow(last.floq.lambda1, 3.0), std::pow(last.floq.lambda2, 3.0),
                               cplx(ps), cplx(pu)};
    for (const auto& e : expected) {
        double best = 1e300;
        for (int i = 0; i < 4; ++i) best = std::min(best, std::abs(es.eigenvalues()[i] - e));
        CHECK(best < 1e-6 * std::max(1.0, std::abs(e)));
    }

    // multiplier identities
    CHECK(std::abs(ps * pu - 1.0) < 1e-6);
    const cplx full = std::pow(last.floq.lambda1, 3.0) * std::pow(last.floq.lambda2, 3.0) * ps * pu;
    CHECK(std::abs(full - 1.0) < 1e-5);

    // hyperbolic classification at this phase
    CHECK(last.classify_center_pair() == PairClass::hyperbolic);

    // q-fold bundle product: prod DF maps P(0) to P(0) prod Lambda
    Mat4c lhs = last.P[0];
    for (size_t k = 0; k < last.q(); ++k)
        lhs = map.apply_with_jacobian(last.X[k]).second.cast<cplx>() * lhs;
    Mat4c lam = Mat4c::Identity();
    for (size_t k = 0; k < last.q(); ++k) lam = last.floq.matrix(k) * lam;
    const Mat4c rhs = last.P[0] * lam;
    const double scale = lhs.cwiseAbs().maxCoeff();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 10.0 * opts.solver.tol * scale);
}

TEST_CASE("continuation trivia and rescale invariants") {
    auto sys = pendulum();
    auto sol = pendulum_seed_solution();
    // n = 1 steps to eps_f = 0: the seed comes back unchanged
    const auto same = continue_family(strobe_family(sys, 0.0), sol, 0.0, 1, {});
    REQUIRE(same.size() == 1);
    CHECK(same[0].eps == 0.0);
    CHECK((same[0].X[0] - sol.X[0]).cwiseAbs().maxCoeff() == 0.0);

    ContinuationOptions opts;
    opts.solver.tol = 1e-9;
    opts.rescale_each_step = false;
    auto sols = continue_family(strobe_family(sys, 0.0), sol, 1e-3, 4, opts);
    auto& last = sols.back();
    StroboscopicMap map(sys, last.eps, 0.0);

    const auto before = compute_residual(map, last);
    auto rescaled = last;
    rescale_solution(rescaled);
    const auto after = compute_residual(map, rescaled);
    // X untouched, multipliers constant, bundle residual within 10 tol
    CHECK(after.norm_E == before.norm_E);
    for (size_t k = 1; k < rescaled.q(); ++k) {
        CHECK(rescaled.floq.lambda_s[k] == doctest::Approx(rescaled.floq.lambda_s[0]));
        CHECK(rescaled.floq.lambda_u[k] == doctest::Approx(rescaled.floq.lambda_u[0]));
    }
    CHECK(after.norm_E_red < 10.0 * opts.solver.tol);

    // elliptic classification at theta0 = 0
    CHECK(last.classify_center_pair() == PairClass::elliptic);
    CHECK(std::abs(std::abs(last.floq.lambda1) - 1.0) < 1e-6);
}

TEST_CASE("flow-map mode pins the center multipliers at one") {
    struct AutoPend : SystemModel {
        double op;
        explicit AutoPend(double o) : op(o) {}
        std::string name() const override { return "auto_pend"; }
        double omega_p() const override { return op; }
        double hamiltonian(const Vec4& s, double, double eps) const override {
            return 0.5 * s[2] * s[2] + std::cos(s[0]) + 0.5 * s[3] * s[3] - std::cos(s[1]) +
                   eps * std::cos(2.0 * s[1]);
        }
        Vec4 rhs(const Vec4& s, double, double eps) const override {
            return Vec4(s[2], s[3], std::sin(s[0]),
                        -std::sin(s[1]) + 2.0 * eps * std::sin(2.0 * s[1]));
        }
        void rhs_jacobian(const Vec4& s, double, double eps, Mat4& a, Vec4& dth) const override {
            a << 0, 0, 1, 0,
                0, 0, 0, 1,
                std::cos(s[0]), 0, 0, 0,
                0, -std::cos(s[1]) + 4.0 * eps * std::cos(2.0 * s[1]), 0, 0;
            dth.setZero();
        }
        void rhs_jet(const SeriesVec& v, double, double eps, SeriesVec& out,
                     SeriesWorkspace& ws) const override {
            auto& sa = ws.scratch(0, v.degree());
            auto& ca = ws.scratch(1, v.degree());
            auto& w = ws.scratch(2, v.degree());
            out[0] = v[2];
            out[1] = v[3];
            sin_cos_into(v[0], sa, ca);
            out[2] = sa;
            sin_cos_into(v[1], sa, ca);
            out[3] = -sa;
            if (eps != 0.0) {
                w = 2.0 * v[1];
                sin_cos_into(w, sa, ca);
                out[3] = out[3] + (2.0 * eps) * sa;
            }
        }
        std::map<std::string, double> params() const override { return {}; }
    };

    auto sys = std::make_shared<AutoPend>(kOmegaP);
    StroboscopicMap map0(sys, 0.0, 0.0);
    InitOptions io;
    io.mode = SolveMode::flow_map;
    auto sol = initialize_unperturbed(map0, pendulum_seed(1, 3), {1, 3}, io);

    ContinuationOptions opts;
    opts.solver.tol = 1e-9;
    opts.solver.mode = SolveMode::flow_map;
    const auto sols = continue_family(strobe_family(sys, 0.0), sol, 5e-3, 5, opts);
    const auto& last = sols.back();
    CHECK(last.floq.lambda1 == cplx(1.0));
    CHECK(last.floq.lambda2 == cplx(1.0));
    CHECK(last.norm_E < 1e-9);
    CHECK(last.norm_E_red < 1e-9);
    CHECK(last.classify_center_pair() == PairClass::parabolic);
}

TEST_CASE("diagonalization") {
    auto sys = pendulum();
    auto seed = pendulum_seed_solution(M_PI);
    ContinuationOptions opts;
    opts.solver.tol = 1e-11;
    const auto sols = continue_family(strobe_family(sys, M_PI), seed, 2e-3, 8, opts);
    const auto& sol = sols.back();

    const auto diag = diagonalize_floquet(sol);
    CHECK_FALSE(diag.defective);
    // V_D^-1 Lambda V_D is diagonal
    Mat4c lam = sol.floq.matrix(0);
    const Mat4c d = diag.V_D.inverse() * lam * diag.V_D;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) CHECK(std::abs(d(i, j)) < 1e-12);

    // P_bar columns are eigenvectors of the dense monodromy
    StroboscopicMap map(sys, sol.eps, M_PI);
    const Mat4 mono = dense_monodromy(map, sol.X);
    for (int col = 0; col < 4; ++col) {
        const Eigen::Vector4cd v = diag.P[0].col(col);
        const Eigen::Vector4cd mv = mono.cast<cplx>() * v;
        const cplx expected = std::pow(diag.diag[col], 3.0);
        CHECK((mv - expected * v).cwiseAbs().maxCoeff() <
              1e-6 * std::max(1.0, std::abs(expected)) * v.cwiseAbs().maxCoeff() * 10.0);
    }

    // T = 0 means the transform is the identity
    auto plain = sol;
    plain.floq.T = cplx(0.0);
    const auto diag2 = diagonalize_floquet(plain);
    CHECK((diag2.V_D - Mat4c::Identity()).cwiseAbs().maxCoeff() == 0.0);

    // defective pair: triangular form returned, flagged
    auto def = sol;
    def.floq.lambda2 = def.floq.lambda1;
    const auto diag3 = diagonalize_floquet(def);
    CHECK(diag3.defective);
    CHECK((diag3.V_D - Mat4c::Identity()).cwiseAbs().maxCoeff() == 0.0);
}
