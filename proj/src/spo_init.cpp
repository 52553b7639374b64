// Unperturbed-map initialization: orbit seed, the transverse hyperbolic
// bundle by power iteration around the cycle, and the center-bundle
// construction for frame columns 1 and 2.

#include <cmath>
#include <sstream>

#include "spomap/spo.hpp"

namespace spomap {

namespace {

const Mat4& symplectic_J() {
    static const Mat4 J = [] {
        Mat4 j = Mat4::Zero();
        j(0, 2) = 1.0;
        j(1, 3) = 1.0;
        j(2, 0) = -1.0;
        j(3, 1) = -1.0;
        return j;
    }();
    return J;
}

double inf_norm(const Vec4& v) { return v.cwiseAbs().maxCoeff(); }

}  // namespace

PairClass PeriodicOrbitSolution::classify_center_pair() const {
    const cplx l1 = floq.lambda1;
    if (std::abs(l1.imag()) > 1e-8 && std::abs(std::abs(l1) - 1.0) < 1e-6)
        return PairClass::elliptic;
    if (std::abs(l1 - cplx(1.0)) < 1e-8 && std::abs(floq.lambda2 - cplx(1.0)) < 1e-8)
        return PairClass::parabolic;
    return PairClass::hyperbolic;
}

SeedResult seed_unperturbed(const StroboscopicMap& map0, const Vec4& x0, const ResonanceLabel& label,
                            double max_residual) {
    label.validate();
    require(map0.eps() == 0.0, ErrorKind::argument, "seeding is defined on the eps = 0 map");
    const size_t q = size_t(label.q);
    const size_t p = size_t(label.p);
    const double T = map0.mapping_time() * double(q) / double(p);

    // X(k) = flow(x0, k T_p), with the flow time reduced modulo the orbit
    // period T.  Never integrating longer than one period keeps the
    // instability amplification at a single monodromy factor; chaining map
    // steps would compound it q times.
    SeedResult seed;
    seed.X.resize(q);
    seed.tangents.resize(q);
    for (size_t k = 0; k < q; ++k) {
        const double tau = T * double((k * p) % q) / double(q);
        seed.X[k] = k == 0 ? x0 : flow(map0.system(), 0.0, x0, map0.theta0(), tau,
                                       map0.integrator());
        seed.tangents[k] = map0.system().rhs(seed.X[k], map0.theta0(), 0.0);
    }
    seed.residual = 0.0;
    for (size_t k = 0; k < q; ++k)
        seed.residual =
            std::max(seed.residual, inf_norm(map0.apply(seed.X[k]) - seed.X[(k + 1) % q]));

    if (!(seed.residual < max_residual)) {
        std::ostringstream os;
        os << "seed orbit is not " << label.p << "/" << label.q
           << " resonant: invariance residual " << seed.residual << " exceeds " << max_residual;
        throw NumericalError(os.str());
    }
    return seed;
}

std::optional<HyperbolicBundle> init_hyperbolic_bundle(const std::vector<Mat4>& DF,
                                                       const std::vector<Vec4>& tangents,
                                                       const PowerIterConfig& cfg) {
    const size_t q = DF.size();
    require(q > 0 && tangents.size() == q, ErrorKind::argument, "bundle init: length mismatch");

    std::vector<Eigen::PartialPivLU<Mat4>> lu;
    lu.reserve(q);
    for (const auto& m : DF) lu.emplace_back(m);

    auto unit = [](const Vec4& v) -> Vec4 { return v / v.norm(); };

    // Deterministic start vectors; the alternates break an accidental
    // alignment with the orbit tangent.
    const Vec4 starts[3] = {Vec4(1, 1, 1, 1).normalized(), Vec4(1, -1, 1, -1).normalized(),
                            Vec4(1, 0, -1, 2).normalized()};

    auto iterate = [&](bool stable, const Vec4& start, std::vector<Vec4>& v) -> bool {
        v.assign(q, Vec4::Zero());
        v[0] = start;
        auto sweep_from_0 = [&]() {
            if (stable) {
                for (size_t k = q - 1; k >= 1; --k) v[k] = unit(lu[k].solve(v[(k + 1) % q]));
            } else {
                for (size_t k = 1; k < q; ++k) v[k] = unit(DF[k - 1] * v[k - 1]);
            }
        };
        sweep_from_0();
        std::vector<Vec4> prev(q);
        for (long it = 0; it < cfg.max_sweeps; ++it) {
            prev = v;
            v[0] = stable ? unit(lu[0].solve(prev[1 % q])) : unit(DF[q - 1] * prev[q - 1]);
            sweep_from_0();
            // sign-sensitive alignment test: a negative transverse multiplier
            // flips successive iterates and must register as non-convergence
            double worst = 0.0;
            for (size_t k = 0; k < q; ++k)
                worst = std::max(worst, 1.0 - prev[k].dot(v[k]));
            if (worst < cfg.tol) return true;
        }
        return false;
    };

    HyperbolicBundle bundle;
    for (bool stable : {true, false}) {
        auto& v = stable ? bundle.v_s : bundle.v_u;
        bool ok = false;
        for (const auto& start : starts) {
            if (!iterate(stable, start, v)) return std::nullopt;  // negative multiplier: double q
            // guard against convergence onto the NHIM tangent
            bool collided = false;
            for (size_t k = 0; k < q; ++k) {
                const Vec4 t = tangents[k].normalized();
                if (std::abs(t.dot(v[k])) > 1.0 - cfg.tangent_guard) collided = true;
            }
            if (!collided) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw NumericalError(
                "power iteration keeps converging onto the orbit tangent; "
                "transverse hyperbolicity is suspect");
    }

    bundle.lambda_s.resize(q);
    bundle.lambda_u.resize(q);
    for (size_t k = 0; k < q; ++k) {
        bundle.lambda_s[k] = 1.0 / lu[k].solve(bundle.v_s[(k + 1) % q]).norm();
        bundle.lambda_u[k] = (DF[k] * bundle.v_u[k]).norm();
    }
    return bundle;
}

CenterBundle init_center_bundle(const std::vector<Mat4>& DF, const std::vector<Vec4>& tangents,
                                const HyperbolicBundle& bundle, const SeqSolveConfig& seq) {
    const size_t q = DF.size();
    const Mat4& J = symplectic_J();
    const Mat4 Jinv = J.transpose();  // J^-1 = J^T = -J

    // multipliers must already be constant (rescaled)
    for (size_t k = 0; k < q; ++k) {
        require(std::abs(bundle.lambda_s[k] - bundle.lambda_s[0]) <=
                        1e-12 * std::abs(bundle.lambda_s[0]),
                ErrorKind::argument, "center init expects constant lambda_s (rescale first)");
        require(std::abs(bundle.lambda_u[k] - bundle.lambda_u[0]) <=
                        1e-12 * std::abs(bundle.lambda_u[0]),
                ErrorKind::argument, "center init expects constant lambda_u (rescale first)");
    }
    const double ls = bundle.lambda_s[0], lu_ = bundle.lambda_u[0];

    CenterBundle cb;
    auto& w = cb.work;
    w.A.resize(q);
    w.B.resize(q);
    w.C.resize(q);
    w.D.resize(q);
    w.v_c.resize(q);
    cb.v2.resize(q);

    std::vector<Vec4> wvec(q);  // J^-1 DK / |DK|^2
    for (size_t k = 0; k < q; ++k) {
        const Vec4& dk = tangents[k];
        wvec[k] = (Jinv * dk) / dk.squaredNorm();
    }

    for (size_t k = 0; k < q; ++k) {
        const size_t kp = (k + 1) % q;
        Mat4 m;
        m.col(0) = tangents[kp];
        m.col(1) = wvec[kp];
        m.col(2) = bundle.v_s[kp];
        m.col(3) = bundle.v_u[kp];
        const Vec4 rhs = DF[k] * wvec[k];
        const Vec4 abcd = m.partialPivLu().solve(rhs);
        w.A[k] = abcd[0];
        w.B[k] = abcd[1];
        w.C[k] = abcd[2];
        w.D[k] = abcd[3];
        if (std::abs(w.B[k] - 1.0) > 1e-6) {
            std::ostringstream os;
            os << "center init: B(" << k << ") = " << w.B[k]
               << " deviates from 1; frame or map is not symplectic enough";
            throw NumericalError(os.str());
        }
    }

    auto real_of = [](const std::vector<cplx>& v) {
        std::vector<double> r(v.size());
        for (size_t i = 0; i < v.size(); ++i) r[i] = v[i].real();
        return r;
    };

    std::vector<cplx> bC(q), bD(q);
    for (size_t k = 0; k < q; ++k) {
        bC[k] = -w.C[k];
        bD[k] = -w.D[k];
    }
    w.f1 = real_of(solve_auto(SequenceEquation(cplx(ls), cplx(1.0), bC), seq));
    w.f2 = real_of(solve_auto(SequenceEquation(cplx(lu_), cplx(1.0), bD), seq));

    for (size_t k = 0; k < q; ++k)
        w.v_c[k] = wvec[k] + w.f1[k] * bundle.v_s[k] + w.f2[k] * bundle.v_u[k];

    double T = 0.0;
    for (size_t k = 0; k < q; ++k) T += w.A[k];
    T /= double(q);
    cb.T = T;

    std::vector<cplx> bA(q);
    for (size_t k = 0; k < q; ++k) bA[k] = -(w.A[k] - T);
    w.a = real_of(solve_cohomological(bA, 1e30));  // zero sum by construction of T

    for (size_t k = 0; k < q; ++k) cb.v2[k] = w.v_c[k] + w.a[k] * tangents[k];
    return cb;
}

PeriodicOrbitSolution initialize_unperturbed(const StroboscopicMap& map0, const Vec4& x0,
                                             const ResonanceLabel& label, const InitOptions& opts) {
    SeedResult seed = seed_unperturbed(map0, x0, label, opts.seed_residual_tol);
    size_t q = seed.X.size();

    std::vector<Mat4> DF(q);
    for (size_t k = 0; k < q; ++k) DF[k] = map0.apply_with_jacobian(seed.X[k]).second;

    auto bundle = init_hyperbolic_bundle(DF, seed.tangents, opts.power);
    if (!bundle) {
        // negative transverse multiplier: retry on the doubled sequence
        auto dup = [](auto& v) {
            const auto copy = v;
            v.insert(v.end(), copy.begin(), copy.end());
        };
        dup(seed.X);
        dup(seed.tangents);
        dup(DF);
        q *= 2;
        bundle = init_hyperbolic_bundle(DF, seed.tangents, opts.power);
        require(bundle.has_value(), ErrorKind::no_convergence,
                "hyperbolic bundle iteration failed at both q and 2q");
    }

    // make lambda_s, lambda_u constant
    {
        std::vector<Vec4c> vs(q), vu(q);
        for (size_t k = 0; k < q; ++k) {
            vs[k] = bundle->v_s[k].cast<cplx>();
            vu[k] = bundle->v_u[k].cast<cplx>();
        }
        rescale_constant(vs, vu, bundle->lambda_s, bundle->lambda_u);
        for (size_t k = 0; k < q; ++k) {
            bundle->v_s[k] = vs[k].real();
            bundle->v_u[k] = vu[k].real();
        }
    }

    CenterBundle center = init_center_bundle(DF, seed.tangents, *bundle, opts.seq);

    PeriodicOrbitSolution sol;
    sol.eps = 0.0;
    sol.label = label;
    sol.mode = opts.mode;
    sol.tol = opts.seed_residual_tol;
    sol.X = seed.X;
    sol.P.resize(q);
    for (size_t k = 0; k < q; ++k) {
        Mat4 p;
        p.col(0) = seed.tangents[k];
        p.col(1) = center.v2[k];
        p.col(2) = bundle->v_s[k];
        p.col(3) = bundle->v_u[k];
        sol.P[k] = p.cast<cplx>();
    }
    sol.floq.lambda1 = cplx(1.0);
    sol.floq.lambda2 = cplx(1.0);
    sol.floq.T = cplx(center.T);
    sol.floq.lambda_s = bundle->lambda_s;
    sol.floq.lambda_u = bundle->lambda_u;

    const NewtonResidual res = compute_residual(map0, sol);
    sol.norm_E = res.norm_E;
    sol.norm_E_red = res.norm_E_red;
    return sol;
}

}  // namespace spomap
