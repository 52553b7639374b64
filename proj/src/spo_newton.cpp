// The quasi-Newton correction: X-step through the near-diagonal sequence
// equations, P/Lambda-step through the sixteen block equations, and the 2x2
// Schur transform restoring the near-diagonal multiplier layout.

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spomap/spo.hpp"

namespace spomap {

namespace {

double inf_norm(const Vec4& v) { return v.cwiseAbs().maxCoeff(); }

double inf_norm_entrywise(const Mat4c& m) {
    double r = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) r = std::max(r, std::abs(m(i, j)));
    return r;
}

bool all_ones_center(const NearDiagonalFloquet& f) {
    return f.lambda1 == cplx(1.0) && f.lambda2 == cplx(1.0);
}

std::vector<cplx> seq_of(const std::vector<Vec4c>& v, int i) {
    std::vector<cplx> s(v.size());
    for (size_t k = 0; k < v.size(); ++k) s[k] = v[k][i];
    return s;
}

// lambda_a u(k) - lambda_b(k) u(k+1) = b(k) with possibly k-dependent sides,
// routed through the all-ones cohomological branch when both sides are 1.
std::vector<cplx> solve_block(const std::vector<cplx>& la, const std::vector<cplx>& lb,
                              const std::vector<cplx>& b, bool force_cohomological,
                              const SeqSolveConfig& seq) {
    if (force_cohomological) return solve_cohomological(b, 1e300);
    return solve_auto(SequenceEquation(la, lb, b), seq);
}

std::vector<cplx> const_seq(cplx v, size_t q) { return std::vector<cplx>(q, v); }

}  // namespace

NewtonResidual compute_residual(const SymplecticMap& map, const PeriodicOrbitSolution& sol) {
    const size_t q = sol.q();
    require(q > 0 && sol.P.size() == q, ErrorKind::argument, "solution is empty or inconsistent");
    NewtonResidual res;
    res.E.resize(q);
    res.E_red.resize(q);
    for (size_t k = 0; k < q; ++k) {
        const size_t kp = (k + 1) % q;
        auto [fx, dfx] = map.apply_with_jacobian(sol.X[k]);
        res.E[k] = fx - sol.X[kp];
        const Mat4c pinv = sol.P[kp].partialPivLu().inverse();
        res.E_red[k] = pinv * dfx.cast<cplx>() * sol.P[k] - sol.floq.matrix(k);
        res.norm_E = std::max(res.norm_E, inf_norm(res.E[k]));
        res.norm_E_red = std::max(res.norm_E_red, inf_norm_entrywise(res.E_red[k]));
    }
    return res;
}

void x_step(PeriodicOrbitSolution& sol, const XStepInput& in, const SolverOptions& opts) {
    const size_t q = sol.q();
    const auto& E = *in.E;
    const auto& P_inv = *in.P_inv;
    const auto& f = sol.floq;

    std::vector<Vec4c> eta(q);
    for (size_t k = 0; k < q; ++k) eta[k] = -(P_inv[(k + 1) % q] * E[k].cast<cplx>());

    const bool ones = opts.mode == SolveMode::flow_map || opts.force_center_cohomological ||
                      all_ones_center(f);
    const std::vector<cplx> eta1 = seq_of(eta, 0), eta2 = seq_of(eta, 1), eta3 = seq_of(eta, 2),
                            eta4 = seq_of(eta, 3);

    std::vector<cplx> xi1, xi2;
    if (ones) {
        // cohomological branch, accepted with nonzero sums; the constant shift
        // on xi_2 zeroes the xi_1 right-hand-side sum
        std::vector<cplx> xi2bar = solve_cohomological(eta2, 1e300);
        require(std::abs(f.T) > opts.min_shear, ErrorKind::numerical,
                "x-step: shear T is numerically zero, cannot shift xi_2");
        cplx shift(0.0);
        for (size_t k = 0; k < q; ++k) shift += eta1[k] - f.T * xi2bar[k];
        shift /= (double(q) * f.T);
        xi2 = std::move(xi2bar);
        for (auto& v : xi2) v += shift;
        std::vector<cplx> rhs1(q);
        for (size_t k = 0; k < q; ++k) rhs1[k] = eta1[k] - f.T * xi2[k];
        xi1 = solve_cohomological(rhs1, 1e300);
    } else {
        xi2 = solve_auto(SequenceEquation(f.lambda2, cplx(1.0), eta2), opts.seq);
        std::vector<cplx> rhs1(q);
        for (size_t k = 0; k < q; ++k) rhs1[k] = eta1[k] - f.T * xi2[k];
        xi1 = solve_auto(SequenceEquation(f.lambda1, cplx(1.0), rhs1), opts.seq);
    }

    std::vector<cplx> ls(q), lu(q);
    for (size_t k = 0; k < q; ++k) {
        ls[k] = f.lambda_s[k];
        lu[k] = f.lambda_u[k];
    }
    const std::vector<cplx> xi3 = solve_auto(SequenceEquation(ls, const_seq(cplx(1.0), q), eta3),
                                             opts.seq);
    const std::vector<cplx> xi4 = solve_auto(SequenceEquation(lu, const_seq(cplx(1.0), q), eta4),
                                             opts.seq);

    std::vector<Vec4> dX(q);
    double longest = 0.0;
    for (size_t k = 0; k < q; ++k) {
        const Vec4c xi(xi1[k], xi2[k], xi3[k], xi4[k]);
        dX[k] = (sol.P[k] * xi).real();
        longest = std::max(longest, dX[k].cwiseAbs().maxCoeff());
    }
    const double damp = longest > opts.max_x_step ? opts.max_x_step / longest : 1.0;
    for (size_t k = 0; k < q; ++k) sol.X[k] += damp * dX[k];
}

PStepResult p_step(const PeriodicOrbitSolution& sol, const std::vector<Mat4c>& E_red,
                   const SolverOptions& opts) {
    const size_t q = sol.q();
    const auto& f = sol.floq;
    const bool flow_map = opts.mode == SolveMode::flow_map;
    const bool ones = flow_map || opts.force_center_cohomological || all_ones_center(f);

    auto block = [&](int i, int j) {
        std::vector<cplx> s(q);
        for (size_t k = 0; k < q; ++k) s[k] = E_red[k](i, j);
        return s;
    };
    auto shifted = [&](const std::vector<cplx>& s) {
        std::vector<cplx> r(q);
        for (size_t k = 0; k < q; ++k) r[k] = s[(k + 1) % q];
        return r;
    };
    auto negated = [&](const std::vector<cplx>& s) {
        std::vector<cplx> r(q);
        for (size_t k = 0; k < q; ++k) r[k] = -s[k];
        return r;
    };
    auto mean = [&](const std::vector<cplx>& s) {
        cplx m(0.0);
        for (const auto& v : s) m += v;
        return m / double(q);
    };

    const std::vector<cplx> l1 = const_seq(f.lambda1, q), l2 = const_seq(f.lambda2, q),
                            one = const_seq(cplx(1.0), q);
    std::vector<cplx> ls(q), lu(q);
    for (size_t k = 0; k < q; ++k) {
        ls[k] = f.lambda_s[k];
        lu[k] = f.lambda_u[k];
    }

    // Blocks free of the shear coupling first.
    const auto Q_CS = solve_auto(SequenceEquation(l2, ls, negated(block(1, 2))), opts.seq);
    const auto Q_CU = solve_auto(SequenceEquation(l2, lu, negated(block(1, 3))), opts.seq);
    const auto Q_SL = solve_auto(SequenceEquation(ls, l1, negated(block(2, 0))), opts.seq);
    const auto Q_SU = solve_auto(SequenceEquation(ls, lu, negated(block(2, 3))), opts.seq);
    const auto Q_UL = solve_auto(SequenceEquation(lu, l1, negated(block(3, 0))), opts.seq);
    const auto Q_US = solve_auto(SequenceEquation(lu, ls, negated(block(3, 2))), opts.seq);

    // Back-substitution of the shear terms.
    std::vector<cplx> rhs(q);
    const auto E_LS = block(0, 2);
    for (size_t k = 0; k < q; ++k) rhs[k] = -E_LS[k] - f.T * Q_CS[k];
    const auto Q_LS = solve_auto(SequenceEquation(l1, ls, rhs), opts.seq);

    const auto E_LU = block(0, 3);
    for (size_t k = 0; k < q; ++k) rhs[k] = -E_LU[k] - f.T * Q_CU[k];
    const auto Q_LU = solve_auto(SequenceEquation(l1, lu, rhs), opts.seq);

    const auto E_SC = block(2, 1);
    const auto Q_SLp = shifted(Q_SL);
    for (size_t k = 0; k < q; ++k) rhs[k] = -E_SC[k] + f.T * Q_SLp[k];
    const auto Q_SC = solve_auto(SequenceEquation(ls, l2, rhs), opts.seq);

    const auto E_UC = block(3, 1);
    const auto Q_ULp = shifted(Q_UL);
    for (size_t k = 0; k < q; ++k) rhs[k] = -E_UC[k] + f.T * Q_ULp[k];
    const auto Q_UC = solve_auto(SequenceEquation(lu, l2, rhs), opts.seq);

    // Center-block equations.  Delta S is the E_CL average in perturbed mode
    // and pinned to zero in flow-map mode.
    const auto E_CL = block(1, 0);
    const cplx dS = flow_map ? cplx(0.0) : mean(E_CL);
    for (size_t k = 0; k < q; ++k) rhs[k] = dS - E_CL[k];
    const auto Q_CL = solve_block(l2, l1, rhs, ones, opts.seq);

    const auto E_LL = block(0, 0);
    cplx dl1(0.0);
    if (!flow_map) {
        for (size_t k = 0; k < q; ++k) dl1 += E_LL[k] + f.T * Q_CL[k];
        dl1 /= double(q);
    }
    for (size_t k = 0; k < q; ++k) rhs[k] = (dl1 - E_LL[k] - f.T * Q_CL[k]) / f.lambda1;
    const auto Q_LL = solve_cohomological(rhs, 1e300);

    const auto E_CC = block(1, 1);
    const auto Q_CLp = shifted(Q_CL);
    cplx dl2(0.0);
    if (!flow_map) {
        for (size_t k = 0; k < q; ++k) dl2 += E_CC[k] - f.T * Q_CLp[k];
        dl2 /= double(q);
    }
    for (size_t k = 0; k < q; ++k) rhs[k] = (dl2 - E_CC[k] + f.T * Q_CLp[k]) / f.lambda2;
    const auto Q_CC = solve_cohomological(rhs, 1e300);

    const auto E_LC = block(0, 1);
    const auto Q_LLp = shifted(Q_LL);
    cplx dT(0.0);
    for (size_t k = 0; k < q; ++k) dT += E_LC[k] + f.T * Q_CC[k] - f.T * Q_LLp[k];
    dT /= double(q);
    for (size_t k = 0; k < q; ++k) rhs[k] = dT - E_LC[k] - f.T * Q_CC[k] + f.T * Q_LLp[k];
    const auto Q_LC = solve_block(l1, l2, rhs, ones, opts.seq);

    // Q_SS = Q_UU = 0; the diagonal errors feed the multipliers directly.
    PStepResult out;
    out.P_c.resize(q);
    out.lambda_s_c.resize(q);
    out.lambda_u_c.resize(q);
    for (size_t k = 0; k < q; ++k) {
        Mat4c Q;
        Q << Q_LL[k], Q_LC[k], Q_LS[k], Q_LU[k],
             Q_CL[k], Q_CC[k], Q_CS[k], Q_CU[k],
             Q_SL[k], Q_SC[k], cplx(0.0), Q_SU[k],
             Q_UL[k], Q_UC[k], Q_US[k], cplx(0.0);
        out.P_c[k] = sol.P[k] * (Mat4c::Identity() + Q);

        const double dls = E_red[k](2, 2).real();
        const double dlu = E_red[k](3, 3).real();
        out.lambda_s_c[k] = f.lambda_s[k] + dls;
        out.lambda_u_c[k] = f.lambda_u[k] + dlu;
        require(out.lambda_s_c[k] > 0.0 && out.lambda_u_c[k] > 0.0, ErrorKind::numerical,
                "p-step drove a transverse multiplier non-positive");
    }
    out.lambda1_c = f.lambda1 + dl1;
    out.lambda2_c = f.lambda2 + dl2;
    out.T_c = f.T + dT;
    out.delta_S = dS;
    return out;
}

void schur_normalize(PeriodicOrbitSolution& sol, const PStepResult& step) {
    const size_t q = sol.q();
    sol.floq.lambda_s = step.lambda_s_c;
    sol.floq.lambda_u = step.lambda_u_c;

    if (step.delta_S == cplx(0.0)) {
        // already near-diagonal
        sol.P = step.P_c;
        sol.floq.lambda1 = step.lambda1_c;
        sol.floq.lambda2 = step.lambda2_c;
        sol.floq.T = step.T_c;
        return;
    }

    Eigen::Matrix2cd A;
    A << step.lambda1_c, step.T_c, step.delta_S, step.lambda2_c;
    Eigen::ComplexSchur<Eigen::Matrix2cd> schur(A);
    require(schur.info() == Eigen::Success, ErrorKind::numerical, "2x2 Schur failed");
    Eigen::Matrix2cd U = schur.matrixT();   // upper triangular
    Eigen::Matrix2cd V1 = schur.matrixU();  // unitary

    // Keep the eigenvalue ordering continuous with the previous iterate;
    // otherwise successive corrections can swap the center columns back and
    // forth and the iteration cycles instead of converging.
    const cplx a = U(0, 0), b = U(1, 1);
    const double keep = std::abs(a - sol.floq.lambda1) + std::abs(b - sol.floq.lambda2);
    const double swap = std::abs(b - sol.floq.lambda1) + std::abs(a - sol.floq.lambda2);
    if (swap < keep) {
        // unitary similarity moving eigenvalue b to the leading position
        Eigen::Vector2cd v(U(0, 1), b - a);
        const double n = v.norm();
        if (n > 0.0) {
            v /= n;
            Eigen::Matrix2cd Z;
            Z << v(0), -std::conj(v(1)),
                 v(1), std::conj(v(0));
            U = (Z.adjoint() * U * Z).eval();
            U(1, 0) = cplx(0.0);  // triangular by construction, kill roundoff
            V1 = (V1 * Z).eval();
        }
    }

    Mat4c V = Mat4c::Identity();
    V.block<2, 2>(0, 0) = V1;
    sol.P.resize(q);
    for (size_t k = 0; k < q; ++k) sol.P[k] = step.P_c[k] * V;
    sol.floq.lambda1 = U(0, 0);
    sol.floq.lambda2 = U(1, 1);
    sol.floq.T = U(0, 1);
}

PeriodicOrbitSolution quasi_newton_solve(const SymplecticMap& map, PeriodicOrbitSolution sol,
                                         const SolverOptions& opts) {
    const size_t q = sol.q();
    require(q > 0, ErrorKind::argument, "empty initial solution");
    sol.mode = opts.mode;
    sol.history.clear();

    std::vector<Vec4> FX(q);
    std::vector<Mat4> DF(q);
    std::vector<Mat4c> P_inv(q);
    std::vector<Vec4> E(q);
    std::vector<Mat4c> E_red(q);

    auto refresh_map = [&]() {
        for (size_t k = 0; k < q; ++k) {
            auto [fx, dfx] = map.apply_with_jacobian(sol.X[k]);
            FX[k] = fx;
            DF[k] = dfx;
        }
    };
    auto refresh_pinv = [&]() {
        for (size_t k = 0; k < q; ++k) P_inv[k] = sol.P[k].partialPivLu().inverse();
    };
    auto residuals = [&]() {
        double nE = 0.0, nR = 0.0;
        for (size_t k = 0; k < q; ++k) {
            const size_t kp = (k + 1) % q;
            E[k] = FX[k] - sol.X[kp];
            E_red[k] = P_inv[kp] * DF[k].cast<cplx>() * sol.P[k] - sol.floq.matrix(k);
            nE = std::max(nE, inf_norm(E[k]));
            nR = std::max(nR, inf_norm_entrywise(E_red[k]));
        }
        return std::pair{nE, nR};
    };

    refresh_map();
    refresh_pinv();
    for (long iter = 0; iter <= opts.max_iter; ++iter) {
        auto [nE, nR] = residuals();
        sol.history.emplace_back(nE, nR);
        if (std::max(nE, nR) < opts.tol) {
            sol.norm_E = nE;
            sol.norm_E_red = nR;
            sol.tol = opts.tol;
            return sol;
        }
        if (iter == opts.max_iter) break;

        XStepInput xin{&E, &P_inv};
        const auto X_before = sol.X;
        x_step(sol, xin, opts);
        for (size_t k = 0; k < q; ++k) {
            const double dx = (sol.X[k] - X_before[k]).cwiseAbs().maxCoeff();
            if (!(dx < opts.divergence_guard) || !sol.X[k].allFinite()) {
                std::ostringstream os;
                os << "quasi-Newton diverged at eps = " << sol.eps << ": correction of size "
                   << dx << " at k = " << k;
                throw ConvergenceError(os.str());
            }
        }

        refresh_map();  // DF at the corrected points
        for (size_t k = 0; k < q; ++k) {
            const size_t kp = (k + 1) % q;
            E_red[k] = P_inv[kp] * DF[k].cast<cplx>() * sol.P[k] - sol.floq.matrix(k);
        }
        PStepResult ps = p_step(sol, E_red, opts);
        schur_normalize(sol, ps);
        refresh_pinv();
    }

    std::ostringstream os;
    os << "quasi-Newton did not reach tol " << opts.tol << " in " << opts.max_iter
       << " iterations at eps = " << sol.eps << "; residual history:";
    for (auto& [a, b] : sol.history) os << " (" << a << ", " << b << ")";
    throw ConvergenceError(os.str());
}

void rescale_solution(PeriodicOrbitSolution& sol) {
    const size_t q = sol.q();
    std::vector<Vec4c> vs(q), vu(q);
    for (size_t k = 0; k < q; ++k) {
        vs[k] = sol.P[k].col(2);
        vu[k] = sol.P[k].col(3);
    }
    rescale_constant(vs, vu, sol.floq.lambda_s, sol.floq.lambda_u);
    for (size_t k = 0; k < q; ++k) {
        sol.P[k].col(2) = vs[k];
        sol.P[k].col(3) = vu[k];
    }
}

DiagonalFloquet diagonalize_floquet(const PeriodicOrbitSolution& sol) {
    const size_t q = sol.q();
    const auto& f = sol.floq;
    for (size_t k = 0; k < q; ++k) {
        require(std::abs(f.lambda_s[k] - f.lambda_s[0]) <= 1e-10 * std::max(1.0, f.lambda_s[0]) &&
                    std::abs(f.lambda_u[k] - f.lambda_u[0]) <= 1e-10 * std::max(1.0, f.lambda_u[0]),
                ErrorKind::argument, "diagonalize needs k-independent multipliers (rescale first)");
    }

    DiagonalFloquet out;
    out.diag = Vec4c(f.lambda1, f.lambda2, cplx(f.lambda_s[0]), cplx(f.lambda_u[0]));
    out.V_D = Mat4c::Identity();
    out.P = sol.P;

    const cplx gap = f.lambda2 - f.lambda1;
    if (std::abs(gap) < 1e-10 * std::max(1.0, std::abs(f.lambda1))) {
        out.defective = true;  // keep the triangular form
        return out;
    }
    if (f.T != cplx(0.0)) {
        out.V_D(0, 1) = f.T / gap;
        for (size_t k = 0; k < q; ++k) out.P[k] = sol.P[k] * out.V_D;
    }
    return out;
}

}  // namespace spomap
