// Order-by-order Taylor parameterization of weak separatrices, fundamental
// domains by bisection, and curve sampling.

#include <cmath>
#include <sstream>

#include "spomap/separatrix.hpp"

namespace spomap {

namespace {

double inf_norm(const Vec4& v) { return v.cwiseAbs().maxCoeff(); }

// Internal multiplier and frame column for a branch of a diagonalized
// solution; the weak pair must be real hyperbolic.
struct BranchPick {
    double lambda;
    int column;
};

BranchPick pick_branch(const DiagonalFloquet& diag, Branch branch) {
    const cplx l1 = diag.diag[0], l2 = diag.diag[1];
    require(!diag.defective, ErrorKind::argument,
            "separatrix needs a diagonalizable center pair");
    const double im_tol = 1e-8 * std::max({1.0, std::abs(l1), std::abs(l2)});
    require(std::abs(l1.imag()) < im_tol && std::abs(l2.imag()) < im_tol, ErrorKind::argument,
            "center multipliers are elliptic; no separatrix exists");
    const double a1 = std::abs(l1), a2 = std::abs(l2);
    require(std::abs(a1 - 1.0) > 1e-9 && std::abs(a2 - 1.0) > 1e-9, ErrorKind::argument,
            "center multipliers are parabolic (|lambda| = 1); no separatrix exists");
    const bool want_stable = branch == Branch::weak_stable;
    const int col = want_stable == (a1 < a2) ? 0 : 1;
    return {col == 0 ? l1.real() : l2.real(), col};
}

std::vector<Eigen::PartialPivLU<Mat4c>> frame_lus(const DiagonalFloquet& diag) {
    std::vector<Eigen::PartialPivLU<Mat4c>> lus;
    lus.reserve(diag.P.size());
    for (const auto& p : diag.P) lus.emplace_back(p);
    return lus;
}

Vec4 real_checked(const Vec4c& v, const char* what) {
    double scale = 0.0, imag = 0.0;
    for (int i = 0; i < 4; ++i) {
        scale = std::max(scale, std::abs(v[i]));
        imag = std::max(imag, std::abs(v[i].imag()));
    }
    if (imag > 1e-8 * std::max(1.0, scale)) {
        std::ostringstream os;
        os << what << " acquired a non-negligible imaginary part (" << imag << ")";
        throw NumericalError(os.str());
    }
    return v.real();
}

std::vector<Vec4> order_error_impl(const SymplecticMap& map,
                                   const std::vector<std::vector<Vec4>>& W, double lambda, int d) {
    const size_t q = W.size();
    const double lam_d = std::pow(lambda, double(d));
    std::vector<Vec4> E(q);
    for (size_t k = 0; k < q; ++k) {
        SeriesVec v(d);
        const int have = int(W[k].size());  // coefficients 0..have-1
        for (int c = 0; c < 4; ++c)
            for (int j = 0; j < std::min(have, d + 1); ++j) v[c][j] = W[k][size_t(j)][c];
        const SeriesVec img = map.apply_jet(v);
        const size_t kp = (k + 1) % q;
        // order-d coefficient of W(k+1, lambda s); zero while W still has
        // degree d-1, nonzero when re-checking a completed order
        const Vec4 carried = int(W[kp].size()) > d ? Vec4(lam_d * W[kp][size_t(d)]) : Vec4(Vec4::Zero());
        for (int c = 0; c < 4; ++c) E[k][c] = img[c][d] - carried[c];
    }
    return E;
}

}  // namespace

std::vector<Vec4> order_error(const SymplecticMap& map, const SeparatrixParameterization& W, int d) {
    require(d >= 1, ErrorKind::argument, "order_error needs d >= 1");
    for (const auto& wk : W.W)
        require(int(wk.size()) >= d, ErrorKind::argument,
                "order_error needs coefficients through order d-1");
    return order_error_impl(map, W.W, W.lambda, d);
}

OrderCorrection solve_order(const std::vector<Vec4>& E_d, const DiagonalFloquet& diag, double lambda,
                            int d, const SeqSolveConfig& seq, double resonance_margin) {
    require(d >= 2, ErrorKind::argument, "solve_order applies to orders d >= 2");
    const size_t q = E_d.size();
    require(diag.P.size() == q, ErrorKind::argument, "order solve: length mismatch");

    const double lam_d = std::pow(lambda, double(d));
    for (int i = 0; i < 4; ++i) {
        const double ratio = std::abs(diag.diag[i]) / std::abs(lam_d);
        if (std::abs(ratio - 1.0) < resonance_margin) {
            std::ostringstream os;
            os << "resonant separatrix denominator: |lambda_" << (i + 1) << " * lambda^-" << d
               << "| = " << ratio;
            throw NumericalError(os.str());
        }
    }

    const auto lus = frame_lus(diag);
    std::vector<Vec4c> eta(q);
    for (size_t k = 0; k < q; ++k) eta[k] = -lus[(k + 1) % q].solve(E_d[k].cast<cplx>());

    OrderCorrection out;
    out.V_d.assign(q, Vec4c::Zero());
    out.W_d.resize(q);
    for (int i = 0; i < 4; ++i) {
        std::vector<cplx> b(q);
        for (size_t k = 0; k < q; ++k) b[k] = eta[k][i];
        const auto u = solve_auto(SequenceEquation(diag.diag[i], cplx(lam_d), b), seq);
        for (size_t k = 0; k < q; ++k) out.V_d[k][i] = u[k];
    }
    for (size_t k = 0; k < q; ++k)
        out.W_d[k] = real_checked(diag.P[k] * out.V_d[k], "separatrix coefficient");
    return out;
}

namespace {

// Runs the order loop on a prepared first-order parameterization.
void fill_orders(const SymplecticMap& map, SeparatrixParameterization& sep,
                 const DiagonalFloquet& diag, int d_max, const SeparatrixOptions& opts) {
    for (int d = 2; d <= d_max; ++d) {
        const auto E_d = order_error_impl(map, sep.W, sep.lambda, d);
        const auto corr = solve_order(E_d, diag, sep.lambda, d, opts.seq, opts.resonance_margin);
        for (size_t k = 0; k < sep.q(); ++k) sep.W[k].push_back(corr.W_d[k]);
    }
    sep.degree = d_max;
}

}  // namespace

SeparatrixParameterization parameterize(const SymplecticMap& map, const PeriodicOrbitSolution& sol,
                                        const DiagonalFloquet& diag, Branch branch,
                                        const SeparatrixOptions& opts) {
    require(opts.d_max >= 1, ErrorKind::argument, "separatrix degree must be >= 1");
    const size_t q = sol.q();
    require(diag.P.size() == q, ErrorKind::argument, "diagonal frame does not match the solution");
    const BranchPick pick = pick_branch(diag, branch);

    auto build = [&](double alpha, int d_max) {
        SeparatrixParameterization sep;
        sep.label = sol.label;
        sep.branch = branch;
        sep.lambda = pick.lambda;
        sep.alpha = alpha;
        sep.W.resize(q);
        for (size_t k = 0; k < q; ++k) {
            sep.W[k].clear();
            sep.W[k].push_back(sol.X[k]);
            const Vec4 dir = real_checked(Vec4c(diag.P[k].col(pick.column)), "Floquet direction");
            sep.W[k].push_back(alpha * dir);
        }
        fill_orders(map, sep, diag, d_max, opts);
        return sep;
    };

    double alpha = opts.alpha;
    if (alpha == 0.0) {
        // preliminary low-degree pass; fit the coefficient growth rate and
        // aim the rescaled coefficients at O(1) near d_max
        const int dp = std::min(opts.prelim_degree, opts.d_max);
        SeparatrixParameterization prelim = build(1.0, dp);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int n = 0;
        for (int d = 2; d <= dp; ++d) {
            double m = 0.0;
            for (size_t k = 0; k < q; ++k) m = std::max(m, inf_norm(prelim.W[k][size_t(d)]));
            if (m < 1e-300) continue;
            const double lx = double(d), ly = std::log(m);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++n;
        }
        alpha = 1.0;
        if (n >= 2) {
            const double det = double(n) * sxx - sx * sx;
            const double slope = (double(n) * sxy - sx * sy) / det;
            const double icept = (sy * sxx - sx * sxy) / det;
            const double predicted = icept + slope * double(opts.d_max);
            alpha = std::exp(-predicted / double(opts.d_max));
        }
    }
    return build(alpha, opts.d_max);
}

double invariance_residual(const SymplecticMap& map, const SeparatrixParameterization& W, size_t k,
                           double s) {
    const size_t kp = (k + 1) % W.q();
    return inf_norm(map.apply(W.eval(k, s)) - W.eval(kp, W.lambda * s));
}

std::vector<double> fundamental_domain(const SymplecticMap& map, SeparatrixParameterization& W,
                                       double E_tol, const DomainOptions& opts) {
    require(E_tol > 0.0, ErrorKind::argument, "fundamental domain needs E_tol > 0");
    const size_t q = W.q();
    require(q > 0 && W.degree >= 1, ErrorKind::argument, "parameterization is incomplete");

    std::vector<double> D(q);
    for (size_t k = 0; k < q; ++k) {
        if (!(invariance_residual(map, W, k, 0.0) < E_tol))
            throw NumericalError("invariance residual exceeds E_tol already at s = 0; "
                                 "parameterization and tolerance are inconsistent");
        // every point of (a, b] on both signs must stay below tolerance
        auto clean = [&](double a, double b) {
            for (int j = 1; j <= opts.grid; ++j) {
                const double s = a + (b - a) * double(j) / double(opts.grid);
                if (!(invariance_residual(map, W, k, s) < E_tol)) return false;
                if (!(invariance_residual(map, W, k, -s) < E_tol)) return false;
            }
            return true;
        };
        double lo = 0.0, hi = opts.s_max;
        if (clean(0.0, opts.s_max)) {
            D[k] = opts.s_max;  // hit the bracket ceiling
            continue;
        }
        while (hi - lo > opts.rel_tol * std::max(hi, 1e-30)) {
            const double mid = 0.5 * (lo + hi);
            if (clean(lo, mid))
                lo = mid;
            else
                hi = mid;
        }
        D[k] = lo;
    }
    W.D = D;
    W.E_tol = E_tol;
    return D;
}

std::vector<CurveSample> sample_curves(const SeparatrixParameterization& W, int n_per_k) {
    require(n_per_k >= 1, ErrorKind::argument, "sample_curves needs n_per_k >= 1");
    require(W.D.size() == W.q(), ErrorKind::argument,
            "fundamental domains must be computed before sampling");
    std::vector<CurveSample> out;
    out.reserve(W.q() * size_t(n_per_k));
    for (size_t k = 0; k < W.q(); ++k) {
        for (int j = 0; j < n_per_k; ++j) {
            const double s = n_per_k == 1
                                 ? 0.0
                                 : -W.D[k] + 2.0 * W.D[k] * double(j) / double(n_per_k - 1);
            out.push_back({k, s, W.eval(k, s)});
        }
    }
    return out;
}

}  // namespace spomap
