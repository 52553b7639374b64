#pragma once

// Order-by-order Taylor parameterization of the weak stable/unstable
// manifolds of an SPO inside the NHIM, with fundamental-domain estimation and
// curve sampling.  No globalization: the map is never iterated on manifold
// points; each residual probe applies it exactly once.

#include <vector>

#include "spomap/spo.hpp"

namespace spomap {

enum class Branch { weak_stable, weak_unstable };

struct SeparatrixParameterization {
    ResonanceLabel label;
    Branch branch = Branch::weak_stable;
    double lambda = 0.0;   // internal multiplier (real, |lambda| != 1)
    int degree = 0;
    double alpha = 1.0;    // scale applied to the linear term
    double E_tol = 0.0;    // tolerance used for the fundamental domains

    // W[k][j] is the degree-j coefficient at orbit point k; W[k][0] = X(k).
    std::vector<std::vector<Vec4>> W;
    std::vector<double> D;  // per-k fundamental-domain radii (empty until computed)

    size_t q() const { return W.size(); }

    Vec4 eval(size_t k, double s) const {
        const auto& wk = W[k];
        Vec4 acc = wk.back();
        for (int j = int(wk.size()) - 2; j >= 0; --j) acc = acc * s + wk[size_t(j)];
        return acc;
    }
};

// Order-d coefficient of the invariance defect of the partial parameterization
// (W must hold coefficients 0..d-1).
std::vector<Vec4> order_error(const SymplecticMap& map, const SeparatrixParameterization& W, int d);

struct OrderCorrection {
    std::vector<Vec4> W_d;
    std::vector<Vec4c> V_d;
};

// Solves the four decoupled sequence equations for the order-d coefficients.
// Throws when a denominator |lambda_i * lambda^-d| falls within the resonance
// margin of 1.
OrderCorrection solve_order(const std::vector<Vec4>& E_d, const DiagonalFloquet& diag, double lambda,
                            int d, const SeqSolveConfig& seq = {}, double resonance_margin = 1e-6);

struct SeparatrixOptions {
    int d_max = 20;
    double alpha = 0.0;          // 0 = auto-fit from a preliminary pass
    SeqSolveConfig seq;
    double resonance_margin = 1e-6;
    int prelim_degree = 8;       // degree of the auto-fit preliminary pass
};

SeparatrixParameterization parameterize(const SymplecticMap& map, const PeriodicOrbitSolution& sol,
                                        const DiagonalFloquet& diag, Branch branch,
                                        const SeparatrixOptions& opts = {});

struct DomainOptions {
    double s_max = 10.0;         // bisection bracket ceiling
    double rel_tol = 1e-4;       // bisection stop, relative
    int grid = 64;               // samples per probe interval
};

// Largest per-k radii such that the invariance residual stays below E_tol on
// |s| <= D_k; sets W.D and W.E_tol and returns the radii.
std::vector<double> fundamental_domain(const SymplecticMap& map, SeparatrixParameterization& W,
                                       double E_tol, const DomainOptions& opts = {});

// Infinity-norm invariance residual at a single (k, s).
double invariance_residual(const SymplecticMap& map, const SeparatrixParameterization& W, size_t k,
                           double s);

struct CurveSample {
    size_t k;
    double s;
    Vec4 point;
};

// n_per_k evenly spaced samples of [-D_k, D_k] for each k (n_per_k = 1 gives
// the orbit points themselves).
std::vector<CurveSample> sample_curves(const SeparatrixParameterization& W, int n_per_k);

}  // namespace spomap
