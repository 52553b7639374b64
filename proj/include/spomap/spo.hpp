#pragma once

// Subharmonic periodic orbits of 4D symplectic maps: unperturbed-frame
// initialization, the quasi-Newton X and P/Lambda steps, continuation in the
// perturbation parameter, and final diagonalization of the Floquet data.

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spomap/map.hpp"
#include "spomap/seqsolve.hpp"
#include "spomap/systems.hpp"

namespace spomap {

using Mat4c = Eigen::Matrix4cd;
using Vec4c = Eigen::Vector4cd;

enum class SolveMode {
    perturbed,  // generic perturbative family; lambda_1, lambda_2 leave 1
    flow_map,   // autonomous flow-map family; lambda_1 = lambda_2 = 1 pinned
};

// Multiplier data in the near-diagonal layout: a 2x2 upper-triangular center
// block (lambda_1, T, lambda_2) and diagonal stable/unstable entries.
struct NearDiagonalFloquet {
    cplx lambda1{1.0, 0.0};
    cplx lambda2{1.0, 0.0};
    cplx T{0.0, 0.0};
    std::vector<double> lambda_s;  // length q, positive
    std::vector<double> lambda_u;  // length q, positive

    Mat4c matrix(size_t k) const {
        Mat4c m = Mat4c::Zero();
        m(0, 0) = lambda1;
        m(0, 1) = T;
        m(1, 1) = lambda2;
        m(2, 2) = lambda_s[k];
        m(3, 3) = lambda_u[k];
        return m;
    }
};

enum class PairClass { hyperbolic, elliptic, parabolic };

struct PeriodicOrbitSolution {
    double eps = 0.0;
    ResonanceLabel label;
    SolveMode mode = SolveMode::perturbed;

    std::vector<Vec4> X;    // orbit points, length q
    std::vector<Mat4c> P;   // Floquet frames, length q
    NearDiagonalFloquet floq;

    double tol = 0.0;       // tolerance the solution was accepted at
    double norm_E = 0.0;
    double norm_E_red = 0.0;
    std::vector<std::pair<double, double>> history;  // per-iteration (|E|, |E_red|)

    size_t q() const { return X.size(); }

    // Elliptic when |Im lambda_1| > 1e-8 and ||lambda_1| - 1| < 1e-6; recorded
    // for reporting only, the algorithm never branches on it.
    PairClass classify_center_pair() const;
};

struct NewtonResidual {
    std::vector<Vec4> E;       // F(X(k)) - X(k+1 mod q)
    std::vector<Mat4c> E_red;  // P(k+1)^-1 DF(X(k)) P(k) - Lambda(k)
    double norm_E = 0.0;       // sup over k of entrywise inf-norms
    double norm_E_red = 0.0;
};

// ---- unperturbed initialization ----

struct SeedResult {
    std::vector<Vec4> X;         // X(k) = flow(x0, k*T_p)
    std::vector<Vec4> tangents;  // flow vectors standing in for DK_0(theta_k)
    double residual = 0.0;       // invariance defect of X under the map
};

// Walks the flow-periodic orbit through x0 in mapping-time increments.  The
// orbit period must satisfy T_p/T = p/q; the invariance residual is checked
// against max_residual.
SeedResult seed_unperturbed(const StroboscopicMap& map0, const Vec4& x0, const ResonanceLabel& label,
                            double max_residual = 1e-8);

struct PowerIterConfig {
    double tol = 1e-13;        // max_k (1 - |<v_i, v_{i+1}>|) threshold
    long max_sweeps = 500;
    double tangent_guard = 1e-6;  // restart margin against NHIM-tangent collision
};

struct HyperbolicBundle {
    std::vector<Vec4> v_s, v_u;          // unit eigenvector sequences
    std::vector<double> lambda_s, lambda_u;  // positive multipliers
};

// Power iteration around the cycle for the stable/unstable bundle.  Returns
// nullopt when the iteration fails to converge, which signals a negative
// multiplier: the caller retries on the doubled (length-2q) sequence.
std::optional<HyperbolicBundle> init_hyperbolic_bundle(const std::vector<Mat4>& DF,
                                                       const std::vector<Vec4>& tangents,
                                                       const PowerIterConfig& cfg = {});

struct InitCenterWorkspace {
    std::vector<double> A, B, C, D;  // expansion coefficients of Eq. (abcd)
    std::vector<double> f1, f2;
    std::vector<Vec4> v_c;
    std::vector<double> a;
};

struct CenterBundle {
    std::vector<Vec4> v2;  // frame column 2
    double T = 0.0;        // shear entry, the mean of A(k)
    InitCenterWorkspace work;
};

// Builds frame column 2 and the shear T from the tangent columns and the
// rescaled hyperbolic bundle; enforces B(k) = 1.
CenterBundle init_center_bundle(const std::vector<Mat4>& DF, const std::vector<Vec4>& tangents,
                                const HyperbolicBundle& bundle, const SeqSolveConfig& seq = {});

struct InitOptions {
    double seed_residual_tol = 1e-8;
    PowerIterConfig power;
    SeqSolveConfig seq;
    SolveMode mode = SolveMode::perturbed;
};

// Full eps = 0 initialization: seed, hyperbolic bundle (with automatic 2q
// doubling on non-convergence), rescale, center bundle, assembled solution.
PeriodicOrbitSolution initialize_unperturbed(const StroboscopicMap& map0, const Vec4& x0,
                                             const ResonanceLabel& label, const InitOptions& opts = {});

// ---- quasi-Newton machinery ----

NewtonResidual compute_residual(const SymplecticMap& map, const PeriodicOrbitSolution& sol);

struct SolverOptions {
    double tol = 1e-7;
    long max_iter = 30;
    SolveMode mode = SolveMode::perturbed;
    SeqSolveConfig seq;
    double min_shear = 1e-12;  // |T| floor for the all-ones xi_2 shift
    // Keep the center-pair equations on the cohomological branch for the whole
    // solve.  Continuation enables this on the first step away from eps = 0,
    // where the multiplier split is not yet trustworthy.
    bool force_center_cohomological = false;
    // A correction this large means the solve left its basin; bail out before
    // feeding absurd states to the integrator.
    double divergence_guard = 1e3;
    // Damping: X corrections longer than this are scaled back to it.  Near a
    // center-pair stability transition the soft-mode equations amplify by
    // 1/|lambda^q - 1|^2 and undamped steps overshoot the Newton basin.
    double max_x_step = 0.02;
};

// Correction pieces, exposed for tests; quasi_newton_solve drives them.
struct XStepInput {
    const std::vector<Vec4>* E;         // residual at the current X
    const std::vector<Mat4c>* P_inv;    // P(k)^-1, length q
};
void x_step(PeriodicOrbitSolution& sol, const XStepInput& in, const SolverOptions& opts);

struct PStepResult {
    std::vector<Mat4c> P_c;
    cplx lambda1_c, lambda2_c, T_c, delta_S;
    std::vector<double> lambda_s_c, lambda_u_c;
};
PStepResult p_step(const PeriodicOrbitSolution& sol, const std::vector<Mat4c>& E_red,
                   const SolverOptions& opts);

// Returns the 2x2-block Schur transform of the corrected multipliers to the
// near-diagonal layout, updating sol.P and sol.floq.
void schur_normalize(PeriodicOrbitSolution& sol, const PStepResult& step);

PeriodicOrbitSolution quasi_newton_solve(const SymplecticMap& map, PeriodicOrbitSolution initial,
                                         const SolverOptions& opts);

struct ContinuationOptions {
    SolverOptions solver;
    int max_halvings = 4;
    bool rescale_each_step = true;
};

// Steps eps from the seed solution's value to eps_f in n_steps increments,
// halving the step (up to max_halvings) when a solve fails to converge.
std::vector<PeriodicOrbitSolution> continue_family(const MapFamily& family,
                                                   const PeriodicOrbitSolution& seed, double eps_f,
                                                   int n_steps, const ContinuationOptions& opts);

// Applies the constant-multiplier rescale to a solution in place.
void rescale_solution(PeriodicOrbitSolution& sol);

// ---- diagonalization ----

struct DiagonalFloquet {
    Vec4c diag;                 // lambda_1, lambda_2, lambda_s_bar, lambda_u_bar
    std::vector<Mat4c> P;       // P_bar(k) = P(k) V_D
    Mat4c V_D;
    bool defective = false;     // |lambda_1 - lambda_2| under the defect threshold
};

DiagonalFloquet diagonalize_floquet(const PeriodicOrbitSolution& sol);

}  // namespace spomap
