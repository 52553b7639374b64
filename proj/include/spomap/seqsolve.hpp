#pragma once

// Solvers for the cyclic scalar sequence equations
//     lambda_a(k) u(k) - lambda_b(k) u(k+1 mod q) = b(k)
// in their three regimes, plus the rescaling that makes the stable/unstable
// multiplier sequences constant in k.

#include <complex>
#include <vector>

#include <Eigen/Core>

#include "spomap/errors.hpp"

namespace spomap {

using cplx = std::complex<double>;

struct SequenceEquation {
    std::vector<cplx> lambda_a;
    std::vector<cplx> lambda_b;
    std::vector<cplx> b;

    SequenceEquation() = default;
    SequenceEquation(std::vector<cplx> la, std::vector<cplx> lb, std::vector<cplx> rhs)
        : lambda_a(std::move(la)), lambda_b(std::move(lb)), b(std::move(rhs)) {
        validate();
    }
    // Constant-coefficient convenience.
    SequenceEquation(cplx la, cplx lb, std::vector<cplx> rhs)
        : lambda_a(rhs.size(), la), lambda_b(rhs.size(), lb), b(std::move(rhs)) {
        validate();
    }

    size_t q() const { return b.size(); }
    void validate() const;
};

struct SeqSolveConfig {
    double fixed_point_tol = 1e-14;   // successive-iterate stop threshold (relative)
    long max_sweeps = 10'000;
    double unit_modulus_tol = 1e-9;   // |.|=1 classification width in solve_auto
    double constant_tol = 0.0;        // exact-equality classification for constant coefficients
    double resonance_guard = 1e-12;   // |(lb/la)^q - 1| floor for the closed formula
};

// Optional instrumentation for the fixed-point iteration.
struct FixedPointStats {
    std::vector<double> sweep_diffs;  // successive-iterate inf-norm differences
    long sweeps = 0;
};

// Fixed-point iteration for uniformly contracting (|la/lb| < 1 for all k) or
// uniformly expanding (> 1 for all k) equations, started from u = 0.
std::vector<cplx> solve_contracting(const SequenceEquation& eq, const SeqSolveConfig& cfg = {},
                                    FixedPointStats* stats = nullptr);

// Closed formula for constant coefficients with (lb/la)^q != 1: u at one index
// from the finite geometric sum, the rest by the stable-direction recursion.
// Covers in particular the unit-modulus case |la| = |lb| = 1.
std::vector<cplx> solve_unit_modulus(const SequenceEquation& eq, const SeqSolveConfig& cfg = {});

// u(k) - u(k+1 mod q) = b(k) with u(0) = 0.  Solvable when sum b = 0; pass
// tol_sum = infinity to accept nonzero sums (the wraparound relation then
// absorbs the defect).
std::vector<cplx> solve_cohomological(const std::vector<cplx>& b, double tol_sum);
std::vector<cplx> solve_cohomological(const std::vector<cplx>& b);  // default tolerance

// Classifies {uniform contraction, uniform expansion, constant coefficients,
// all-ones} and dispatches; mixed regimes are an error.
std::vector<cplx> solve_auto(const SequenceEquation& eq, const SeqSolveConfig& cfg = {});

// Residual max_k |la(k) u(k) - lb(k) u(k+1) - b(k)| of a candidate solution.
double sequence_residual(const SequenceEquation& eq, const std::vector<cplx>& u);

struct RescaleResult {
    std::vector<double> a_s, a_u;      // positive scale sequences
    double lambda_s_bar = 0, lambda_u_bar = 0;  // geometric means
};

// Rescales columns v_s, v_u so that the stable/unstable multipliers become the
// constants lambda_s_bar, lambda_u_bar; a_s(k)*lambda_s(k) = a_s(k+1)*lambda_s_bar.
RescaleResult rescale_constant(std::vector<Eigen::Vector4cd>& v_s, std::vector<Eigen::Vector4cd>& v_u,
                               std::vector<double>& lambda_s, std::vector<double>& lambda_u);

}  // namespace spomap
