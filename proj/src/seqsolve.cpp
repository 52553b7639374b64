#include "spomap/seqsolve.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spomap {

namespace {

double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

bool constant_coeffs(const SequenceEquation& eq, double tol) {
    for (size_t k = 1; k < eq.q(); ++k)
        if (std::abs(eq.lambda_a[k] - eq.lambda_a[0]) > tol ||
            std::abs(eq.lambda_b[k] - eq.lambda_b[0]) > tol)
            return false;
    return true;
}

}  // namespace

void SequenceEquation::validate() const {
    require(!b.empty(), ErrorKind::argument, "sequence equation is empty");
    require(lambda_a.size() == b.size() && lambda_b.size() == b.size(), ErrorKind::argument,
            "sequence equation length mismatch");
    for (const auto& lb : lambda_b)
        require(std::abs(lb) != 0.0, ErrorKind::argument, "sequence equation needs lambda_b != 0");
}

std::vector<cplx> solve_contracting(const SequenceEquation& eq, const SeqSolveConfig& cfg,
                                    FixedPointStats* stats) {
    eq.validate();
    const size_t q = eq.q();

    double cmin = 1e300, cmax = 0.0;
    for (size_t k = 0; k < q; ++k) {
        const double r = std::abs(eq.lambda_a[k]) / std::abs(eq.lambda_b[k]);
        cmin = std::min(cmin, r);
        cmax = std::max(cmax, r);
    }
    const bool contracting = cmax < 1.0;
    const bool expanding = cmin > 1.0;
    if (!contracting && !expanding) {
        std::ostringstream os;
        os << "mixed regime: |lambda_a/lambda_b| spans [" << cmin << ", " << cmax << "]";
        throw NumericalError(os.str());
    }
    if (expanding)
        for (const auto& la : eq.lambda_a)
            require(std::abs(la) != 0.0, ErrorKind::argument,
                    "expanding regime needs lambda_a != 0");

    std::vector<cplx> u(q, cplx(0.0)), next(q);
    for (long sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        if (contracting) {
            // u(k) <- [la(k-1) u(k-1) - b(k-1)] / lb(k-1)
            for (size_t k = 0; k < q; ++k) {
                const size_t km = (k + q - 1) % q;
                next[k] = (eq.lambda_a[km] * u[km] - eq.b[km]) / eq.lambda_b[km];
            }
        } else {
            // u(k) <- [b(k) + lb(k) u(k+1)] / la(k)
            for (size_t k = 0; k < q; ++k) {
                const size_t kp = (k + 1) % q;
                next[k] = (eq.b[k] + eq.lambda_b[k] * u[kp]) / eq.lambda_a[k];
            }
        }
        double diff = 0.0, unorm = 0.0;
        for (size_t k = 0; k < q; ++k) {
            diff = std::max(diff, std::abs(next[k] - u[k]));
            unorm = std::max(unorm, std::abs(next[k]));
        }
        u.swap(next);
        if (stats) {
            stats->sweep_diffs.push_back(diff);
            stats->sweeps = sweep + 1;
        }
        if (diff < cfg.fixed_point_tol * std::max(1.0, unorm)) return u;
    }
    std::ostringstream os;
    os << "fixed-point iteration did not converge in " << cfg.max_sweeps
       << " sweeps (contraction factor " << (contracting ? cmax : 1.0 / cmin) << ")";
    throw ConvergenceError(os.str());
}

std::vector<cplx> solve_unit_modulus(const SequenceEquation& eq, const SeqSolveConfig& cfg) {
    eq.validate();
    require(constant_coeffs(eq, cfg.constant_tol), ErrorKind::argument,
            "closed-formula solver needs constant lambda_a, lambda_b");
    const size_t q = eq.q();
    const cplx la = eq.lambda_a[0], lb = eq.lambda_b[0];
    require(std::abs(la) != 0.0, ErrorKind::argument, "closed-formula solver needs lambda_a != 0");

    const cplx r = lb / la;
    const cplx rq = std::pow(r, double(q));
    if (std::abs(rq - 1.0) <= cfg.resonance_guard) {
        std::ostringstream os;
        os << "degenerate resonance: (lambda_b/lambda_a)^q = " << rq;
        throw NumericalError(os.str());
    }

    std::vector<cplx> u(q);
    if (std::abs(r) <= 1.0) {
        // u(0) from the geometric sum, remaining entries by the backward
        // recursion u(k) = [b(k) + lb u(k+1)] / la, stable for |lb/la| <= 1.
        cplx acc(0.0), w(1.0);
        for (size_t i = 0; i < q; ++i) {
            acc += w * eq.b[i];
            w *= r;
        }
        u[0] = acc / (la * (1.0 - rq));
        for (size_t k = q - 1; k >= 1; --k) u[k] = (eq.b[k] + lb * u[(k + 1) % q]) / la;
    } else {
        // expand the other direction; forward recursion is then the stable one
        const cplx rho = la / lb;
        cplx acc(0.0), w(1.0);
        for (size_t i = 0; i < q; ++i) {
            acc += w * eq.b[q - 1 - i];
            w *= rho;
        }
        const cplx rhoq = std::pow(rho, double(q));
        u[0] = -acc / (lb * (1.0 - rhoq));
        for (size_t k = 0; k + 1 < q; ++k) u[k + 1] = (la * u[k] - eq.b[k]) / lb;
    }
    return u;
}

std::vector<cplx> solve_cohomological(const std::vector<cplx>& b, double tol_sum) {
    require(!b.empty(), ErrorKind::argument, "cohomological equation is empty");
    const size_t q = b.size();
    cplx sum(0.0);
    for (const auto& x : b) sum += x;
    if (std::abs(sum) >= tol_sum) {
        std::ostringstream os;
        os << "cohomological equation unsolvable: sum b = " << sum << " exceeds tolerance "
           << tol_sum;
        throw NumericalError(os.str());
    }
    std::vector<cplx> u(q, cplx(0.0));
    for (size_t k = 0; k + 1 < q; ++k) u[k + 1] = u[k] - b[k];
    return u;
}

std::vector<cplx> solve_cohomological(const std::vector<cplx>& b) {
    return solve_cohomological(b, 1e-10 * double(b.size()) * std::max(1.0, max_abs(b)));
}

std::vector<cplx> solve_auto(const SequenceEquation& eq, const SeqSolveConfig& cfg) {
    eq.validate();
    const size_t q = eq.q();

    if (constant_coeffs(eq, cfg.constant_tol)) {
        const cplx la = eq.lambda_a[0], lb = eq.lambda_b[0];
        if (la == cplx(1.0) && lb == cplx(1.0)) return solve_cohomological(eq.b);
        return solve_unit_modulus(eq, cfg);
    }

    double cmin = 1e300, cmax = 0.0;
    for (size_t k = 0; k < q; ++k) {
        const double r = std::abs(eq.lambda_a[k]) / std::abs(eq.lambda_b[k]);
        cmin = std::min(cmin, r);
        cmax = std::max(cmax, r);
    }
    if (cmax < 1.0 || cmin > 1.0) return solve_contracting(eq, cfg);
    std::ostringstream os;
    os << "unclassifiable sequence equation: k-dependent coefficients with "
       << "|lambda_a/lambda_b| in [" << cmin << ", " << cmax << "]";
    throw NumericalError(os.str());
}

double sequence_residual(const SequenceEquation& eq, const std::vector<cplx>& u) {
    const size_t q = eq.q();
    double r = 0.0;
    for (size_t k = 0; k < q; ++k)
        r = std::max(r, std::abs(eq.lambda_a[k] * u[k] - eq.lambda_b[k] * u[(k + 1) % q] - eq.b[k]));
    return r;
}

namespace {

// Scales so that a(k) * lambda(k) = a(k+1) * lambda_bar with lambda_bar the
// geometric mean; the log equation is cohomological with zero sum.
void rescale_one(std::vector<double>& lambda, std::vector<double>& a, double& lambda_bar) {
    const size_t q = lambda.size();
    double mean_log = 0.0;
    for (double l : lambda) {
        require(l > 0.0, ErrorKind::argument, "rescale needs positive multipliers");
        mean_log += std::log(l);
    }
    mean_log /= double(q);
    lambda_bar = std::exp(mean_log);

    std::vector<cplx> b(q);
    for (size_t k = 0; k < q; ++k) b[k] = -(std::log(lambda[k]) - mean_log);
    const auto u = solve_cohomological(b, 1e30);  // sum is zero up to roundoff
    a.resize(q);
    for (size_t k = 0; k < q; ++k) {
        a[k] = std::exp(u[k].real());
        lambda[k] = lambda_bar;
    }
}

}  // namespace

RescaleResult rescale_constant(std::vector<Eigen::Vector4cd>& v_s, std::vector<Eigen::Vector4cd>& v_u,
                               std::vector<double>& lambda_s, std::vector<double>& lambda_u) {
    require(v_s.size() == lambda_s.size() && v_u.size() == lambda_u.size() &&
                v_s.size() == v_u.size(),
            ErrorKind::argument, "rescale length mismatch");
    RescaleResult res;
    rescale_one(lambda_s, res.a_s, res.lambda_s_bar);
    rescale_one(lambda_u, res.a_u, res.lambda_u_bar);
    for (size_t k = 0; k < v_s.size(); ++k) {
        v_s[k] *= res.a_s[k];
        v_u[k] *= res.a_u[k];
    }
    return res;
}

}  // namespace spomap
