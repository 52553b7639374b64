// Numerical continuation in the perturbation parameter, with bounded step
// halving when a quasi-Newton solve stalls.

#include <sstream>

#include "spomap/spo.hpp"

namespace spomap {

std::vector<PeriodicOrbitSolution> continue_family(const MapFamily& family,
                                                   const PeriodicOrbitSolution& seed, double eps_f,
                                                   int n_steps, const ContinuationOptions& opts) {
    require(n_steps >= 1, ErrorKind::argument, "continuation needs n_steps >= 1");
    require(eps_f >= seed.eps, ErrorKind::argument, "continuation target lies below the seed eps");

    std::vector<PeriodicOrbitSolution> out;
    if (eps_f == seed.eps) {
        out.push_back(seed);
        return out;
    }

    PeriodicOrbitSolution current = seed;
    const double full_step = (eps_f - seed.eps) / double(n_steps);
    double step = full_step;
    int halvings = 0;

    while (current.eps < eps_f) {
        const double target = std::min(current.eps + step, eps_f);
        PeriodicOrbitSolution guess = current;
        guess.eps = target;
        auto map = family(target);
        SolverOptions sopts = opts.solver;
        // off the eps = 0 frame the center multipliers are exactly 1 and their
        // split is meaningless until the first solve converges
        sopts.force_center_cohomological = current.eps == 0.0;
        try {
            PeriodicOrbitSolution solved = quasi_newton_solve(*map, std::move(guess), sopts);
            if (opts.rescale_each_step) rescale_solution(solved);
            current = std::move(solved);
            out.push_back(current);
            halvings = 0;
            step = full_step;
        } catch (const Error& e) {
            // a divergent solve can also surface as an integration failure;
            // both are grounds for halving the step
            if (e.kind() != ErrorKind::no_convergence && e.kind() != ErrorKind::numerical) throw;
            if (++halvings > opts.max_halvings) {
                std::ostringstream os;
                os << "continuation stalled at eps = " << current.eps << " after "
                   << opts.max_halvings << " step halvings (possible fold); last failure: "
                   << e.what();
                throw ConvergenceError(os.str());
            }
            step *= 0.5;
        }
    }
    return out;
}

}  // namespace spomap
