// Implementations behind the CLI subcommands: seed, continue, separatrix,
// validate.

#include <cmath>
#include <cstdio>
#include <sstream>

#include "spomap/io.hpp"
#include "spomap/orbits.hpp"

namespace spomap {

namespace {

std::shared_ptr<const StroboscopicMap> make_map(const RunConfig& cfg, double eps) {
    auto family = cfg.make_family();
    auto map = std::dynamic_pointer_cast<const StroboscopicMap>(family(eps));
    require(map != nullptr, ErrorKind::numerical, "map family did not produce a stroboscopic map");
    return map;
}

Vec4 refined_seed(const RunConfig& cfg, const StroboscopicMap& map0) {
    if (!cfg.refine_seed) return cfg.seed;
    const double period = map0.mapping_time() * double(cfg.label.q) / double(cfg.label.p);
    if (cfg.system_kind == "forced_pendulum") {
        // seed at the symmetric phase: the y = 0 crossing with py = 2 sin(amp/2)
        const double amp = pendulum_amplitude_for_period(period);
        return Vec4(0.0, 0.0, 0.0, 2.0 * std::sin(0.5 * amp));
    }
    SymmetricOrbitGuess guess{cfg.seed[0], cfg.seed[3]};
    return find_symmetric_orbit(map0.system(), period, guess, cfg.integrator);
}

std::string step_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "orbit_step_%04d.json", index);
    return buf;
}

}  // namespace

std::filesystem::path cmd_seed(const RunConfig& cfg) {
    auto map0 = make_map(cfg, 0.0);
    const Vec4 x0 = refined_seed(cfg, *map0);

    InitOptions opts;
    opts.mode = cfg.mode;
    PeriodicOrbitSolution sol = initialize_unperturbed(*map0, x0, cfg.label, opts);

    std::filesystem::create_directories(cfg.output_dir);
    const auto path = std::filesystem::path(cfg.output_dir) / "seed.json";
    save_solution(path, sol, cfg);
    return path;
}

std::filesystem::path cmd_continue(const RunConfig& cfg, const std::filesystem::path& seed_file) {
    PeriodicOrbitSolution seed = load_solution(seed_file);
    require(seed.label.p == cfg.label.p && seed.label.q == cfg.label.q, ErrorKind::config,
            "config: label does not match the seed file");

    ContinuationOptions opts;
    opts.solver.tol = cfg.tol;
    opts.solver.mode = cfg.mode;
    opts.max_halvings = cfg.max_halvings;

    const auto sols = continue_family(cfg.make_family(), seed, cfg.eps_f, cfg.n_steps, opts);

    std::filesystem::create_directories(cfg.output_dir);
    std::filesystem::path last;
    int idx = 0;
    for (const auto& s : sols) {
        last = std::filesystem::path(cfg.output_dir) / step_file_name(++idx);
        save_solution(last, s, cfg);
    }
    const auto final_path = std::filesystem::path(cfg.output_dir) / "orbit_final.json";
    save_solution(final_path, sols.back(), cfg);
    return final_path;
}

std::vector<std::filesystem::path> cmd_separatrix(const RunConfig& cfg,
                                                  const std::filesystem::path& solution_file) {
    PeriodicOrbitSolution sol = load_solution(solution_file);
    auto map = make_map(cfg, sol.eps);

    rescale_solution(sol);
    const DiagonalFloquet diag = diagonalize_floquet(sol);

    SeparatrixOptions sopts;
    sopts.d_max = cfg.sep_degree;
    sopts.alpha = cfg.sep_alpha;

    std::filesystem::create_directories(cfg.output_dir);
    std::vector<std::filesystem::path> written;
    for (Branch branch : {Branch::weak_stable, Branch::weak_unstable}) {
        SeparatrixParameterization sep = parameterize(*map, sol, diag, branch, sopts);
        fundamental_domain(*map, sep, cfg.sep_e_tol);
        const auto samples = sample_curves(sep, cfg.sep_samples);
        const char* tag = branch == Branch::weak_stable ? "stable" : "unstable";
        const auto jpath =
            std::filesystem::path(cfg.output_dir) / (std::string("separatrix_") + tag + ".json");
        const auto cpath =
            std::filesystem::path(cfg.output_dir) / (std::string("separatrix_") + tag + ".csv");
        save_separatrix(jpath, sep, cfg);
        write_curves_csv(cpath, sep, samples, cfg);
        written.push_back(jpath);
        written.push_back(cpath);
    }
    return written;
}

ValidationReport cmd_validate(const std::filesystem::path& solution_file) {
    RunConfig cfg;
    PeriodicOrbitSolution sol = load_solution(solution_file, &cfg);
    require(!cfg.system_kind.empty(), ErrorKind::io,
            "solution file carries no embedded config; cannot rebuild the map");
    auto map = make_map(cfg, sol.eps);
    const size_t q = sol.q();

    ValidationReport rep;
    std::ostringstream os;
    auto check = [&](const char* name, bool ok, double value, double bound) {
        os << (ok ? "PASS" : "FAIL") << "  " << name << ": " << value << " (bound " << bound
           << ")\n";
        rep.ok = rep.ok && ok;
    };

    const double tol = sol.tol > 0.0 ? sol.tol : 1e-7;
    const NewtonResidual res = compute_residual(*map, sol);
    check("invariance residual |E|", res.norm_E < tol, res.norm_E, tol);
    check("bundle residual |E_red|", res.norm_E_red < tol, res.norm_E_red, tol);

    // multiplier identities from the symplectic determinant
    double prod_s = 1.0, prod_u = 1.0;
    for (size_t k = 0; k < q; ++k) {
        prod_s *= sol.floq.lambda_s[k];
        prod_u *= sol.floq.lambda_u[k];
    }
    const double dev_su = std::abs(prod_s * prod_u - 1.0);
    check("|prod lambda_s * prod lambda_u - 1|", dev_su < 1e-6, dev_su, 1e-6);
    const double qd = double(q);
    const cplx full = std::pow(sol.floq.lambda1, qd) * std::pow(sol.floq.lambda2, qd) *
                      cplx(prod_s * prod_u);
    const double dev_full = std::abs(full - cplx(1.0));
    check("|lambda1^q lambda2^q prod_s prod_u - 1|", dev_full < 1e-5, dev_full, 1e-5);

    // map symplecticity at every orbit point
    Mat4 J = Mat4::Zero();
    J(0, 2) = J(1, 3) = 1.0;
    J(2, 0) = J(3, 1) = -1.0;
    double symp = 0.0;
    std::vector<Mat4> DF(q);
    for (size_t k = 0; k < q; ++k) {
        DF[k] = map->apply_with_jacobian(sol.X[k]).second;
        symp = std::max(symp, (DF[k].transpose() * J * DF[k] - J).cwiseAbs().maxCoeff());
    }
    check("max |DF^T J DF - J|", symp < 1e-9, symp, 1e-9);

    // q-fold bundle consistency: prod DF maps P(0) to P(0) prod Lambda
    Mat4c lhs = sol.P[0];
    for (size_t k = 0; k < q; ++k) lhs = DF[k].cast<cplx>() * lhs;
    Mat4c lam_prod = Mat4c::Identity();
    for (size_t k = 0; k < q; ++k) lam_prod = sol.floq.matrix(k) * lam_prod;
    const Mat4c rhs = sol.P[0] * lam_prod;
    double scale = 0.0, diff = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            scale = std::max(scale, std::abs(lhs(i, j)));
            diff = std::max(diff, std::abs(lhs(i, j) - rhs(i, j)));
        }
    const double rel = diff / std::max(scale, 1e-300);
    check("q-fold monodromy vs P(0) prod Lambda (relative)", rel < 10.0 * tol, rel, 10.0 * tol);

    switch (sol.classify_center_pair()) {
        case PairClass::elliptic:
            os << "INFO  center pair: elliptic (|lambda_1| = " << std::abs(sol.floq.lambda1)
               << ")\n";
            break;
        case PairClass::hyperbolic:
            os << "INFO  center pair: hyperbolic (lambda_1 = " << sol.floq.lambda1.real() << ", "
               << sol.floq.lambda1.imag() << "i)\n";
            break;
        case PairClass::parabolic:
            os << "INFO  center pair: parabolic (lambda_1 = lambda_2 = 1)\n";
            break;
    }
    rep.text = os.str();
    return rep;
}

}  // namespace spomap
