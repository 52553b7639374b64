// extern-C surface of the shared library: opaque handles around the C++
// core, status codes, and a thread-local error message.

#include "spomap.h"

#include <cstring>
#include <string>

#include "spomap/io.hpp"
#include "spomap/orbits.hpp"

using namespace spomap;

struct spo_system {
    std::shared_ptr<const SystemModel> model;
};

struct spo_map {
    std::shared_ptr<const StroboscopicMap> map;
};

struct spo_solution {
    PeriodicOrbitSolution sol;
    RunConfig cfg;  // best-effort provenance for save()
    bool has_cfg = false;
};

struct spo_separatrix {
    SeparatrixParameterization sep;
};

namespace {

thread_local std::string g_last_error;

spo_status status_of(const Error& e) {
    switch (e.kind()) {
        case ErrorKind::argument: return SPO_ERR_ARGUMENT;
        case ErrorKind::config: return SPO_ERR_CONFIG;
        case ErrorKind::no_convergence: return SPO_ERR_NO_CONVERGENCE;
        case ErrorKind::numerical: return SPO_ERR_NUMERICAL;
        case ErrorKind::io: return SPO_ERR_IO;
    }
    return SPO_ERR_NUMERICAL;
}

template <class F>
spo_status guarded(F&& f) {
    try {
        f();
        return SPO_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return SPO_ERR_NUMERICAL;
    } catch (...) {
        g_last_error = "unknown error";
        return SPO_ERR_NUMERICAL;
    }
}

spo_status need(bool cond, const char* msg) {
    if (cond) return SPO_OK;
    g_last_error = msg;
    return SPO_ERR_ARGUMENT;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::vector<std::string> override_vec(const char* const* overrides, size_t n) {
    std::vector<std::string> v;
    v.reserve(n);
    for (size_t i = 0; i < n; ++i) v.emplace_back(overrides[i]);
    return v;
}

IntegratorConfig integ_cfg(double abs_tol, double rel_tol) {
    IntegratorConfig cfg;
    if (abs_tol > 0) cfg.abs_tol = abs_tol;
    if (rel_tol > 0) cfg.rel_tol = rel_tol;
    return cfg;
}

}  // namespace

extern "C" {

const char* spo_version(void) { return version_string(); }

const char* spo_last_error(void) { return g_last_error.c_str(); }

void spo_string_free(char* s) { delete[] s; }

spo_status spo_system_pcr3bp(double mu, spo_system** out) {
    if (auto s = need(out != nullptr, "null output pointer")) return s;
    return guarded([&] { *out = new spo_system{make_pcr3bp(mu)}; });
}

spo_status spo_system_ccr4bp(double mu, double r13, double omega3, spo_system** out) {
    if (auto s = need(out != nullptr, "null output pointer")) return s;
    return guarded([&] { *out = new spo_system{make_ccr4bp(mu, r13, omega3)}; });
}

spo_status spo_system_forced_pendulum(double omega_p, spo_system** out) {
    if (auto s = need(out != nullptr, "null output pointer")) return s;
    return guarded([&] { *out = new spo_system{make_forced_pendulum(omega_p)}; });
}

double spo_kepler_omega3(double mu, double eps_ref, double r13) {
    return r13 > 0 ? kepler_omega3(mu, eps_ref, r13) : 0.0;
}

void spo_system_free(spo_system* sys) { delete sys; }

spo_status spo_map_create(const spo_system* sys, double eps, double theta0, double abs_tol,
                          double rel_tol, spo_map** out) {
    if (auto s = need(sys != nullptr && out != nullptr, "null argument")) return s;
    return guarded([&] {
        *out = new spo_map{std::make_shared<const StroboscopicMap>(sys->model, eps, theta0,
                                                                   integ_cfg(abs_tol, rel_tol))};
    });
}

void spo_map_free(spo_map* map) { delete map; }

spo_status spo_map_apply(const spo_map* map, const double x_in[4], double x_out[4]) {
    if (auto s = need(map && x_in && x_out, "null argument")) return s;
    return guarded([&] {
        const Vec4 y = map->map->apply(Vec4(x_in[0], x_in[1], x_in[2], x_in[3]));
        for (int i = 0; i < 4; ++i) x_out[i] = y[i];
    });
}

spo_status spo_map_jacobian(const spo_map* map, const double x_in[4], double x_out[4],
                            double jac_out[16]) {
    if (auto s = need(map && x_in && x_out && jac_out, "null argument")) return s;
    return guarded([&] {
        auto [y, dy] = map->map->apply_with_jacobian(Vec4(x_in[0], x_in[1], x_in[2], x_in[3]));
        for (int i = 0; i < 4; ++i) x_out[i] = y[i];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) jac_out[4 * i + j] = dy(i, j);
    });
}

double spo_map_time(const spo_map* map) { return map ? map->map->mapping_time() : 0.0; }

spo_status spo_find_symmetric_orbit(const spo_system* sys, double period, double x_guess,
                                    double py_guess, double x0_out[4]) {
    if (auto s = need(sys && x0_out, "null argument")) return s;
    return guarded([&] {
        const Vec4 x0 = find_symmetric_orbit(*sys->model, period, {x_guess, py_guess});
        for (int i = 0; i < 4; ++i) x0_out[i] = x0[i];
    });
}

spo_status spo_seed_orbit(const spo_map* map_eps0, const double x0[4], int p, int q,
                          spo_solution** out) {
    if (auto s = need(map_eps0 && x0 && out, "null argument")) return s;
    return guarded([&] {
        ResonanceLabel label{p, q};
        auto sol = initialize_unperturbed(*map_eps0->map, Vec4(x0[0], x0[1], x0[2], x0[3]), label);
        *out = new spo_solution{std::move(sol), {}, false};
    });
}

spo_status spo_continue(const spo_system* sys, double theta0, const spo_solution* seed,
                        double eps_f, int n_steps, double tol, int flow_map_mode,
                        spo_solution** out) {
    if (auto s = need(sys && seed && out, "null argument")) return s;
    return guarded([&] {
        ContinuationOptions opts;
        opts.solver.tol = tol;
        opts.solver.mode = flow_map_mode ? SolveMode::flow_map : SolveMode::perturbed;
        auto sols = continue_family(strobe_family(sys->model, theta0), seed->sol, eps_f, n_steps,
                                    opts);
        *out = new spo_solution{std::move(sols.back()), {}, false};
    });
}

void spo_solution_free(spo_solution* sol) { delete sol; }

int spo_solution_q(const spo_solution* sol) { return sol ? int(sol->sol.q()) : 0; }

double spo_solution_eps(const spo_solution* sol) { return sol ? sol->sol.eps : 0.0; }

spo_status spo_solution_points(const spo_solution* sol, double* points_out) {
    if (auto s = need(sol && points_out, "null argument")) return s;
    for (size_t k = 0; k < sol->sol.q(); ++k)
        for (int i = 0; i < 4; ++i) points_out[4 * k + size_t(i)] = sol->sol.X[k][i];
    return SPO_OK;
}

spo_status spo_solution_multipliers(const spo_solution* sol, double lambda1[2], double lambda2[2],
                                    double shear[2]) {
    if (auto s = need(sol && lambda1 && lambda2 && shear, "null argument")) return s;
    const auto& f = sol->sol.floq;
    lambda1[0] = f.lambda1.real();
    lambda1[1] = f.lambda1.imag();
    lambda2[0] = f.lambda2.real();
    lambda2[1] = f.lambda2.imag();
    shear[0] = f.T.real();
    shear[1] = f.T.imag();
    return SPO_OK;
}

spo_status spo_solution_transverse(const spo_solution* sol, double* lambda_s_out,
                                   double* lambda_u_out) {
    if (auto s = need(sol && lambda_s_out && lambda_u_out, "null argument")) return s;
    for (size_t k = 0; k < sol->sol.q(); ++k) {
        lambda_s_out[k] = sol->sol.floq.lambda_s[k];
        lambda_u_out[k] = sol->sol.floq.lambda_u[k];
    }
    return SPO_OK;
}

spo_status spo_solution_residual_norms(const spo_solution* sol, double* norm_E,
                                       double* norm_E_red) {
    if (auto s = need(sol && norm_E && norm_E_red, "null argument")) return s;
    *norm_E = sol->sol.norm_E;
    *norm_E_red = sol->sol.norm_E_red;
    return SPO_OK;
}

int spo_solution_center_class(const spo_solution* sol) {
    if (!sol) return -1;
    switch (sol->sol.classify_center_pair()) {
        case PairClass::hyperbolic: return 0;
        case PairClass::elliptic: return 1;
        case PairClass::parabolic: return 2;
    }
    return -1;
}

spo_status spo_solution_check(const spo_map* map, const spo_solution* sol, double* norm_E,
                              double* norm_E_red) {
    if (auto s = need(map && sol && norm_E && norm_E_red, "null argument")) return s;
    return guarded([&] {
        const NewtonResidual res = compute_residual(*map->map, sol->sol);
        *norm_E = res.norm_E;
        *norm_E_red = res.norm_E_red;
    });
}

spo_status spo_solution_save(const spo_solution* sol, const char* path) {
    if (auto s = need(sol && path, "null argument")) return s;
    return guarded([&] {
        RunConfig cfg = sol->cfg;
        save_solution(path, sol->sol, cfg);
    });
}

spo_status spo_solution_load(const char* path, spo_solution** out) {
    if (auto s = need(path && out, "null argument")) return s;
    return guarded([&] {
        auto holder = std::make_unique<spo_solution>();
        holder->sol = load_solution(path, &holder->cfg);
        holder->has_cfg = true;
        *out = holder.release();
    });
}

spo_status spo_separatrix_build(const spo_map* map, const spo_solution* sol, int branch,
                                int degree, double alpha, spo_separatrix** out) {
    if (auto s = need(map && sol && out, "null argument")) return s;
    if (auto s = need(branch == 0 || branch == 1, "branch must be 0 (stable) or 1 (unstable)"))
        return s;
    return guarded([&] {
        PeriodicOrbitSolution work = sol->sol;
        rescale_solution(work);
        const DiagonalFloquet diag = diagonalize_floquet(work);
        SeparatrixOptions opts;
        opts.d_max = degree;
        opts.alpha = alpha;
        auto sep = parameterize(*map->map, work, diag,
                                branch == 0 ? Branch::weak_stable : Branch::weak_unstable, opts);
        *out = new spo_separatrix{std::move(sep)};
    });
}

void spo_separatrix_free(spo_separatrix* sep) { delete sep; }

int spo_separatrix_degree(const spo_separatrix* sep) { return sep ? sep->sep.degree : 0; }

double spo_separatrix_lambda(const spo_separatrix* sep) { return sep ? sep->sep.lambda : 0.0; }

spo_status spo_separatrix_domains(const spo_map* map, spo_separatrix* sep, double e_tol,
                                  double* d_out) {
    if (auto s = need(map && sep && d_out, "null argument")) return s;
    return guarded([&] {
        const auto D = fundamental_domain(*map->map, sep->sep, e_tol);
        for (size_t k = 0; k < D.size(); ++k) d_out[k] = D[k];
    });
}

spo_status spo_separatrix_eval(const spo_separatrix* sep, int k, double s, double point_out[4]) {
    if (auto st = need(sep && point_out, "null argument")) return st;
    if (auto st = need(k >= 0 && size_t(k) < sep->sep.q(), "orbit index out of range")) return st;
    const Vec4 p = sep->sep.eval(size_t(k), s);
    for (int i = 0; i < 4; ++i) point_out[i] = p[i];
    return SPO_OK;
}

spo_status spo_separatrix_sample(const spo_separatrix* sep, int n_per_k, double* points_out) {
    if (auto s = need(sep && points_out, "null argument")) return s;
    return guarded([&] {
        const auto samples = sample_curves(sep->sep, n_per_k);
        for (size_t i = 0; i < samples.size(); ++i) {
            points_out[6 * i + 0] = double(samples[i].k);
            points_out[6 * i + 1] = samples[i].s;
            for (int c = 0; c < 4; ++c) points_out[6 * i + 2 + size_t(c)] = samples[i].point[c];
        }
    });
}

spo_status spo_run_seed(const char* config_path, const char* const* overrides, size_t n_overrides,
                        char** path_out) {
    if (auto s = need(config_path != nullptr, "null config path")) return s;
    return guarded([&] {
        const RunConfig cfg = load_config(config_path, override_vec(overrides, n_overrides));
        const auto path = cmd_seed(cfg);
        if (path_out) *path_out = dup_string(path.string());
    });
}

spo_status spo_run_continue(const char* config_path, const char* seed_path,
                            const char* const* overrides, size_t n_overrides, char** path_out) {
    if (auto s = need(config_path && seed_path, "null path")) return s;
    return guarded([&] {
        const RunConfig cfg = load_config(config_path, override_vec(overrides, n_overrides));
        const auto path = cmd_continue(cfg, seed_path);
        if (path_out) *path_out = dup_string(path.string());
    });
}

spo_status spo_run_separatrix(const char* config_path, const char* solution_path,
                              const char* const* overrides, size_t n_overrides, char** path_out) {
    if (auto s = need(config_path && solution_path, "null path")) return s;
    return guarded([&] {
        const RunConfig cfg = load_config(config_path, override_vec(overrides, n_overrides));
        const auto paths = cmd_separatrix(cfg, solution_path);
        if (path_out) {
            std::string joined;
            for (const auto& p : paths) {
                if (!joined.empty()) joined += "\n";
                joined += p.string();
            }
            *path_out = dup_string(joined);
        }
    });
}

spo_status spo_run_validate(const char* solution_path, char** report_out) {
    if (auto s = need(solution_path != nullptr, "null path")) return s;
    ValidationReport rep;
    const spo_status st = guarded([&] { rep = cmd_validate(solution_path); });
    if (st != SPO_OK) return st;
    if (report_out) *report_out = dup_string(rep.text);
    if (!rep.ok) {
        g_last_error = "validation failed:\n" + rep.text;
        return SPO_ERR_NUMERICAL;
    }
    return SPO_OK;
}

}  // extern "C"
