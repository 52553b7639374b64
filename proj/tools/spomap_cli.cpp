// spomap command-line driver.  Talks to the shared library exclusively
// through the C API; exit codes: 0 success, 2 config error, 3 non-convergence,
// 4 numerical failure.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spomap.h"

namespace {

int exit_code(spo_status st) {
    switch (st) {
        case SPO_OK: return 0;
        case SPO_ERR_CONFIG: return 2;
        case SPO_ERR_NO_CONVERGENCE: return 3;
        default: return 4;
    }
}

std::vector<const char*> c_strings(const std::vector<std::string>& v) {
    std::vector<const char*> out;
    out.reserve(v.size());
    for (const auto& s : v) out.push_back(s.c_str());
    return out;
}

int finish(spo_status st, char* primary_output) {
    if (st != SPO_OK) {
        std::fprintf(stderr, "error: %s\n", spo_last_error());
        return exit_code(st);
    }
    if (primary_output) {
        std::printf("%s\n", primary_output);
        spo_string_free(primary_output);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"subharmonic periodic orbits, Floquet bundles, and separatrices "
                 "of perturbed symplectic maps"};
    app.set_version_flag("--version", spo_version());
    app.require_subcommand(1);

    std::string config_path, input_file;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        if (needs_config)
            cmd->add_option("-c,--config", config_path, "run configuration file")->required();
        cmd->add_option("-s,--set", overrides,
                        "override a config entry, e.g. --set solver.tol=1e-8");
    };

    auto* seed = app.add_subcommand("seed", "initialize the eps = 0 orbit and Floquet frame");
    add_common(seed, true);

    auto* cont = app.add_subcommand("continue", "continue a seed in the perturbation parameter");
    add_common(cont, true);
    cont->add_option("seed_file", input_file, "seed solution file")->required();

    auto* sep = app.add_subcommand("separatrix",
                                   "parameterize the weak separatrices of a solution");
    add_common(sep, true);
    sep->add_option("solution_file", input_file, "converged solution file")->required();

    auto* val = app.add_subcommand("validate", "re-check the invariants of a solution file");
    val->add_option("solution_file", input_file, "solution file")->required();

    CLI11_PARSE(app, argc, argv);

    const auto ov = c_strings(overrides);
    char* out = nullptr;

    if (seed->parsed())
        return finish(spo_run_seed(config_path.c_str(), ov.data(), ov.size(), &out), out);
    if (cont->parsed())
        return finish(spo_run_continue(config_path.c_str(), input_file.c_str(), ov.data(),
                                       ov.size(), &out),
                      out);
    if (sep->parsed())
        return finish(spo_run_separatrix(config_path.c_str(), input_file.c_str(), ov.data(),
                                         ov.size(), &out),
                      out);
    if (val->parsed()) {
        char* report = nullptr;
        const spo_status st = spo_run_validate(input_file.c_str(), &report);
        if (report) {
            std::printf("%s", report);
            spo_string_free(report);
        }
        if (st != SPO_OK && !report) std::fprintf(stderr, "error: %s\n", spo_last_error());
        return exit_code(st);
    }
    return 2;
}
