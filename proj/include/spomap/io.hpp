#pragma once

// Run configuration, solution persistence (JSON with hex-float payloads for
// bit-exact round trips), separatrix export, and the command implementations
// behind the CLI subcommands.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spomap/separatrix.hpp"
#include "spomap/spo.hpp"

namespace spomap {

const char* version_string();

// Lossless text encoding of doubles (printf %a / strtod round trip).
std::string encode_double(double v);
double decode_double(const std::string& s);

struct RunConfig {
    // system
    std::string system_kind;  // "pcr3bp" | "ccr4bp" | "forced_pendulum"
    double mu = 0.0;
    double r13 = 0.0;
    double omega3 = 0.0;       // 0 = derive from Kepler with eps_ref
    double eps_ref = 0.0;      // reference mass ratio for the Kepler relation
    double omega_p = 0.0;      // forced pendulum forcing frequency

    // resonance + seed
    ResonanceLabel label;
    Vec4 seed = Vec4::Zero();
    double theta0 = 0.0;
    bool refine_seed = false;  // run the symmetric-orbit finder on the seed

    // continuation
    double eps_f = 0.0;
    int n_steps = 1;
    double tol = 1e-7;
    SolveMode mode = SolveMode::perturbed;
    int max_halvings = 4;

    IntegratorConfig integrator;

    // separatrix
    int sep_degree = 20;
    double sep_alpha = 0.0;    // 0 = auto
    double sep_e_tol = 1e-6;
    int sep_samples = 128;

    std::string output_dir = ".";

    // Raw key/value view of everything above, as parsed; embedded verbatim in
    // every output file.
    std::map<std::string, std::string> raw;

    std::shared_ptr<const SystemModel> make_system() const;
    MapFamily make_family() const;
};

// Parses the dotted key/value config format ('#' comments, key = value) and
// applies override strings of the same "key=value" shape on top.  Errors
// carry the offending field path.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});

// Solution files: JSON, hex-float reals, complex numbers as [re, im] pairs,
// arrays ordered k = 0..q-1; the full config and library version embedded.
void save_solution(const std::filesystem::path& file, const PeriodicOrbitSolution& sol,
                   const RunConfig& cfg);
PeriodicOrbitSolution load_solution(const std::filesystem::path& file, RunConfig* cfg_out = nullptr);

void save_separatrix(const std::filesystem::path& file, const SeparatrixParameterization& sep,
                     const RunConfig& cfg);
SeparatrixParameterization load_separatrix(const std::filesystem::path& file,
                                           RunConfig* cfg_out = nullptr);

// CSV curve export: '#'-prefixed metadata block, then header k,s,x,y,px,py.
void write_curves_csv(const std::filesystem::path& file, const SeparatrixParameterization& sep,
                      const std::vector<CurveSample>& samples, const RunConfig& cfg);

// ---- command implementations (the CLI subcommands call these) ----

// seed: eps = 0 initialization, writes <output_dir>/seed.json.
std::filesystem::path cmd_seed(const RunConfig& cfg);

// continue: continuation from a seed file, one solution file per eps step,
// returns the final file path.
std::filesystem::path cmd_continue(const RunConfig& cfg, const std::filesystem::path& seed_file);

// separatrix: parameterizes both branches of a solution file, writes the
// parameterizations and sampled-curve CSVs; returns the written file paths.
std::vector<std::filesystem::path> cmd_separatrix(const RunConfig& cfg,
                                                  const std::filesystem::path& solution_file);

struct ValidationReport {
    bool ok = true;
    std::string text;  // one line per check
};

// validate: recomputes residuals and the multiplier identities of a solution
// file against the config embedded in it.
ValidationReport cmd_validate(const std::filesystem::path& solution_file);

}  // namespace spomap
