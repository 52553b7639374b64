// Config parsing, JSON solution persistence (hex-float payloads, bit-exact),
// and separatrix export.

#include "spomap/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spomap {

using nlohmann::json;

const char* version_string() { return "0.1.0"; }

std::string encode_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double decode_double(const std::string& s) {
    const char* p = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    require(end != p && *end == '\0', ErrorKind::io, "malformed float payload: '" + s + "'");
    return v;
}

namespace {

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json enc_c(const cplx& z) { return json::array({encode_double(z.real()), encode_double(z.imag())}); }

cplx dec_c(const json& j) { return cplx(decode_double(j.at(0)), decode_double(j.at(1))); }

json enc_vec4(const Vec4& v) {
    json a = json::array();
    for (int i = 0; i < 4; ++i) a.push_back(encode_double(v[i]));
    return a;
}

Vec4 dec_vec4(const json& j) {
    Vec4 v;
    for (int i = 0; i < 4; ++i) v[i] = decode_double(j.at(size_t(i)));
    return v;
}

json enc_mat4c(const Mat4c& m) {
    json rows = json::array();
    for (int i = 0; i < 4; ++i) {
        json row = json::array();
        for (int j = 0; j < 4; ++j) row.push_back(enc_c(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

Mat4c dec_mat4c(const json& j) {
    Mat4c m;
    for (int i = 0; i < 4; ++i)
        for (int c = 0; c < 4; ++c) m(i, c) = dec_c(j.at(size_t(i)).at(size_t(c)));
    return m;
}

// ---- typed config access with field-path errors ----

class RawConfig {
public:
    explicit RawConfig(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string str(const std::string& key, const std::string& fallback) {
        seen_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    std::string str_required(const std::string& key) {
        seen_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) throw ConfigError("config: missing required field '" + key + "'");
        return it->second;
    }

    double num(const std::string& key, double fallback) {
        seen_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        return parse_num(key, it->second);
    }

    double num_required(const std::string& key) { return parse_num(key, str_required(key)); }

    long integer(const std::string& key, long fallback) {
        const double v = num(key, double(fallback));
        const long n = long(v);
        if (double(n) != v)
            throw ConfigError("config: field '" + key + "' must be an integer, got '" +
                              fmt_g(v) + "'");
        return n;
    }

    bool flag(const std::string& key, bool fallback) {
        seen_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("config: field '" + key + "' must be true/false, got '" + it->second +
                          "'");
    }

    void check_unknown() const {
        for (const auto& [k, v] : kv_)
            if (!seen_.count(k)) throw ConfigError("config: unknown field '" + k + "'");
    }

private:
    double parse_num(const std::string& key, const std::string& text) {
        const char* p = text.c_str();
        char* end = nullptr;
        const double v = std::strtod(p, &end);
        if (end == p || *end != '\0')
            throw ConfigError("config: field '" + key + "': not a number: '" + text + "'");
        return v;
    }

    std::map<std::string, std::string> kv_;
    std::set<std::string> seen_;
};

RunConfig config_from_raw(const std::map<std::string, std::string>& raw_in) {
    RawConfig raw(raw_in);
    RunConfig c;

    c.system_kind = raw.str_required("system.kind");
    if (c.system_kind == "pcr3bp" || c.system_kind == "ccr4bp") {
        c.mu = raw.num_required("system.mu");
        if (!(c.mu > 0.0 && c.mu < 0.5))
            throw ConfigError("config: field 'system.mu' must lie in (0, 1/2)");
    }
    if (c.system_kind == "ccr4bp") {
        c.r13 = raw.num_required("system.r13");
        if (!(c.r13 > 0.0)) throw ConfigError("config: field 'system.r13' must be > 0");
        c.eps_ref = raw.num("system.eps_ref", 0.0);
        c.omega3 = raw.num("system.omega3", 0.0);
        if (c.omega3 == 0.0) c.omega3 = kepler_omega3(c.mu, c.eps_ref, c.r13);
    } else if (c.system_kind == "forced_pendulum") {
        c.omega_p = raw.num_required("system.omega_p");
        if (c.omega_p == 0.0)
            throw ConfigError("config: field 'system.omega_p' must be nonzero");
    } else if (c.system_kind == "pcr3bp") {
        c.omega_p = raw.num("system.mapping_time", 0.0);
        if (!(c.omega_p > 0.0))
            throw ConfigError(
                "config: field 'system.mapping_time' (> 0) is required for kind pcr3bp");
    } else {
        throw ConfigError("config: field 'system.kind': unknown system '" + c.system_kind + "'");
    }

    c.label.p = int(raw.integer("label.p", 1));
    c.label.q = int(raw.integer("label.q", 1));
    try {
        c.label.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: field 'label': ") + e.what());
    }

    c.seed = Vec4(raw.num("seed.x", 0.0), raw.num("seed.y", 0.0), raw.num("seed.px", 0.0),
                  raw.num("seed.py", 0.0));
    c.theta0 = raw.num("seed.theta0", 0.0);
    c.refine_seed = raw.flag("seed.refine", false);

    c.eps_f = raw.num("continuation.eps_f", 0.0);
    c.n_steps = int(raw.integer("continuation.steps", 1));
    if (c.n_steps < 1) throw ConfigError("config: field 'continuation.steps' must be >= 1");
    c.tol = raw.num("solver.tol", 1e-7);
    if (!(c.tol > 0.0)) throw ConfigError("config: field 'solver.tol' must be > 0");
    const std::string mode = raw.str("continuation.mode", "perturbed");
    if (mode == "perturbed")
        c.mode = SolveMode::perturbed;
    else if (mode == "flow_map")
        c.mode = SolveMode::flow_map;
    else
        throw ConfigError("config: field 'continuation.mode' must be perturbed|flow_map");
    c.max_halvings = int(raw.integer("continuation.max_halvings", 4));

    c.integrator.abs_tol = raw.num("integrator.abs_tol", 1e-12);
    c.integrator.rel_tol = raw.num("integrator.rel_tol", 1e-12);
    c.integrator.max_steps = raw.integer("integrator.max_steps", 10'000'000);
    c.integrator.initial_step = raw.num("integrator.initial_step", 0.0);
    try {
        c.integrator.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("config: field 'integrator': ") + e.what());
    }

    c.sep_degree = int(raw.integer("separatrix.degree", 20));
    if (c.sep_degree < 1) throw ConfigError("config: field 'separatrix.degree' must be >= 1");
    c.sep_alpha = raw.num("separatrix.alpha", 0.0);
    c.sep_e_tol = raw.num("separatrix.e_tol", 1e-6);
    if (!(c.sep_e_tol > 0.0)) throw ConfigError("config: field 'separatrix.e_tol' must be > 0");
    c.sep_samples = int(raw.integer("separatrix.samples", 128));
    if (c.sep_samples < 1) throw ConfigError("config: field 'separatrix.samples' must be >= 1");

    c.output_dir = raw.str("output.dir", ".");

    raw.check_unknown();

    // normalized full view, embedded verbatim in output files
    c.raw["system.kind"] = c.system_kind;
    if (c.system_kind == "pcr3bp" || c.system_kind == "ccr4bp") c.raw["system.mu"] = fmt_g(c.mu);
    if (c.system_kind == "ccr4bp") {
        c.raw["system.r13"] = fmt_g(c.r13);
        c.raw["system.omega3"] = fmt_g(c.omega3);
        c.raw["system.eps_ref"] = fmt_g(c.eps_ref);
    }
    if (c.system_kind == "forced_pendulum") c.raw["system.omega_p"] = fmt_g(c.omega_p);
    if (c.system_kind == "pcr3bp") c.raw["system.mapping_time"] = fmt_g(c.omega_p);
    c.raw["label.p"] = std::to_string(c.label.p);
    c.raw["label.q"] = std::to_string(c.label.q);
    c.raw["seed.x"] = fmt_g(c.seed[0]);
    c.raw["seed.y"] = fmt_g(c.seed[1]);
    c.raw["seed.px"] = fmt_g(c.seed[2]);
    c.raw["seed.py"] = fmt_g(c.seed[3]);
    c.raw["seed.theta0"] = fmt_g(c.theta0);
    c.raw["seed.refine"] = c.refine_seed ? "true" : "false";
    c.raw["continuation.eps_f"] = fmt_g(c.eps_f);
    c.raw["continuation.steps"] = std::to_string(c.n_steps);
    c.raw["continuation.mode"] = mode;
    c.raw["continuation.max_halvings"] = std::to_string(c.max_halvings);
    c.raw["solver.tol"] = fmt_g(c.tol);
    c.raw["integrator.abs_tol"] = fmt_g(c.integrator.abs_tol);
    c.raw["integrator.rel_tol"] = fmt_g(c.integrator.rel_tol);
    c.raw["integrator.max_steps"] = std::to_string(c.integrator.max_steps);
    c.raw["integrator.initial_step"] = fmt_g(c.integrator.initial_step);
    c.raw["separatrix.degree"] = std::to_string(c.sep_degree);
    c.raw["separatrix.alpha"] = fmt_g(c.sep_alpha);
    c.raw["separatrix.e_tol"] = fmt_g(c.sep_e_tol);
    c.raw["separatrix.samples"] = std::to_string(c.sep_samples);
    c.raw["output.dir"] = c.output_dir;
    return c;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

std::shared_ptr<const SystemModel> RunConfig::make_system() const {
    if (system_kind == "pcr3bp") return make_pcr3bp(mu);
    if (system_kind == "ccr4bp") return make_ccr4bp(mu, r13, omega3);
    if (system_kind == "forced_pendulum") return make_forced_pendulum(omega_p);
    throw ConfigError("config: unknown system '" + system_kind + "'");
}

MapFamily RunConfig::make_family() const {
    auto sys = make_system();
    if (system_kind == "pcr3bp") {
        const double mt = omega_p;  // mapping_time is stored there for pcr3bp
        const double th = theta0;
        const IntegratorConfig ic = integrator;
        return [sys, th, mt, ic](double eps) {
            return std::make_shared<const StroboscopicMap>(sys, eps, th, mt, ic);
        };
    }
    return strobe_family(sys, theta0, integrator);
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config: line " + std::to_string(lineno) + ": empty key");
        kv[key] = val;
    }
    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: override '" + ov + "' is not of the form key=value");
        kv[trim(ov.substr(0, eq))] = trim(ov.substr(eq + 1));
    }
    return config_from_raw(kv);
}

RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config file: " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

void save_solution(const std::filesystem::path& file, const PeriodicOrbitSolution& sol,
                   const RunConfig& cfg) {
    json j;
    j["format"] = "spomap-solution";
    j["version"] = version_string();
    j["config"] = cfg.raw;
    j["label"] = {{"p", sol.label.p}, {"q", sol.label.q}};
    j["eps"] = encode_double(sol.eps);
    j["mode"] = sol.mode == SolveMode::flow_map ? "flow_map" : "perturbed";
    j["tol"] = encode_double(sol.tol);
    j["norm_E"] = encode_double(sol.norm_E);
    j["norm_E_red"] = encode_double(sol.norm_E_red);
    json X = json::array(), P = json::array();
    for (size_t k = 0; k < sol.q(); ++k) {
        X.push_back(enc_vec4(sol.X[k]));
        P.push_back(enc_mat4c(sol.P[k]));
    }
    j["X"] = std::move(X);
    j["P"] = std::move(P);
    json ls = json::array(), lu = json::array();
    for (double v : sol.floq.lambda_s) ls.push_back(encode_double(v));
    for (double v : sol.floq.lambda_u) lu.push_back(encode_double(v));
    j["lambda"] = {{"lambda1", enc_c(sol.floq.lambda1)},
                   {"lambda2", enc_c(sol.floq.lambda2)},
                   {"T", enc_c(sol.floq.T)},
                   {"lambda_s", std::move(ls)},
                   {"lambda_u", std::move(lu)}};
    json hist = json::array();
    for (auto& [a, b] : sol.history) hist.push_back({encode_double(a), encode_double(b)});
    j["history"] = std::move(hist);

    std::ofstream out(file);
    if (!out) throw IoError("cannot write solution file: " + file.string());
    out << j.dump(1) << "\n";
    if (!out) throw IoError("write failed: " + file.string());
}

PeriodicOrbitSolution load_solution(const std::filesystem::path& file, RunConfig* cfg_out) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open solution file: " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("solution file is not valid JSON: " + file.string() + ": " + e.what());
    }
    try {
        require(j.at("format") == "spomap-solution", ErrorKind::io,
                "not a spomap solution file: " + file.string());
        PeriodicOrbitSolution sol;
        sol.label.p = j.at("label").at("p");
        sol.label.q = j.at("label").at("q");
        sol.eps = decode_double(j.at("eps"));
        sol.mode = j.at("mode") == "flow_map" ? SolveMode::flow_map : SolveMode::perturbed;
        sol.tol = decode_double(j.at("tol"));
        sol.norm_E = decode_double(j.at("norm_E"));
        sol.norm_E_red = decode_double(j.at("norm_E_red"));
        for (const auto& x : j.at("X")) sol.X.push_back(dec_vec4(x));
        for (const auto& p : j.at("P")) sol.P.push_back(dec_mat4c(p));
        const auto& lam = j.at("lambda");
        sol.floq.lambda1 = dec_c(lam.at("lambda1"));
        sol.floq.lambda2 = dec_c(lam.at("lambda2"));
        sol.floq.T = dec_c(lam.at("T"));
        for (const auto& v : lam.at("lambda_s")) sol.floq.lambda_s.push_back(decode_double(v));
        for (const auto& v : lam.at("lambda_u")) sol.floq.lambda_u.push_back(decode_double(v));
        for (const auto& h : j.at("history"))
            sol.history.emplace_back(decode_double(h.at(0)), decode_double(h.at(1)));
        require(sol.X.size() == sol.P.size() && sol.X.size() == sol.floq.lambda_s.size() &&
                    sol.X.size() == sol.floq.lambda_u.size() && !sol.X.empty(),
                ErrorKind::io, "solution file arrays are inconsistent: " + file.string());
        if (cfg_out) {
            const auto raw = j.at("config").get<std::map<std::string, std::string>>();
            if (raw.count("system.kind")) *cfg_out = config_from_raw(raw);
        }
        return sol;
    } catch (const json::exception& e) {
        throw IoError("solution file is missing fields: " + file.string() + ": " + e.what());
    }
}

void save_separatrix(const std::filesystem::path& file, const SeparatrixParameterization& sep,
                     const RunConfig& cfg) {
    json j;
    j["format"] = "spomap-separatrix";
    j["version"] = version_string();
    j["config"] = cfg.raw;
    j["label"] = {{"p", sep.label.p}, {"q", sep.label.q}};
    j["branch"] = sep.branch == Branch::weak_stable ? "weak_stable" : "weak_unstable";
    j["lambda"] = encode_double(sep.lambda);
    j["alpha"] = encode_double(sep.alpha);
    j["degree"] = sep.degree;
    j["e_tol"] = encode_double(sep.E_tol);
    json W = json::array();
    for (const auto& wk : sep.W) {
        json coeffs = json::array();
        for (const auto& c : wk) coeffs.push_back(enc_vec4(c));
        W.push_back(std::move(coeffs));
    }
    j["W"] = std::move(W);
    json D = json::array();
    for (double d : sep.D) D.push_back(encode_double(d));
    j["D"] = std::move(D);

    std::ofstream out(file);
    if (!out) throw IoError("cannot write separatrix file: " + file.string());
    out << j.dump(1) << "\n";
    if (!out) throw IoError("write failed: " + file.string());
}

SeparatrixParameterization load_separatrix(const std::filesystem::path& file, RunConfig* cfg_out) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open separatrix file: " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("separatrix file is not valid JSON: " + file.string() + ": " + e.what());
    }
    try {
        require(j.at("format") == "spomap-separatrix", ErrorKind::io,
                "not a spomap separatrix file: " + file.string());
        SeparatrixParameterization sep;
        sep.label.p = j.at("label").at("p");
        sep.label.q = j.at("label").at("q");
        sep.branch = j.at("branch") == "weak_stable" ? Branch::weak_stable : Branch::weak_unstable;
        sep.lambda = decode_double(j.at("lambda"));
        sep.alpha = decode_double(j.at("alpha"));
        sep.degree = j.at("degree");
        sep.E_tol = decode_double(j.at("e_tol"));
        for (const auto& wk : j.at("W")) {
            std::vector<Vec4> coeffs;
            for (const auto& c : wk) coeffs.push_back(dec_vec4(c));
            sep.W.push_back(std::move(coeffs));
        }
        for (const auto& d : j.at("D")) sep.D.push_back(decode_double(d));
        if (cfg_out)
            *cfg_out = config_from_raw(j.at("config").get<std::map<std::string, std::string>>());
        return sep;
    } catch (const json::exception& e) {
        throw IoError("separatrix file is missing fields: " + file.string() + ": " + e.what());
    }
}

void write_curves_csv(const std::filesystem::path& file, const SeparatrixParameterization& sep,
                      const std::vector<CurveSample>& samples, const RunConfig& cfg) {
    std::ofstream out(file);
    if (!out) throw IoError("cannot write CSV file: " + file.string());
    out << "# spomap separatrix curves\n";
    out << "# version = " << version_string() << "\n";
    out << "# branch = " << (sep.branch == Branch::weak_stable ? "weak_stable" : "weak_unstable")
        << "\n";
    out << "# lambda = " << fmt_g(sep.lambda) << "\n";
    for (const auto& [k, v] : cfg.raw) out << "# " << k << " = " << v << "\n";
    out << "k,s,x,y,px,py\n";
    for (const auto& s : samples) {
        out << s.k << ',' << fmt_g(s.s) << ',' << fmt_g(s.point[0]) << ',' << fmt_g(s.point[1])
            << ',' << fmt_g(s.point[2]) << ',' << fmt_g(s.point[3]) << "\n";
    }
    if (!out) throw IoError("write failed: " + file.string());
}

}  // namespace spomap
