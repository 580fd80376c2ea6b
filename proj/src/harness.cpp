#include "fkmc/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "fkmc/estimators.hpp"
#include "fkmc/parallel.hpp"
#include "fkmc/potential.hpp"
#include "fkmc/rng.hpp"

namespace fkmc {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + v + "'");
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not 'key = value': " + s);
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
        cfg.kv_[key] = val;
    }
    return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw std::invalid_argument("config: empty key");
    kv_[key] = value;
}

// A key set to the empty string counts as absent everywhere, so an override
// like `--set constant=` removes a value a config file provided.
bool ExperimentConfig::has(const std::string& key) const {
    auto it = kv_.find(key);
    return it != kv_.end() && !it->second.empty();
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() || it->second.empty() ? def : it->second;
}

double ExperimentConfig::get_double(const std::string& key, double def) const {
    return has(key) ? parse_double(key, kv_.find(key)->second) : def;
}

int64_t ExperimentConfig::get_int(const std::string& key, int64_t def) const {
    if (!has(key)) return def;
    double v = parse_double(key, kv_.find(key)->second);
    int64_t n = static_cast<int64_t>(std::llround(v));
    if (std::abs(v - static_cast<double>(n)) > 1e-9)
        throw std::invalid_argument("config: key '" + key + "' must be an integer");
    return n;
}

bool ExperimentConfig::get_bool(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const std::string& v = kv_.find(key)->second;
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: key '" + key + "' must be a boolean, got '" + v + "'");
}

std::vector<double> ExperimentConfig::get_list(const std::string& key,
                                               const std::vector<double>& def) const {
    auto it = kv_.find(key);
    if (it == kv_.end() || it->second.empty()) return def;
    std::vector<double> out;
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::string s = trim(item);
        if (s.empty()) continue;
        out.push_back(parse_double(key, s));
    }
    if (out.empty())
        throw std::invalid_argument("config: key '" + key + "' has an empty list");
    return out;
}

std::string ExperimentConfig::require_string(const std::string& key) const {
    if (!has(key))
        throw std::invalid_argument("config: missing required key '" + key + "'");
    return kv_.find(key)->second;
}

double ExperimentConfig::require_double(const std::string& key) const {
    return parse_double(key, require_string(key));
}

int64_t ExperimentConfig::require_int(const std::string& key) const {
    if (!has(key))
        throw std::invalid_argument("config: missing required key '" + key + "'");
    return get_int(key, 0);
}

std::string ExperimentConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : kv_) {
        out += k;
        out += "=";
        out += v;
        out += "\n";
    }
    return out;
}

PrefractalBoundary boundary_from_config(const ExperimentConfig& cfg) {
    std::string kind = cfg.require_string("boundary");
    if (kind == "koch")
        return koch_prefractal(static_cast<int>(cfg.require_int("level")));
    if (kind == "line") return line_boundary(cfg.require_double("half_width"));
    throw std::invalid_argument("config: boundary must be 'koch' or 'line', got '" +
                                kind + "'");
}

namespace {

using nlohmann::json;

Orientation orientation_from(const std::string& s) {
    if (s == "interior") return Orientation::interior;
    if (s == "exterior") return Orientation::exterior;
    if (s == "upper_half") return Orientation::upper_half;
    if (s == "lower_half") return Orientation::lower_half;
    if (s == "complement") return Orientation::complement;
    throw std::invalid_argument("config: unknown orientation '" + s + "'");
}

PotentialSpec potential_from_config(const ExperimentConfig& cfg) {
    PotentialSpec spec;
    spec.beta = cfg.get_double("beta", 1.0);
    spec.c_v = cfg.get_double("c_v", 1.0);
    if (cfg.has("trunc_A")) spec.trunc_A = cfg.require_double("trunc_A");
    if (cfg.has("constant")) spec.constant_override = cfg.require_double("constant");
    validate(spec);
    return spec;
}

struct RunBody {
    std::string csv;
    json extra;  // family-specific summary fields for the sidecar
};

RunBody run_geometry(const ExperimentConfig& cfg, const RngKey& key) {
    PrefractalBoundary b = boundary_from_config(cfg);
    std::string mode = cfg.get_string("mode", "minkowski");
    RunBody out;
    if (mode == "minkowski") {
        RegularityReport rep = minkowski_fit(b, cfg.require_double("scale_lo"),
                                             cfg.require_double("scale_hi"));
        out.csv = "scale,box_count\n";
        for (const auto& p : rep.fit.points)
            out.csv += fmt_g(std::exp(-p.x)) + "," + fmt_g(std::exp(p.y)) + "\n";
        out.extra = {{"alpha_hat", rep.alpha_hat},
                     {"alpha_ci_lo", rep.alpha_ci_lo},
                     {"alpha_ci_hi", rep.alpha_ci_hi},
                     {"r_squared", rep.fit.r_squared}};
    } else if (mode == "probe") {
        RandomStream rng(key.child("probe"));
        RegularityReport rep = regularity_probe(
            b, static_cast<int>(cfg.get_int("n_centers", 16)),
            cfg.require_double("scale_lo"), cfg.require_double("scale_hi"), rng,
            cfg.get_int("points_per_ball", 1000000));
        out.csv = "c1_hat,c2_hat,scale_lo,scale_hi,samples\n";
        out.csv += fmt_g(rep.c1_hat) + "," + fmt_g(rep.c2_hat) + "," +
                   fmt_g(rep.scale_lo) + "," + fmt_g(rep.scale_hi) + "," +
                   std::to_string(rep.sample_count) + "\n";
        out.extra = {{"c1_hat", rep.c1_hat}, {"c2_hat", rep.c2_hat}};
    } else {
        throw std::invalid_argument("config: geometry mode must be 'minkowski' or 'probe'");
    }
    return out;
}

RunBody run_occupation(const ExperimentConfig& cfg, const RngKey& key, bool pz_view) {
    PrefractalBoundary b = boundary_from_config(cfg);
    Vec2 x0{cfg.require_double("x0_x"), cfg.require_double("x0_y")};
    double delta = cfg.get_double("delta", 1.0);
    double a = cfg.get_double("shell_a", 1.0 / 3.0);
    int n_lo = static_cast<int>(cfg.get_int("n_lo", 1));
    int n_hi = static_cast<int>(cfg.get_int("n_hi", 5));
    double theta = cfg.get_double("theta", 0.5);
    OccupationStats st = occupation_samples(key, b, x0, delta, n_lo, n_hi, a,
                                            cfg.require_int("n_paths"), theta);
    bool with_oracle = cfg.get_bool("oracle", false);
    RunBody out;
    if (pz_view) {
        out.csv = "n,frac_above,pz_bound,theta,mean,mean_stderr\n";
        for (const auto& sh : st.shells)
            out.csv += std::to_string(sh.n) + "," + fmt_g(sh.frac_above) + "," +
                       fmt_g(sh.pz_bound) + "," + fmt_g(theta) + "," +
                       fmt_g(sh.mean.value) + "," + fmt_g(sh.mean.stderr_) + "\n";
    } else {
        out.csv = "n,mean,mean_stderr,second_moment,ratio,b_n,oracle,pz_bound,frac_above\n";
        for (const auto& sh : st.shells) {
            double oracle = with_oracle
                                ? occupation_mean_oracle(b, x0, delta, sh.n, a)
                                : -1.0;
            out.csv += std::to_string(sh.n) + "," + fmt_g(sh.mean.value) + "," +
                       fmt_g(sh.mean.stderr_) + "," + fmt_g(sh.second_moment) + "," +
                       fmt_g(sh.ratio) + "," + fmt_g(sh.b_n) + "," + fmt_g(oracle) +
                       "," + fmt_g(sh.pz_bound) + "," + fmt_g(sh.frac_above) + "\n";
        }
    }
    out.extra = {{"mean_steps", st.mean_steps}, {"n_paths", st.n_paths}};
    return out;
}

RunBody run_divergence(const ExperimentConfig& cfg, const RngKey& key) {
    PrefractalBoundary b = boundary_from_config(cfg);
    Vec2 x0{cfg.require_double("x0_x"), cfg.require_double("x0_y")};
    DivergenceReport rep = divergence_growth_fit(
        key, b, cfg.require_double("beta"), cfg.get_double("c_v", 1.0), x0,
        cfg.get_double("t", 1.0), cfg.get_list("trunc_levels", {}),
        cfg.require_int("n_paths"));
    RunBody out;
    out.csv = "trunc_A,median,mean\n";
    for (const auto& p : rep.points)
        out.csv += fmt_g(p.trunc_A) + "," + fmt_g(p.median_functional) + "," +
                   fmt_g(p.mean_functional) + "\n";
    out.extra = {{"slope", rep.slope},
                 {"slope_stderr", rep.fit.slope_stderr},
                 {"slope_ci_lo", rep.fit.slope_ci95_lo},
                 {"slope_ci_hi", rep.fit.slope_ci95_hi}};
    return out;
}

RunBody run_kernel(const ExperimentConfig& cfg, const RngKey& key) {
    PrefractalBoundary b = boundary_from_config(cfg);
    PotentialSpec spec = potential_from_config(cfg);
    Vec2 x{cfg.require_double("x0_x"), cfg.require_double("x0_y")};
    Vec2 y{cfg.require_double("x1_x"), cfg.require_double("x1_y")};
    double t = cfg.get_double("t", 1.0);
    KernelEstimate est = kernel_bridge_estimate(key, b, spec, x, y, t,
                                                cfg.require_int("n_paths"));
    RunBody out;
    out.csv = "t,free_density,weight,weight_stderr,density,density_stderr,n_paths\n";
    out.csv += fmt_g(t) + "," + fmt_g(est.free_density) + "," +
               fmt_g(est.weight.value) + "," + fmt_g(est.weight.stderr_) + "," +
               fmt_g(est.density.value) + "," + fmt_g(est.density.stderr_) + "," +
               std::to_string(est.n_paths) + "\n";
    out.extra = {{"density", est.density.value}, {"density_stderr", est.density.stderr_}};
    return out;
}

RunBody run_crossing(const ExperimentConfig& cfg, const RngKey& key) {
    PrefractalBoundary b = boundary_from_config(cfg);
    Vec2 x{cfg.require_double("x0_x"), cfg.require_double("x0_y")};
    Ball target{{cfg.require_double("target_x"), cfg.require_double("target_y")},
                cfg.require_double("target_r")};
    double t = cfg.get_double("t", 1.0);
    int64_t n_paths = cfg.require_int("n_paths");
    int64_t n_steps = cfg.get_int("n_steps", 0);  // 0 = per-level automatic
    std::vector<double> levels = cfg.get_list("trunc_levels", {});
    RunBody out;
    out.csv = "trunc_A,mass,mass_stderr,hit_prob,hit_stderr,n_paths,mean_steps\n";
    for (double a_lvl : levels) {
        PotentialSpec spec = potential_from_config(cfg);
        spec.trunc_A = a_lvl;
        CrossingEstimate est = crossing_mass_estimate(
            key.child("trunc", static_cast<uint64_t>(std::llround(a_lvl * 1024))),
            b, spec, x, target, t, n_paths, n_steps);
        out.csv += fmt_g(est.trunc_A) + "," + fmt_g(est.mass.value) + "," +
                   fmt_g(est.mass.stderr_) + "," + fmt_g(est.hit_prob.value) + "," +
                   fmt_g(est.hit_prob.stderr_) + "," + std::to_string(est.n_paths) +
                   "," + fmt_g(est.mean_steps) + "\n";
    }
    return out;
}

RunBody run_decay(const ExperimentConfig& cfg) {
    std::string path = cfg.require_string("masses_csv");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("decay: cannot open masses csv '" + path + "'");
    std::string header;
    if (!std::getline(in, header))
        throw std::runtime_error("decay: empty masses csv '" + path + "'");
    std::vector<std::string> cols;
    {
        std::istringstream hs(header);
        std::string c;
        while (std::getline(hs, c, ',')) cols.push_back(trim(c));
    }
    auto col_of = [&](const std::string& name) {
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return i;
        throw std::runtime_error("decay: masses csv lacks column '" + name + "'");
    };
    size_t ci_a = col_of("trunc_A"), ci_m = col_of("mass"), ci_s = col_of("mass_stderr");
    std::vector<MassPoint> masses;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> vals;
        std::istringstream ls(line);
        std::string v;
        while (std::getline(ls, v, ',')) vals.push_back(v);
        if (vals.size() < cols.size())
            throw std::runtime_error("decay: short row in masses csv");
        masses.push_back({parse_double("trunc_A", vals[ci_a]),
                          parse_double("mass", vals[ci_m]),
                          parse_double("mass_stderr", vals[ci_s])});
    }
    DecayReport rep = decay_rate_fit(masses);
    RunBody out;
    out.csv = "sigma_hat,sigma_ci_lo,sigma_ci_hi,slope_stderr,r_squared,n_points,n_censored\n";
    out.csv += fmt_g(rep.sigma_hat) + "," + fmt_g(rep.sigma_ci_lo) + "," +
               fmt_g(rep.sigma_ci_hi) + "," + fmt_g(rep.fit.slope_stderr) + "," +
               fmt_g(rep.fit.r_squared) + "," + std::to_string(rep.fit.n_points) +
               "," + std::to_string(rep.n_censored) + "\n";
    out.extra = {{"sigma_hat", rep.sigma_hat},
                 {"sigma_ci_lo", rep.sigma_ci_lo},
                 {"sigma_ci_hi", rep.sigma_ci_hi}};
    return out;
}

RunBody run_harmonic(const ExperimentConfig& cfg, const RngKey& key) {
    PrefractalBoundary b = boundary_from_config(cfg);
    DomainSpec dom;
    dom.boundary = &b;
    dom.orientation = orientation_from(cfg.get_string("orientation", "complement"));
    dom.target = Ball{{cfg.require_double("target_x"), cfg.require_double("target_y")},
                      cfg.require_double("target_r")};
    Vec2 origin{cfg.require_double("ray_origin_x"), cfg.require_double("ray_origin_y")};
    Vec2 dir{cfg.require_double("ray_dir_x"), cfg.require_double("ray_dir_y")};
    HarmonicReport rep = harmonic_exponent_fit(
        key, dom, origin, dir, cfg.get_list("dists", {}),
        cfg.get_double("eps", 5e-5), cfg.require_int("n_walks"),
        cfg.get_int("max_steps", 100000));
    RunBody out;
    out.csv = "dist,hit,hit_stderr,n_timeout,n_walks\n";
    for (const auto& p : rep.points)
        out.csv += fmt_g(p.dist) + "," + fmt_g(p.hit.value) + "," +
                   fmt_g(p.hit.stderr_) + "," + std::to_string(p.n_timeout) + "," +
                   std::to_string(p.n_walks) + "\n";
    out.extra = {{"gamma_hat", rep.gamma_hat},
                 {"gamma_ci_lo", rep.fit.slope_ci95_lo},
                 {"gamma_ci_hi", rep.fit.slope_ci95_hi},
                 {"timeout_fraction", rep.timeout_fraction}};
    return out;
}

RunBody run_positivity(const ExperimentConfig& cfg) {
    PrefractalBoundary b = boundary_from_config(cfg);
    PotentialSpec spec = potential_from_config(cfg);
    Vec2 x{cfg.require_double("x0_x"), cfg.require_double("x0_y")};
    ConvolveOptions opts;
    opts.gamma0 = cfg.get_double("gamma0", opts.gamma0);
    opts.shells_per_level = static_cast<int>(cfg.get_int("shells_per_level", opts.shells_per_level));
    opts.mesh_levels = static_cast<int>(cfg.get_int("mesh_levels", opts.mesh_levels));
    opts.samples = cfg.get_int("samples", opts.samples);
    opts.cauchy_rel_tol = cfg.get_double("cauchy_rel_tol", opts.cauchy_rel_tol);
    ConvolveReport rep = convolve_potential_gamma(spec, b, x, cfg.get_double("t", 1.0), opts);
    const char* verdict = rep.verdict == ConvolveVerdict::finite ? "finite" : "diverging";
    RunBody out;
    out.csv = "level,partial_sum,extrapolated,increment,rel_change,verdict\n";
    for (size_t i = 0; i < rep.levels.size(); ++i) {
        double rel = i == 0 ? 0.0
                            : std::abs(rep.levels[i].extrapolated -
                                       rep.levels[i - 1].extrapolated) /
                                  std::max(std::abs(rep.levels[i].extrapolated), 1e-300);
        out.csv += std::to_string(i + 1) + "," + fmt_g(rep.levels[i].partial_sum) +
                   "," + fmt_g(rep.levels[i].extrapolated) + "," +
                   fmt_g(rep.levels[i].increment) + "," + fmt_g(rel) + "," + verdict +
                   "\n";
    }
    out.extra = {{"verdict", verdict},
                 {"value", rep.value},
                 {"outer_value", rep.outer_value},
                 {"growth_ratio", rep.growth_ratio},
                 {"last_rel_change", rep.last_rel_change}};
    return out;
}

}  // namespace

RunRecord run_experiment(const std::string& family, const ExperimentConfig& cfg,
                         uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    RngKey key = RngKey::root(seed).child(family);
    RunBody body;
    if (family == "geometry") body = run_geometry(cfg, key);
    else if (family == "occupation") body = run_occupation(cfg, key, false);
    else if (family == "pz") body = run_occupation(cfg, key, true);
    else if (family == "divergence") body = run_divergence(cfg, key);
    else if (family == "kernel") body = run_kernel(cfg, key);
    else if (family == "crossing") body = run_crossing(cfg, key);
    else if (family == "decay") body = run_decay(cfg);
    else if (family == "harmonic") body = run_harmonic(cfg, key);
    else if (family == "positivity") body = run_positivity(cfg);
    else
        throw std::invalid_argument("unknown experiment family '" + family + "'");
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json meta;
    meta["family"] = family;
    meta["seed"] = seed;
    meta["workers"] = worker_count();
    meta["generator"] = kGeneratorId;
    meta["program"] = kProgramVersion;
    meta["wall_seconds"] = wall;
    json jcfg = json::object();
    for (const auto& [k, v] : cfg.entries()) jcfg[k] = v;
    meta["config"] = jcfg;
    if (!body.extra.is_null()) meta["summary"] = body.extra;

    RunRecord rec;
    rec.family = family;
    rec.csv = std::move(body.csv);
    rec.meta_json = meta.dump(2) + "\n";
    return rec;
}

void write_run_record(const RunRecord& rec, const std::string& out_prefix) {
    std::filesystem::path prefix(out_prefix);
    if (prefix.has_parent_path())
        std::filesystem::create_directories(prefix.parent_path());
    {
        std::ofstream out(out_prefix + ".csv", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + out_prefix + ".csv'");
        out << rec.csv;
    }
    {
        std::ofstream out(out_prefix + ".json", std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + out_prefix + ".json'");
        out << rec.meta_json;
    }
}

}  // namespace fkmc
