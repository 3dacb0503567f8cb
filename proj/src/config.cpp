#include "maphdr/config.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "maphdr/errors.hpp"
#include "maphdr/io.hpp"

namespace maphdr {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        double x = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(x))
            throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "': bad number '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t used = 0;
        long x = std::stol(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(x);
    } catch (const std::exception&) {
        throw DataError("config key '" + key + "': bad integer '" + v + "'");
    }
}

// One setter per key keeps parsing, overrides, and serialization in sync.
using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"alpha", [](RunConfig& c, const std::string& v) { c.alpha = parse_double("alpha", v); }},
        {"beta_rule", [](RunConfig& c, const std::string& v) { c.beta_rule = v; }},
        {"beta_scale", [](RunConfig& c, const std::string& v) { c.beta_scale = parse_double("beta_scale", v); }},
        {"beta_fixed", [](RunConfig& c, const std::string& v) { c.beta_fixed = parse_double("beta_fixed", v); }},
        {"gamma_rule", [](RunConfig& c, const std::string& v) { c.gamma_rule = v; }},
        {"gamma_scale", [](RunConfig& c, const std::string& v) { c.gamma_scale = parse_double("gamma_scale", v); }},
        {"gamma_fixed", [](RunConfig& c, const std::string& v) { c.gamma_fixed = parse_double("gamma_fixed", v); }},
        {"w_s", [](RunConfig& c, const std::string& v) { c.w_s = parse_double("w_s", v); }},
        {"w_t", [](RunConfig& c, const std::string& v) { c.w_t = parse_double("w_t", v); }},
        {"support_prior", [](RunConfig& c, const std::string& v) { c.support_prior = v; }},
        {"outer_iters", [](RunConfig& c, const std::string& v) { c.outer_iters = parse_int("outer_iters", v); }},
        {"z_th", [](RunConfig& c, const std::string& v) { c.z_th = parse_int("z_th", v); }},
        {"gamma", [](RunConfig& c, const std::string& v) { c.gamma = parse_double("gamma", v); }},
        {"epsilon", [](RunConfig& c, const std::string& v) { c.epsilon = parse_double("epsilon", v); }},
        {"lambda", [](RunConfig& c, const std::string& v) { c.lambda = parse_double("lambda", v); }},
        {"kappa", [](RunConfig& c, const std::string& v) { c.kappa = parse_double("kappa", v); }},
        {"window", [](RunConfig& c, const std::string& v) { c.window = parse_int("window", v); }},
        {"bfgs_iters", [](RunConfig& c, const std::string& v) { c.bfgs_iters = parse_int("bfgs_iters", v); }},
        {"levels", [](RunConfig& c, const std::string& v) { c.levels = parse_int("levels", v); }},
        {"flow_lambda", [](RunConfig& c, const std::string& v) { c.flow_lambda = parse_double("flow_lambda", v); }},
        {"flow_sor_iters", [](RunConfig& c, const std::string& v) { c.flow_sor_iters = parse_int("flow_sor_iters", v); }},
        {"flow_omega", [](RunConfig& c, const std::string& v) { c.flow_omega = parse_double("flow_omega", v); }},
        {"seed", [](RunConfig& c, const std::string& v) {
             long s = parse_int("seed", v);
             if (s < 0) throw DataError("config key 'seed': must be >= 0");
             c.seed = static_cast<unsigned>(s);
         }},
    };
    return table;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void apply_override(RunConfig& cfg, const std::string& assignment) {
    size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw DataError("config assignment must be key=value: '" + assignment +
                        "'");
    std::string key = trim(assignment.substr(0, eq));
    std::string value = trim(assignment.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end())
        throw DataError("unknown config key: '" + key + "'");
    if (value.empty())
        throw DataError("config key '" + key + "': empty value");
    it->second(cfg, value);
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            apply_override(cfg, line);
        } catch (const DataError& e) {
            throw DataError("config line " + std::to_string(lineno) + ": " +
                            e.what());
        }
    }
    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    return parse_config(read_file(path));
}

void validate_config(const RunConfig& cfg) {
    auto require = [](bool ok, const char* msg) {
        if (!ok) throw DataError(std::string("config: ") + msg);
    };
    require(cfg.alpha > 0.0, "alpha must be positive");
    require(cfg.beta_rule == "sigma" || cfg.beta_rule == "fixed",
            "beta_rule must be 'sigma' or 'fixed'");
    require(cfg.beta_scale > 0.0, "beta_scale must be positive");
    require(cfg.beta_fixed >= 0.0, "beta_fixed must be >= 0");
    require(cfg.beta_rule != "fixed" || cfg.beta_fixed > 0.0,
            "beta_rule=fixed requires beta_fixed > 0");
    require(cfg.gamma_rule == "scaled" || cfg.gamma_rule == "fixed",
            "gamma_rule must be 'scaled' or 'fixed'");
    require(cfg.gamma_rule != "fixed" || cfg.beta_rule == "fixed",
            "gamma_rule=fixed requires beta_rule=fixed");
    require(cfg.gamma_scale >= 0.0, "gamma_scale must be >= 0");
    require(cfg.gamma_fixed >= 0.0, "gamma_fixed must be >= 0");
    require(cfg.w_s >= 0.0 && cfg.w_t >= 0.0,
            "smoothness weights must be >= 0");
    require(cfg.support_prior == "mrf" || cfg.support_prior == "threshold",
            "support_prior must be 'mrf' or 'threshold'");
    require(cfg.outer_iters >= 1, "outer_iters must be >= 1");
    require(cfg.z_th >= -1, "z_th must be >= 0 (or -1 for automatic)");
    require(cfg.gamma > 0.0, "gamma must be positive");
    require(cfg.epsilon >= 0.0, "epsilon must be >= 0");
    require(cfg.lambda >= 0.0, "lambda must be >= 0");
    require(cfg.kappa >= 0.0, "kappa must be >= 0");
    require(cfg.window >= 1 && cfg.window % 2 == 1,
            "window must be odd and >= 1");
    require(cfg.bfgs_iters >= 0, "bfgs_iters must be >= 0");
    require(cfg.levels >= 1, "levels must be >= 1");
    require(cfg.flow_lambda > 0.0, "flow_lambda must be positive");
    require(cfg.flow_sor_iters >= 1, "flow_sor_iters must be >= 1");
    require(cfg.flow_omega > 0.0 && cfg.flow_omega < 2.0,
            "flow_omega must lie in (0, 2)");
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream os;
    os << "alpha=" << fmt(cfg.alpha) << "\n";
    os << "beta_rule=" << cfg.beta_rule << "\n";
    os << "beta_scale=" << fmt(cfg.beta_scale) << "\n";
    os << "beta_fixed=" << fmt(cfg.beta_fixed) << "\n";
    os << "gamma_rule=" << cfg.gamma_rule << "\n";
    os << "gamma_scale=" << fmt(cfg.gamma_scale) << "\n";
    os << "gamma_fixed=" << fmt(cfg.gamma_fixed) << "\n";
    os << "w_s=" << fmt(cfg.w_s) << "\n";
    os << "w_t=" << fmt(cfg.w_t) << "\n";
    os << "support_prior=" << cfg.support_prior << "\n";
    os << "outer_iters=" << cfg.outer_iters << "\n";
    os << "z_th=" << cfg.z_th << "\n";
    os << "gamma=" << fmt(cfg.gamma) << "\n";
    os << "epsilon=" << fmt(cfg.epsilon) << "\n";
    os << "lambda=" << fmt(cfg.lambda) << "\n";
    os << "kappa=" << fmt(cfg.kappa) << "\n";
    os << "window=" << cfg.window << "\n";
    os << "bfgs_iters=" << cfg.bfgs_iters << "\n";
    os << "levels=" << cfg.levels << "\n";
    os << "flow_lambda=" << fmt(cfg.flow_lambda) << "\n";
    os << "flow_sor_iters=" << cfg.flow_sor_iters << "\n";
    os << "flow_omega=" << fmt(cfg.flow_omega) << "\n";
    os << "seed=" << cfg.seed << "\n";
    return os.str();
}

DecomposeOptions decompose_options(const RunConfig& cfg) {
    DecomposeOptions opts;
    opts.alpha = cfg.alpha;
    opts.outer_iters = cfg.outer_iters;
    opts.beta_scale = cfg.beta_scale;
    opts.gamma_scale = cfg.gamma_scale;
    opts.w_s = cfg.w_s;
    opts.w_t = cfg.w_t;
    opts.pairwise = cfg.support_prior == "mrf";
    if (cfg.beta_rule == "fixed") {
        opts.recompute_weights = false;
        opts.fixed_beta = cfg.beta_fixed;
        opts.fixed_gamma = cfg.gamma_rule == "fixed"
                               ? cfg.gamma_fixed
                               : cfg.gamma_scale * cfg.beta_fixed;
    }
    return opts;
}

RegressionConfig regression_config(const RunConfig& cfg) {
    RegressionConfig rc;
    rc.block_radius = (cfg.window - 1) / 2;
    rc.tikhonov = cfg.epsilon;
    rc.steering_reg = cfg.lambda;
    rc.kappa = cfg.kappa;
    rc.bfgs_iters = cfg.bfgs_iters;
    return rc;
}

FlowParams flow_params(const RunConfig& cfg, int levels) {
    FlowParams fp;
    fp.levels = levels;
    fp.lambda = cfg.flow_lambda;
    fp.sor_iters = cfg.flow_sor_iters;
    fp.omega = cfg.flow_omega;
    return fp;
}

int resolve_z_th(const RunConfig& cfg, int z_max) {
    if (cfg.z_th >= 0) return cfg.z_th;
    return static_cast<int>(std::lround(0.05 * z_max));
}

} // namespace maphdr
