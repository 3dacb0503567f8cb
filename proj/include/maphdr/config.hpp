#pragma once

#include <string>

#include "maphdr/flow.hpp"
#include "maphdr/kernel_regression.hpp"
#include "maphdr/lowrank.hpp"

namespace maphdr {

/// Every pipeline tunable. Loaded from key=value files, overridable from the
/// command line; unknown keys and out-of-range values are rejected.
struct RunConfig {
    // Decomposition
    double alpha = 0.5;             // nuclear-norm weight
    std::string beta_rule = "sigma"; // "sigma": beta = beta_scale*sigma^2
                                     // "fixed": beta = beta_fixed
    double beta_scale = 0.5;
    double beta_fixed = 0.0;
    std::string gamma_rule = "scaled"; // "scaled": gamma = gamma_scale*beta
                                       // "fixed":  gamma = gamma_fixed
    double gamma_scale = 0.005;
    double gamma_fixed = 0.0;
    double w_s = 20.0;
    double w_t = 20.0;
    std::string support_prior = "mrf"; // "mrf" | "threshold"
    int outer_iters = 10;

    // Exposedness / response
    int z_th = -1;      // -1: round(0.05 * z_max)
    double gamma = 2.2; // exposure-boost gamma

    // Kernel regression
    double epsilon = 0.1; // ridge weight on fit coefficients
    double lambda = 0.01; // Frobenius penalty on the steering factor
    double kappa = 10.0;  // one-sided confidence falloff
    int window = 7;       // P (odd)
    int bfgs_iters = 10;  // J_BFGS

    // Pyramid / flow
    int levels = 3; // L
    double flow_lambda = 0.02;
    int flow_sor_iters = 100;
    double flow_omega = 1.8;

    unsigned seed = 1;
};

/// Parse key=value text ('#' comments, blank lines ignored) over defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Apply one "key=value" override in place.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Validation shared by the parser and the CLI (throws DataError).
void validate_config(const RunConfig& cfg);

/// Emit every key in canonical order; parse(serialize(c)) == c.
std::string serialize_config(const RunConfig& cfg);

/// Conversions into the module-level option structs.
DecomposeOptions decompose_options(const RunConfig& cfg);
RegressionConfig regression_config(const RunConfig& cfg);
FlowParams flow_params(const RunConfig& cfg, int levels);
int resolve_z_th(const RunConfig& cfg, int z_max);

} // namespace maphdr
