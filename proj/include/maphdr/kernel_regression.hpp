#pragma once

#include <Eigen/Dense>
#include <vector>

#include "maphdr/response.hpp"

namespace maphdr {

/// One data point gathered from the 3-frame block around a pixel. `offset`
/// is (dx, dy, dt) relative to the center; `value` is the boosted-gamma
/// code normalized by the code range, so one unit spans the full range.
struct LocalSample {
    Eigen::Vector3d offset;
    double value = 0.0;
    double phi = 1.0;
    bool well_exposed = true;
};

struct RegressionConfig {
    int block_radius = 3;       // P = 2*block_radius + 1
    double tikhonov = 0.1;      // ridge weight on the fit coefficients
    double steering_reg = 0.01; // Frobenius penalty on the steering factor
    double kappa = 10.0;        // confidence falloff toward the bad side
    int bfgs_iters = 10;
};

/// Everything the per-pixel objective needs besides the steering factor.
struct SteeringProblem {
    std::vector<LocalSample> samples;
    double center_value = 0.0; // reference-frame value at the pixel
    double center_phi = 1.0;
    double t_target = 0.0; // saturation anchor, same domain as the values
    bool long_reference = true;
    RegressionConfig config;
};

struct PixelEstimate {
    double value = 0.0; // irradiance at the reference exposure
    Eigen::Matrix3d R_opt = Eigen::Matrix3d::Identity();
    bool degenerate = false; // no usable sample, value anchored to t_target
    bool fallback = false;   // optimizer failed, ridge at the initial factor
    double cost_initial = 0.0;
    double cost_final = 0.0;
};

/// Rows [1, dx, dy, dt] for the local linear model.
Eigen::MatrixXd design_matrix(const std::vector<LocalSample>& samples);

/// Unnormalized anisotropic Gaussian exp(-0.5*|R u|^2).
double eval_kernel(const Eigen::Matrix3d& R, const Eigen::Vector3d& u);

/// One-sided radiometric confidence. A long-exposure reference distrusts
/// samples brighter than the center, a short one distrusts darker samples;
/// the falloff steepens as the center's exposedness drops.
double omega_weight(double y_i, double y_c, double phi_c, double kappa,
                    bool frame_is_long);

/// Per-sample weights nu_i = phi_i * omega_i for the problem's samples.
Eigen::VectorXd nu_weights(const SteeringProblem& problem);

/// Weighted ridge solution (X^T L X + eps I)^-1 X^T L y with L = diag(lam).
/// eps = 0 requires a nonsingular normal matrix.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& X,
                            const Eigen::VectorXd& lam,
                            const Eigen::VectorXd& y, double eps);

/// Steering objective: kernel- and confidence-weighted fit residual, a
/// saturation anchor on low-confidence samples, and ridge penalties on the
/// coefficients and on R itself.
double steering_cost(const Eigen::Matrix3d& R, const SteeringProblem& problem);

/// Closed-form gradient of steering_cost with respect to the free (upper
/// triangular) entries of R; entries below the diagonal are zero.
Eigen::Matrix3d steering_gradient(const Eigen::Matrix3d& R,
                                  const SteeringProblem& problem);

/// Minimize steering_cost over upper-triangular R from R_init. Falls back
/// to R_init if the optimizer reports a non-finite cost.
struct SteeringResult {
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    bool fallback = false;
    double cost_initial = 0.0;
    double cost_final = 0.0;
};
SteeringResult optimize_steering(const SteeringProblem& problem,
                                 const Eigen::Matrix3d& R_init);

/// Fitted center value in the normalized boosted-gamma domain at a given
/// steering factor (the first coefficient of the weighted ridge fit).
double ridge_center_value(const SteeringProblem& problem,
                          const Eigen::Matrix3d& R);

/// Map a normalized boosted-gamma value back to irradiance at the given
/// exposure through one channel of the response curve.
double boosted_to_irradiance(double value, const ResponseCurve& crf,
                             int channel, double exposure_s,
                             double boost_gamma);

/// Full per-pixel estimate: optimize the steering factor, fit, and map the
/// result back to irradiance at the reference exposure.
PixelEstimate estimate_pixel(const SteeringProblem& problem,
                             const Eigen::Matrix3d& R_init,
                             const ResponseCurve& crf, int channel,
                             double exposure_s, double boost_gamma);

} // namespace maphdr
