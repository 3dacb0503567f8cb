#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace maphdr {

// Binary matrix companion to the K x N data matrices (entries 0/1).
using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct CompletionResult {
    Eigen::MatrixXd B;
    int svt_iterations = 0;     // soft-threshold applications in the main loop
    int als_sweeps = 0;         // internal factored sweeps used to warm-start
    int rank = 0;               // rank of the accepted factorization
    double fixed_point_residual = 0.0;
};

// Background completion: finds a stationary point of the soft-impute map
//   B <- SVT_alpha(P_Omega(D) + P_Omega^c(B))
// on a K x N matrix (N = 3 in this pipeline). Internally the fixed point is
// located by rank-seeking alternating least squares over the observed entries
// (unobserved entries never bias the factors), then certified and refined by
// plain singular-value-threshold sweeps; the loop stops when the relative
// Frobenius change drops below tol or max_iters thresholding steps are spent.
// Throws DataError if any column of Omega is empty ("frame fully ill-exposed
// or foreground") or alpha <= 0.
CompletionResult complete_background(const Eigen::MatrixXd& D,
                                     const MaskMatrix& Omega, double alpha,
                                     int max_iters = 500, double tol = 1e-6);

// Sample standard deviation (n-1 denominator) of D-B over observed entries.
// Throws DataError with fewer than 2 observations.
double residual_sigma(const Eigen::MatrixXd& D, const Eigen::MatrixXd& B,
                      const MaskMatrix& Omega);

struct MrfWeights {
    double w_s = 20.0;  // spatial neighbor weight (4-connected, per frame)
    double w_t = 20.0;  // temporal neighbor weight (same pixel, next frame)
    double beta = 0.0;  // per-pixel foreground cost
    double gamma = 0.0; // smoothness multiplier
    bool pairwise = true; // pairwise disagreement prior; false = decoupled
};

// Exact binary support estimate. Pixels are the K x N grid (width*height
// pixels per column, N frame columns). Minimizes
//   E(S) = sum_p [(1-s_p) * 0.5 * m_p (d_p-b_p)^2 + s_p * beta]
//        + gamma * sum_{(p,q)} W_pq |s_p - s_q|
// by s-t min-cut when weights.pairwise, else the decoupled per-pixel
// threshold rule for the linear form of the smoothness term.
MaskMatrix update_support(const Eigen::MatrixXd& D, const Eigen::MatrixXd& B,
                          const MaskMatrix& M, int width, int height,
                          const MrfWeights& weights);

// The energy minimized by update_support, evaluated directly.
double support_energy(const Eigen::MatrixXd& D, const Eigen::MatrixXd& B,
                      const MaskMatrix& M, const MaskMatrix& S, int width,
                      int height, const MrfWeights& weights);

struct DecomposeOptions {
    double alpha = 0.5;
    int outer_iters = 10;
    double beta_scale = 0.5;   // beta = beta_scale * sigma_hat^2
    double gamma_scale = 0.005; // gamma = gamma_scale * beta
    double w_s = 20.0;
    double w_t = 20.0;
    bool pairwise = true;
    int completion_iters = 500;
    double completion_tol = 1e-6;
    // When false, beta/gamma are not recomputed from sigma_hat; the fixed
    // values below are used for every outer iteration.
    bool recompute_weights = true;
    double fixed_beta = 0.0;
    double fixed_gamma = 0.0;
};

struct DecomposeResult {
    Eigen::MatrixXd B;
    MaskMatrix S;
    int outer_iterations = 0;
    double sigma_hat = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    // Objective value (masked misfit + alpha*nuclear + beta*|S| + smoothness)
    // recorded after each outer iteration.
    std::vector<double> objective_trace;
};

// Alternates background completion and support estimation, starting from
// S = NOT M (ill-exposed pixels presumed foreground), until the support is
// unchanged or outer_iters is reached.
DecomposeResult decompose(const Eigen::MatrixXd& D, const MaskMatrix& M,
                          int width, int height, const DecomposeOptions& opts);

} // namespace maphdr
