#pragma once

#include <Eigen/Dense>
#include <functional>

namespace maphdr {

// Cost oracle: returns f(x) and writes the gradient into grad.
using CostFunction =
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

enum class StopReason { gradient_tol, max_iters, line_search_fail };

struct OptimizeResult {
    Eigen::VectorXd x_opt;
    double f_opt = 0.0;
    int iterations = 0;
    bool converged = false;
    StopReason reason = StopReason::max_iters;
};

struct OptimizeOptions {
    int max_iters = 100;
    double grad_tol = 1e-6;
    double armijo_c1 = 1e-4;
    double backtrack_shrink = 0.5;
    double min_step = 1e-14;
};

// Dense BFGS with Armijo backtracking. Accepted steps strictly decrease f;
// the inverse-Hessian update is skipped when the curvature condition fails.
// Throws NumericError if f or its gradient is non-finite at x0.
OptimizeResult minimize(const CostFunction& f, const Eigen::VectorXd& x0,
                        const OptimizeOptions& opts = {});

} // namespace maphdr
