#include "maphdr/optimizer.hpp"

#include <cmath>

#include "maphdr/errors.hpp"

namespace maphdr {

OptimizeResult minimize(const CostFunction& f, const Eigen::VectorXd& x0,
                        const OptimizeOptions& opts) {
    const int n = static_cast<int>(x0.size());
    Eigen::VectorXd x = x0;
    Eigen::VectorXd g(n);
    double fx = f(x, g);
    if (!std::isfinite(fx) || !g.allFinite())
        throw NumericError("cost or gradient non-finite at the start point");

    OptimizeResult res;
    res.x_opt = x;
    res.f_opt = fx;
    res.reason = StopReason::max_iters;

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
            res.converged = true;
            res.reason = StopReason::gradient_tol;
            return res;
        }

        Eigen::VectorXd d = -(H * g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            // Not a descent direction (numerical breakdown): reset to steepest.
            H.setIdentity();
            d = -g;
            slope = g.dot(d);
        }

        // Armijo backtracking from unit step.
        double step = 1.0;
        double f_new = 0.0;
        Eigen::VectorXd x_new(n), g_new(n);
        bool accepted = false;
        while (step > opts.min_step) {
            x_new = x + step * d;
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && g_new.allFinite() &&
                f_new <= fx + opts.armijo_c1 * step * slope &&
                f_new < fx) {
                accepted = true;
                break;
            }
            step *= opts.backtrack_shrink;
        }
        res.iterations = iter + 1;
        if (!accepted) {
            res.reason = StopReason::line_search_fail;
            return res;
        }

        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd yv = g_new - g;
        double sy = s.dot(yv);
        // Curvature guard keeps H positive definite (skip update otherwise).
        if (sy > 1e-12 * s.norm() * yv.norm()) {
            double rho = 1.0 / sy;
            Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
            Eigen::MatrixXd V = I - rho * s * yv.transpose();
            H = V * H * V.transpose() + rho * s * s.transpose();
            H = 0.5 * (H + H.transpose()); // keep exactly symmetric
        }

        x = x_new;
        g = g_new;
        fx = f_new;
        res.x_opt = x;
        res.f_opt = fx;
    }
    if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
        res.converged = true;
        res.reason = StopReason::gradient_tol;
    }
    return res;
}

} // namespace maphdr
