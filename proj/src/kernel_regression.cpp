#include "maphdr/kernel_regression.hpp"

#include <cmath>

#include "maphdr/errors.hpp"
#include "maphdr/optimizer.hpp"

namespace maphdr {

using Eigen::Matrix3d;
using Eigen::MatrixXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

MatrixXd design_matrix(const std::vector<LocalSample>& samples) {
    MatrixXd X(samples.size(), 4);
    for (size_t i = 0; i < samples.size(); ++i) {
        X(i, 0) = 1.0;
        X.row(i).tail<3>() = samples[i].offset.transpose();
    }
    return X;
}

double eval_kernel(const Matrix3d& R, const Vector3d& u) {
    return std::exp(-0.5 * (R * u).squaredNorm());
}

double omega_weight(double y_i, double y_c, double phi_c, double kappa,
                    bool frame_is_long) {
    double sigma = kappa * (1.0 - phi_c);
    double excess = frame_is_long ? y_i - y_c : y_c - y_i;
    if (excess <= 0.0) return 1.0;
    return std::exp(-sigma * excess * excess);
}

VectorXd nu_weights(const SteeringProblem& problem) {
    const auto& cfg = problem.config;
    VectorXd nu(problem.samples.size());
    for (size_t i = 0; i < problem.samples.size(); ++i) {
        const auto& s = problem.samples[i];
        nu(i) = s.phi * omega_weight(s.value, problem.center_value,
                                     problem.center_phi, cfg.kappa,
                                     problem.long_reference);
    }
    return nu;
}

VectorXd solve_ridge(const MatrixXd& X, const VectorXd& lam, const VectorXd& y,
                     double eps) {
    if (X.rows() != lam.size() || X.rows() != y.size())
        throw DataError("solve_ridge: shape mismatch");
    MatrixXd A = X.transpose() * lam.asDiagonal() * X;
    A.diagonal().array() += eps;
    VectorXd b = X.transpose() * (lam.asDiagonal() * y);
    if (eps == 0.0) {
        Eigen::FullPivLU<MatrixXd> lu(A);
        if (!lu.isInvertible())
            throw NumericError("singular normal matrix in local fit");
        return lu.solve(b);
    }
    return A.ldlt().solve(b);
}

namespace {

// Shared evaluation state for the cost and its gradient.
struct Workspace {
    MatrixXd X;
    VectorXd y;
    VectorXd nu;
    VectorXd k;    // kernel values at the current R
    VectorXd beta; // ridge coefficients
    VectorXd z;    // fit residual y - X beta
    VectorXd zt;   // saturation residual y - t
    MatrixXd A;    // X^T Lambda X + eps I
};

Workspace evaluate(const Matrix3d& R, const SteeringProblem& problem) {
    Workspace w;
    const auto& cfg = problem.config;
    const int n = static_cast<int>(problem.samples.size());
    w.X = design_matrix(problem.samples);
    w.y.resize(n);
    w.k.resize(n);
    w.zt.resize(n);
    for (int i = 0; i < n; ++i) {
        w.y(i) = problem.samples[i].value;
        w.k(i) = eval_kernel(R, problem.samples[i].offset);
        w.zt(i) = w.y(i) - problem.t_target;
    }
    w.nu = nu_weights(problem);
    VectorXd lam = w.k.cwiseProduct(w.nu);
    w.A = w.X.transpose() * lam.asDiagonal() * w.X;
    w.A.diagonal().array() += cfg.tikhonov;
    w.beta = w.A.ldlt().solve(w.X.transpose() * (lam.asDiagonal() * w.y));
    w.z = w.y - w.X * w.beta;
    return w;
}

} // namespace

double steering_cost(const Matrix3d& R, const SteeringProblem& problem) {
    const auto& cfg = problem.config;
    Workspace w = evaluate(R, problem);
    double fit = 0.0, sat = 0.0;
    for (int i = 0; i < w.y.size(); ++i) {
        fit += w.k(i) * w.nu(i) * w.z(i) * w.z(i);
        sat += w.k(i) * (1.0 - w.nu(i)) * w.zt(i) * w.zt(i);
    }
    return fit + sat + cfg.tikhonov * w.beta.squaredNorm() +
           cfg.steering_reg * R.squaredNorm();
}

Matrix3d steering_gradient(const Matrix3d& R, const SteeringProblem& problem) {
    const auto& cfg = problem.config;
    Workspace w = evaluate(R, problem);
    const int n = static_cast<int>(w.y.size());

    // d cost / d k_i collects the fit term, the saturation term, the
    // residual's dependence on beta, and the coefficient penalty:
    //   c_i = nu z^2 + (1-nu) zt^2 - 2 nu z g + 2 eps nu z h,
    // with g = X A^-1 X^T Lambda z and h = X A^-1 beta.
    VectorXd lam = w.k.cwiseProduct(w.nu);
    Eigen::LDLT<MatrixXd> ldlt(w.A);
    VectorXd g = w.X * ldlt.solve(w.X.transpose() * (lam.asDiagonal() * w.z));
    VectorXd h = w.X * ldlt.solve(w.beta);

    Matrix3d G = 2.0 * cfg.steering_reg * R;
    for (int i = 0; i < n; ++i) {
        double c = w.nu(i) * w.z(i) * w.z(i) +
                   (1.0 - w.nu(i)) * w.zt(i) * w.zt(i) -
                   2.0 * w.nu(i) * w.z(i) * g(i) +
                   2.0 * cfg.tikhonov * w.nu(i) * w.z(i) * h(i);
        // d k_i / d R = -k_i (R u_i) u_i^T
        const Vector3d& u = problem.samples[i].offset;
        G.noalias() -= (c * w.k(i)) * (R * u) * u.transpose();
    }
    return G.triangularView<Eigen::Upper>();
}

namespace {

Matrix3d unpack_upper(const VectorXd& x) {
    Matrix3d R = Matrix3d::Zero();
    R(0, 0) = x(0);
    R(0, 1) = x(1);
    R(0, 2) = x(2);
    R(1, 1) = x(3);
    R(1, 2) = x(4);
    R(2, 2) = x(5);
    return R;
}

VectorXd pack_upper(const Matrix3d& R) {
    VectorXd x(6);
    x << R(0, 0), R(0, 1), R(0, 2), R(1, 1), R(1, 2), R(2, 2);
    return x;
}

} // namespace

SteeringResult optimize_steering(const SteeringProblem& problem,
                                 const Matrix3d& R_init) {
    SteeringResult out;
    out.R = R_init;
    out.cost_initial = steering_cost(R_init, problem);
    out.cost_final = out.cost_initial;
    if (problem.config.bfgs_iters <= 0) return out;

    CostFunction f = [&](const VectorXd& x, VectorXd& grad) {
        Matrix3d R = unpack_upper(x);
        grad = pack_upper(steering_gradient(R, problem));
        return steering_cost(R, problem);
    };
    OptimizeOptions opts;
    opts.max_iters = problem.config.bfgs_iters;
    try {
        OptimizeResult res = minimize(f, pack_upper(R_init), opts);
        if (res.f_opt <= out.cost_initial && std::isfinite(res.f_opt)) {
            out.R = unpack_upper(res.x_opt);
            out.cost_final = res.f_opt;
        }
    } catch (const NumericError&) {
        out.fallback = true;
    }
    return out;
}

double ridge_center_value(const SteeringProblem& problem, const Matrix3d& R) {
    Workspace w = evaluate(R, problem);
    return w.beta(0);
}

double boosted_to_irradiance(double value, const ResponseCurve& crf,
                             int channel, double exposure_s,
                             double boost_gamma) {
    double zmax = static_cast<double>(crf.z_max());
    double code =
        zmax * (value < 0.0 ? -std::pow(-value, boost_gamma)
                            : std::pow(value, boost_gamma));
    return std::exp(crf.log_exposure(channel, code)) / exposure_s;
}

PixelEstimate estimate_pixel(const SteeringProblem& problem,
                             const Matrix3d& R_init, const ResponseCurve& crf,
                             int channel, double exposure_s,
                             double boost_gamma) {
    PixelEstimate out;
    VectorXd nu = nu_weights(problem);
    if (problem.samples.empty() || nu.sum() < 1e-9) {
        out.degenerate = true;
        out.R_opt = R_init;
        out.value = boosted_to_irradiance(problem.t_target, crf, channel,
                                          exposure_s, boost_gamma);
        return out;
    }
    SteeringResult sr = optimize_steering(problem, R_init);
    out.R_opt = sr.R;
    out.fallback = sr.fallback;
    out.cost_initial = sr.cost_initial;
    out.cost_final = sr.cost_final;
    double fitted = ridge_center_value(problem, sr.R);
    out.value =
        boosted_to_irradiance(fitted, crf, channel, exposure_s, boost_gamma);
    return out;
}

} // namespace maphdr
