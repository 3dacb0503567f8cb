#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "maphdr/errors.hpp"
#include "maphdr/optimizer.hpp"

using namespace maphdr;
using Eigen::VectorXd;

namespace {

double quadratic(const VectorXd& x, VectorXd& g, const VectorXd& c) {
    g = 2.0 * (x - c);
    return (x - c).squaredNorm();
}

double rosenbrock(const VectorXd& x, VectorXd& g) {
    double a = 1.0 - x[0];
    double b = x[1] - x[0] * x[0];
    g.resize(2);
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

} // namespace

TEST_CASE("quadratic solved in at most 3 iterations") {
    VectorXd c(3);
    c << 1.0, 2.0, 3.0;
    CostFunction f = [&](const VectorXd& x, VectorXd& g) {
        return quadratic(x, g, c);
    };
    OptimizeOptions opts;
    opts.grad_tol = 1e-10;
    auto res = minimize(f, VectorXd::Zero(3), opts);
    CHECK(res.converged);
    CHECK(res.iterations <= 3);
    CHECK((res.x_opt - c).norm() < 1e-8);
}

TEST_CASE("Rosenbrock reaches the known minimum") {
    CostFunction f = [](const VectorXd& x, VectorXd& g) {
        return rosenbrock(x, g);
    };
    VectorXd x0(2);
    x0 << -1.2, 1.0;
    OptimizeOptions opts;
    opts.max_iters = 100;
    opts.grad_tol = 1e-10;
    auto res = minimize(f, x0, opts);
    CHECK(res.f_opt < 1e-8);
    CHECK(res.iterations <= 100);
    CHECK(res.x_opt[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(res.x_opt[1] == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("zero iteration budget returns the start point") {
    CostFunction f = [](const VectorXd& x, VectorXd& g) {
        g = 2.0 * x;
        return x.squaredNorm();
    };
    VectorXd x0(2);
    x0 << 5.0, -3.0;
    OptimizeOptions opts;
    opts.max_iters = 0;
    opts.grad_tol = 1e-30; // never satisfied, even at the start
    auto res = minimize(f, x0, opts);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 0);
    CHECK(res.x_opt == x0);
    CHECK(res.f_opt == doctest::Approx(34.0));
}

TEST_CASE("cost is monotone non-increasing in the iteration budget") {
    CostFunction f = [&](const VectorXd& x, VectorXd& g) {
        return rosenbrock(x, g);
    };
    VectorXd x0(2);
    x0 << -1.2, 1.0;

    VectorXd g0(2);
    double prev = rosenbrock(x0, g0);
    for (int budget = 1; budget <= 20; ++budget) {
        OptimizeOptions opts;
        opts.max_iters = budget;
        opts.grad_tol = 1e-14;
        auto res = minimize(f, x0, opts);
        CHECK(res.f_opt <= prev + 1e-15);
        prev = res.f_opt;
    }
}

TEST_CASE("non-finite start cost raises") {
    CostFunction f = [](const VectorXd& x, VectorXd& g) {
        g = x;
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(minimize(f, VectorXd::Zero(2)), NumericError);
}

TEST_CASE("line-search failure reports best-so-far") {
    // |x| has a kink at the minimum; the gradient never vanishes, so the
    // search must eventually fail to make progress and say so.
    CostFunction f = [](const VectorXd& x, VectorXd& g) {
        g.resize(1);
        g[0] = x[0] >= 0.0 ? 1.0 : -1.0;
        return std::abs(x[0]);
    };
    VectorXd x0(1);
    x0 << 0.7;
    OptimizeOptions opts;
    opts.max_iters = 200;
    opts.grad_tol = 1e-12;
    auto res = minimize(f, x0, opts);
    CHECK(res.reason == StopReason::line_search_fail);
    CHECK(res.f_opt <= 0.7);
    CHECK(std::abs(res.x_opt[0]) == doctest::Approx(res.f_opt));
}
