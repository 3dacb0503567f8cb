#include "maphdr/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "maphdr/errors.hpp"
#include "maphdr/mincut.hpp"

namespace maphdr {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Soft singular-value threshold of a K x N matrix.
MatrixXd svt(const MatrixXd& C, double alpha) {
    Eigen::JacobiSVD<MatrixXd> svd(C,
                                   Eigen::ComputeThinU | Eigen::ComputeThinV);
    VectorXd s = (svd.singularValues().array() - alpha).max(0.0).matrix();
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

// Truncated pseudo-inverse of a small symmetric PSD matrix. Unbiased for
// well-conditioned systems; minimum-norm on genuinely singular ones. A plain
// ridge here would bias near-singular row solves and corrupt the factors.
MatrixXd pinv_small(const MatrixXd& A) {
    Eigen::JacobiSVD<MatrixXd> svd(A,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& s = svd.singularValues();
    double cutoff = s.size() ? 1e-12 * s(0) : 0.0;
    VectorXd inv = VectorXd::Zero(s.size());
    for (int i = 0; i < s.size(); ++i)
        if (s(i) > cutoff) inv(i) = 1.0 / s(i);
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Right factor spanning the rank-r row space visible in rows with at least
// r+1 observations (rows with <= r observations fit any r-dimensional row
// space exactly and carry no rank information).
MatrixXd rowspace_init(const MatrixXd& D, const MaskMatrix& Om, int r) {
    const int K = static_cast<int>(D.rows());
    const int N = static_cast<int>(D.cols());
    int need = std::min(r + 1, N);
    std::vector<int> rows;
    for (int k = 0; k < K; ++k) {
        int cnt = 0;
        for (int c = 0; c < N; ++c) cnt += Om(k, c);
        if (cnt >= need) rows.push_back(k);
    }
    if (static_cast<int>(rows.size()) < r) {
        rows.resize(K);
        for (int k = 0; k < K; ++k) rows[k] = k;
    }
    MatrixXd sub(rows.size(), N);
    for (size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < N; ++c)
            sub(i, c) = Om(rows[i], c) ? D(rows[i], c) : 0.0;
    Eigen::JacobiSVD<MatrixXd> svd(sub, Eigen::ComputeThinV);
    return svd.matrixV().leftCols(r);
}

struct AlsOutcome {
    MatrixXd B;
    int sweeps = 0;
};

// Alternating least squares for B = X * Y^T at fixed rank r, fitting observed
// entries only. Rows are grouped by observation pattern so each group shares
// one small normal matrix.
AlsOutcome als_phase(const MatrixXd& D, const MaskMatrix& Om, int r,
                     const MatrixXd& Y0, int max_sweeps, double settle) {
    const int K = static_cast<int>(D.rows());
    const int N = static_cast<int>(D.cols());

    struct Group {
        std::vector<int> rows;
        std::vector<int> cols;
        MatrixXd data; // |rows| x |cols| gather of D
    };
    std::map<int, Group> by_pattern;
    for (int k = 0; k < K; ++k) {
        int pat = 0;
        for (int c = 0; c < N; ++c)
            if (Om(k, c)) pat |= 1 << c;
        if (pat) by_pattern[pat].rows.push_back(k);
    }
    std::vector<Group> groups;
    for (auto& [pat, g] : by_pattern) {
        for (int c = 0; c < N; ++c)
            if (pat & (1 << c)) g.cols.push_back(c);
        g.data.resize(g.rows.size(), g.cols.size());
        for (size_t i = 0; i < g.rows.size(); ++i)
            for (size_t j = 0; j < g.cols.size(); ++j)
                g.data(i, j) = D(g.rows[i], g.cols[j]);
        groups.push_back(std::move(g));
    }

    std::vector<std::vector<int>> col_rows(N);
    for (int k = 0; k < K; ++k)
        for (int c = 0; c < N; ++c)
            if (Om(k, c)) col_rows[c].push_back(k);
    std::vector<VectorXd> col_data(N);
    for (int c = 0; c < N; ++c) {
        col_data[c].resize(col_rows[c].size());
        for (size_t i = 0; i < col_rows[c].size(); ++i)
            col_data[c](i) = D(col_rows[c][i], c);
    }

    MatrixXd Y = Y0;
    MatrixXd X = MatrixXd::Zero(K, r);
    MatrixXd B_prev;
    bool have_prev = false;
    AlsOutcome out;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        out.sweeps = sweep;
        for (const Group& g : groups) {
            MatrixXd Yc(g.cols.size(), r);
            for (size_t j = 0; j < g.cols.size(); ++j)
                Yc.row(j) = Y.row(g.cols[j]);
            MatrixXd P = pinv_small(Yc.transpose() * Yc);
            MatrixXd Xg = g.data * Yc * P;
            for (size_t i = 0; i < g.rows.size(); ++i)
                X.row(g.rows[i]) = Xg.row(i);
        }
        for (int c = 0; c < N; ++c) {
            if (col_rows[c].empty()) continue;
            MatrixXd Xr(col_rows[c].size(), r);
            for (size_t i = 0; i < col_rows[c].size(); ++i)
                Xr.row(i) = X.row(col_rows[c][i]);
            MatrixXd P = pinv_small(Xr.transpose() * Xr);
            Y.row(c) = (P * (Xr.transpose() * col_data[c])).transpose();
        }
        MatrixXd B = X * Y.transpose();
        if (have_prev) {
            double denom = std::max(B_prev.norm(), 1e-300);
            if ((B - B_prev).norm() / denom < settle) {
                B_prev = std::move(B);
                break;
            }
        }
        B_prev = std::move(B);
        have_prev = true;
    }
    out.B = std::move(B_prev);
    return out;
}

} // namespace

CompletionResult complete_background(const MatrixXd& D, const MaskMatrix& Omega,
                                     double alpha, int max_iters, double tol) {
    const int K = static_cast<int>(D.rows());
    const int N = static_cast<int>(D.cols());
    if (Omega.rows() != K || Omega.cols() != N)
        throw DataError("observation mask shape does not match data");
    if (!(alpha > 0.0)) throw DataError("alpha must be positive");
    if (!(tol > 0.0)) throw DataError("tol must be positive");
    for (int c = 0; c < N; ++c) {
        bool any = false;
        for (int k = 0; k < K && !any; ++k) any = Omega(k, c) != 0;
        if (!any) throw DataError("frame fully ill-exposed or foreground");
    }

    MatrixXd PD = MatrixXd::Zero(K, N);
    for (int k = 0; k < K; ++k)
        for (int c = 0; c < N; ++c)
            if (Omega(k, c)) PD(k, c) = D(k, c);

    Eigen::ArrayXXd fill_mask(K, N); // 1 where unobserved
    for (int k = 0; k < K; ++k)
        for (int c = 0; c < N; ++c) fill_mask(k, c) = Omega(k, c) ? 0.0 : 1.0;

    CompletionResult res;
    MatrixXd B = PD;
    const int max_rank = std::min<int>(N, K);
    constexpr int kAlsSweepCap = 200;
    constexpr double kAlsSettle = 1e-11;
    for (int r = 1; r <= max_rank; ++r) {
        MatrixXd Y0 = rowspace_init(D, Omega, r);
        AlsOutcome als = als_phase(D, Omega, r, Y0, kAlsSweepCap, kAlsSettle);
        res.als_sweeps += als.sweeps;
        B = std::move(als.B);
        MatrixXd C = PD + (fill_mask * B.array()).matrix();
        Eigen::JacobiSVD<MatrixXd> svd(C);
        double tail = r < svd.singularValues().size()
                          ? svd.singularValues()(r)
                          : 0.0;
        if (tail <= alpha) break;
    }

    // Plain soft-impute sweeps: certify (and refine) the stationary point of
    // the thresholding map the solver promises.
    double rel = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        MatrixXd C = PD + (fill_mask * B.array()).matrix();
        MatrixXd Bn = svt(C, alpha);
        rel = (Bn - B).norm() / std::max(B.norm(), 1e-300);
        B = std::move(Bn);
        res.svt_iterations = it + 1;
        if (rel < tol) break;
    }

    {
        MatrixXd C = PD + (fill_mask * B.array()).matrix();
        MatrixXd Bn = svt(C, alpha);
        res.fixed_point_residual = (Bn - B).norm() / std::max(B.norm(), 1e-300);
    }
    {
        Eigen::JacobiSVD<MatrixXd> svd(B);
        double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > 1e-10 * std::max(top, 1e-300))
                ++res.rank;
    }
    res.B = std::move(B);
    return res;
}

double residual_sigma(const MatrixXd& D, const MatrixXd& B,
                      const MaskMatrix& Omega) {
    if (D.rows() != B.rows() || D.cols() != B.cols() ||
        Omega.rows() != D.rows() || Omega.cols() != D.cols())
        throw DataError("residual_sigma: shape mismatch");
    long n = 0;
    double mean = 0.0;
    for (int k = 0; k < D.rows(); ++k)
        for (int c = 0; c < D.cols(); ++c)
            if (Omega(k, c)) {
                mean += D(k, c) - B(k, c);
                ++n;
            }
    if (n < 2)
        throw DataError("residual_sigma needs at least 2 observed entries");
    mean /= n;
    double ss = 0.0;
    for (int k = 0; k < D.rows(); ++k)
        for (int c = 0; c < D.cols(); ++c)
            if (Omega(k, c)) {
                double d = D(k, c) - B(k, c) - mean;
                ss += d * d;
            }
    return std::sqrt(ss / (n - 1));
}

namespace {

inline double unary_cost(const MatrixXd& D, const MatrixXd& B,
                         const MaskMatrix& M, int k, int c) {
    if (!M(k, c)) return 0.0;
    double d = D(k, c) - B(k, c);
    return 0.5 * d * d;
}

} // namespace

MaskMatrix update_support(const MatrixXd& D, const MatrixXd& B,
                          const MaskMatrix& M, int width, int height,
                          const MrfWeights& weights) {
    const int K = width * height;
    const int N = static_cast<int>(D.cols());
    if (D.rows() != K || B.rows() != K || M.rows() != K || B.cols() != N ||
        M.cols() != N)
        throw DataError("update_support: shape mismatch");

    MaskMatrix S(K, N);
    if (!weights.pairwise) {
        // Literal linear smoothness: the term decouples, adding the column sum
        // of W at each pixel to the label-1 cost.
        for (int j = 0; j < N; ++j)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    int p = y * width + x;
                    int spatial = (x > 0) + (x < width - 1) + (y > 0) +
                                  (y < height - 1);
                    int temporal = (j > 0) + (j < N - 1);
                    double on_cost =
                        weights.beta + weights.gamma * (weights.w_s * spatial +
                                                        weights.w_t * temporal);
                    S(p, j) = unary_cost(D, B, M, p, j) > on_cost ? 1 : 0;
                }
        return S;
    }

    const int src = K * N, snk = K * N + 1;
    MaxFlow g(K * N + 2);
    auto id = [&](int p, int j) { return j * K + p; };
    double ws = weights.gamma * weights.w_s;
    double wt = weights.gamma * weights.w_t;

    // Normalize capacities so the solver's epsilon is relative to the
    // instance scale; the argmin is invariant under positive scaling.
    double cap_max = std::max({weights.beta, ws, wt});
    for (int j = 0; j < N; ++j)
        for (int p = 0; p < K; ++p)
            cap_max = std::max(cap_max, unary_cost(D, B, M, p, j));
    if (cap_max <= 0.0) {
        S.setZero();
        return S;
    }
    const double scale = 1.0 / cap_max;

    for (int j = 0; j < N; ++j)
        for (int p = 0; p < K; ++p) {
            if (weights.beta > 0.0)
                g.add_edge(src, id(p, j), scale * weights.beta);
            double off = unary_cost(D, B, M, p, j);
            if (off > 0.0) g.add_edge(id(p, j), snk, scale * off);
        }
    if (ws > 0.0) {
        double c = scale * ws;
        for (int j = 0; j < N; ++j)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    int p = y * width + x;
                    if (x + 1 < width) g.add_edge(id(p, j), id(p + 1, j), c, c);
                    if (y + 1 < height)
                        g.add_edge(id(p, j), id(p + width, j), c, c);
                }
    }
    if (wt > 0.0) {
        double c = scale * wt;
        for (int j = 0; j + 1 < N; ++j)
            for (int p = 0; p < K; ++p)
                g.add_edge(id(p, j), id(p, j + 1), c, c);
    }

    g.solve(src, snk);
    for (int j = 0; j < N; ++j)
        for (int p = 0; p < K; ++p)
            S(p, j) = g.reachable_from_source(id(p, j)) ? 0 : 1;
    return S;
}

double support_energy(const MatrixXd& D, const MatrixXd& B, const MaskMatrix& M,
                      const MaskMatrix& S, int width, int height,
                      const MrfWeights& weights) {
    const int K = width * height;
    const int N = static_cast<int>(D.cols());
    double e = 0.0;
    for (int j = 0; j < N; ++j)
        for (int p = 0; p < K; ++p)
            e += S(p, j) ? weights.beta : unary_cost(D, B, M, p, j);
    if (weights.pairwise) {
        for (int j = 0; j < N; ++j)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    int p = y * width + x;
                    if (x + 1 < width && S(p, j) != S(p + 1, j))
                        e += weights.gamma * weights.w_s;
                    if (y + 1 < height && S(p, j) != S(p + width, j))
                        e += weights.gamma * weights.w_s;
                }
        for (int j = 0; j + 1 < N; ++j)
            for (int p = 0; p < K; ++p)
                if (S(p, j) != S(p, j + 1)) e += weights.gamma * weights.w_t;
    } else {
        for (int j = 0; j < N; ++j)
            for (int y = 0; y < height; ++y)
                for (int x = 0; x < width; ++x) {
                    int p = y * width + x;
                    if (!S(p, j)) continue;
                    int spatial = (x > 0) + (x < width - 1) + (y > 0) +
                                  (y < height - 1);
                    int temporal = (j > 0) + (j < N - 1);
                    e += weights.gamma *
                         (weights.w_s * spatial + weights.w_t * temporal);
                }
    }
    return e;
}

DecomposeResult decompose(const MatrixXd& D, const MaskMatrix& M, int width,
                          int height, const DecomposeOptions& opts) {
    const int K = width * height;
    const int N = static_cast<int>(D.cols());
    if (D.rows() != K || M.rows() != K || M.cols() != N)
        throw DataError("decompose: shape mismatch");
    if (opts.outer_iters < 1) throw DataError("outer_iters must be >= 1");

    DecomposeResult res;
    // Ill-exposed pixels are presumed foreground at the start, making the
    // first completion observe exactly the well-exposed set.
    MaskMatrix S(K, N);
    for (int k = 0; k < K; ++k)
        for (int c = 0; c < N; ++c) S(k, c) = M(k, c) ? 0 : 1;

    MrfWeights w;
    w.w_s = opts.w_s;
    w.w_t = opts.w_t;
    w.pairwise = opts.pairwise;

    for (int it = 0; it < opts.outer_iters; ++it) {
        MaskMatrix Omega(K, N);
        for (int k = 0; k < K; ++k)
            for (int c = 0; c < N; ++c) Omega(k, c) = M(k, c) && !S(k, c);
        CompletionResult comp = complete_background(
            D, Omega, opts.alpha, opts.completion_iters, opts.completion_tol);
        res.B = std::move(comp.B);
        res.sigma_hat = residual_sigma(D, res.B, Omega);
        if (opts.recompute_weights) {
            // Floor keeps a noiseless fit from labeling everything foreground.
            w.beta = std::max(opts.beta_scale * res.sigma_hat * res.sigma_hat,
                              1e-12);
            w.gamma = opts.gamma_scale * w.beta;
        } else {
            w.beta = opts.fixed_beta;
            w.gamma = opts.fixed_gamma;
        }
        MaskMatrix S_new = update_support(D, res.B, M, width, height, w);
        res.outer_iterations = it + 1;

        {
            // The support energy already contains the masked misfit as its
            // label-0 unary part, so the joint objective is just
            // alpha * nuclear norm + support energy.
            Eigen::JacobiSVD<MatrixXd> svd(res.B);
            double nuclear = svd.singularValues().sum();
            res.objective_trace.push_back(
                opts.alpha * nuclear +
                support_energy(D, res.B, M, S_new, width, height, w));
        }

        bool unchanged = true;
        for (int k = 0; k < K && unchanged; ++k)
            for (int c = 0; c < N && unchanged; ++c)
                unchanged = S(k, c) == S_new(k, c);
        S = std::move(S_new);
        res.beta = w.beta;
        res.gamma = w.gamma;
        if (unchanged) break;
    }
    res.S = std::move(S);
    return res;
}

} // namespace maphdr
