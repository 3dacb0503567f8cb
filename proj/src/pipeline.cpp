#include "maphdr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "maphdr/errors.hpp"
#include "maphdr/flow.hpp"
#include "maphdr/kernel_regression.hpp"
#include "maphdr/lowrank.hpp"
#include "maphdr/pyramid.hpp"

namespace maphdr {

namespace {

using Eigen::MatrixXd;

// Per-frame, per-level view used by the regression: warped values and codes
// with exposedness recomputed from the warped codes.
struct LevelFrame {
    Image<double> V;       // boosted values, normalized by the code range
    Image<double> z;       // capture-domain codes
    Image<double> V_lum;   // luminance of V (steering shares one factor)
    Image<double> phi;     // exposedness, min over channels
    Image<uint8_t> M;      // strict well-exposed window, all channels
    Image<uint8_t> valid;  // warp stayed inside the source image
};

Image<double> codes_as_image(const LdrFrame& frame) {
    Image<double> img(frame.width, frame.height, frame.channels);
    for (size_t i = 0; i < frame.data.size(); ++i)
        img.data[i] = static_cast<double>(frame.data[i]);
    return img;
}

// Exposedness and mask follow the (possibly warped) codes so every level
// re-derives them from the same quantity the samples are read from.
void derive_exposedness(LevelFrame& lf, int z_max, int z_th, bool is_long) {
    const int w = lf.z.width, h = lf.z.height, C = lf.z.channels;
    lf.phi = Image<double>(w, h, 1);
    lf.M = Image<uint8_t>(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double phi = 1.0;
            bool well = true;
            for (int c = 0; c < C; ++c) {
                double z = lf.z.at(x, y, c);
                phi = std::min(phi, phi_of_code(z, z_max, z_th, is_long));
                well = well && z > z_th && z < z_max - z_th;
            }
            lf.phi.at(x, y) = phi;
            lf.M.at(x, y) = well ? 1 : 0;
        }
}

// Log-luminance view used by the flow refinement; irradiance is positive by
// construction but completed backgrounds are floored defensively.
Image<double> log_luminance(const IrradianceFrame& frame) {
    Image<double> lum = luminance(frame);
    for (double& v : lum.data) v = std::log(std::max(v, 1e-12));
    return lum;
}

bool window_alternates(const double dt[3]) {
    return dt[0] == dt[2] && dt[0] != dt[1];
}

} // namespace

std::vector<Image<uint8_t>> support_pyramid(const Image<uint8_t>& support,
                                            int levels) {
    return build_mask_pyramid(support, levels);
}

IrradianceFrame synthesize_frame(const SynthesisJob& job, FrameStats* stats) {
    const auto t_start = std::chrono::steady_clock::now();
    const RunConfig& cfg = job.params;
    validate_config(cfg);
    const ResponseCurve& crf = job.crf;

    const int N = static_cast<int>(job.frames.size());
    if (N < 3) throw DataError("synthesis needs at least 3 frames");
    const int r = job.reference_index;
    if (r < 1 || r > N - 2)
        throw DataError("reference frame needs neighbors on both sides");

    const LdrFrame* win[3] = {&job.frames[r - 1], &job.frames[r],
                              &job.frames[r + 1]};
    const int z_max = crf.z_max();
    for (int j = 0; j < 3; ++j) {
        validate_frame(*win[j], z_max);
        if (win[j]->width != win[1]->width || win[j]->height != win[1]->height ||
            win[j]->channels != win[1]->channels)
            throw DataError("window frames disagree on dimensions");
    }
    if (win[1]->channels != crf.channels())
        throw DataError("frame channels do not match the response curve");

    const int w = win[1]->width, h = win[1]->height, C = win[1]->channels;
    const size_t K = static_cast<size_t>(w) * h;
    double dt[3] = {win[0]->exposure_s, win[1]->exposure_s, win[2]->exposure_s};

    FrameStats local;
    local.reference_index = r;
    local.exposures_alternate = window_alternates(dt);

    // ---- Decomposition on the luminance irradiance window ----
    IrradianceFrame irr[3];
    Image<uint8_t> mask[3];
    MatrixXd D(K, 3);
    MaskMatrix M(K, 3);
    for (int j = 0; j < 3; ++j) {
        irr[j] = inverse_response(*win[j], crf);
        mask[j] = well_exposed_mask(*win[j], crf);
        Image<double> lum = luminance(irr[j]);
        for (size_t p = 0; p < K; ++p) {
            D(p, j) = lum.data[p];
            M(p, j) = mask[j].data[p];
        }
    }
    DecomposeResult dec = decompose(D, M, w, h, decompose_options(cfg));
    local.outer_iterations = dec.outer_iterations;
    local.sigma_hat = dec.sigma_hat;

    // ---- Per-channel background refit holding the final support fixed ----
    MaskMatrix Omega(K, 3);
    for (size_t p = 0; p < K; ++p)
        for (int j = 0; j < 3; ++j)
            Omega(p, j) = (M(p, j) != 0 && dec.S(p, j) == 0) ? 1 : 0;
    Image<double> B_ref(w, h, C);
    {
        MatrixXd Dc(K, 3);
        for (int c = 0; c < C; ++c) {
            for (size_t p = 0; p < K; ++p)
                for (int j = 0; j < 3; ++j)
                    Dc(p, j) = irr[j].data[p * C + c];
            CompletionResult cr = complete_background(Dc, Omega, cfg.alpha);
            for (size_t p = 0; p < K; ++p)
                B_ref.data[p * C + c] = cr.B(p, 1);
        }
    }

    Image<uint8_t> S_ref(w, h, 1);
    for (size_t p = 0; p < K; ++p) S_ref.data[p] = dec.S(p, 1);
    local.support_pixels =
        static_cast<int>(std::count(S_ref.data.begin(), S_ref.data.end(), 1));
    local.support = S_ref;

    // ---- Pyramids ----
    const int L = cfg.levels;
    Pyramid Bp = build_pyramid(B_ref, L);
    std::vector<Image<uint8_t>> Sp = support_pyramid(S_ref, L);
    const int z_th = crf.z_th();
    const double dt_ref = dt[1];
    const double dt_max = std::max({dt[0], dt[1], dt[2]});
    Pyramid Vp[3], zp[3];
    bool frame_long[3];
    for (int j = 0; j < 3; ++j) {
        Image<double> V = exposure_boost(*win[j], crf, dt_ref, cfg.gamma);
        for (double& v : V.data) v /= static_cast<double>(z_max);
        Vp[j] = build_pyramid(V, L);
        zp[j] = build_pyramid(codes_as_image(*win[j]), L);
        frame_long[j] = dt[j] >= dt_max;
    }

    const bool ref_long = frame_long[1];
    const double t_code = ref_long ? static_cast<double>(z_max - z_th)
                                   : static_cast<double>(z_th);
    const double t_norm = std::pow(t_code / z_max, 1.0 / cfg.gamma);
    const RegressionConfig rcfg = regression_config(cfg);
    const int R = rcfg.block_radius;
    const FlowParams refine_params = flow_params(cfg, 1);

    FlowField flow[2]; // accumulated displacement of the two neighbors
    std::vector<Eigen::Matrix3d> R_prev;
    std::vector<uint8_t> R_has;
    int prev_w = 0, prev_h = 0;
    IrradianceFrame composite;

    for (int l = 0; l < L; ++l) {
        const int lw = Bp.levels[l].width, lh = Bp.levels[l].height;
        if (l == 0) {
            flow[0] = zero_flow(lw, lh);
            flow[1] = zero_flow(lw, lh);
        } else {
            flow[0] = upscale_flow(flow[0], lw, lh);
            flow[1] = upscale_flow(flow[1], lw, lh);
        }

        // The reference stays unwarped; neighbors are resampled only once a
        // coarser level has produced a nonzero accumulated flow, so a
        // single-level run never warps at all.
        LevelFrame lf[3];
        for (int j = 0; j < 3; ++j) {
            if (j == 1 || l == 0) {
                lf[j].V = Vp[j].levels[l];
                lf[j].z = zp[j].levels[l];
                lf[j].valid = Image<uint8_t>(lw, lh, 1, 1);
            } else {
                const FlowField& fl = flow[j == 0 ? 0 : 1];
                lf[j].V = warp(Vp[j].levels[l], fl, &lf[j].valid);
                lf[j].z = warp(zp[j].levels[l], fl);
            }
            lf[j].V_lum = luminance(lf[j].V);
            derive_exposedness(lf[j], z_max, z_th, frame_long[j]);
        }

        // ---- Composite: background everywhere, regression on the support ----
        composite = IrradianceFrame(lw, lh, C);
        composite.data = Bp.levels[l].data;
        const Image<uint8_t>& Sl = Sp[l];
        std::vector<Eigen::Matrix3d> R_cur(static_cast<size_t>(lw) * lh);
        std::vector<uint8_t> has_cur(static_cast<size_t>(lw) * lh, 0);

        SteeringProblem prob;
        prob.t_target = t_norm;
        prob.long_reference = ref_long;
        prob.config = rcfg;
        std::vector<std::array<int, 3>> src; // (frame, x, y) per sample

        for (int y = 0; y < lh; ++y)
            for (int x = 0; x < lw; ++x) {
                if (Sl.at(x, y) == 0) continue;

                prob.samples.clear();
                src.clear();
                for (int j = 0; j < 3; ++j)
                    for (int dy = -R; dy <= R; ++dy)
                        for (int dx = -R; dx <= R; ++dx) {
                            int sx = x + dx, sy = y + dy;
                            if (sx < 0 || sx >= lw || sy < 0 || sy >= lh)
                                continue;
                            if (j != 1 && lf[j].valid.at(sx, sy) == 0) continue;
                            LocalSample s;
                            s.offset = Eigen::Vector3d(dx, dy, j - 1);
                            s.value = lf[j].V_lum.at(sx, sy);
                            s.phi = lf[j].phi.at(sx, sy);
                            s.well_exposed = lf[j].M.at(sx, sy) != 0;
                            prob.samples.push_back(s);
                            src.push_back({j, sx, sy});
                        }
                prob.center_value = lf[1].V_lum.at(x, y);
                prob.center_phi = lf[1].phi.at(x, y);

                Eigen::Matrix3d R_init = Eigen::Matrix3d::Identity();
                if (l > 0) {
                    int px = std::min(x / 2, prev_w - 1);
                    int py = std::min(y / 2, prev_h - 1);
                    size_t pi = static_cast<size_t>(py) * prev_w + px;
                    if (R_has[pi]) R_init = R_prev[pi];
                }

                ++local.regression_pixels;
                bool degenerate =
                    prob.samples.empty() || nu_weights(prob).sum() < 1e-9;
                Eigen::Matrix3d R_opt = R_init;
                if (!degenerate) {
                    SteeringResult sr = optimize_steering(prob, R_init);
                    R_opt = sr.R;
                    if (sr.fallback) ++local.fallback_pixels;
                } else {
                    ++local.degenerate_pixels;
                }
                size_t ci = static_cast<size_t>(y) * lw + x;
                R_cur[ci] = R_opt;
                has_cur[ci] = 1;

                for (int c = 0; c < C; ++c) {
                    for (size_t i = 0; i < prob.samples.size(); ++i)
                        prob.samples[i].value =
                            lf[src[i][0]].V.at(src[i][1], src[i][2], c);
                    prob.center_value = lf[1].V.at(x, y, c);
                    double fitted = t_norm;
                    if (!degenerate && nu_weights(prob).sum() >= 1e-9)
                        fitted = ridge_center_value(prob, R_opt);
                    composite.at(x, y, c) = boosted_to_irradiance(
                        fitted, crf, c, dt_ref, cfg.gamma);
                }
            }

        // ---- Flow refinement against the new estimate (non-final levels) ----
        if (l + 1 < L) {
            Image<double> ref_ln = log_luminance(composite);
            for (int n = 0; n < 2; ++n) {
                int j = n == 0 ? 0 : 2;
                IrradianceFrame warped_irr(lw, lh, C);
                for (int y = 0; y < lh; ++y)
                    for (int x = 0; x < lw; ++x)
                        for (int c = 0; c < C; ++c)
                            warped_irr.at(x, y, c) =
                                std::exp(crf.log_exposure(c, lf[j].z.at(x, y, c))) /
                                dt[j];
                Image<double> tgt_ln = log_luminance(warped_irr);
                FlowField v = estimate_flow(ref_ln, tgt_ln, refine_params);
                for (size_t i = 0; i < flow[n].u.data.size(); ++i) {
                    flow[n].u.data[i] += v.u.data[i];
                    flow[n].v.data[i] += v.v.data[i];
                }
                ++local.flow_refinements;
            }
        }

        R_prev = std::move(R_cur);
        R_has = std::move(has_cur);
        prev_w = lw;
        prev_h = lh;
    }

    local.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t_start)
                        .count();
    if (stats) *stats = local;
    return composite;
}

std::vector<IrradianceFrame> synthesize_video(
    const std::vector<LdrFrame>& frames, const ResponseCurve& crf,
    const RunConfig& params, std::vector<FrameStats>* stats) {
    const int N = static_cast<int>(frames.size());
    if (N < 3) throw DataError("synthesis needs at least 3 frames");

    // Alternation is judged on the full sequence: two exposure values,
    // every other frame equal.
    bool alternates = true;
    for (int i = 2; i < N; ++i)
        if (frames[i].exposure_s != frames[i - 2].exposure_s) alternates = false;
    for (int i = 1; i < N; ++i)
        if (frames[i].exposure_s == frames[i - 1].exposure_s) alternates = false;

    std::vector<IrradianceFrame> out;
    out.reserve(N);
    if (stats) stats->clear();
    for (int r = 0; r < N; ++r) {
        std::vector<LdrFrame> window;
        if (r == 0)
            window = {frames[0], frames[0], frames[1]};
        else if (r == N - 1)
            window = {frames[N - 2], frames[N - 1], frames[N - 1]};
        else
            window = {frames[r - 1], frames[r], frames[r + 1]};
        SynthesisJob job{std::move(window), crf, params, 1};
        FrameStats fs;
        out.push_back(synthesize_frame(job, &fs));
        fs.reference_index = r;
        fs.exposures_alternate = alternates;
        if (stats) stats->push_back(fs);
    }
    return out;
}

std::string stats_json(const FrameStats& s) {
    std::ostringstream os;
    os << "{\"frame\":" << s.reference_index << ",\"seconds\":" << s.seconds
       << ",\"outer_iterations\":" << s.outer_iterations
       << ",\"sigma_hat\":" << s.sigma_hat
       << ",\"support_pixels\":" << s.support_pixels
       << ",\"regression_pixels\":" << s.regression_pixels
       << ",\"fallback_pixels\":" << s.fallback_pixels
       << ",\"degenerate_pixels\":" << s.degenerate_pixels
       << ",\"flow_refinements\":" << s.flow_refinements
       << ",\"exposures_alternate\":" << (s.exposures_alternate ? "true" : "false")
       << "}";
    return os.str();
}

} // namespace maphdr
