#include "maphdr/flow.hpp"

#include <algorithm>
#include <cmath>

#include "maphdr/errors.hpp"
#include "maphdr/pyramid.hpp"

namespace maphdr {

namespace {

double bilinear(const Image<double>& img, double x, double y, int c) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, img.width - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    double fx = x - x0, fy = y - y0;
    return img.at(x0, y0, c) * (1 - fx) * (1 - fy) +
           img.at(x1, y0, c) * fx * (1 - fy) +
           img.at(x0, y1, c) * (1 - fx) * fy + img.at(x1, y1, c) * fx * fy;
}

Image<double> resize_bilinear(const Image<double>& img, int tw, int th) {
    Image<double> out(tw, th, img.channels);
    double sx = static_cast<double>(img.width) / tw;
    double sy = static_cast<double>(img.height) / th;
    for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = bilinear(img, (x + 0.5) * sx - 0.5,
                                           (y + 0.5) * sy - 0.5, c);
    return out;
}

struct LinearizedLevel {
    Image<double> ix, iy, it; // averaged gradients and temporal difference
};

// Linearize brightness constancy around the current flow: warp the target,
// then form averaged central-difference gradients. Invalid (out-of-bounds)
// warps contribute no data constraint.
LinearizedLevel linearize(const Image<double>& ref, const Image<double>& tgt,
                          const FlowField& flow) {
    Image<uint8_t> valid;
    Image<double> tw = warp(tgt, flow, &valid);
    int w = ref.width, h = ref.height;
    LinearizedLevel lin{Image<double>(w, h, 1), Image<double>(w, h, 1),
                        Image<double>(w, h, 1)};
    auto dx = [&](const Image<double>& im, int x, int y) {
        int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
        return (im.at(xp, y) - im.at(xm, y)) / (xp - xm > 0 ? xp - xm : 1);
    };
    auto dy = [&](const Image<double>& im, int x, int y) {
        int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
        return (im.at(x, yp) - im.at(x, ym)) / (yp - ym > 0 ? yp - ym : 1);
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!valid.at(x, y)) continue;
            lin.ix.at(x, y) = 0.5 * (dx(ref, x, y) + dx(tw, x, y));
            lin.iy.at(x, y) = 0.5 * (dy(ref, x, y) + dy(tw, x, y));
            lin.it.at(x, y) = tw.at(x, y) - ref.at(x, y);
        }
    return lin;
}

// Energy of the linearized increment system: sum of squared data residuals
// plus lambda times squared increment differences over 4-neighbor edges.
double increment_energy(const LinearizedLevel& lin, const Image<double>& du,
                        const Image<double>& dv, double lambda) {
    int w = du.width, h = du.height;
    double e = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double r = lin.ix.at(x, y) * du.at(x, y) +
                       lin.iy.at(x, y) * dv.at(x, y) + lin.it.at(x, y);
            e += r * r;
            if (x + 1 < w) {
                double a = du.at(x, y) - du.at(x + 1, y);
                double b = dv.at(x, y) - dv.at(x + 1, y);
                e += lambda * (a * a + b * b);
            }
            if (y + 1 < h) {
                double a = du.at(x, y) - du.at(x, y + 1);
                double b = dv.at(x, y) - dv.at(x, y + 1);
                e += lambda * (a * a + b * b);
            }
        }
    return e;
}

// One red-black over-relaxation pass. Each pixel moves toward the exact
// minimizer of its local quadratic given the neighbors, scaled by omega;
// for omega in (0,2) this never increases the global energy.
void sor_sweep(const LinearizedLevel& lin, Image<double>& du,
               Image<double>& dv, double lambda, double omega) {
    int w = du.width, h = du.height;
    for (int parity = 0; parity < 2; ++parity)
        for (int y = 0; y < h; ++y)
            for (int x = (y + parity) % 2; x < w; x += 2) {
                double ubar = 0.0, vbar = 0.0;
                int n = 0;
                if (x > 0) { ubar += du.at(x - 1, y); vbar += dv.at(x - 1, y); ++n; }
                if (x + 1 < w) { ubar += du.at(x + 1, y); vbar += dv.at(x + 1, y); ++n; }
                if (y > 0) { ubar += du.at(x, y - 1); vbar += dv.at(x, y - 1); ++n; }
                if (y + 1 < h) { ubar += du.at(x, y + 1); vbar += dv.at(x, y + 1); ++n; }
                ubar /= n;
                vbar /= n;
                double gx = lin.ix.at(x, y), gy = lin.iy.at(x, y);
                double denom = lambda * n + gx * gx + gy * gy;
                double scale = (gx * ubar + gy * vbar + lin.it.at(x, y)) / denom;
                double us = ubar - gx * scale;
                double vs = vbar - gy * scale;
                du.at(x, y) += omega * (us - du.at(x, y));
                dv.at(x, y) += omega * (vs - dv.at(x, y));
            }
}

} // namespace

FlowField zero_flow(int width, int height) {
    return {Image<double>(width, height, 1), Image<double>(width, height, 1)};
}

FlowField estimate_flow(const Image<double>& ref, const Image<double>& tgt,
                        const FlowParams& params,
                        std::vector<std::vector<double>>* energy_trace) {
    if (!ref.same_dims(tgt) || ref.channels != 1)
        throw DataError("flow inputs must be single-channel and equal size");
    if (params.omega <= 0.0 || params.omega >= 2.0)
        throw DataError("over-relaxation factor must be in (0,2)");

    // Cap the depth so every decimated level stays at least 16x16.
    int levels = 1, w = ref.width, h = ref.height;
    while (levels < params.levels && (w + 1) / 2 >= 16 && (h + 1) / 2 >= 16) {
        w = (w + 1) / 2;
        h = (h + 1) / 2;
        ++levels;
    }
    Pyramid pr = build_pyramid(ref, levels);
    Pyramid pt = build_pyramid(tgt, levels);
    if (energy_trace) energy_trace->assign(levels, {});

    FlowField flow = zero_flow(pr.levels[0].width, pr.levels[0].height);
    for (int l = 0; l < levels; ++l) {
        const Image<double>& rl = pr.levels[l];
        const Image<double>& tl = pt.levels[l];
        if (l > 0) flow = upscale_flow(flow, rl.width, rl.height);
        LinearizedLevel lin = linearize(rl, tl, flow);
        Image<double> du(rl.width, rl.height, 1), dv(rl.width, rl.height, 1);
        for (int it = 0; it < params.sor_iters; ++it) {
            sor_sweep(lin, du, dv, params.lambda, params.omega);
            if (energy_trace)
                (*energy_trace)[l].push_back(
                    increment_energy(lin, du, dv, params.lambda));
        }
        for (size_t i = 0; i < flow.u.data.size(); ++i) {
            flow.u.data[i] += du.data[i];
            flow.v.data[i] += dv.data[i];
        }
    }
    return flow;
}

Image<double> warp(const Image<double>& img, const FlowField& flow,
                   Image<uint8_t>* validity) {
    if (flow.width() != img.width || flow.height() != img.height)
        throw DataError("flow dims do not match image");
    Image<double> out(img.width, img.height, img.channels);
    if (validity) *validity = Image<uint8_t>(img.width, img.height, 1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            double sx = x + flow.u.at(x, y);
            double sy = y + flow.v.at(x, y);
            bool inside = sx >= 0.0 && sx <= img.width - 1.0 && sy >= 0.0 &&
                          sy <= img.height - 1.0;
            if (validity) validity->at(x, y) = inside ? 1 : 0;
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = bilinear(img, sx, sy, c);
        }
    return out;
}

FlowField upscale_flow(const FlowField& flow, int target_width,
                       int target_height) {
    FlowField out;
    out.u = resize_bilinear(flow.u, target_width, target_height);
    out.v = resize_bilinear(flow.v, target_width, target_height);
    for (double& d : out.u.data) d *= 2.0;
    for (double& d : out.v.data) d *= 2.0;
    return out;
}

} // namespace maphdr
