#include "maphdr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "maphdr/errors.hpp"

namespace maphdr {

namespace {

// Fixed channel tints keep the generated scenes colored without adding
// spec knobs; background and objects get distinct hues.
constexpr double kBgTint[3] = {1.0, 0.85, 0.7};
constexpr double kRectTint[3] = {0.7, 1.0, 0.85};

void validate_spec(const SceneSpec& spec, const std::vector<double>& exposures) {
    if (spec.width <= 0 || spec.height <= 0)
        throw DataError("scene dimensions must be positive");
    if (spec.frames < 1) throw DataError("scene needs at least one frame");
    if (spec.bg_low <= 0.0 || spec.bg_high <= 0.0)
        throw DataError("background radiance must be positive");
    if (spec.noise_sigma < 0.0) throw DataError("noise sigma must be >= 0");
    for (const MovingRect& r : spec.rects) {
        if (r.width <= 0.0 || r.height <= 0.0)
            throw DataError("rectangle extent must be positive");
        if (r.radiance <= 0.0)
            throw DataError("rectangle radiance must be positive");
    }
    if (exposures.empty()) throw DataError("need at least one exposure time");
    for (double e : exposures)
        if (e <= 0.0) throw DataError("exposure times must be positive");
}

} // namespace

SyntheticSequence generate_synthetic(const SceneSpec& spec,
                                     const ResponseCurve& crf,
                                     const std::vector<double>& exposures) {
    validate_spec(spec, exposures);
    if (crf.channels() != 3)
        throw DataError("synthetic generator expects a 3-channel response");

    const int w = spec.width, h = spec.height;
    const int z_max = crf.z_max();
    std::mt19937 rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    SyntheticSequence out;
    out.frames.reserve(spec.frames);
    out.truth.reserve(spec.frames);
    out.object_mask.reserve(spec.frames);

    for (int k = 0; k < spec.frames; ++k) {
        IrradianceFrame truth(w, h, 3);
        Image<uint8_t> mask(w, h, 1, 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double ramp =
                    0.5 * (x / std::max(1.0, w - 1.0) + y / std::max(1.0, h - 1.0));
                double base = spec.bg_low + (spec.bg_high - spec.bg_low) * ramp;
                const double* tint = kBgTint;
                for (const MovingRect& r : spec.rects) {
                    double rx = r.x0 + r.vx * k, ry = r.y0 + r.vy * k;
                    if (x >= rx && x < rx + r.width && y >= ry &&
                        y < ry + r.height) {
                        base = r.radiance;
                        tint = kRectTint;
                        mask.at(x, y) = 1;
                        break;
                    }
                }
                for (int c = 0; c < 3; ++c)
                    truth.at(x, y, c) = base * tint[c];
            }

        const double dt = exposures[k % exposures.size()];
        LdrFrame frame;
        frame.width = w;
        frame.height = h;
        frame.channels = 3;
        frame.exposure_s = dt;
        frame.data.resize(static_cast<size_t>(w) * h * 3);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 3; ++c) {
                    double code = crf.code_for_log_exposure(
                        c, std::log(truth.at(x, y, c) * dt));
                    if (spec.noise_sigma > 0.0)
                        code += spec.noise_sigma * noise(rng);
                    long z = std::lround(code);
                    frame.at(x, y, c) =
                        static_cast<int>(std::clamp(z, 0L, (long)z_max));
                }

        out.frames.push_back(std::move(frame));
        out.truth.push_back(std::move(truth));
        out.object_mask.push_back(std::move(mask));
    }
    return out;
}

} // namespace maphdr
