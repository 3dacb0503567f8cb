#pragma once

#include <vector>

#include "maphdr/image.hpp"
#include "maphdr/response.hpp"

namespace maphdr {

/// Rectangle translating at constant velocity over the background.
struct MovingRect {
    double x0 = 0.0, y0 = 0.0; // top-left corner at frame 0
    double width = 0.0, height = 0.0;
    double vx = 0.0, vy = 0.0; // pixels per frame
    double radiance = 1.0;     // object radiance (scaled per channel)
};

/// Scene description: gradient background plus moving rectangles, imaged
/// with alternating exposures and optional code-domain Gaussian noise.
struct SceneSpec {
    int width = 160;
    int height = 120;
    int frames = 9;
    double bg_low = 1.0;    // background radiance at the dark corner
    double bg_high = 100.0; // background radiance at the bright corner
    std::vector<MovingRect> rects;
    double noise_sigma = 0.0; // stddev of code-domain noise
    unsigned seed = 1;
};

struct SyntheticSequence {
    std::vector<LdrFrame> frames;            // captured codes with exposures
    std::vector<IrradianceFrame> truth;      // per-frame linear radiance
    std::vector<Image<uint8_t>> object_mask; // 1 where a rectangle covers
};

/// Simulate capture: radiance -> exposure -> response -> noise -> rounding.
/// Deterministic for a fixed spec (seed included). Frame k uses
/// exposures[k mod exposures.size()].
SyntheticSequence generate_synthetic(const SceneSpec& spec,
                                     const ResponseCurve& crf,
                                     const std::vector<double>& exposures);

} // namespace maphdr
