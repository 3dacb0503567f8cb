#pragma once

#include <string>
#include <vector>

#include "maphdr/config.hpp"
#include "maphdr/image.hpp"
#include "maphdr/response.hpp"

namespace maphdr {

/// One synthesis task: a frame sequence, the camera response, the tunables,
/// and which frame to reconstruct. The reference needs neighbors on both
/// sides; sequence boundaries are handled by synthesize_video.
struct SynthesisJob {
    std::vector<LdrFrame> frames;
    ResponseCurve crf;
    RunConfig params;
    int reference_index = 1;
};

/// Per-frame run record, also serialized as one JSON line of the run log.
struct FrameStats {
    int reference_index = 0;
    double seconds = 0.0;
    int outer_iterations = 0;
    double sigma_hat = 0.0;
    int support_pixels = 0;     // foreground support at full resolution
    int regression_pixels = 0;  // pixel fits summed over all levels
    int fallback_pixels = 0;    // optimizer fell back to the initial factor
    int degenerate_pixels = 0;  // no usable sample, anchored to the target
    int flow_refinements = 0;   // flow updates run (non-final levels only)
    bool exposures_alternate = true;
    // Reference-frame foreground support at full resolution (debug tap;
    // not part of the JSON line).
    Image<uint8_t> support;
};

/// Reconstruct the reference frame as linear irradiance: decompose the
/// 3-frame window into low-rank background plus foreground support, then
/// synthesize coarse-to-fine — warp the neighbors by the accumulated flows,
/// re-fit foreground pixels by steering kernel regression, composite with
/// the background, and refine the flows against the new estimate before
/// moving to a finer level.
IrradianceFrame synthesize_frame(const SynthesisJob& job,
                                 FrameStats* stats = nullptr);

/// Sliding-window synthesis of every frame. Interior frames use their two
/// real neighbors; the first and last frame duplicate the reference in
/// place of the missing neighbor.
std::vector<IrradianceFrame> synthesize_video(
    const std::vector<LdrFrame>& frames, const ResponseCurve& crf,
    const RunConfig& params, std::vector<FrameStats>* stats = nullptr);

/// Conservative binary support pyramid (any contributing fine pixel set).
std::vector<Image<uint8_t>> support_pyramid(const Image<uint8_t>& support,
                                            int levels);

/// One JSON object (single line, no trailing newline) for the run log.
std::string stats_json(const FrameStats& stats);

} // namespace maphdr
