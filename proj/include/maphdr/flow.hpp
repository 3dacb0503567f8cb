#pragma once

#include <vector>

#include "maphdr/image.hpp"

namespace maphdr {

/// Dense displacement field: pixel p in the reference corresponds to
/// position p + (u, v) in the target image.
struct FlowField {
    Image<double> u;
    Image<double> v;
    int width() const { return u.width; }
    int height() const { return u.height; }
};

struct FlowParams {
    int levels = 3;        // internal coarse-to-fine depth (auto-capped)
    double lambda = 0.02;  // smoothness weight for [0,1]-range intensities
    int sor_iters = 100;   // relaxation sweeps per level
    double omega = 1.8;    // over-relaxation factor, must stay in (0,2)
};

/// Zero-initialized field of the given size.
FlowField zero_flow(int width, int height);

/// Coarse-to-fine Horn-Schunck flow between single-channel images of equal
/// size. Red-black block over-relaxation keeps the result deterministic;
/// each sweep's energy (data + smoothness) can be recorded per level.
FlowField estimate_flow(const Image<double>& ref, const Image<double>& tgt,
                        const FlowParams& params = {},
                        std::vector<std::vector<double>>* energy_trace = nullptr);

/// Backward warp: out(p) = img sampled bilinearly at p + flow(p), clamped to
/// the border. `validity` (optional, single channel) gets 1 where the sample
/// position was inside the image.
Image<double> warp(const Image<double>& img, const FlowField& flow,
                   Image<uint8_t>* validity = nullptr);

/// Resize a flow field to explicit target dims (the matching pyramid level's
/// size) and scale displacements by 2.
FlowField upscale_flow(const FlowField& flow, int target_width,
                       int target_height);

} // namespace maphdr
