#pragma once

#include <vector>

#include "maphdr/image.hpp"

namespace maphdr {

/// Gaussian pyramid, levels indexed coarse to fine; levels.back() is the
/// original image. Each coarser level is a 5-tap binomial blur followed by
/// 2x decimation, so its dims are ceil(finer/2).
struct Pyramid {
    std::vector<Image<double>> levels;
    int level_count() const { return static_cast<int>(levels.size()); }
};

/// 5-tap binomial (1,4,6,4,1)/16 blur with edge replication, then 2x
/// decimation keeping even-indexed samples.
Image<double> downsample(const Image<double>& img);

/// L levels, coarse to fine. For L > 1 every decimated level must be at
/// least 16x16 or the request is rejected.
Pyramid build_pyramid(const Image<double>& img, int levels);

/// Binary-mask pyramid via 2x2 max-pooling (a coarse pixel is set if any of
/// the fine pixels it covers is set), coarse to fine like build_pyramid.
std::vector<Image<uint8_t>> build_mask_pyramid(const Image<uint8_t>& mask,
                                               int levels);

} // namespace maphdr
