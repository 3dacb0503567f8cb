#pragma once

#include "maphdr/image.hpp"

namespace maphdr {

/// Global photographic tonemapping. Scales luminance so the log-average
/// (floored at 1e-6) maps to `key`, compresses with
/// L_d = L_m (1 + L_m / white^2) / (1 + L_m), applies the luminance ratio
/// per channel, then gamma 2.2 to 8-bit. Throws DataError for key <= 0 or
/// white <= 0.
Image<unsigned char> tonemap_reinhard(const IrradianceFrame& frame,
                                      double key = 0.18, double white = 1e8);

} // namespace maphdr
