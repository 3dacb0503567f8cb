#include "maphdr/tonemap.hpp"

#include <algorithm>
#include <cmath>

#include "maphdr/errors.hpp"

namespace maphdr {

Image<unsigned char> tonemap_reinhard(const IrradianceFrame& frame, double key,
                                      double white) {
    if (key <= 0.0) throw DataError("tonemap key must be positive");
    if (white <= 0.0) throw DataError("tonemap white point must be positive");

    Image<double> lum = luminance(frame);
    double log_sum = 0.0;
    for (double v : lum.data) log_sum += std::log(std::max(v, 1e-6));
    double log_avg = std::exp(log_sum / static_cast<double>(lum.data.size()));

    Image<unsigned char> out(frame.width, frame.height, frame.channels);
    const double inv_white2 = 1.0 / (white * white);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            double l = lum.at(x, y);
            double lm = key * l / log_avg;
            double ld = lm * (1.0 + lm * inv_white2) / (1.0 + lm);
            double ratio = l > 0.0 ? ld / l : 0.0;
            for (int c = 0; c < frame.channels; ++c) {
                double v = std::max(frame.at(x, y, c) * ratio, 0.0);
                double coded = std::pow(v, 1.0 / 2.2) * 255.0;
                out.at(x, y, c) = static_cast<unsigned char>(
                    std::clamp(std::lround(coded), 0L, 255L));
            }
        }
    return out;
}

} // namespace maphdr
