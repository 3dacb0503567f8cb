#include "maphdr/pyramid.hpp"

#include <algorithm>

#include "maphdr/errors.hpp"

namespace maphdr {

namespace {

// Separable binomial blur with edge replication.
Image<double> binomial_blur(const Image<double>& img) {
    static const double w[5] = {1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16,
                                1.0 / 16};
    Image<double> tmp(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int k = -2; k <= 2; ++k) {
                    int xx = std::clamp(x + k, 0, img.width - 1);
                    acc += w[k + 2] * img.at(xx, y, c);
                }
                tmp.at(x, y, c) = acc;
            }
    Image<double> out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                double acc = 0.0;
                for (int k = -2; k <= 2; ++k) {
                    int yy = std::clamp(y + k, 0, img.height - 1);
                    acc += w[k + 2] * tmp.at(x, yy, c);
                }
                out.at(x, y, c) = acc;
            }
    return out;
}

} // namespace

Image<double> downsample(const Image<double>& img) {
    Image<double> blurred = binomial_blur(img);
    int w2 = (img.width + 1) / 2, h2 = (img.height + 1) / 2;
    Image<double> out(w2, h2, img.channels);
    for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(x, y, c) = blurred.at(2 * x, 2 * y, c);
    return out;
}

Pyramid build_pyramid(const Image<double>& img, int levels) {
    if (levels < 1) throw DataError("pyramid needs at least one level");
    Pyramid pyr;
    pyr.levels.resize(levels);
    pyr.levels[levels - 1] = img;
    for (int l = levels - 2; l >= 0; --l) {
        Image<double> down = downsample(pyr.levels[l + 1]);
        if (down.width < 16 || down.height < 16)
            throw DataError("pyramid level below 16x16: too many levels");
        pyr.levels[l] = std::move(down);
    }
    return pyr;
}

std::vector<Image<uint8_t>> build_mask_pyramid(const Image<uint8_t>& mask,
                                               int levels) {
    if (levels < 1) throw DataError("pyramid needs at least one level");
    std::vector<Image<uint8_t>> pyr(levels);
    pyr[levels - 1] = mask;
    for (int l = levels - 2; l >= 0; --l) {
        const Image<uint8_t>& fine = pyr[l + 1];
        int w2 = (fine.width + 1) / 2, h2 = (fine.height + 1) / 2;
        Image<uint8_t> coarse(w2, h2, fine.channels);
        for (int y = 0; y < h2; ++y)
            for (int x = 0; x < w2; ++x)
                for (int c = 0; c < fine.channels; ++c) {
                    uint8_t v = 0;
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            int xx = 2 * x + dx, yy = 2 * y + dy;
                            if (xx < fine.width && yy < fine.height)
                                v = std::max(v, fine.at(xx, yy, c));
                        }
                    coarse.at(x, y, c) = v;
                }
        pyr[l] = std::move(coarse);
    }
    return pyr;
}

} // namespace maphdr
