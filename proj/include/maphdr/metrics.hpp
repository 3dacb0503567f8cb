#pragma once

#include <string>
#include <vector>

#include "maphdr/image.hpp"

namespace maphdr {

/// Log-domain PSNR. Luminances are clamped to [1e-5*peak, peak] and taken
/// to log10, so the usable log range spans exactly 5; the score is
/// 10*log10(range^2 / MSE), capped at 100 dB. peak <= 0 selects the
/// reference's maximum luminance.
double log_psnr(const IrradianceFrame& test, const IrradianceFrame& ref,
                double peak = 0.0);

/// Perceptually-uniform encoding: a monotone piecewise log-linear curve,
/// linear (P = 10 L) below 10 cd/m^2 and logarithmic above, tabulated at 64
/// points per decade over [1e-5, 1e8] cd/m^2 and interpolated in ln L.
class PuCurve {
  public:
    /// The curve generated directly from the formula.
    static PuCurve builtin();
    /// Load a tabulated curve ("L P" per line, '#' comments).
    static PuCurve load(const std::string& path);
    void save(const std::string& path) const;

    double encode(double luminance) const;
    const std::vector<double>& luminances() const { return lum_; }
    const std::vector<double>& values() const { return val_; }

  private:
    std::vector<double> lum_; // ascending
    std::vector<double> val_;
    std::vector<double> log_lum_;
    void finish();
};

/// PSNR after perceptually-uniform encoding of absolute luminances
/// (cd/m^2). Nonpositive luminances clamp to 1e-5; the peak term is the
/// encoded range up to peak_cd. Capped at 100 dB.
double pu_psnr(const IrradianceFrame& test, const IrradianceFrame& ref,
               double peak_cd, const PuCurve& curve);
double pu_psnr(const IrradianceFrame& test, const IrradianceFrame& ref,
               double peak_cd);

struct MetricReport {
    std::string metric;
    std::vector<std::string> frames;
    std::vector<double> values;
    double mean = 0.0;
};

} // namespace maphdr
