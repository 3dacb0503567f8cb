#pragma once

#include <string>
#include <vector>

#include "maphdr/image.hpp"

namespace maphdr {

// Tabulated camera response: per channel, a map from integer code z to
// log exposure g(z) = ln(a * dt). Strictly increasing over the well-exposed
// code window [z_th, z_max - z_th]; evaluated with linear interpolation inside
// the monotone window and linear extrapolation outside it, so saturated and
// underexposed codes still map to finite, ordered log exposures.
class ResponseCurve {
public:
    // Builds from a per-channel table (each of size z_max+1) and validates.
    ResponseCurve(std::vector<std::vector<double>> table, int z_th);

    // Gamma-law response with an optional black-level pedestal:
    // g(z) = ln(pedestal + (1 - pedestal) * ((z + 0.5) / (z_max + 0.5))^gamma).
    // pedestal = 0 gives the ideal power law; pedestal > 0 models a sensor
    // whose code 0 already corresponds to a positive exposure floor, so
    // exposures below the floor clip hard to code 0.
    static ResponseCurve gamma_curve(int channels, int z_max, int z_th,
                                     double gamma = 2.2, double pedestal = 0.0);

    // Plain-text file: header "channels=C z_max=Z z_th=T", then Z+1 lines of
    // C log-exposure values.
    static ResponseCurve load(const std::string& path);
    void save(const std::string& path) const;

    int channels() const { return static_cast<int>(table_.size()); }
    int z_max() const { return static_cast<int>(table_[0].size()) - 1; }
    int z_th() const { return z_th_; }
    const std::vector<std::vector<double>>& table() const { return table_; }

    // Monotone code window actually used for channel ch.
    int window_lo(int ch) const { return ext_[ch].lo; }
    int window_hi(int ch) const { return ext_[ch].hi; }

    // g at a real-valued code (interpolated / extrapolated); monotone in code.
    double log_exposure(int ch, double code) const;

    // Inverse of log_exposure: real-valued code for a log exposure, using the
    // extrapolation slopes beyond the table's range. Not clamped.
    double code_for_log_exposure(int ch, double ln_exposure) const;

private:
    struct Extrapolation {
        int lo = 0, hi = 0;        // maximal strictly increasing window
        double slope_lo = 0.0;     // d(g)/d(code) used below lo / above hi
        double slope_hi = 0.0;
    };

    void build_windows();

    std::vector<std::vector<double>> table_;
    int z_th_ = 0;
    std::vector<Extrapolation> ext_;
};

// Per-pixel exposedness weight in [0,1] plus the frame's exposure class.
// For multichannel frames the weight is the minimum over channels.
struct ExposednessWeights {
    Image<double> phi;
    bool long_exposure = true;
};

// Irradiance estimate a = exp(g(z)) / dt per pixel.
IrradianceFrame inverse_response(const LdrFrame& frame, const ResponseCurve& crf);

// Forward model without noise: code = clamp(round(g^-1(ln(a * dt)))).
LdrFrame apply_response(const IrradianceFrame& frame, const ResponseCurve& crf,
                        double exposure_s);

// Re-exposes a frame to target_exposure_s and gamma-adjusts, keeping real
// values: c = g^-1(ln(a * target)), out = z_max * sign(c) * |c / z_max|^(1/gamma).
// With target equal to the frame's own exposure and gamma 1 this reproduces
// the original codes on the monotone window.
Image<double> exposure_boost(const LdrFrame& frame, const ResponseCurve& crf,
                             double target_exposure_s, double gamma);

// 1 where z_th < code < z_max - z_th on every channel.
Image<uint8_t> well_exposed_mask(const LdrFrame& frame, const ResponseCurve& crf);

// Piecewise-linear exposedness ramp. Long exposure: 1 up to z_max - 2*z_th,
// falling to 0 at z_max - z_th. Short exposure: 0 at z_th, rising to 1 at
// 2*z_th. Multichannel: minimum over channels.
ExposednessWeights phi_weight(const LdrFrame& frame, const ResponseCurve& crf,
                              bool long_exposure);

// The ramp above for a single code value.
double phi_of_code(double code, int z_max, int z_th, bool long_exposure);

} // namespace maphdr
