#include "maphdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "maphdr/errors.hpp"

namespace maphdr {

namespace {

constexpr double kLogFloorRatio = 1e-5;
constexpr double kPuMin = 1e-5;
constexpr double kPuMax = 1e8;
constexpr int kPuPointsPerDecade = 64;
constexpr double kCapDb = 100.0;

double psnr_from_mse(double range, double mse) {
    if (mse <= 0.0) return kCapDb;
    return std::min(kCapDb, 10.0 * std::log10(range * range / mse));
}

} // namespace

double log_psnr(const IrradianceFrame& test, const IrradianceFrame& ref,
                double peak) {
    if (test.width != ref.width || test.height != ref.height)
        throw DataError("log_psnr: frame dimensions differ");
    Image<double> lt = luminance(test), lr = luminance(ref);
    if (peak <= 0.0) {
        for (double v : lr.data) peak = std::max(peak, v);
        if (peak <= 0.0)
            throw DataError("log_psnr: reference has no positive luminance");
    }
    double lo = kLogFloorRatio * peak;
    double mse = 0.0;
    for (size_t i = 0; i < lt.data.size(); ++i) {
        double a = std::log10(std::clamp(lt.data[i], lo, peak));
        double b = std::log10(std::clamp(lr.data[i], lo, peak));
        mse += (a - b) * (a - b);
    }
    mse /= lt.data.size();
    // Clamped log10 spans log10(peak) - log10(1e-5 peak) = 5 exactly.
    return psnr_from_mse(5.0, mse);
}

void PuCurve::finish() {
    log_lum_.resize(lum_.size());
    for (size_t i = 0; i < lum_.size(); ++i) log_lum_[i] = std::log(lum_[i]);
}

PuCurve PuCurve::builtin() {
    PuCurve c;
    const int decades = 13; // 1e-5 .. 1e8
    const int n = decades * kPuPointsPerDecade + 1;
    for (int i = 0; i < n; ++i) {
        double L = std::pow(10.0, -5.0 + static_cast<double>(i) /
                                             kPuPointsPerDecade);
        double P = L <= 10.0 ? 10.0 * L : 100.0 + 57.27 * std::log(L / 10.0);
        c.lum_.push_back(L);
        c.val_.push_back(P);
    }
    c.finish();
    return c;
}

PuCurve PuCurve::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open PU curve file: " + path);
    PuCurve c;
    std::string line;
    while (std::getline(in, line)) {
        size_t pos = line.find_first_not_of(" \t");
        if (pos == std::string::npos || line[pos] == '#') continue;
        std::istringstream ss(line);
        double L, P;
        if (!(ss >> L >> P))
            throw DataError("malformed PU curve line: " + line);
        if (!c.lum_.empty() && L <= c.lum_.back())
            throw DataError("PU curve luminances must increase");
        c.lum_.push_back(L);
        c.val_.push_back(P);
    }
    if (c.lum_.size() < 2) throw DataError("PU curve needs at least 2 points");
    c.finish();
    return c;
}

void PuCurve::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write PU curve file: " + path);
    out << "# Perceptually uniform encoding: P(L) = 10 L for L <= 10 cd/m^2,\n"
           "# P(L) = 100 + 57.27 ln(L/10) above; 64 points per decade.\n"
           "# columns: luminance_cd_m2 encoded_value\n";
    char buf[64];
    for (size_t i = 0; i < lum_.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", lum_[i], val_[i]);
        out << buf;
    }
}

double PuCurve::encode(double luminance) const {
    double L = std::clamp(luminance, lum_.front(), lum_.back());
    double x = std::log(L);
    auto it = std::upper_bound(log_lum_.begin(), log_lum_.end(), x);
    size_t hi = std::min<size_t>(log_lum_.size() - 1,
                                 std::max<size_t>(1, it - log_lum_.begin()));
    size_t lo = hi - 1;
    double t = (x - log_lum_[lo]) / (log_lum_[hi] - log_lum_[lo]);
    t = std::clamp(t, 0.0, 1.0);
    return val_[lo] + t * (val_[hi] - val_[lo]);
}

double pu_psnr(const IrradianceFrame& test, const IrradianceFrame& ref,
               double peak_cd, const PuCurve& curve) {
    if (test.width != ref.width || test.height != ref.height)
        throw DataError("pu_psnr: frame dimensions differ");
    if (peak_cd <= 0.0) throw DataError("pu_psnr: peak must be positive");
    Image<double> lt = luminance(test), lr = luminance(ref);
    double mse = 0.0;
    for (size_t i = 0; i < lt.data.size(); ++i) {
        double a = curve.encode(std::max(lt.data[i], kPuMin));
        double b = curve.encode(std::max(lr.data[i], kPuMin));
        mse += (a - b) * (a - b);
    }
    mse /= lt.data.size();
    double range = curve.encode(peak_cd) - curve.encode(kPuMin);
    return psnr_from_mse(range, mse);
}

double pu_psnr(const IrradianceFrame& test, const IrradianceFrame& ref,
               double peak_cd) {
    static const PuCurve curve = PuCurve::builtin();
    return pu_psnr(test, ref, peak_cd, curve);
}

} // namespace maphdr
