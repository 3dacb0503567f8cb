#include "maphdr/response.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace maphdr {

namespace {

// Least-squares slope of table values at codes [first, last] (inclusive).
double window_slope(const std::vector<double>& t, int first, int last) {
    int n = last - first + 1;
    double mx = 0.0, my = 0.0;
    for (int z = first; z <= last; ++z) {
        mx += z;
        my += t[z];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (int z = first; z <= last; ++z) {
        sxy += (z - mx) * (t[z] - my);
        sxx += (z - mx) * (z - mx);
    }
    return sxy / sxx;
}

} // namespace

ResponseCurve::ResponseCurve(std::vector<std::vector<double>> table, int z_th)
    : table_(std::move(table)), z_th_(z_th) {
    if (table_.empty() || (table_.size() != 1 && table_.size() != 3))
        throw DataError("response table must have 1 or 3 channels");
    size_t len = table_[0].size();
    if (len < 2) throw DataError("response table too short");
    for (const auto& t : table_)
        if (t.size() != len)
            throw DataError("response table channels differ in length");
    int zm = static_cast<int>(len) - 1;
    if (z_th_ <= 0 || z_th_ >= zm / 2 + (zm % 2 ? 1 : 0))
        throw DataError("z_th must satisfy 0 < z_th < z_max/2");
    for (const auto& t : table_)
        for (double v : t)
            if (!std::isfinite(v))
                throw DataError("response table contains non-finite value");
    build_windows();
}

void ResponseCurve::build_windows() {
    int zm = z_max();
    int mid = zm / 2;
    ext_.resize(table_.size());
    for (size_t ch = 0; ch < table_.size(); ++ch) {
        const auto& t = table_[ch];
        // Maximal strictly increasing run containing the mid code.
        int lo = mid, hi = mid;
        while (lo > 0 && t[lo - 1] < t[lo]) --lo;
        while (hi < zm && t[hi] < t[hi + 1]) ++hi;
        if (lo > z_th_ || hi < zm - z_th_)
            throw DataError(
                "response table not strictly increasing over the well-exposed "
                "window [z_th, z_max - z_th]");
        Extrapolation e;
        e.lo = lo;
        e.hi = hi;
        int span = std::min(8, hi - lo + 1);
        e.slope_lo = window_slope(t, lo, lo + span - 1);
        e.slope_hi = window_slope(t, hi - span + 1, hi);
        ext_[ch] = e;
    }
}

ResponseCurve ResponseCurve::gamma_curve(int channels, int z_max, int z_th,
                                         double gamma, double pedestal) {
    if (pedestal < 0.0 || pedestal >= 1.0)
        throw DataError("response pedestal must lie in [0, 1)");
    std::vector<std::vector<double>> table(
        channels, std::vector<double>(static_cast<size_t>(z_max) + 1));
    for (int ch = 0; ch < channels; ++ch)
        for (int z = 0; z <= z_max; ++z) {
            double frac = std::pow((z + 0.5) / (z_max + 0.5), gamma);
            table[ch][z] = std::log(pedestal + (1.0 - pedestal) * frac);
        }
    return ResponseCurve(std::move(table), z_th);
}

ResponseCurve ResponseCurve::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open response file: " + path);
    std::string header;
    if (!std::getline(in, header))
        throw DataError("response file empty: " + path);
    int channels = 0, zm = -1, zth = 0;
    {
        std::istringstream hs(header);
        std::string tok;
        while (hs >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos)
                throw DataError("response header token without '=': " + tok);
            std::string key = tok.substr(0, eq);
            int value = 0;
            try {
                value = std::stoi(tok.substr(eq + 1));
            } catch (const std::exception&) {
                throw DataError("response header value not an integer: " + tok);
            }
            if (key == "channels")
                channels = value;
            else if (key == "z_max")
                zm = value;
            else if (key == "z_th")
                zth = value;
            else
                throw DataError("unknown response header key: " + key);
        }
    }
    if (channels <= 0 || zm <= 0)
        throw DataError("response header must declare channels and z_max");
    std::vector<std::vector<double>> table(
        channels, std::vector<double>(static_cast<size_t>(zm) + 1));
    for (int z = 0; z <= zm; ++z) {
        std::string line;
        if (!std::getline(in, line))
            throw DataError("response file truncated at code " +
                            std::to_string(z));
        std::istringstream ls(line);
        for (int ch = 0; ch < channels; ++ch)
            if (!(ls >> table[ch][z]))
                throw DataError("response file: bad value at code " +
                                std::to_string(z));
    }
    return ResponseCurve(std::move(table), zth);
}

void ResponseCurve::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write response file: " + path);
    out << "channels=" << channels() << " z_max=" << z_max()
        << " z_th=" << z_th_ << "\n";
    out.precision(17);
    for (int z = 0; z <= z_max(); ++z) {
        for (int ch = 0; ch < channels(); ++ch)
            out << (ch ? " " : "") << table_[ch][z];
        out << "\n";
    }
    if (!out) throw DataError("write failed: " + path);
}

double ResponseCurve::log_exposure(int ch, double code) const {
    const auto& t = table_[ch];
    const auto& e = ext_[ch];
    if (code < e.lo) return t[e.lo] + e.slope_lo * (code - e.lo);
    if (code > e.hi) return t[e.hi] + e.slope_hi * (code - e.hi);
    int z0 = static_cast<int>(std::floor(code));
    if (z0 >= e.hi) return t[e.hi];
    double f = code - z0;
    return t[z0] + f * (t[z0 + 1] - t[z0]);
}

double ResponseCurve::code_for_log_exposure(int ch, double ln_exposure) const {
    const auto& t = table_[ch];
    const auto& e = ext_[ch];
    if (ln_exposure < t[e.lo])
        return e.lo + (ln_exposure - t[e.lo]) / e.slope_lo;
    if (ln_exposure > t[e.hi])
        return e.hi + (ln_exposure - t[e.hi]) / e.slope_hi;
    // Binary search for the bracketing pair within the monotone window.
    int lo = e.lo, hi = e.hi;
    while (hi - lo > 1) {
        int mid = (lo + hi) / 2;
        if (t[mid] <= ln_exposure)
            lo = mid;
        else
            hi = mid;
    }
    double span = t[hi] - t[lo];
    return lo + (ln_exposure - t[lo]) / span;
}

IrradianceFrame inverse_response(const LdrFrame& frame,
                                 const ResponseCurve& crf) {
    if (frame.channels != crf.channels() && crf.channels() != 1)
        throw DataError("frame/response channel count mismatch");
    validate_frame(frame, crf.z_max());
    IrradianceFrame out(frame.width, frame.height, frame.channels);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < frame.channels; ++c) {
                int ch = crf.channels() == 1 ? 0 : c;
                out.at(x, y, c) =
                    std::exp(crf.log_exposure(ch, frame.at(x, y, c))) /
                    frame.exposure_s;
            }
    return out;
}

LdrFrame apply_response(const IrradianceFrame& frame, const ResponseCurve& crf,
                        double exposure_s) {
    if (exposure_s <= 0.0) throw DataError("exposure must be positive");
    LdrFrame out;
    out.width = frame.width;
    out.height = frame.height;
    out.channels = frame.channels;
    out.exposure_s = exposure_s;
    out.data.resize(frame.data.size());
    int zm = crf.z_max();
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < frame.channels; ++c) {
                int ch = crf.channels() == 1 ? 0 : c;
                double ax = frame.at(x, y, c) * exposure_s;
                int code = 0;
                if (ax > 0.0) {
                    double z = crf.code_for_log_exposure(ch, std::log(ax));
                    code = static_cast<int>(std::lround(z));
                    code = std::clamp(code, 0, zm);
                }
                out.at(x, y, c) = code;
            }
    return out;
}

Image<double> exposure_boost(const LdrFrame& frame, const ResponseCurve& crf,
                             double target_exposure_s, double gamma) {
    if (gamma <= 0.0) throw DataError("gamma must be positive");
    if (target_exposure_s <= 0.0) throw DataError("exposure must be positive");
    validate_frame(frame, crf.z_max());
    Image<double> out(frame.width, frame.height, frame.channels);
    double zm = crf.z_max();
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < frame.channels; ++c) {
                int ch = crf.channels() == 1 ? 0 : c;
                double ln_a = crf.log_exposure(ch, frame.at(x, y, c)) -
                              std::log(frame.exposure_s);
                double code = crf.code_for_log_exposure(
                    ch, ln_a + std::log(target_exposure_s));
                double n = code / zm;
                out.at(x, y, c) =
                    zm * std::copysign(std::pow(std::abs(n), 1.0 / gamma), n);
            }
    return out;
}

Image<uint8_t> well_exposed_mask(const LdrFrame& frame,
                                 const ResponseCurve& crf) {
    validate_frame(frame, crf.z_max());
    int zt = crf.z_th(), zm = crf.z_max();
    Image<uint8_t> out(frame.width, frame.height, 1);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            bool ok = true;
            for (int c = 0; c < frame.channels && ok; ++c) {
                int z = frame.at(x, y, c);
                ok = z > zt && z < zm - zt;
            }
            out.at(x, y) = ok ? 1 : 0;
        }
    return out;
}

double phi_of_code(double code, int z_max, int z_th, bool long_exposure) {
    if (long_exposure) {
        // 1 up to z_max - 2*z_th, then linearly down to 0 at z_max - z_th.
        double t = (static_cast<double>(z_max) - z_th - code) / z_th;
        return std::clamp(t, 0.0, 1.0);
    }
    // 0 up to z_th, then linearly up to 1 at 2*z_th.
    double t = (code - static_cast<double>(z_th)) / z_th;
    return std::clamp(t, 0.0, 1.0);
}

ExposednessWeights phi_weight(const LdrFrame& frame, const ResponseCurve& crf,
                              bool long_exposure) {
    validate_frame(frame, crf.z_max());
    ExposednessWeights w;
    w.long_exposure = long_exposure;
    w.phi = Image<double>(frame.width, frame.height, 1);
    for (int y = 0; y < frame.height; ++y)
        for (int x = 0; x < frame.width; ++x) {
            double phi = 1.0;
            for (int c = 0; c < frame.channels; ++c)
                phi = std::min(phi, phi_of_code(frame.at(x, y, c), crf.z_max(),
                                                crf.z_th(), long_exposure));
            w.phi.at(x, y) = phi;
        }
    return w;
}

} // namespace maphdr
