#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <random>

#include "maphdr/errors.hpp"
#include "maphdr/metrics.hpp"

using namespace maphdr;

namespace {

IrradianceFrame random_frame(std::mt19937& rng, int w, int h, double lo,
                             double hi) {
    std::uniform_real_distribution<double> unif(lo, hi);
    IrradianceFrame f(w, h, 1);
    for (double& v : f.data) v = unif(rng);
    return f;
}

// Invert the monotone PU encoding by bisection.
double pu_decode(const PuCurve& curve, double target) {
    double lo = 1e-5, hi = 1e8;
    for (int i = 0; i < 200; ++i) {
        double mid = std::sqrt(lo * hi);
        if (curve.encode(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace

TEST_CASE("identical frames hit the 100 dB cap") {
    std::mt19937 rng(1);
    IrradianceFrame f = random_frame(rng, 24, 16, 0.1, 300.0);
    CHECK(log_psnr(f, f) == 100.0);
    CHECK(pu_psnr(f, f, 4000.0) == 100.0);
}

TEST_CASE("full-range log error gives zero dB") {
    // Reference at peak, test at the clamp floor: every log residual equals
    // the full range of 5, so MSE = range^2.
    IrradianceFrame ref(8, 8, 1, 100.0), test(8, 8, 1, 1e-9);
    CHECK(log_psnr(test, ref, 100.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("log PSNR matches a two-pass oracle") {
    std::mt19937 rng(7);
    IrradianceFrame ref = random_frame(rng, 32, 20, 0.05, 800.0);
    IrradianceFrame test = ref;
    std::normal_distribution<double> gauss(0.0, 0.1);
    for (double& v : test.data) v *= std::exp(gauss(rng));

    double peak = 0.0;
    for (double v : ref.data) peak = std::max(peak, v);
    double lo = 1e-5 * peak;
    double mse = 0.0;
    for (size_t i = 0; i < ref.data.size(); ++i) {
        double a = std::log10(std::min(std::max(test.data[i], lo), peak));
        double b = std::log10(std::min(std::max(ref.data[i], lo), peak));
        mse += (a - b) * (a - b);
    }
    mse /= ref.data.size();
    double oracle = 10.0 * std::log10(25.0 / mse);
    CHECK(log_psnr(test, ref) == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("log PSNR rejects mismatched dimensions") {
    IrradianceFrame a(8, 8, 1, 1.0), b(8, 9, 1, 1.0);
    CHECK_THROWS_AS(log_psnr(a, b), DataError);
}

TEST_CASE("quadrupling log-domain MSE costs exactly 10 log10(4) dB") {
    std::mt19937 rng(21);
    IrradianceFrame ref = random_frame(rng, 16, 16, 1.0, 9.0);
    IrradianceFrame t1 = ref, t2 = ref;
    // Bounded perturbations keep both tests inside the clamp range
    // [1e-3, 100], so the log residuals are exactly d and 2d.
    std::uniform_real_distribution<double> unif(-0.2, 0.2);
    for (size_t i = 0; i < ref.data.size(); ++i) {
        double d = unif(rng);
        t1.data[i] = ref.data[i] * std::pow(10.0, d);
        t2.data[i] = ref.data[i] * std::pow(10.0, 2.0 * d); // doubled residual
    }
    double p1 = log_psnr(t1, ref, 100.0);
    double p2 = log_psnr(t2, ref, 100.0);
    CHECK(p1 - p2 == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-9));
}

TEST_CASE("log PSNR falls as noise grows") {
    std::mt19937 rng(33);
    IrradianceFrame ref = random_frame(rng, 32, 32, 0.5, 400.0);
    double last = 101.0;
    for (double sigma : {0.01, 0.03, 0.1, 0.3}) {
        std::mt19937 noise_rng(5);
        std::normal_distribution<double> gauss(0.0, sigma);
        IrradianceFrame test = ref;
        for (double& v : test.data) v *= std::exp(gauss(noise_rng));
        double p = log_psnr(test, ref);
        CHECK(p < last);
        last = p;
    }
}

TEST_CASE("PU curve is strictly monotone and anchored") {
    PuCurve c = PuCurve::builtin();
    const auto& L = c.luminances();
    const auto& P = c.values();
    REQUIRE(L.size() == P.size());
    REQUIRE(L.size() == 13 * 64 + 1);
    for (size_t i = 1; i < L.size(); ++i) {
        CHECK(L[i] > L[i - 1]);
        CHECK(P[i] > P[i - 1]);
    }
    CHECK(L.front() == doctest::Approx(1e-5));
    CHECK(L.back() == doctest::Approx(1e8));
    // Linear part: P = 10 L up to 10 cd/m^2.
    CHECK(c.encode(1.0) == doctest::Approx(10.0).epsilon(1e-6));
    CHECK(c.encode(10.0) == doctest::Approx(100.0).epsilon(1e-6));
    // Log part grows by 57.27 ln(10) per decade.
    CHECK(c.encode(1000.0) - c.encode(100.0) ==
          doctest::Approx(57.27 * std::log(10.0)).epsilon(1e-6));
}

TEST_CASE("PU curve save/load round-trips exactly") {
    PuCurve c = PuCurve::builtin();
    std::string path = "pu_curve_roundtrip.txt";
    c.save(path);
    PuCurve d = PuCurve::load(path);
    REQUIRE(c.luminances().size() == d.luminances().size());
    for (size_t i = 0; i < c.luminances().size(); ++i) {
        CHECK(c.luminances()[i] == d.luminances()[i]);
        CHECK(c.values()[i] == d.values()[i]);
    }
    std::remove(path.c_str());
}

#ifdef MAPHDR_DATA_DIR
TEST_CASE("shipped PU curve file matches the built-in table") {
    PuCurve file = PuCurve::load(std::string(MAPHDR_DATA_DIR) + "/pu_curve.txt");
    PuCurve c = PuCurve::builtin();
    REQUIRE(file.luminances().size() == c.luminances().size());
    for (size_t i = 0; i < c.luminances().size(); ++i) {
        CHECK(file.luminances()[i] == c.luminances()[i]);
        CHECK(file.values()[i] == c.values()[i]);
    }
}
#endif

TEST_CASE("doubling absolute luminance barely moves puPSNR in the log region") {
    std::mt19937 rng(9);
    IrradianceFrame ref = random_frame(rng, 24, 24, 50.0, 2000.0);
    IrradianceFrame test = ref;
    std::normal_distribution<double> gauss(0.0, 0.08);
    for (double& v : test.data) v *= std::exp(gauss(rng));
    IrradianceFrame ref2 = ref, test2 = test;
    for (double& v : ref2.data) v *= 2.0;
    for (double& v : test2.data) v *= 2.0;
    double a = pu_psnr(test, ref, 4000.0);
    double b = pu_psnr(test2, ref2, 4000.0);
    CHECK(std::abs(a - b) < 3.0);
}

TEST_CASE("quadrupling PU-domain MSE costs exactly 10 log10(4) dB") {
    PuCurve curve = PuCurve::builtin();
    std::mt19937 rng(41);
    IrradianceFrame ref = random_frame(rng, 12, 12, 20.0, 900.0);
    IrradianceFrame t1(12, 12, 1), t2(12, 12, 1);
    std::normal_distribution<double> gauss(0.0, 3.0);
    for (size_t i = 0; i < ref.data.size(); ++i) {
        double pr = curve.encode(ref.data[i]);
        double d = gauss(rng);
        t1.data[i] = pu_decode(curve, pr + d);
        t2.data[i] = pu_decode(curve, pr + 2.0 * d);
    }
    double p1 = pu_psnr(t1, ref, 4000.0, curve);
    double p2 = pu_psnr(t2, ref, 4000.0, curve);
    CHECK(p1 - p2 == doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-6));
}

TEST_CASE("nonpositive luminances clamp instead of failing") {
    IrradianceFrame ref(4, 4, 1, 100.0);
    IrradianceFrame test(4, 4, 1, -5.0);
    double p = pu_psnr(test, ref, 4000.0);
    CHECK(std::isfinite(p));
    // Same as a test frame pinned at the clamp floor.
    IrradianceFrame floor_frame(4, 4, 1, 1e-5);
    CHECK(p == doctest::Approx(pu_psnr(floor_frame, ref, 4000.0)));
}
