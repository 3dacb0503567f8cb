#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <random>

#include "maphdr/config.hpp"
#include "maphdr/errors.hpp"
#include "maphdr/io.hpp"
#include "maphdr/synthetic.hpp"
#include "maphdr/tonemap.hpp"

using namespace maphdr;

namespace {

IrradianceFrame random_hdr(std::mt19937& rng, int w, int h, int c) {
    std::uniform_real_distribution<double> unif(0.001, 1000.0);
    IrradianceFrame f(w, h, c);
    // Float-representable samples so PFM round-trips compare exactly.
    for (double& v : f.data) v = static_cast<float>(unif(rng));
    return f;
}

struct TempFile {
    std::string path;
    explicit TempFile(std::string p) : path(std::move(p)) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

// ---- PFM ----

TEST_CASE("PFM bytes for a 1x1 color frame") {
    IrradianceFrame f(1, 1, 3, 0.5);
    std::string b = pfm_bytes(f);
    const std::string header = "PF\n1 1\n-1.0\n";
    REQUIRE(b.size() == header.size() + 12);
    CHECK(b.compare(0, header.size(), header) == 0);
    float v;
    std::memcpy(&v, b.data() + header.size(), 4);
    CHECK(v == 0.5f);
}

TEST_CASE("PFM round-trip is bit-identical") {
    std::mt19937 rng(3);
    for (int channels : {1, 3}) {
        IrradianceFrame f = random_hdr(rng, 23, 17, channels);
        std::string b = pfm_bytes(f);
        IrradianceFrame g = parse_pfm(b);
        CHECK(pfm_bytes(g) == b);
        REQUIRE(g.same_dims(f));
        for (size_t i = 0; i < f.data.size(); ++i)
            CHECK(g.data[i] == f.data[i]);
    }
}

TEST_CASE("PFM file round-trip through disk") {
    std::mt19937 rng(4);
    IrradianceFrame f = random_hdr(rng, 9, 6, 3);
    TempFile tmp("io_roundtrip.pfm");
    write_pfm(f, tmp.path);
    IrradianceFrame g = read_pfm(tmp.path);
    CHECK(pfm_bytes(g) == pfm_bytes(f));
}

TEST_CASE("big-endian PFM is byteswapped on read") {
    IrradianceFrame f(2, 1, 1);
    f.at(0, 0) = 1.5;
    f.at(1, 0) = -2.25;
    std::string le = pfm_bytes(f);
    // Rebuild with +1.0 scale and swapped payload bytes.
    std::string be = "Pf\n2 1\n1.0\n";
    size_t payload = le.size() - 12;
    for (size_t i = 0; i < payload; i += 4) {
        const char* p = le.data() + 12 + i;
        be.push_back(p[3]);
        be.push_back(p[2]);
        be.push_back(p[1]);
        be.push_back(p[0]);
    }
    IrradianceFrame g = parse_pfm(be);
    CHECK(g.at(0, 0) == 1.5);
    CHECK(g.at(1, 0) == -2.25);
}

TEST_CASE("malformed PFM inputs are rejected with byte offsets") {
    IrradianceFrame f(4, 4, 3, 1.0);
    std::string b = pfm_bytes(f);
    CHECK_THROWS_WITH_AS(parse_pfm(b.substr(0, b.size() - 5)),
                         doctest::Contains("at byte"), DataError);
    CHECK_THROWS_AS(parse_pfm("P7\n1 1\n-1.0\nxxxx"), DataError);
    CHECK_THROWS_AS(parse_pfm("PF\n1 1\n0.0\n............"), DataError);

    f.at(2, 1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(pfm_bytes(f), DataError);
    // NaN smuggled into the payload is caught on read.
    std::string nan_bytes = b;
    uint32_t nan_bits = 0x7FC00000u;
    std::memcpy(nan_bytes.data() + nan_bytes.size() - 4, &nan_bits, 4);
    CHECK_THROWS_AS(parse_pfm(nan_bytes), DataError);
}

// ---- RGBE ----

TEST_CASE("RGBE encodes unit white as 128,128,128,129") {
    unsigned char px[4];
    encode_rgbe(1.0, 1.0, 1.0, px);
    CHECK(px[0] == 128);
    CHECK(px[1] == 128);
    CHECK(px[2] == 128);
    CHECK(px[3] == 129);
}

TEST_CASE("RGBE zero maps to zero and back") {
    unsigned char px[4];
    encode_rgbe(0.0, 0.0, 0.0, px);
    CHECK(px[0] == 0);
    CHECK(px[1] == 0);
    CHECK(px[2] == 0);
    CHECK(px[3] == 0);
    double rgb[3];
    decode_rgbe(px, rgb);
    CHECK(rgb[0] == 0.0);
    CHECK(rgb[1] == 0.0);
    CHECK(rgb[2] == 0.0);
}

TEST_CASE("RGBE pixel round-trip stays within 1/256 relative") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> decade(-4.0, 4.0);
    std::uniform_real_distribution<double> frac(0.5, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        double scale = std::pow(10.0, decade(rng));
        double rgb_in[3] = {scale * frac(rng), scale * frac(rng),
                            scale * frac(rng)};
        unsigned char px[4];
        encode_rgbe(rgb_in[0], rgb_in[1], rgb_in[2], px);
        double rgb_out[3];
        decode_rgbe(px, rgb_out);
        double vmax = std::max({rgb_in[0], rgb_in[1], rgb_in[2]});
        for (int c = 0; c < 3; ++c) {
            // Shared-exponent quantization: half a mantissa step, which is
            // 1/256 of the pixel's dominant component.
            CHECK(std::abs(rgb_out[c] - rgb_in[c]) <= vmax / 256.0 + 1e-12);
            // Components within 2x of the max stay within 1% relative.
            CHECK(std::abs(rgb_out[c] - rgb_in[c]) <= 0.01 * rgb_in[c]);
        }
    }
}

TEST_CASE("RGBE image round-trip through RLE scanlines") {
    std::mt19937 rng(12);
    IrradianceFrame f(64, 9, 3);
    std::uniform_real_distribution<double> frac(0.5, 1.0);
    for (int y = 0; y < f.height; ++y) {
        // Alternate constant rows (long runs) with random rows (literals).
        if (y % 2 == 0) {
            double v = frac(rng) * 10.0;
            for (int x = 0; x < f.width; ++x)
                for (int c = 0; c < 3; ++c) f.at(x, y, c) = v * (c + 1);
        } else {
            for (int x = 0; x < f.width; ++x) {
                double base = frac(rng) * 100.0;
                for (int c = 0; c < 3; ++c) f.at(x, y, c) = base * frac(rng);
            }
        }
    }
    std::string bytes = rgbe_bytes(f);
    IrradianceFrame g = parse_rgbe(bytes);
    REQUIRE(g.same_dims(f));
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double vmax = std::max({f.at(x, y, 0), f.at(x, y, 1), f.at(x, y, 2)});
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(g.at(x, y, c) - f.at(x, y, c)) <=
                      vmax / 256.0 + 1e-12);
        }
}

TEST_CASE("narrow RGBE images use flat scanlines and still round-trip") {
    IrradianceFrame f(4, 3, 3);
    for (size_t i = 0; i < f.data.size(); ++i) f.data[i] = 0.5 + 0.01 * i;
    std::string bytes = rgbe_bytes(f);
    IrradianceFrame g = parse_rgbe(bytes);
    for (size_t i = 0; i < f.data.size(); ++i)
        CHECK(std::abs(g.data[i] - f.data[i]) <= f.data[i] / 100.0);
}

TEST_CASE("RGBE reader honors EXPOSURE and rejects truncation") {
    IrradianceFrame f(16, 4, 3, 2.0);
    std::string bytes = rgbe_bytes(f);
    CHECK_THROWS_WITH_AS(parse_rgbe(bytes.substr(0, bytes.size() - 3)),
                         doctest::Contains("byte"), DataError);

    // Double the recorded exposure: decoded radiance halves.
    size_t fmt = bytes.find("FORMAT=");
    std::string exposed = bytes.substr(0, fmt) + "EXPOSURE=2.0\n" +
                          bytes.substr(fmt);
    IrradianceFrame g = parse_rgbe(exposed);
    CHECK(g.at(3, 1, 0) == doctest::Approx(1.0).epsilon(1.0 / 64));
    CHECK_THROWS_AS(parse_rgbe("#?RADIANCE\n\n-Z 4 +X 4\n"), DataError);
    CHECK_THROWS_AS(parse_rgbe("not an hdr file"), DataError);
}

TEST_CASE("RGBE file round-trip through disk") {
    IrradianceFrame f(20, 5, 3);
    for (size_t i = 0; i < f.data.size(); ++i)
        f.data[i] = 0.01 * static_cast<double>(i + 1);
    TempFile tmp("io_roundtrip.hdr");
    write_rgbe(f, tmp.path);
    IrradianceFrame g = read_rgbe(tmp.path);
    REQUIRE(g.same_dims(f));
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double vmax = std::max({f.at(x, y, 0), f.at(x, y, 1), f.at(x, y, 2)});
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(g.at(x, y, c) - f.at(x, y, c)) <=
                      vmax / 256.0 + 1e-12);
        }
}

// ---- LDR images ----

TEST_CASE("PNG round-trip preserves 8-bit codes") {
    std::mt19937 rng(21);
    std::uniform_int_distribution<int> code(0, 255);
    LdrFrame f;
    f.width = 19;
    f.height = 13;
    f.channels = 3;
    f.data.resize(19 * 13 * 3);
    for (int& v : f.data) v = code(rng);
    TempFile tmp("io_codes8.png");
    write_ldr(f, 255, tmp.path);
    LdrFrame g = read_ldr(tmp.path);
    CHECK(g.width == f.width);
    CHECK(g.height == f.height);
    CHECK(g.channels == f.channels);
    CHECK(g.data == f.data);
}

TEST_CASE("PNG round-trip preserves 16-bit codes") {
    std::mt19937 rng(22);
    std::uniform_int_distribution<int> code(0, 1023);
    LdrFrame f;
    f.width = 11;
    f.height = 7;
    f.channels = 1;
    f.data.resize(11 * 7);
    for (int& v : f.data) v = code(rng);
    TempFile tmp("io_codes16.png");
    write_ldr(f, 1023, tmp.path);
    LdrFrame g = read_ldr(tmp.path);
    CHECK(g.channels == 1);
    CHECK(g.data == f.data);
}

TEST_CASE("PPM and PGM round-trips at both sample widths") {
    std::mt19937 rng(23);
    for (int z_max : {255, 4095}) {
        std::uniform_int_distribution<int> code(0, z_max);
        LdrFrame f;
        f.width = 8;
        f.height = 5;
        f.channels = 3;
        f.data.resize(8 * 5 * 3);
        for (int& v : f.data) v = code(rng);
        TempFile tmp("io_codes.ppm");
        write_ldr(f, z_max, tmp.path);
        LdrFrame g = read_ldr(tmp.path);
        CHECK(g.data == f.data);

        LdrFrame gray;
        gray.width = 6;
        gray.height = 4;
        gray.channels = 1;
        gray.data.resize(24);
        for (int& v : gray.data) v = code(rng);
        TempFile tmp2("io_codes.pgm");
        write_ldr(gray, z_max, tmp2.path);
        LdrFrame h = read_ldr(tmp2.path);
        CHECK(h.data == gray.data);
    }
}

TEST_CASE("truncated PNM names the byte offset") {
    LdrFrame f;
    f.width = 4;
    f.height = 4;
    f.channels = 3;
    f.data.assign(48, 7);
    TempFile tmp("io_trunc.ppm");
    write_ldr(f, 255, tmp.path);
    std::string bytes = read_file(tmp.path);
    TempFile cut("io_trunc_cut.ppm");
    write_file(cut.path, bytes.substr(0, bytes.size() - 10));
    CHECK_THROWS_WITH_AS(read_ldr(cut.path), doctest::Contains("byte"),
                         DataError);
}

TEST_CASE("out-of-range codes are refused by the writer") {
    LdrFrame f;
    f.width = 2;
    f.height = 2;
    f.channels = 1;
    f.data = {0, 100, 300, 5};
    CHECK_THROWS_AS(write_ldr(f, 255, "io_never_written.png"), DataError);
}

// ---- Tonemap ----

TEST_CASE("constant frame lands at key/(1+key) display luminance") {
    IrradianceFrame f(6, 6, 3, 0.7);
    Image<unsigned char> img = tonemap_reinhard(f, 0.18, 1e8);
    // L == log-average, so L_m = 0.18 and L_d = 0.18/1.18; the display code
    // is that value after gamma 2.2.
    double ld = 0.18 / 1.18;
    int expected = static_cast<int>(std::lround(255.0 * std::pow(ld, 1.0 / 2.2)));
    for (unsigned char v : img.data) CHECK(static_cast<int>(v) == expected);
}

TEST_CASE("zero frame tonemaps to black") {
    IrradianceFrame f(5, 4, 3, 0.0);
    Image<unsigned char> img = tonemap_reinhard(f);
    for (unsigned char v : img.data) CHECK(v == 0);
}

TEST_CASE("tonemap output is monotone in input luminance") {
    IrradianceFrame f(64, 1, 1);
    for (int x = 0; x < 64; ++x) f.at(x, 0) = 1e-4 * std::pow(1.3, x);
    Image<unsigned char> img = tonemap_reinhard(f, 0.18, 100.0);
    for (int x = 1; x < 64; ++x)
        CHECK(img.at(x, 0) >= img.at(x - 1, 0));
}

TEST_CASE("tonemap validates its parameters") {
    IrradianceFrame f(2, 2, 3, 1.0);
    CHECK_THROWS_AS(tonemap_reinhard(f, 0.0), DataError);
    CHECK_THROWS_AS(tonemap_reinhard(f, 0.18, -1.0), DataError);
}

// ---- Config ----

TEST_CASE("empty config text yields the defaults") {
    RunConfig cfg = parse_config("");
    CHECK(cfg.alpha == 0.5);
    CHECK(cfg.beta_rule == "sigma");
    CHECK(cfg.beta_scale == 0.5);
    CHECK(cfg.gamma_scale == 0.005);
    CHECK(cfg.w_s == 20.0);
    CHECK(cfg.w_t == 20.0);
    CHECK(cfg.epsilon == 0.1);
    CHECK(cfg.lambda == 0.01);
    CHECK(cfg.kappa == 10.0);
    CHECK(cfg.window == 7);
    CHECK(cfg.bfgs_iters == 10);
    CHECK(cfg.levels == 3);
    CHECK(cfg.flow_lambda == 0.02);
    CHECK(cfg.flow_omega == 1.8);
    CHECK(cfg.z_th == -1);
    CHECK(cfg.gamma == 2.2);
}

TEST_CASE("config files parse comments, blanks, and overrides") {
    RunConfig cfg = parse_config("# comment line\n"
                                 "alpha = 0.25\n"
                                 "\n"
                                 "levels=2   # inline comment\n"
                                 "support_prior=threshold\n");
    CHECK(cfg.alpha == 0.25);
    CHECK(cfg.levels == 2);
    CHECK(cfg.support_prior == "threshold");
    apply_override(cfg, "kappa=5");
    CHECK(cfg.kappa == 5.0);
}

TEST_CASE("unknown keys and bad values are rejected with line numbers") {
    CHECK_THROWS_WITH_AS(parse_config("alpha=0.5\nbogus_key=1\n"),
                         doctest::Contains("line 2"), DataError);
    CHECK_THROWS_WITH_AS(parse_config("alpha=zebra\n"),
                         doctest::Contains("bad number"), DataError);
    CHECK_THROWS_AS(parse_config("alpha=-1\n"), DataError);
    CHECK_THROWS_AS(parse_config("flow_omega=2.5\n"), DataError);
    CHECK_THROWS_AS(parse_config("window=6\n"), DataError);
    CHECK_THROWS_AS(parse_config("beta_rule=sometimes\n"), DataError);
    CHECK_THROWS_AS(parse_config("beta_rule=fixed\n"), DataError);
    CHECK_THROWS_AS(parse_config("gamma_rule=fixed\n"), DataError);
}

TEST_CASE("serialize/parse round-trip is exact and key-set-identical") {
    RunConfig cfg = parse_config("alpha=0.125\nw_s=0.2\nw_t=40\nlevels=4\n"
                                 "beta_rule=fixed\nbeta_fixed=12.5\n"
                                 "gamma_rule=fixed\ngamma_fixed=0.25\n");
    std::string text = serialize_config(cfg);
    RunConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    // Every serialized key parses, so the emitted key set is the accepted set.
    CHECK(text.find("alpha=0.125\n") != std::string::npos);
    CHECK(text.find("beta_fixed=12.5\n") != std::string::npos);
}

TEST_CASE("config maps onto the module option structs") {
    RunConfig cfg = parse_config("beta_rule=fixed\nbeta_fixed=200\n"
                                 "window=5\nlevels=2\nsupport_prior=threshold\n");
    DecomposeOptions d = decompose_options(cfg);
    CHECK_FALSE(d.recompute_weights);
    CHECK(d.fixed_beta == 200.0);
    CHECK(d.fixed_gamma == doctest::Approx(1.0)); // 0.005 * 200
    CHECK_FALSE(d.pairwise);
    RegressionConfig rc = regression_config(cfg);
    CHECK(rc.block_radius == 2);
    FlowParams fp = flow_params(cfg, 1);
    CHECK(fp.levels == 1);
    CHECK(fp.lambda == 0.02);
    CHECK(resolve_z_th(cfg, 255) == 13);
    RunConfig explicit_th = parse_config("z_th=20\n");
    CHECK(resolve_z_th(explicit_th, 255) == 20);
}

// ---- Synthetic scenes ----

TEST_CASE("static noiseless scene repeats frames per exposure class") {
    SceneSpec spec;
    spec.width = 24;
    spec.height = 18;
    spec.frames = 6;
    spec.bg_low = 1.0;
    spec.bg_high = 50.0;
    ResponseCurve crf = ResponseCurve::gamma_curve(3, 255, 13);
    SyntheticSequence seq = generate_synthetic(spec, crf, {0.005, 0.0005});
    REQUIRE(seq.frames.size() == 6);
    for (int k = 2; k < 6; k += 2)
        CHECK(seq.frames[k].data == seq.frames[0].data);
    for (int k = 3; k < 6; k += 2)
        CHECK(seq.frames[k].data == seq.frames[1].data);
    CHECK(seq.frames[0].exposure_s == 0.005);
    CHECK(seq.frames[1].exposure_s == 0.0005);
}

TEST_CASE("long exposures saturate where short ones do not") {
    SceneSpec spec;
    spec.width = 32;
    spec.height = 24;
    spec.frames = 2;
    spec.bg_low = 2.0;
    spec.bg_high = 1500.0;
    ResponseCurve crf = ResponseCurve::gamma_curve(3, 255, 13);
    SyntheticSequence seq = generate_synthetic(spec, crf, {0.005, 0.0005});
    int saturated_long = 0, still_valid_short = 0;
    for (size_t i = 0; i < seq.frames[0].data.size(); ++i) {
        if (seq.frames[0].data[i] == 255) {
            ++saturated_long;
            if (seq.frames[1].data[i] < 255) ++still_valid_short;
        }
    }
    CHECK(saturated_long > 0);
    CHECK(still_valid_short == saturated_long);
}

TEST_CASE("generation is deterministic in the seed") {
    SceneSpec spec;
    spec.width = 16;
    spec.height = 12;
    spec.frames = 4;
    spec.noise_sigma = 2.0;
    spec.seed = 77;
    spec.rects.push_back({3.0, 2.0, 5.0, 4.0, 1.0, 0.5, 40.0});
    ResponseCurve crf = ResponseCurve::gamma_curve(3, 255, 13);
    SyntheticSequence a = generate_synthetic(spec, crf, {0.005, 0.0005});
    SyntheticSequence b = generate_synthetic(spec, crf, {0.005, 0.0005});
    for (int k = 0; k < 4; ++k) CHECK(a.frames[k].data == b.frames[k].data);

    spec.seed = 78;
    SyntheticSequence c = generate_synthetic(spec, crf, {0.005, 0.0005});
    bool any_diff = false;
    for (int k = 0; k < 4; ++k)
        if (c.frames[k].data != a.frames[k].data) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("object masks track the moving rectangle") {
    SceneSpec spec;
    spec.width = 20;
    spec.height = 15;
    spec.frames = 3;
    spec.rects.push_back({2.0, 4.0, 4.0, 3.0, 2.0, 0.0, 30.0});
    ResponseCurve crf = ResponseCurve::gamma_curve(3, 255, 13);
    SyntheticSequence seq = generate_synthetic(spec, crf, {0.005, 0.0005});
    // Frame 2: rectangle shifted right by 2*vx = 4 pixels.
    CHECK(seq.object_mask[0].at(2, 4) == 1);
    CHECK(seq.object_mask[0].at(6, 4) == 0);
    CHECK(seq.object_mask[2].at(6, 4) == 1);
    CHECK(seq.object_mask[2].at(2, 4) == 0);
    // Truth radiance inside the object differs from the background.
    CHECK(seq.truth[0].at(3, 5, 1) == doctest::Approx(30.0));
}

TEST_CASE("scene validation rejects bad parameters") {
    SceneSpec spec;
    ResponseCurve crf = ResponseCurve::gamma_curve(3, 255, 13);
    CHECK_THROWS_AS(generate_synthetic(spec, crf, {}), DataError);
    CHECK_THROWS_AS(generate_synthetic(spec, crf, {0.0}), DataError);
    spec.noise_sigma = -1.0;
    CHECK_THROWS_AS(generate_synthetic(spec, crf, {0.005}), DataError);
    spec.noise_sigma = 0.0;
    spec.rects.push_back({0, 0, -1.0, 2.0, 0, 0, 10.0});
    CHECK_THROWS_AS(generate_synthetic(spec, crf, {0.005}), DataError);
}
