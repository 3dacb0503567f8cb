// maphdr — HDR video synthesis from LDR sequences with alternating
// exposures, plus the surrounding plumbing: synthetic-dataset generation,
// quality metrics, tonemapped previews, and small numeric self-checks.
//
// Exit codes: 0 success, 1 usage error, 2 bad input data, 3 numerical
// failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "maphdr/config.hpp"
#include "maphdr/errors.hpp"
#include "maphdr/flow.hpp"
#include "maphdr/image.hpp"
#include "maphdr/io.hpp"
#include "maphdr/kernel_regression.hpp"
#include "maphdr/metrics.hpp"
#include "maphdr/pipeline.hpp"
#include "maphdr/response.hpp"
#include "maphdr/synthetic.hpp"
#include "maphdr/tonemap.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace maphdr;

namespace {

// ---- shared helpers ----

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw DataError(what + ": cannot parse '" + item + "' as a number");
        }
    }
    if (out.empty()) throw DataError(what + ": empty list");
    return out;
}

// Manifest: one "<filename> <exposure_seconds>" per line, '#' comments,
// filenames relative to the manifest's own directory.
std::vector<LdrFrame> load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    fs::path base = fs::path(path).parent_path();
    std::vector<LdrFrame> frames;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::stringstream ss(line);
        std::string file;
        double exposure = 0.0;
        if (!(ss >> file)) continue; // blank
        if (!(ss >> exposure))
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": expected '<file> <exposure_seconds>'");
        std::string extra;
        if (ss >> extra)
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": trailing token '" + extra + "'");
        if (!(exposure > 0.0))
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": exposure must be positive");
        LdrFrame frame = read_ldr((base / file).string());
        frame.exposure_s = exposure;
        frames.push_back(std::move(frame));
    }
    if (frames.empty()) throw DataError("manifest lists no frames: " + path);
    return frames;
}

IrradianceFrame read_hdr_any(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".pfm") return read_pfm(path);
    if (ext == ".hdr") return read_rgbe(path);
    throw DataError("unsupported HDR format (want .pfm or .hdr): " + path);
}

// A single file, or every .pfm/.hdr in a directory, sorted by name.
std::vector<std::string> list_hdr_files(const std::string& path) {
    if (fs::is_regular_file(path)) return {path};
    if (!fs::is_directory(path))
        throw DataError("no such file or directory: " + path);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(path)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".pfm" || ext == ".hdr")
            files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError("no .pfm or .hdr files in directory: " + path);
    return files;
}

// The config may pin its own exposedness margin; a curve loaded from disk
// carries one too. A non-negative config value wins.
ResponseCurve reconcile_z_th(ResponseCurve curve, const RunConfig& cfg) {
    int want = resolve_z_th(cfg, curve.z_max());
    if (want == curve.z_th()) return curve;
    return ResponseCurve(curve.table(), want);
}

RunConfig build_config(const std::string& config_path,
                       const std::vector<std::string>& overrides) {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const std::string& assignment : overrides)
        apply_override(cfg, assignment);
    validate_config(cfg);
    return cfg;
}

std::string frame_name(const std::string& prefix, int index,
                       const std::string& ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d", index);
    return prefix + buf + ext;
}

double max_luminance(const std::vector<IrradianceFrame>& frames) {
    double peak = 0.0;
    for (const auto& f : frames) {
        Image<double> lum = luminance(f);
        for (double v : lum.data) peak = std::max(peak, v);
    }
    return peak;
}

// ---- synthesize ----

struct SynthesizeArgs {
    std::string manifest, crf, out_dir, config, log_json;
    std::vector<std::string> overrides;
    std::string format = "pfm";
    std::string prefix = "hdr_";
};

int run_synthesize(const SynthesizeArgs& a) {
    RunConfig cfg = build_config(a.config, a.overrides);
    ResponseCurve curve = reconcile_z_th(ResponseCurve::load(a.crf), cfg);
    std::vector<LdrFrame> frames = load_manifest(a.manifest);

    fs::create_directories(a.out_dir);
    std::ofstream log;
    if (!a.log_json.empty()) {
        log.open(a.log_json);
        if (!log) throw DataError("cannot open log file: " + a.log_json);
    }

    std::vector<FrameStats> stats;
    std::vector<IrradianceFrame> video =
        synthesize_video(frames, curve, cfg, &stats);

    std::string ext = a.format == "hdr" ? ".hdr" : ".pfm";
    for (size_t i = 0; i < video.size(); ++i) {
        fs::path out =
            fs::path(a.out_dir) / frame_name(a.prefix, static_cast<int>(i), ext);
        if (a.format == "hdr")
            write_rgbe(video[i], out.string());
        else
            write_pfm(video[i], out.string());
        const FrameStats& s = stats[i];
        std::printf("frame %zu: %.2f s, support %d px, regression %d px\n", i,
                    s.seconds, s.support_pixels, s.regression_pixels);
        if (log) log << stats_json(s) << "\n";
    }
    std::printf("wrote %zu frames to %s\n", video.size(), a.out_dir.c_str());
    return 0;
}

// ---- gen-synthetic ----

struct GenArgs {
    std::string out_dir;
    int width = 160, height = 120, frames = 9;
    double bg_low = 1.0, bg_high = 100.0;
    std::vector<std::string> rects;
    double noise = 0.0;
    unsigned seed = 1;
    std::string exposures = "0.005,0.0005";
    int z_max = 255, z_th = -1;
    double crf_gamma = 2.2, crf_pedestal = 0.0;
};

int run_gen_synthetic(const GenArgs& a) {
    SceneSpec spec;
    spec.width = a.width;
    spec.height = a.height;
    spec.frames = a.frames;
    spec.bg_low = a.bg_low;
    spec.bg_high = a.bg_high;
    spec.noise_sigma = a.noise;
    spec.seed = a.seed;
    for (const std::string& text : a.rects) {
        std::vector<double> v = parse_double_list(text, "--rect");
        if (v.size() != 7)
            throw DataError("--rect wants x,y,w,h,vx,vy,radiance (7 numbers), "
                            "got " + std::to_string(v.size()));
        spec.rects.push_back({v[0], v[1], v[2], v[3], v[4], v[5], v[6]});
    }
    std::vector<double> exposures = parse_double_list(a.exposures, "--exposures");
    for (double e : exposures)
        if (!(e > 0.0)) throw DataError("--exposures: values must be positive");

    int z_th = a.z_th >= 0
                   ? a.z_th
                   : static_cast<int>(std::lround(0.05 * a.z_max));
    ResponseCurve curve = ResponseCurve::gamma_curve(3, a.z_max, z_th,
                                                     a.crf_gamma,
                                                     a.crf_pedestal);

    SyntheticSequence seq = generate_synthetic(spec, curve, exposures);

    fs::create_directories(a.out_dir);
    fs::path dir(a.out_dir);
    curve.save((dir / "crf.txt").string());
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw DataError("cannot write manifest in " + a.out_dir);
    for (int k = 0; k < a.frames; ++k) {
        std::string ldr = frame_name("frame_", k, ".png");
        write_ldr(seq.frames[k], a.z_max, (dir / ldr).string());
        manifest << ldr << " " << seq.frames[k].exposure_s << "\n";
        write_pfm(seq.truth[k], (dir / frame_name("truth_", k, ".pfm")).string());
        Image<unsigned char> mask(a.width, a.height, 1, 0);
        for (size_t i = 0; i < mask.data.size(); ++i)
            mask.data[i] = seq.object_mask[k].data[i] ? 255 : 0;
        write_display(mask, (dir / frame_name("mask_", k, ".png")).string());
    }
    std::printf("wrote %d frames (+ truth, masks, crf.txt, manifest.txt) "
                "to %s\n", a.frames, a.out_dir.c_str());
    return 0;
}

// ---- metrics ----

struct MetricsArgs {
    std::string test, ref;
    std::string metric = "both";
    double peak = 0.0;    // logPSNR peak; 0 selects the reference max
    double peak_cd = 0.0; // puPSNR peak in cd/m^2; 0 selects the reference max
    std::string pu_curve, json_out;
};

json report_json(const MetricReport& r) {
    return json{{"metric", r.metric},
                {"frames", r.frames},
                {"values", r.values},
                {"mean", r.mean}};
}

int run_metrics(const MetricsArgs& a) {
    std::vector<std::string> test_files = list_hdr_files(a.test);
    std::vector<std::string> ref_files = list_hdr_files(a.ref);
    if (test_files.size() != ref_files.size())
        throw DataError("frame count mismatch: " +
                        std::to_string(test_files.size()) + " test vs " +
                        std::to_string(ref_files.size()) + " reference");
    if (a.metric != "logpsnr" && a.metric != "pupsnr" && a.metric != "both")
        throw DataError("--metric wants logpsnr, pupsnr, or both");

    std::vector<IrradianceFrame> tests, refs;
    for (size_t i = 0; i < test_files.size(); ++i) {
        tests.push_back(read_hdr_any(test_files[i]));
        refs.push_back(read_hdr_any(ref_files[i]));
        if (!tests.back().same_dims(refs.back()))
            throw DataError("dimension mismatch between " + test_files[i] +
                            " and " + ref_files[i]);
    }

    std::vector<MetricReport> reports;
    auto add = [&](const std::string& name, auto&& per_frame) {
        MetricReport r;
        r.metric = name;
        for (size_t i = 0; i < tests.size(); ++i) {
            r.frames.push_back(fs::path(test_files[i]).filename().string());
            r.values.push_back(per_frame(tests[i], refs[i]));
            r.mean += r.values.back();
        }
        r.mean /= static_cast<double>(r.values.size());
        reports.push_back(std::move(r));
    };

    if (a.metric == "logpsnr" || a.metric == "both")
        add("logpsnr", [&](const IrradianceFrame& t, const IrradianceFrame& r) {
            return log_psnr(t, r, a.peak);
        });
    if (a.metric == "pupsnr" || a.metric == "both") {
        PuCurve curve =
            a.pu_curve.empty() ? PuCurve::builtin() : PuCurve::load(a.pu_curve);
        double peak_cd = a.peak_cd > 0.0 ? a.peak_cd : max_luminance(refs);
        add("pupsnr", [&](const IrradianceFrame& t, const IrradianceFrame& r) {
            return pu_psnr(t, r, peak_cd, curve);
        });
    }

    json out = json::array();
    for (const auto& r : reports) out.push_back(report_json(r));
    std::string text = out.dump(2);
    std::printf("%s\n", text.c_str());
    if (!a.json_out.empty()) write_file(a.json_out, text + "\n");
    return 0;
}

// ---- tonemap ----

struct TonemapArgs {
    std::string in, out;
    double key = 0.18, white = 1e8;
};

int run_tonemap(const TonemapArgs& a) {
    IrradianceFrame frame = read_hdr_any(a.in);
    write_display(tonemap_reinhard(frame, a.key, a.white), a.out);
    std::printf("wrote %s\n", a.out.c_str());
    return 0;
}

// ---- kr-selftest ----

// Random local regression problem shaped like the pipeline's own: a full
// P x P x 3 sample block with integer offsets.
SteeringProblem random_steering_problem(std::mt19937& rng, int radius) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    SteeringProblem p;
    for (int dt = -1; dt <= 1; ++dt)
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx) {
                LocalSample s;
                s.offset = Eigen::Vector3d(dx, dy, dt);
                s.value = 1.2 * unif(rng);
                s.phi = unif(rng);
                s.well_exposed = s.phi > 0.5;
                p.samples.push_back(s);
            }
    p.center_value = unif(rng);
    p.center_phi = unif(rng);
    p.t_target = unif(rng) < 0.5 ? 0.05 : 0.95;
    p.long_reference = unif(rng) < 0.5;
    return p;
}

Eigen::Matrix3d random_upper_factor(std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::Matrix3d R = Eigen::Matrix3d::Zero();
    R(0, 0) = unif(rng) + 1.5;
    R(1, 1) = unif(rng) + 1.5;
    R(2, 2) = unif(rng) + 1.5;
    R(0, 1) = unif(rng);
    R(0, 2) = unif(rng);
    R(1, 2) = unif(rng);
    return R;
}

struct SelftestArgs {
    int instances = 100;
    int systems = 1000;
    unsigned seed = 1;
};

int run_kr_selftest(const SelftestArgs& a) {
    std::mt19937 rng(a.seed);
    const double step = 1e-5;
    const int pairs[6][2] = {{0, 0}, {0, 1}, {0, 2}, {1, 1}, {1, 2}, {2, 2}};

    // Analytic steering gradient against central differences.
    double worst_rel = 0.0;
    bool grad_ok = true;
    for (int trial = 0; trial < a.instances; ++trial) {
        SteeringProblem p = random_steering_problem(rng, 3);
        Eigen::Matrix3d R = random_upper_factor(rng);
        Eigen::Matrix3d G = steering_gradient(R, p);
        for (auto [i, j] : pairs) {
            Eigen::Matrix3d Rp = R, Rm = R;
            Rp(i, j) += step;
            Rm(i, j) -= step;
            double fd =
                (steering_cost(Rp, p) - steering_cost(Rm, p)) / (2.0 * step);
            if (std::abs(fd) < 1e-8) {
                if (std::abs(G(i, j) - fd) > 1e-7) grad_ok = false;
            } else {
                double rel = std::abs(G(i, j) - fd) / std::abs(fd);
                worst_rel = std::max(worst_rel, rel);
                if (rel >= 1e-5) grad_ok = false;
            }
        }
    }
    std::printf("gradient vs central differences: %d instances, worst "
                "relative error %.2e  [%s]\n",
                a.instances, worst_rel, grad_ok ? "ok" : "FAIL");

    // Weighted ridge solve against a dense reference solve.
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    double worst_abs = 0.0;
    for (int trial = 0; trial < a.systems; ++trial) {
        int n = 5 + trial % 60;
        Eigen::MatrixXd X(n, 4);
        Eigen::VectorXd lam(n), y(n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < 4; ++j) X(i, j) = unif(rng);
            lam(i) = pos(rng);
            y(i) = unif(rng);
        }
        double eps = 0.01 + pos(rng);
        Eigen::VectorXd beta = solve_ridge(X, lam, y, eps);
        Eigen::MatrixXd A = X.transpose() * lam.asDiagonal() * X +
                            eps * Eigen::MatrixXd::Identity(4, 4);
        Eigen::VectorXd ref =
            A.colPivHouseholderQr().solve(X.transpose() * (lam.array() * y.array()).matrix());
        worst_abs = std::max(worst_abs, (beta - ref).cwiseAbs().maxCoeff());
    }
    bool ridge_ok = worst_abs < 1e-10;
    std::printf("ridge solve vs dense reference: %d systems, worst "
                "deviation %.2e  [%s]\n",
                a.systems, worst_abs, ridge_ok ? "ok" : "FAIL");

    if (!grad_ok || !ridge_ok)
        throw NumericError("kernel-regression self-test failed");
    return 0;
}

// ---- flow (debug) ----

struct FlowArgs {
    std::string ref, tgt, out;
    FlowParams params;
};

Image<double> flow_input(const std::string& path) {
    std::string ext = fs::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    Image<double> lum;
    if (ext == ".pfm" || ext == ".hdr") {
        lum = luminance(read_hdr_any(path));
    } else {
        LdrFrame ldr = read_ldr(path);
        Image<double> img(ldr.width, ldr.height, ldr.channels);
        for (size_t i = 0; i < ldr.data.size(); ++i)
            img.data[i] = static_cast<double>(ldr.data[i]);
        lum = luminance(img);
    }
    double peak = 0.0;
    for (double v : lum.data) peak = std::max(peak, v);
    if (peak > 0.0)
        for (double& v : lum.data) v /= peak;
    return lum;
}

int run_flow(const FlowArgs& a) {
    Image<double> ref = flow_input(a.ref);
    Image<double> tgt = flow_input(a.tgt);
    if (!ref.same_dims(tgt))
        throw DataError("flow inputs differ in size");
    FlowField flow = estimate_flow(ref, tgt, a.params);

    std::vector<double> mags;
    mags.reserve(flow.u.data.size());
    double peak = 0.0;
    for (size_t i = 0; i < flow.u.data.size(); ++i) {
        double m = std::hypot(flow.u.data[i], flow.v.data[i]);
        mags.push_back(m);
        peak = std::max(peak, m);
    }
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    std::printf("flow %dx%d: median |f| %.4f px, max |f| %.4f px\n",
                flow.width(), flow.height(), mags[mags.size() / 2], peak);

    if (!a.out.empty()) {
        IrradianceFrame packed(flow.width(), flow.height(), 3);
        for (int y = 0; y < packed.height; ++y)
            for (int x = 0; x < packed.width; ++x) {
                packed.at(x, y, 0) = flow.u.at(x, y);
                packed.at(x, y, 1) = flow.v.at(x, y);
                packed.at(x, y, 2) = 0.0;
            }
        write_pfm(packed, a.out);
        std::printf("wrote %s (channels: u, v, 0)\n", a.out.c_str());
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"HDR video synthesis from alternating-exposure LDR "
                 "sequences"};
    app.require_subcommand(1);

    SynthesizeArgs syn;
    CLI::App* c_syn = app.add_subcommand(
        "synthesize", "Synthesize an HDR frame per input frame");
    c_syn->add_option("--manifest", syn.manifest,
                      "Text file: '<frame> <exposure_seconds>' per line")
        ->required();
    c_syn->add_option("--crf", syn.crf, "Response curve file")->required();
    c_syn->add_option("--out-dir", syn.out_dir, "Output directory")->required();
    c_syn->add_option("--config", syn.config, "key=value config file");
    c_syn->add_option("--set", syn.overrides,
                      "Single key=value override (repeatable)");
    c_syn->add_option("--format", syn.format, "Output format: pfm or hdr")
        ->check(CLI::IsMember({"pfm", "hdr"}));
    c_syn->add_option("--prefix", syn.prefix, "Output filename prefix");
    c_syn->add_option("--log-json", syn.log_json,
                      "Write one JSON stats object per frame to this file");

    GenArgs gen;
    CLI::App* c_gen = app.add_subcommand(
        "gen-synthetic",
        "Render a synthetic alternating-exposure dataset with ground truth");
    c_gen->add_option("--out-dir", gen.out_dir, "Output directory")->required();
    c_gen->add_option("--width", gen.width)->check(CLI::PositiveNumber);
    c_gen->add_option("--height", gen.height)->check(CLI::PositiveNumber);
    c_gen->add_option("--frames", gen.frames)->check(CLI::PositiveNumber);
    c_gen->add_option("--bg-low", gen.bg_low,
                      "Background radiance at the dark corner");
    c_gen->add_option("--bg-high", gen.bg_high,
                      "Background radiance at the bright corner");
    c_gen->add_option("--rect", gen.rects,
                      "Moving rectangle x,y,w,h,vx,vy,radiance (repeatable)");
    c_gen->add_option("--noise", gen.noise, "Code-domain noise stddev");
    c_gen->add_option("--seed", gen.seed);
    c_gen->add_option("--exposures", gen.exposures,
                      "Comma list of exposure seconds, cycled over frames");
    c_gen->add_option("--z-max", gen.z_max)->check(CLI::PositiveNumber);
    c_gen->add_option("--z-th", gen.z_th,
                      "Exposedness margin in codes; -1 = 5% of z-max");
    c_gen->add_option("--crf-gamma", gen.crf_gamma,
                      "Gamma of the simulated response curve");
    c_gen->add_option("--crf-pedestal", gen.crf_pedestal,
                      "Black-level pedestal of the simulated response in "
                      "[0,1); exposures below it clip to code 0");

    MetricsArgs met;
    CLI::App* c_met = app.add_subcommand(
        "metrics", "logPSNR / puPSNR between frame sets");
    c_met->add_option("--test", met.test, "Frame file or directory")
        ->required();
    c_met->add_option("--ref", met.ref, "Reference file or directory")
        ->required();
    c_met->add_option("--metric", met.metric, "logpsnr, pupsnr, or both")
        ->check(CLI::IsMember({"logpsnr", "pupsnr", "both"}));
    c_met->add_option("--peak", met.peak,
                      "logPSNR peak luminance; 0 = reference max");
    c_met->add_option("--peak-cd", met.peak_cd,
                      "puPSNR peak in cd/m^2; 0 = reference max");
    c_met->add_option("--pu-curve", met.pu_curve,
                      "Tabulated perceptual curve ('L P' per line)");
    c_met->add_option("--json", met.json_out, "Also write the report here");

    TonemapArgs tm;
    CLI::App* c_tm = app.add_subcommand(
        "tonemap", "Photographic tonemapping to an 8-bit preview");
    c_tm->add_option("--in", tm.in, "HDR input (.pfm or .hdr)")->required();
    c_tm->add_option("--out", tm.out, "8-bit output (.png/.ppm/.pgm)")
        ->required();
    c_tm->add_option("--key", tm.key)->check(CLI::PositiveNumber);
    c_tm->add_option("--white", tm.white)->check(CLI::PositiveNumber);

    SelftestArgs st;
    CLI::App* c_st = app.add_subcommand(
        "kr-selftest",
        "Check the regression gradient and ridge solver against oracles");
    c_st->add_option("--instances", st.instances)->check(CLI::PositiveNumber);
    c_st->add_option("--systems", st.systems)->check(CLI::PositiveNumber);
    c_st->add_option("--seed", st.seed);

    FlowArgs fl;
    CLI::App* c_fl = app.add_subcommand(
        "flow", "Dense flow between two frames (debug aid)");
    c_fl->add_option("--ref", fl.ref, "Reference frame")->required();
    c_fl->add_option("--tgt", fl.tgt, "Target frame")->required();
    c_fl->add_option("--out", fl.out, "Write the field as a 3-channel PFM");
    c_fl->add_option("--levels", fl.params.levels)->check(CLI::PositiveNumber);
    c_fl->add_option("--lambda", fl.params.lambda)
        ->check(CLI::PositiveNumber);
    c_fl->add_option("--sor-iters", fl.params.sor_iters)
        ->check(CLI::PositiveNumber);
    c_fl->add_option("--omega", fl.params.omega);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 1;
    }

    try {
        if (c_syn->parsed()) return run_synthesize(syn);
        if (c_gen->parsed()) return run_gen_synthetic(gen);
        if (c_met->parsed()) return run_metrics(met);
        if (c_tm->parsed()) return run_tonemap(tm);
        if (c_st->parsed()) return run_kr_selftest(st);
        if (c_fl->parsed()) return run_flow(fl);
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
