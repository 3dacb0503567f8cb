#include "maphdr/io.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "maphdr/errors.hpp"

namespace maphdr {

namespace {

[[noreturn]] void truncated(const char* what, size_t offset, size_t need,
                            size_t have) {
    std::ostringstream os;
    os << "truncated " << what << " at byte " << offset << ": need " << need
       << " more bytes, have " << (have > offset ? have - offset : 0);
    throw DataError(os.str());
}

// Whitespace-delimited token scanner over a byte string.
struct Cursor {
    const std::string& buf;
    size_t pos = 0;

    void skip_ws() {
        while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos])))
            ++pos;
    }
    std::string token(const char* what) {
        skip_ws();
        size_t start = pos;
        while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos])))
            ++pos;
        if (pos == start)
            throw DataError(std::string("missing ") + what + " at byte " +
                            std::to_string(start));
        return buf.substr(start, pos - start);
    }
    int int_token(const char* what) {
        std::string t = token(what);
        try {
            size_t used = 0;
            int v = std::stoi(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw DataError(std::string("bad ") + what + " '" + t + "'");
        }
    }
    double double_token(const char* what) {
        std::string t = token(what);
        try {
            size_t used = 0;
            double v = std::stod(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw DataError(std::string("bad ") + what + " '" + t + "'");
        }
    }
    // One whitespace byte separates the header from binary payload.
    void expect_single_ws(const char* what) {
        if (pos >= buf.size() ||
            !std::isspace(static_cast<unsigned char>(buf[pos])))
            throw DataError(std::string("missing separator before ") + what +
                            " at byte " + std::to_string(pos));
        ++pos;
    }
};

float byteswap_float(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    bits = ((bits & 0xFF000000u) >> 24) | ((bits & 0x00FF0000u) >> 8) |
           ((bits & 0x0000FF00u) << 8) | ((bits & 0x000000FFu) << 24);
    std::memcpy(&v, &bits, 4);
    return v;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot create file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path);
}

// ---- PFM ----

std::string pfm_bytes(const IrradianceFrame& frame) {
    if (frame.width <= 0 || frame.height <= 0 ||
        (frame.channels != 1 && frame.channels != 3))
        throw DataError("PFM frames must be 1- or 3-channel and non-empty");
    for (double v : frame.data)
        if (!std::isfinite(v))
            throw DataError("cannot write non-finite sample to PFM");

    char header[64];
    std::snprintf(header, sizeof(header), "%s\n%d %d\n-1.0\n",
                  frame.channels == 3 ? "PF" : "Pf", frame.width, frame.height);
    std::string out(header);
    out.reserve(out.size() + frame.data.size() * 4);
    // Bottom row first, per the format.
    for (int y = frame.height - 1; y >= 0; --y)
        for (int x = 0; x < frame.width; ++x)
            for (int c = 0; c < frame.channels; ++c) {
                float f = static_cast<float>(frame.at(x, y, c));
                char raw[4];
                std::memcpy(raw, &f, 4);
                out.append(raw, 4);
            }
    return out;
}

IrradianceFrame parse_pfm(const std::string& bytes) {
    Cursor cur{bytes};
    std::string magic = cur.token("PFM magic");
    int channels;
    if (magic == "PF")
        channels = 3;
    else if (magic == "Pf")
        channels = 1;
    else
        throw DataError("not a PFM file (magic '" + magic + "')");
    int w = cur.int_token("PFM width");
    int h = cur.int_token("PFM height");
    double scale = cur.double_token("PFM scale");
    if (w <= 0 || h <= 0) throw DataError("PFM dimensions must be positive");
    if (scale == 0.0) throw DataError("PFM scale must be nonzero");
    cur.expect_single_ws("PFM pixel data");

    size_t need = static_cast<size_t>(w) * h * channels * 4;
    if (bytes.size() - cur.pos < need)
        truncated("PFM", cur.pos, need, bytes.size());

    IrradianceFrame frame(w, h, channels);
    const bool swap = scale > 0.0; // positive scale marks big-endian data
    size_t p = cur.pos;
    for (int y = h - 1; y >= 0; --y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) {
                float f;
                std::memcpy(&f, bytes.data() + p, 4);
                p += 4;
                if (swap) f = byteswap_float(f);
                if (std::isnan(f))
                    throw DataError("PFM payload contains NaN at byte " +
                                    std::to_string(p - 4));
                frame.at(x, y, c) = f;
            }
    return frame;
}

void write_pfm(const IrradianceFrame& frame, const std::string& path) {
    write_file(path, pfm_bytes(frame));
}

IrradianceFrame read_pfm(const std::string& path) {
    return parse_pfm(read_file(path));
}

// ---- RGBE ----

void encode_rgbe(double r, double g, double b, unsigned char out[4]) {
    r = std::max(r, 0.0);
    g = std::max(g, 0.0);
    b = std::max(b, 0.0);
    double v = std::max({r, g, b});
    if (!(v >= 1e-38)) { // also catches NaN
        out[0] = out[1] = out[2] = out[3] = 0;
        return;
    }
    int e;
    double f = std::frexp(v, &e);
    double scale = f * 256.0 / v;
    auto mantissa = [&](double x) {
        return static_cast<unsigned char>(
            std::min(255.0, std::floor(x * scale + 0.5)));
    };
    out[0] = mantissa(r);
    out[1] = mantissa(g);
    out[2] = mantissa(b);
    out[3] = static_cast<unsigned char>(e + 128);
}

void decode_rgbe(const unsigned char in[4], double out[3]) {
    if (in[3] == 0) {
        out[0] = out[1] = out[2] = 0.0;
        return;
    }
    double f = std::ldexp(1.0, static_cast<int>(in[3]) - 136);
    out[0] = in[0] * f;
    out[1] = in[1] * f;
    out[2] = in[2] * f;
}

namespace {

// New-style RLE for one scanline component: runs of >= 4 identical bytes
// become (128+len, value); everything else is copied in literal chunks.
void rle_component(const std::vector<unsigned char>& comp, std::string& out) {
    const size_t n = comp.size();
    size_t pos = 0;
    while (pos < n) {
        // Locate the next run of at least 4.
        size_t run_start = pos;
        size_t run_len = 0;
        while (run_start < n) {
            run_len = 1;
            while (run_start + run_len < n && run_len < 127 &&
                   comp[run_start + run_len] == comp[run_start])
                ++run_len;
            if (run_len >= 4) break;
            run_start += run_len;
        }
        if (run_start >= n) run_len = 0;
        // Literals up to the run.
        size_t lit = run_start - pos;
        while (lit > 0) {
            size_t chunk = std::min<size_t>(lit, 128);
            out.push_back(static_cast<char>(chunk));
            out.append(reinterpret_cast<const char*>(comp.data() + pos), chunk);
            pos += chunk;
            lit -= chunk;
        }
        if (run_len >= 4) {
            out.push_back(static_cast<char>(128 + run_len));
            out.push_back(static_cast<char>(comp[run_start]));
            pos = run_start + run_len;
        }
    }
}

} // namespace

std::string rgbe_bytes(const IrradianceFrame& frame) {
    if (frame.channels != 3)
        throw DataError("RGBE output requires a 3-channel frame");
    if (frame.width <= 0 || frame.height <= 0)
        throw DataError("RGBE dimensions must be positive");

    char header[96];
    std::snprintf(header, sizeof(header),
                  "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y %d +X %d\n",
                  frame.height, frame.width);
    std::string out(header);

    const int w = frame.width;
    const bool rle = w >= 8 && w <= 32767;
    std::vector<unsigned char> px(4);
    std::vector<std::vector<unsigned char>> comps(4,
                                                  std::vector<unsigned char>(w));
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < w; ++x) {
            encode_rgbe(frame.at(x, y, 0), frame.at(x, y, 1), frame.at(x, y, 2),
                        px.data());
            for (int c = 0; c < 4; ++c) comps[c][x] = px[c];
        }
        if (rle) {
            out.push_back(2);
            out.push_back(2);
            out.push_back(static_cast<char>(w >> 8));
            out.push_back(static_cast<char>(w & 0xFF));
            for (int c = 0; c < 4; ++c) rle_component(comps[c], out);
        } else {
            for (int x = 0; x < w; ++x)
                for (int c = 0; c < 4; ++c)
                    out.push_back(static_cast<char>(comps[c][x]));
        }
    }
    return out;
}

IrradianceFrame parse_rgbe(const std::string& bytes) {
    size_t pos = 0;
    auto read_line = [&]() {
        size_t end = bytes.find('\n', pos);
        if (end == std::string::npos)
            throw DataError("RGBE header not terminated at byte " +
                            std::to_string(pos));
        std::string line = bytes.substr(pos, end - pos);
        pos = end + 1;
        return line;
    };

    std::string magic = read_line();
    if (magic.rfind("#?", 0) != 0)
        throw DataError("not a Radiance RGBE file");
    double exposure = 1.0;
    for (;;) {
        std::string line = read_line();
        if (line.empty()) break; // blank line ends the header
        if (line.rfind("EXPOSURE=", 0) == 0)
            exposure *= std::stod(line.substr(9));
        // FORMAT and comment lines are accepted and ignored.
    }
    std::string res = read_line();
    int w = 0, h = 0;
    if (std::sscanf(res.c_str(), "-Y %d +X %d", &h, &w) != 2 || w <= 0 || h <= 0)
        throw DataError("unsupported RGBE resolution line '" + res + "'");

    IrradianceFrame frame(w, h, 3);
    std::vector<unsigned char> scan(static_cast<size_t>(w) * 4);
    auto need_bytes = [&](size_t n) {
        if (bytes.size() - pos < n) truncated("RGBE", pos, n, bytes.size());
    };

    for (int y = 0; y < h; ++y) {
        need_bytes(4);
        const unsigned char* p =
            reinterpret_cast<const unsigned char*>(bytes.data() + pos);
        if (p[0] == 2 && p[1] == 2 && ((p[2] << 8) | p[3]) == w && w >= 8) {
            pos += 4; // new-style RLE, components stored planar
            for (int c = 0; c < 4; ++c) {
                int filled = 0;
                while (filled < w) {
                    need_bytes(1);
                    int count = static_cast<unsigned char>(bytes[pos++]);
                    if (count > 128) {
                        count -= 128;
                        need_bytes(1);
                        unsigned char v = bytes[pos++];
                        if (filled + count > w)
                            throw DataError("RGBE run overflow at byte " +
                                            std::to_string(pos));
                        for (int i = 0; i < count; ++i)
                            scan[(filled + i) * 4 + c] = v;
                    } else {
                        if (count == 0 || filled + count > w)
                            throw DataError("RGBE literal overflow at byte " +
                                            std::to_string(pos));
                        need_bytes(count);
                        for (int i = 0; i < count; ++i)
                            scan[(filled + i) * 4 + c] =
                                static_cast<unsigned char>(bytes[pos + i]);
                        pos += count;
                    }
                    filled += count;
                }
            }
        } else {
            // Flat pixels, with old-style (1,1,1,n) repeat markers.
            int x = 0, shift = 0;
            unsigned char prev[4] = {0, 0, 0, 0};
            while (x < w) {
                need_bytes(4);
                const unsigned char* q = reinterpret_cast<const unsigned char*>(
                    bytes.data() + pos);
                if (q[0] == 1 && q[1] == 1 && q[2] == 1) {
                    int count = q[3] << shift;
                    if (x == 0 || x + count > w)
                        throw DataError("RGBE repeat overflow at byte " +
                                        std::to_string(pos));
                    for (int i = 0; i < count; ++i)
                        std::memcpy(&scan[(x + i) * 4], prev, 4);
                    x += count;
                    shift += 8;
                } else {
                    std::memcpy(&scan[x * 4], q, 4);
                    std::memcpy(prev, q, 4);
                    ++x;
                    shift = 0;
                }
                pos += 4;
            }
        }
        for (int x = 0; x < w; ++x) {
            double rgb[3];
            decode_rgbe(&scan[x * 4], rgb);
            for (int c = 0; c < 3; ++c) frame.at(x, y, c) = rgb[c] / exposure;
        }
    }
    return frame;
}

void write_rgbe(const IrradianceFrame& frame, const std::string& path) {
    write_file(path, rgbe_bytes(frame));
}

IrradianceFrame read_rgbe(const std::string& path) {
    return parse_rgbe(read_file(path));
}

// ---- PNG ----

namespace {

struct PngMemReader {
    const std::string& buf;
    size_t pos = 0;
};

void png_mem_read(png_structp png, png_bytep out, png_size_t n) {
    auto* r = static_cast<PngMemReader*>(png_get_io_ptr(png));
    if (r->pos + n > r->buf.size())
        png_error(png, "unexpected end of PNG stream");
    std::memcpy(out, r->buf.data() + r->pos, n);
    r->pos += n;
}

LdrFrame parse_png(const std::string& bytes) {
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw DataError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DataError("libpng initialization failed");
    }

    LdrFrame frame;
    std::vector<png_byte> pixels;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("PNG decode failed (truncated at byte offset within "
                        "stream or malformed)");
    }

    PngMemReader reader{bytes};
    png_set_read_fn(png, &reader, png_mem_read);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color = png_get_color_type(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png); // host little-endian
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    bit_depth = png_get_bit_depth(png, info);
    if (channels != 1 && channels != 3)
        png_error(png, "unsupported channel layout");

    size_t rowbytes = png_get_rowbytes(png, info);
    pixels.resize(rowbytes * h);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    frame.width = static_cast<int>(w);
    frame.height = static_cast<int>(h);
    frame.channels = channels;
    frame.data.resize(static_cast<size_t>(w) * h * channels);
    if (bit_depth == 16) {
        const uint16_t* src = reinterpret_cast<const uint16_t*>(pixels.data());
        for (size_t i = 0; i < frame.data.size(); ++i) frame.data[i] = src[i];
    } else {
        for (size_t i = 0; i < frame.data.size(); ++i) frame.data[i] = pixels[i];
    }
    return frame;
}

void write_png(const LdrFrame& frame, int z_max, const std::string& path) {
    const int bit_depth = z_max > 255 ? 16 : 8;
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("cannot create file: " + path);

    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("libpng initialization failed");
    }
    std::vector<png_byte> row;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("PNG encode failed: " + path);
    }
    png_init_io(png, fp);
    int color = frame.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(png, info, frame.width, frame.height, bit_depth, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    row.resize(static_cast<size_t>(frame.width) * frame.channels *
               (bit_depth / 8));
    for (int y = 0; y < frame.height; ++y) {
        if (bit_depth == 16) {
            uint16_t* dst = reinterpret_cast<uint16_t*>(row.data());
            for (int x = 0; x < frame.width; ++x)
                for (int c = 0; c < frame.channels; ++c)
                    dst[x * frame.channels + c] =
                        static_cast<uint16_t>(frame.at(x, y, c));
        } else {
            for (int x = 0; x < frame.width; ++x)
                for (int c = 0; c < frame.channels; ++c)
                    row[x * frame.channels + c] =
                        static_cast<png_byte>(frame.at(x, y, c));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

// ---- PPM / PGM ----

LdrFrame parse_pnm(const std::string& bytes) {
    // Comment-aware scanner: '#' runs to end of line.
    size_t pos = 0;
    auto skip = [&]() {
        for (;;) {
            while (pos < bytes.size() &&
                   std::isspace(static_cast<unsigned char>(bytes[pos])))
                ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                return;
            }
        }
    };
    auto int_token = [&](const char* what) {
        skip();
        size_t start = pos;
        while (pos < bytes.size() &&
               std::isdigit(static_cast<unsigned char>(bytes[pos])))
            ++pos;
        if (pos == start)
            throw DataError(std::string("bad ") + what + " at byte " +
                            std::to_string(start));
        return std::stoi(bytes.substr(start, pos - start));
    };

    skip();
    if (pos + 2 > bytes.size())
        throw DataError("truncated PNM header at byte 0");
    std::string magic = bytes.substr(pos, 2);
    pos += 2;
    int channels;
    if (magic == "P6")
        channels = 3;
    else if (magic == "P5")
        channels = 1;
    else
        throw DataError("unsupported PNM magic '" + magic + "'");
    int w = int_token("PNM width");
    int h = int_token("PNM height");
    int maxval = int_token("PNM maxval");
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw DataError("PNM header out of range");
    if (pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw DataError("missing separator before PNM pixel data at byte " +
                        std::to_string(pos));
    ++pos;

    const int bytes_per = maxval > 255 ? 2 : 1;
    size_t need = static_cast<size_t>(w) * h * channels * bytes_per;
    if (bytes.size() - pos < need) truncated("PNM", pos, need, bytes.size());

    LdrFrame frame;
    frame.width = w;
    frame.height = h;
    frame.channels = channels;
    frame.data.resize(static_cast<size_t>(w) * h * channels);
    const unsigned char* p =
        reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    for (size_t i = 0; i < frame.data.size(); ++i) {
        if (bytes_per == 2) {
            frame.data[i] = (p[0] << 8) | p[1]; // big-endian samples
            p += 2;
        } else {
            frame.data[i] = *p++;
        }
    }
    return frame;
}

void write_pnm(const LdrFrame& frame, int z_max, const std::string& path,
               bool color) {
    if (color && frame.channels != 3)
        throw DataError("PPM output requires a 3-channel frame");
    if (!color && frame.channels != 1)
        throw DataError("PGM output requires a 1-channel frame");
    char header[64];
    std::snprintf(header, sizeof(header), "%s\n%d %d\n%d\n", color ? "P6" : "P5",
                  frame.width, frame.height, z_max);
    std::string out(header);
    for (int v : frame.data) {
        if (z_max > 255) {
            out.push_back(static_cast<char>((v >> 8) & 0xFF));
            out.push_back(static_cast<char>(v & 0xFF));
        } else {
            out.push_back(static_cast<char>(v & 0xFF));
        }
    }
    write_file(path, out);
}

} // namespace

void write_ldr(const LdrFrame& frame, int z_max, const std::string& path) {
    if (frame.width <= 0 || frame.height <= 0 ||
        (frame.channels != 1 && frame.channels != 3))
        throw DataError("LDR frame dimensions invalid");
    if (z_max <= 0 || z_max > 65535)
        throw DataError("z_max out of writable range");
    for (int v : frame.data)
        if (v < 0 || v > z_max)
            throw DataError("frame code outside [0, z_max]");
    if (ends_with(path, ".png"))
        write_png(frame, z_max, path);
    else if (ends_with(path, ".ppm"))
        write_pnm(frame, z_max, path, true);
    else if (ends_with(path, ".pgm"))
        write_pnm(frame, z_max, path, false);
    else
        throw DataError("unsupported LDR output extension: " + path);
}

LdrFrame read_ldr(const std::string& path) {
    std::string bytes = read_file(path);
    if (bytes.size() >= 8 &&
        std::memcmp(bytes.data(), "\x89PNG\r\n\x1a\n", 8) == 0)
        return parse_png(bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' &&
        (bytes[1] == '5' || bytes[1] == '6'))
        return parse_pnm(bytes);
    throw DataError("unrecognized LDR image format: " + path);
}

void write_display(const Image<unsigned char>& img, const std::string& path) {
    LdrFrame frame;
    frame.width = img.width;
    frame.height = img.height;
    frame.channels = img.channels;
    frame.exposure_s = 1.0;
    frame.data.assign(img.data.begin(), img.data.end());
    write_ldr(frame, 255, path);
}

} // namespace maphdr
