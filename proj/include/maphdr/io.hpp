#pragma once

#include <string>

#include "maphdr/image.hpp"

namespace maphdr {

// ---- Portable Float Map (32-bit float, scale -1.0 = little endian) ----

/// Serialize to PFM ("PF" for 3 channels, "Pf" for 1), rows bottom-to-top.
/// Throws DataError on non-finite samples.
std::string pfm_bytes(const IrradianceFrame& frame);

/// Parse a PFM byte string. A positive scale header marks big-endian data,
/// which is byteswapped on load. Truncated or malformed input raises
/// DataError naming the byte offset; NaN payloads are rejected.
IrradianceFrame parse_pfm(const std::string& bytes);

void write_pfm(const IrradianceFrame& frame, const std::string& path);
IrradianceFrame read_pfm(const std::string& path);

// ---- Radiance RGBE (.hdr) ----

/// Shared-exponent encoding of one linear RGB triple (components < 1e-38,
/// NaN, or negative collapse to zero). Mantissas are rounded to nearest, so
/// decoding recovers each component within 1/256 of the pixel's largest one
/// (under 1% relative for components within 2x of that maximum).
void encode_rgbe(double r, double g, double b, unsigned char out[4]);

/// Inverse map m * 2^(e-136) per component; exponent byte 0 decodes to black.
void decode_rgbe(const unsigned char in[4], double out[3]);

/// Radiance .hdr bytes with new-style RLE scanlines (flat scanlines for
/// widths outside [8, 32767]). Requires a 3-channel frame.
std::string rgbe_bytes(const IrradianceFrame& frame);

/// Reads flat, new-RLE, and old-RLE scanlines; honors EXPOSURE headers.
IrradianceFrame parse_rgbe(const std::string& bytes);

void write_rgbe(const IrradianceFrame& frame, const std::string& path);
IrradianceFrame read_rgbe(const std::string& path);

// ---- LDR code images ----

/// Write integer codes as PNG (.png) or binary PPM/PGM (.ppm/.pgm), chosen
/// by extension; 16-bit samples when z_max > 255.
void write_ldr(const LdrFrame& frame, int z_max, const std::string& path);

/// Read a PNG or binary PPM/PGM file (detected by magic bytes) into codes.
/// The caller assigns exposure_s from its manifest.
LdrFrame read_ldr(const std::string& path);

/// 8-bit display image writer (PNG or PPM/PGM by extension).
void write_display(const Image<unsigned char>& img, const std::string& path);

// ---- Raw file helpers ----
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

} // namespace maphdr
